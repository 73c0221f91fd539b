"""Moments, orthogonal polynomials, Jacobi parameters and the resolvent.

Moments of the equilibrium measure come from root power sums of ``F_l``:
``c_k = s_k(F_l) / D_l`` for ``k <= D_l - 1``.  Jacobi parameters follow
from an ``L D L^T`` factorisation of the Hankel moment matrix, carried out
in whatever scalar type the moments use (``Fraction`` for exact work).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import DomainError, MaterializationCapError, PreconditionError
from .measure import DiscreteMeasure
from .poly_core import (
    DEFAULT_EXTENDED_BITS,
    EXTENDED,
    FLOAT64,
    RATIONAL,
    Polynomial,
    compose,
    derivative,
    evaluate,
    evaluate_many,
    ext_context,
    power_sums,
)
from .sequence import CompositionTower, RegularSequenceSpec

RESOLVENT_TOL = 1e-10


@dataclass(frozen=True)
class MomentTable:
    """Moments ``c_0..c_{D_l - 1}`` of the equilibrium measure.

    ``radius_bound`` is the escape radius of the source sequence, a disk
    that is known to contain the Julia set.
    """

    level: int
    moments: tuple
    mode: str
    bits: int | None = None
    radius_bound: float | None = None

    def __len__(self):
        return len(self.moments)

    def __getitem__(self, k):
        return self.moments[k]

    @property
    def degree(self) -> int:
        return len(self.moments)

    def as_complex(self) -> np.ndarray:
        return np.array([complex(c) for c in self.moments])

    def is_real(self, tol: float | None = None) -> bool:
        if self.mode == RATIONAL:
            return True
        if tol is None:
            tol = 0.0 if self.mode == FLOAT64 else 2.0 ** (-(self.bits or 53) // 2)
        return all(abs(complex(c).imag) <= tol * max(1.0, abs(complex(c))) for c in self.moments)


@dataclass(frozen=True)
class OrthogonalPolynomialExplicit:
    index: int
    polynomial: Polynomial


def _default_mode(tower):
    p = tower.f(1)
    return RATIONAL if p.mode == RATIONAL else EXTENDED


def _materialise(tower: CompositionTower, l: int, mode, bits):
    F = tower.f(1).to_mode(mode, bits)
    for j in range(2, l + 1):
        F = compose(tower.f(j).to_mode(mode, bits), F, cap=tower.cap)
    return F


def moments(tower: CompositionTower, l: int, mode: str | None = None, bits: int | None = None) -> MomentTable:
    """``c_0 = 1`` and ``c_k = s_k(F_l) / D_l`` for ``1 <= k <= D_l - 1``.

    ``mode`` defaults to ``"rational"`` when the generators are rational,
    otherwise ``"extended"`` at ``bits`` (128 by default).
    """
    if l < 1:
        raise PreconditionError("level l must be >= 1")
    mode = mode or _default_mode(tower)
    if mode == EXTENDED:
        bits = bits or DEFAULT_EXTENDED_BITS
    try:
        F = _materialise(tower, l, mode, bits)
    except MaterializationCapError as exc:
        raise MaterializationCapError(f"{exc}; choose a lower level l") from exc
    if mode == RATIONAL and not F.is_real():
        raise PreconditionError("rational mode needs rational coefficients")
    D = F.degree
    s = power_sums(F, D - 1).values
    if mode == RATIONAL:
        one = Fraction(1)
        cs = (one,) + tuple(v / D for v in s)
    elif mode == EXTENDED:
        ctx = ext_context(bits)
        cs = (ctx.mpc(1),) + tuple(v / D for v in s)
    else:
        cs = (1 + 0j,) + tuple(complex(v) / D for v in s)
    return MomentTable(l, cs, mode, bits if mode == EXTENDED else None, tower.escape_radius)


def explicit_P1(spec: RegularSequenceSpec) -> OrthogonalPolynomialExplicit:
    """``P_1(z) = z + a_{1,d-1} / (d a_{1,d})``."""
    f = spec.poly(1)
    d = f.degree
    shift = f.coeffs[d - 1] / (d * f.leading)
    return OrthogonalPolynomialExplicit(1, Polynomial((shift, 1), f.mode, f.bits))


def _shift(f: Polynomial):
    d = f.degree
    return f.coeffs[d - 1] / (d * f.leading)


def explicit_P_block(tower: CompositionTower, l: int) -> OrthogonalPolynomialExplicit:
    """Monic ``(F_l + shift) / lead(F_l)`` with ``shift`` taken from ``f_{l+1}``."""
    if l < 0:
        raise PreconditionError("l must be >= 0")
    if l == 0:
        return explicit_P1(tower.spec)
    try:
        F = tower.F(l)
    except MaterializationCapError as exc:
        raise MaterializationCapError(
            f"{exc}; evaluate (F_l(z) + shift) / lead(F_l) through the tower instead") from exc
    P = (F + _shift(tower.f(l + 1))).monic()
    return OrthogonalPolynomialExplicit(F.degree, P)


def orthogonality_residual(poly: Polynomial, m: DiscreteMeasure, max_k: int) -> np.ndarray:
    """``|integral poly(z) conj(z)^k dm|`` for ``k = 0..max_k``."""
    vals = evaluate_many(poly, m.points)
    zc = np.conj(m.points)
    out = np.empty(max_k + 1)
    acc = np.ones_like(zc)
    for k in range(max_k + 1):
        out[k] = abs(np.mean(vals * acc))
        acc = acc * zc
    return out


@dataclass(frozen=True)
class JacobiCoefficients:
    """Recurrence data ``P_{n+1} = (x - b_{n+1}) P_n - a_n^2 P_{n-1}``.

    ``hankel_dets[n]`` is ``det(c_{i+j})_{0 <= i, j <= n}``; ``norms[n]``
    is ``||P_n||^2``.
    """

    a_squared: tuple
    b: tuple
    hankel_dets: tuple
    norms: tuple
    mode: str
    bits: int | None = None

    @property
    def N(self) -> int:
        return len(self.b)

    @property
    def a(self) -> tuple:
        return tuple(_sqrt(v, self.mode, self.bits) for v in self.a_squared)

    def orthonormal(self, n: int) -> Polynomial:
        """``p_n = P_n / ||P_n||`` (float coefficients)."""
        P = monic_from_jacobi(self, n)
        norm = math.sqrt(float(self.norms[n]))
        return Polynomial(tuple(complex(c) / norm for c in P.coeffs), FLOAT64)


def _sqrt(v, mode, bits):
    if isinstance(v, Fraction):
        n, d = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if n * n == v.numerator and d * d == v.denominator:
            return Fraction(n, d)
        return math.sqrt(v)
    if mode == EXTENDED:
        return ext_context(bits).sqrt(v)
    return math.sqrt(v)


def _ldl(M):
    """Unit lower ``L`` and pivots ``d`` with ``M = L diag(d) L^T``; stops at a bad pivot."""
    n = len(M)
    L = [[None] * n for _ in range(n)]
    d = []
    for j in range(n):
        dj = M[j][j]
        for k in range(j):
            dj = dj - L[j][k] * L[j][k] * d[k]
        if not dj > 0:
            raise PreconditionError(f"measure not real or N too large for level (pivot {j} is {dj})")
        d.append(dj)
        L[j][j] = 1
        for i in range(j + 1, n):
            v = M[i][j]
            for k in range(j):
                v = v - L[i][k] * L[j][k] * d[k]
            L[i][j] = v / dj
    return L, d


def jacobi_from_moments(mt: MomentTable, N: int) -> JacobiCoefficients:
    """``a_n^2`` and ``b_n`` for ``n = 1..N`` from the Hankel matrix of ``mt``.

    ``a_n^2 = H_{n-2} H_n / H_{n-1}^2`` where ``H`` are the Hankel
    determinants; ``b_{n+1}`` is the drop in the sub-leading coefficient
    of the monic polynomials.  Both come out of ``L D L^T``: the pivots are
    the squared norms ``||P_n||^2`` and rows of ``L^{-1}`` are the monic
    polynomials, so the sub-leading coefficient of ``P_n`` is
    ``-L[n][n-1]``.

    Raises
    ------
    PreconditionError
        If ``2N > D_l - 1``, the moments are not real, or the Hankel
        matrix is not positive definite.
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if 2 * N > mt.degree - 1:
        raise PreconditionError(f"N={N} needs moments up to c_{2 * N}; level {mt.level} gives c_{mt.degree - 1}")
    if not mt.is_real():
        raise PreconditionError("measure not real: moments have nonzero imaginary parts")
    if mt.mode == RATIONAL:
        c = list(mt.moments)
    elif mt.mode == EXTENDED:
        c = [x.real for x in mt.moments]
    else:
        c = [complex(x).real for x in mt.moments]
    M = [[c[i + j] for j in range(N + 1)] for i in range(N + 1)]
    L, d = _ldl(M)
    dets = []
    acc = 1
    for dj in d:
        acc = acc * dj
        dets.append(acc)
    a2 = tuple(d[n] / d[n - 1] for n in range(1, N + 1))
    # sub-leading coefficient of P_n is -L[n][n-1]; b_{n+1} = p_n - p_{n+1}
    sub = [0] + [L[n][n - 1] for n in range(1, N + 1)]
    b = tuple(sub[n + 1] - sub[n] for n in range(N))
    return JacobiCoefficients(a2, b, tuple(dets), tuple(d), mt.mode, mt.bits)


def monic_from_jacobi(jc: JacobiCoefficients, n: int) -> Polynomial:
    """Monic ``P_n`` from the three-term recurrence (``n <= N``)."""
    if not 0 <= n <= jc.N:
        raise PreconditionError(f"P_{n} needs 0 <= n <= N={jc.N}")
    mode = jc.mode if jc.mode != EXTENDED else EXTENDED
    one = Fraction(1) if mode == RATIONAL else 1.0
    prev, cur = None, [one]
    for k in range(n):
        nxt = [0 * one] + cur
        for i, cf in enumerate(cur):
            nxt[i] = nxt[i] - jc.b[k] * cf
        if prev is not None:
            for i, cf in enumerate(prev):
                nxt[i] = nxt[i] - jc.a_squared[k - 1] * cf
        prev, cur = cur, nxt
    return Polynomial(tuple(cur), mode, jc.bits)


@dataclass
class ResolventEvaluation:
    z: complex
    value: complex
    truncation: int
    tail_bound: float


def _tail(M, r, T):
    return (M / r) ** (T + 1) / (r - M)


def resolvent(mt: MomentTable, z, truncation: int | None = None,
              support_radius: float | None = None) -> ResolventEvaluation:
    """``R(z) = -sum_{n <= T} c_n z^{-n-1}`` for ``|z| > M``.

    ``M`` is ``support_radius`` (e.g. from an empirical measure) or the
    table's escape-radius bound.  Without ``truncation`` the smallest ``T``
    with tail bound under ``1e-10`` is used, capped at ``D_l - 1``.
    """
    z = complex(z)
    M = support_radius if support_radius is not None else mt.radius_bound
    if M is None:
        raise PreconditionError("a support radius is required")
    r = abs(z)
    if not r > M:
        raise DomainError(f"|z|={r:g} is not outside the support radius {M:g}")
    Tmax = mt.degree - 1
    if truncation is None:
        T = 0
        while T < Tmax and _tail(M, r, T) >= RESOLVENT_TOL:
            T += 1
    else:
        if not 0 <= truncation <= Tmax:
            raise PreconditionError(f"truncation must lie in 0..{Tmax}")
        T = truncation
    w = 1 / z
    term = w
    re, im = [], []
    for n in range(T + 1):
        v = complex(mt.moments[n]) * term
        re.append(v.real)
        im.append(v.imag)
        term *= w
    value = -complex(math.fsum(re), math.fsum(im))
    return ResolventEvaluation(z, value, T, _tail(M, r, T))


def resolvent_functional_check(tower: CompositionTower, mt: MomentTable, z, k: int,
                               support_radius: float | None = None,
                               shifted_support_radius: float | None = None,
                               truncation: int | None = None) -> float:
    """``|R(z) - R_k(F_k(z)) F_k'(z) / D_k|`` with ``R_k`` of the shifted sequence."""
    if k == 0:
        return 0.0
    if k < 0:
        raise PreconditionError("k must be >= 0")
    lhs = resolvent(mt, z, truncation, support_radius).value
    Fk = tower.F(k)
    w = complex(evaluate(Fk, complex(z)))
    dw = complex(evaluate(derivative(Fk), complex(z)))
    shifted = tower.shifted(k)
    mts = moments(shifted, mt.level, mt.mode, mt.bits)
    rhs = resolvent(mts, w, truncation, shifted_support_radius).value * dw / tower.degree(k)
    return abs(lhs - rhs)


def green_resolvent_check(tower: CompositionTower, mt: MomentTable, z, h: float = 1e-5,
                          support_radius: float | None = None, k_max: int = 60) -> float:
    """Relative error of ``G_x - i G_y = -R(z)`` by central differences."""
    from .sequence import green

    z = complex(z)

    def G(p):
        return green(tower, p, k_max).value

    gx = (G(z + h) - G(z - h)) / (2 * h)
    gy = (G(z + 1j * h) - G(z - 1j * h)) / (2 * h)
    R = resolvent(mt, z, support_radius=support_radius).value
    return abs(complex(gx, -gy) + R) / abs(R)
