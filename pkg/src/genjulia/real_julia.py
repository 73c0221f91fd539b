"""Admissible polynomials and the basic intervals of real Julia sets.

For admissible generators with property (A) the Julia set is
``K = intersection of F_n^{-1}([-1, 1])``.  Each generator ``f`` is strictly
monotone on every component ("lap") of ``f^{-1}([-1, 1])`` and maps it onto
``[-1, 1]``, so the level-``n`` basic intervals are the images of
``[-1, 1]`` under all compositions of inverse branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import InternalConsistencyError, PreconditionError, RootFindingError
from .measure import DiscreteMeasure
from .poly_core import RATIONAL, Polynomial, compose, ext_context
from .sequence import CompositionTower

DEFAULT_INTERVAL_CAP = 2 ** 16
_REAL_TOL = 1e-9
_BISECT_STEPS = 60


# -- exact real-root counting ----------------------------------------------

def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _rem(a, b):
    a = list(a)
    while len(a) >= len(b) and any(a):
        q = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= q * c
        a.pop()
    return _trim(a) if a else [Fraction(0)]


def _sturm_count(coeffs) -> int:
    """Number of distinct real roots of an exact rational polynomial."""
    p0 = _trim(coeffs)
    p1 = _trim([c * i for i, c in enumerate(p0)][1:])
    seq = [p0, p1]
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        r = _rem(seq[-2], seq[-1])
        if len(r) == 1 and r[0] == 0:
            break
        seq.append([-c for c in r])

    def changes(at_plus):
        signs = []
        for q in seq:
            s = 1 if q[-1] > 0 else -1
            if not at_plus and (len(q) - 1) % 2:
                s = -s
            signs.append(s)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    return changes(False) - changes(True)


def _real_roots(coeffs) -> tuple[np.ndarray, complex | None]:
    """Sorted real roots (float) and a non-real witness if any."""
    r = np.roots(np.array([complex(c).real for c in coeffs], dtype=float)[::-1])
    scale = max(1.0, float(np.max(np.abs(r)))) if len(r) else 1.0
    nonreal = [z for z in r if abs(z.imag) > _REAL_TOL * scale]
    witness = complex(nonreal[0]) if nonreal else None
    real = r[np.abs(r.imag) <= _REAL_TOL * scale].real
    return np.sort(real), witness


def _polish_real(coeffs, xs, target=0.0):
    c = np.array([complex(v).real for v in coeffs])
    dc = c[1:] * np.arange(1, len(c))
    P = np.polynomial.polynomial
    for _ in range(3):
        with np.errstate(all="ignore"):
            f = P.polyval(xs, c) - target
            df = P.polyval(xs, dc)
            step = np.where(df != 0, f / df, 0.0)
        xs = np.where(np.isfinite(step), xs - step, xs)
    return xs


@dataclass
class AdmissibilityReport:
    zeros: list
    extrema: list
    extremal_values: list
    admissible: bool
    property_A: tuple
    witness: complex | None = None
    exact: bool = False

    @property
    def satisfies_A(self) -> bool:
        return all(self.property_A)


def _real_coeffs(f: Polynomial):
    if not f.is_real():
        raise PreconditionError("admissibility needs real coefficients")
    if f.degree < 2:
        raise PreconditionError("admissibility needs degree >= 2")
    if f.mode == RATIONAL:
        return list(f.coeffs), True
    return [complex(c).real for c in f.coeffs], False


def admissibility(f: Polynomial) -> AdmissibilityReport:
    """Check simple real zeros, distinct extrema and ``|f(y_i)| > 1``.

    Rational input is decided exactly with Sturm counts: ``f`` needs
    ``deg f`` distinct real roots and ``f^2 - 1`` needs ``2 deg f``.  Float
    input relies on numerical roots.
    """
    cs, exact = _real_coeffs(f)
    n = f.degree
    zeros, witness = _real_roots(cs)
    dcs = [c * i for i, c in enumerate(cs)][1:]
    extrema, _ = _real_roots(dcs)
    extrema = _polish_real(dcs, extrema)
    P = np.polynomial.polynomial
    fl = np.array([float(c) for c in cs])
    ext_vals = np.abs(P.polyval(extrema, fl))
    if exact:
        simple_real = _sturm_count(cs) == n
        sq = [Fraction(0)] * (2 * n + 1)
        for i, a in enumerate(cs):
            for j, b in enumerate(cs):
                sq[i + j] += a * b
        sq[0] -= 1
        admissible = simple_real and _sturm_count(sq) == 2 * n
    else:
        simple_real = witness is None and bool(np.all(np.diff(zeros) > _REAL_TOL))
        distinct = bool(np.all(np.diff(extrema) > _REAL_TOL))
        admissible = simple_real and distinct and bool(np.all(ext_vals > 1.0))
    if not simple_real and witness is None:
        witness = complex(zeros[int(np.argmin(np.diff(zeros)))]) if n > 1 else None
    return AdmissibilityReport([float(x) for x in zeros], [float(x) for x in extrema],
                               [float(v) for v in ext_vals], bool(admissible),
                               _property_A(cs, exact), witness, exact)


def _property_A(cs, exact):
    tol = 0 if exact else 1e-12

    def ev(x):
        acc = cs[-1] * 0
        for c in reversed(cs):
            acc = acc * x + c
        return acc

    one = Fraction(1) if exact else 1.0
    ends = all(min(abs(ev(x) - one), abs(ev(x) + one)) <= tol for x in (-one, one))
    inside = True
    for t in (-1.0, 1.0):
        shifted = list(cs)
        shifted[0] = shifted[0] - t
        roots = np.roots(np.array([float(c) for c in shifted])[::-1])
        inside &= bool(np.all(np.abs(roots.real[np.abs(roots.imag) < 1e-9]) <= 1 + 1e-12))
    even = all(c == 0 or abs(c) <= tol for c in cs[1::2])
    odd = all(c == 0 or abs(c) <= tol for c in cs[0::2])
    return (bool(inside), bool(ends), bool(even or odd))


def compose_admissible(g1: Polynomial, g2: Polynomial) -> AdmissibilityReport:
    """Admissibility report for ``g2 o g1``; both inputs must be admissible with (A)."""
    for name, g in (("g1", g1), ("g2", g2)):
        rep = admissibility(g)
        if not (rep.admissible and rep.satisfies_A):
            raise PreconditionError(f"{name} is not admissible with property (A)")
    rep = admissibility(compose(g2, g1))
    if not (rep.admissible and rep.satisfies_A):
        raise InternalConsistencyError("composition of admissible (A) polynomials failed the re-check")
    return rep


# -- basic intervals --------------------------------------------------------

@dataclass
class _Branches:
    """Laps of one generator: ``f`` maps ``[lo_i, hi_i]`` monotonically onto ``[-1, 1]``."""

    coeffs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    increasing: np.ndarray
    ext_coeffs: list | None = None


def _branches(f: Polynomial, level: int, ctx=None) -> _Branches:
    cs = np.array([complex(c).real for c in f.coeffs])
    roots = []
    for t in (-1.0, 1.0):
        sh = cs.copy()
        sh[0] -= t
        r, _ = _real_roots(sh)
        roots.append(_polish_real(sh, r))
    pts = np.sort(np.concatenate(roots))
    # property (A) puts the outermost endpoints at exactly -1 and 1
    pts[0], pts[-1] = -1.0, 1.0
    if len(pts) != 2 * f.degree:
        raise RootFindingError(f"f_{level}: expected {2 * f.degree} solutions of f = +-1")
    lo, hi = pts[0::2], pts[1::2]
    if np.any(hi <= lo):
        raise RootFindingError(f"f_{level}: degenerate lap")
    P = np.polynomial.polynomial
    inc = P.polyval(hi, cs) > P.polyval(lo, cs)
    ext = None
    if ctx is not None:
        ext = [ctx.mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else ctx.mpf(complex(c).real)
               for c in f.coeffs]
    return _Branches(cs, lo, hi, inc, ext)


def _invert(br: _Branches, i: int, t: np.ndarray, level: int) -> np.ndarray:
    """Solve ``f(x) = t`` on lap ``i`` by bisection and one Newton step."""
    lo = np.full(t.shape, br.lo[i])
    hi = np.full(t.shape, br.hi[i])
    sgn = 1.0 if br.increasing[i] else -1.0
    P = np.polynomial.polynomial
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        up = sgn * (P.polyval(mid, br.coeffs) - t) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    x = 0.5 * (lo + hi)
    dc = br.coeffs[1:] * np.arange(1, len(br.coeffs))
    df = P.polyval(x, dc)
    xn = x - (P.polyval(x, br.coeffs) - t) / df
    x = np.where((xn >= br.lo[i]) & (xn <= br.hi[i]), xn, x)
    if not np.all(np.isfinite(x)):
        raise RootFindingError(f"inverse branch {i} of f_{level} failed to bracket")
    # endpoints of [-1, 1] map to lap endpoints exactly
    at_lo = t == (-1.0 if br.increasing[i] else 1.0)
    at_hi = t == (1.0 if br.increasing[i] else -1.0)
    return np.where(at_lo, br.lo[i], np.where(at_hi, br.hi[i], x))


def _horner(cs, x):
    acc = cs[-1]
    for c in reversed(cs[:-1]):
        acc = acc * x + c
    return acc


def _newton_ext(ctx, cs, t, x0, iters=3):
    dcs = [c * i for i, c in enumerate(cs)][1:]
    x = ctx.mpf(x0)
    for _ in range(iters):
        x = x - (_horner(cs, x) - t) / _horner(dcs, x)
    return x


@dataclass
class BasicIntervalSystem:
    """Basic intervals ``I_{j,m}`` for ``m = 0..n``.

    ``levels[m]`` is an ``(D_m, 2)`` float array of sorted endpoints;
    ``ext_levels[m]`` holds the same endpoints at extended precision when
    requested.  ``parents[m][j]`` is the level ``m-1`` interval containing
    ``I_{j,m}``.
    """

    levels: list
    parents: list
    ext_levels: list | None = None
    bits: int | None = None
    words: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def lengths(self, m: int) -> np.ndarray:
        iv = self.levels[m]
        return iv[:, 1] - iv[:, 0]

    def gaps(self, m: int) -> np.ndarray:
        """Gaps ``H_{j,m}`` between consecutive intervals, shape ``(D_m - 1, 2)``."""
        iv = self.levels[m]
        return np.stack([iv[:-1, 1], iv[1:, 0]], axis=1)

    def gap_lengths(self, m: int) -> np.ndarray:
        g = self.gaps(m)
        return g[:, 1] - g[:, 0]

    def nesting_ok(self) -> bool:
        """Containment in the parent plus shared outer endpoints."""
        for m in range(1, self.depth + 1):
            iv, par = self.levels[m], self.levels[m - 1]
            p = par[self.parents[m]]
            if np.any(iv[:, 0] < p[:, 0]) or np.any(iv[:, 1] > p[:, 1]):
                return False
            counts = np.bincount(self.parents[m], minlength=len(par))
            if np.any(counts == 0):
                return False
            first = np.searchsorted(self.parents[m], np.arange(len(par)), side="left")
            last = np.searchsorted(self.parents[m], np.arange(len(par)), side="right") - 1
            if np.any(iv[first, 0] != par[:, 0]) or np.any(iv[last, 1] != par[:, 1]):
                return False
        return True

    def disjoint(self, m: int) -> bool:
        iv = self.levels[m]
        return bool(np.all(iv[1:, 0] > iv[:-1, 1]))

    def to_json(self) -> dict:
        return {"levels": [iv.tolist() for iv in self.levels],
                "gaps": [self.gaps(m).tolist() for m in range(len(self.levels))]}


_ADMISSIBLE_CACHE: dict = {}


def _check_generator(f: Polynomial, level: int):
    key = (f.coeffs, f.mode)
    ok = _ADMISSIBLE_CACHE.get(key)
    if ok is None:
        rep = admissibility(f)
        ok = rep.admissible and rep.satisfies_A
        _ADMISSIBLE_CACHE[key] = ok
    if not ok:
        raise PreconditionError(f"f_{level} is not admissible with property (A)")


def basic_intervals(tower: CompositionTower, n: int, bits: int | None = None,
                    cap: int = DEFAULT_INTERVAL_CAP) -> BasicIntervalSystem:
    """Basic intervals of levels ``0..n`` by composing inverse branches.

    With ``bits`` every endpoint is also refined by Newton steps in
    extended precision (float64 endpoints carry residuals of order
    ``|F_n'| * 1e-16``).
    """
    if n < 0:
        raise PreconditionError("n must be >= 0")
    if tower.degree(n) > cap:
        raise PreconditionError(f"D_n={tower.degree(n)} exceeds the interval cap {cap}")
    ctx = ext_context(bits) if bits else None
    brs = []
    for j in range(1, n + 1):
        f = tower.f(j)
        _check_generator(f, j)
        brs.append(_branches(f, j, ctx))
    levels = [np.array([[-1.0, 1.0]])]
    ext_levels = [[(ctx.mpf(-1), ctx.mpf(1))]] if ctx else None
    parents = [np.zeros(0, dtype=int)]
    words = [[()]]
    for m in range(1, n + 1):
        pairs = np.array([[-1.0, 1.0]])
        ext = [(ctx.mpf(-1), ctx.mpf(1))] if ctx else None
        wds = [()]
        for j in range(m, 0, -1):
            br = brs[j - 1]
            new_pairs, new_ext, new_w = [], [], []
            for i in range(len(br.lo)):
                img = _invert(br, i, pairs.reshape(-1), j).reshape(pairs.shape)
                new_pairs.append(img)
                new_w.extend((i,) + w for w in wds)
                if ctx:
                    for (ta, tb), (xa, xb) in zip(ext, img):
                        new_ext.append((_ext_branch(ctx, br, i, ta, xa),
                                        _ext_branch(ctx, br, i, tb, xb)))
            pairs = np.concatenate(new_pairs)
            ext = new_ext if ctx else None
            wds = new_w
        pairs = np.sort(pairs, axis=1)
        order = np.argsort(pairs[:, 0], kind="stable")
        pairs = pairs[order]
        levels.append(pairs)
        words.append([wds[k] for k in order])
        if ctx:
            ext = [tuple(sorted(ext[k])) for k in order]
            ext_levels.append(ext)
        par = np.searchsorted(levels[m - 1][:, 0], pairs[:, 0], side="right") - 1
        parents.append(par)
    return BasicIntervalSystem(levels, parents, ext_levels, bits, words)


def _ext_branch(ctx, br, i, t, x0):
    # exact lap endpoints for t = +-1
    if t == (-1 if br.increasing[i] else 1) and x0 == br.lo[i] and abs(br.lo[i]) == 1:
        return ctx.mpf(br.lo[i])
    if t == (1 if br.increasing[i] else -1) and x0 == br.hi[i] and abs(br.hi[i]) == 1:
        return ctx.mpf(br.hi[i])
    return _newton_ext(ctx, br.ext_coeffs, t, x0)


def endpoint_residuals(system: BasicIntervalSystem, tower: CompositionTower, m: int) -> float:
    """``max | |F_m(x)| - 1 |`` over level-``m`` endpoints.

    Uses the extended endpoints and arithmetic when available.
    """
    if m == 0:
        return 0.0
    if system.ext_levels is not None:
        ctx = ext_context(system.bits)
        cs = [[ctx.mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else ctx.mpf(complex(c).real)
               for c in tower.f(j).coeffs] for j in range(1, m + 1)]
        worst = 0.0
        for pair in system.ext_levels[m]:
            for x in pair:
                for c in cs:
                    x = _horner(c, x)
                worst = max(worst, float(abs(abs(x) - 1)))
        return worst
    x = system.levels[m].reshape(-1)
    for j in range(1, m + 1):
        x = np.polynomial.polynomial.polyval(x, np.array([complex(c).real for c in tower.f(j).coeffs]))
    return float(np.max(np.abs(np.abs(x) - 1)))


def sign_changes(system: BasicIntervalSystem, tower: CompositionTower, m: int) -> np.ndarray:
    """Sign changes of ``F_m`` across each level-``m`` interval (expected 1 each)."""
    iv = system.levels[m]
    if m == 0:
        return np.ones(1, dtype=int)
    vals = iv.reshape(-1)
    for j in range(1, m + 1):
        vals = np.polynomial.polynomial.polyval(vals, np.array([complex(c).real for c in tower.f(j).coeffs]))
    vals = vals.reshape(-1, 2)
    return (np.sign(vals[:, 0]) != np.sign(vals[:, 1])).astype(int)


@dataclass
class CantorReport:
    max_length: list
    total_length: list
    min_gap: list
    max_length_decreasing: bool
    mass_deviation: list | None = None


def cantor_diagnostics(system: BasicIntervalSystem, measure: DiscreteMeasure | None = None) -> CantorReport:
    """Per-level length statistics and, optionally, counting-measure masses.

    Each measure point is assigned to the nearest interval of the level;
    ``mass_deviation[m]`` is ``max_j |D_m * mass(I_{j,m}) - 1|``.
    """
    max_len, tot_len, min_gap = [], [], []
    for m in range(len(system.levels)):
        L = system.lengths(m)
        max_len.append(float(L.max()))
        tot_len.append(float(L.sum()))
        g = system.gap_lengths(m)
        min_gap.append(float(g.min()) if len(g) else None)
    decreasing = all(b < a for a, b in zip(max_len, max_len[1:]))
    dev = None
    if measure is not None:
        x = measure.points.real
        dev = []
        for m in range(len(system.levels)):
            iv = system.levels[m]
            dist = np.maximum(iv[None, :, 0] - x[:, None], x[:, None] - iv[None, :, 1])
            idx = np.argmin(np.maximum(dist, 0.0), axis=1)
            mass = np.bincount(idx, minlength=len(iv)) * measure.weight
            dev.append(float(np.max(np.abs(mass * len(iv) - 1))))
    return CantorReport(max_len, tot_len, min_gap, decreasing, dev)
