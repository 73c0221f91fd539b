"""The quadratic family ``f_n(z) = (z**2 - 1) / (2 gamma_n) + 1``.

Closed-form geometry of the real Cantor set ``K_1(gamma)`` through the
branch map ``v_gamma(t) = sqrt(1 - 2 gamma (1 - t))``, its capacity, the
1/2-Hölder criterion ``sum eps_k < inf`` and the Parreau-Widom criterion
``sum sqrt(eps_k) < inf`` where ``eps_k = 1/4 - gamma_k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import (
    InternalConsistencyError,
    PreconditionError,
    SequenceExhaustedError,
)
from .poly_core import ext_context, parse_scalar, RATIONAL
from .sequence import (
    CapacityResult,
    CompositionTower,
    RegularSequenceSpec,
    green,
)

QUARTER = Fraction(1, 4)
TAIL_RULES = ("repeat-last", "repeat-cycle", "explicit-finite", "eps-geometric", "eps-power")
DEFAULT_CRITICAL_CAP = 2 ** 16


def _scalar(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x, RATIONAL)
    return float(x)


@dataclass(frozen=True)
class GammaSequence:
    """Parameters ``gamma_n`` in ``(0, 1/4]``.

    ``head`` lists the first terms explicitly.  Later terms follow
    ``tail_rule``:

    * ``repeat-last`` / ``repeat-cycle`` repeat the head,
    * ``explicit-finite`` defines nothing beyond the head,
    * ``eps-geometric`` with ``eps_params=(C, q)``: ``eps_n = C q**n``,
    * ``eps-power`` with ``eps_params=(C, p, s)``: ``eps_n = C (n + s)**-p``.

    Rule terms use the absolute index ``n``.
    """

    head: tuple = ()
    tail_rule: str = "repeat-last"
    eps_params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(_scalar(g) for g in self.head))
        object.__setattr__(self, "eps_params", tuple(_scalar(p) for p in self.eps_params))
        if self.tail_rule not in TAIL_RULES:
            raise PreconditionError(f"unknown tail rule {self.tail_rule!r}")
        if self.tail_rule in ("repeat-last", "repeat-cycle", "explicit-finite") and not self.head:
            raise PreconditionError(f"tail rule {self.tail_rule!r} needs at least one gamma")
        for n, g in enumerate(self.head, 1):
            if not 0 < g <= QUARTER:
                raise PreconditionError(f"gamma_{n}={g} outside (0, 1/4]")
        if self.tail_rule == "eps-geometric":
            C, q = self.eps_params
            if not (C >= 0 and 0 <= q < 1):
                raise PreconditionError("eps-geometric needs C >= 0 and 0 <= q < 1")
        elif self.tail_rule == "eps-power":
            C, p, s = self.eps_params
            if not (C >= 0 and p > 0 and len(self.head) + 1 + s > 0):
                raise PreconditionError("eps-power needs C >= 0, p > 0 and n + s > 0")
        if self.tail_rule.startswith("eps-"):
            first = len(self.head) + 1
            if not self._rule_eps(first) < QUARTER:
                raise PreconditionError(
                    f"eps_{first}={self._rule_eps(first)} >= 1/4 gives gamma <= 0; "
                    "supply explicit head terms")

    @classmethod
    def constant(cls, gamma):
        return cls((gamma,), "repeat-last")

    @classmethod
    def from_eps_geometric(cls, scale, ratio, head=()):
        return cls(tuple(head), "eps-geometric", (scale, ratio))

    @classmethod
    def from_eps_power(cls, scale, power, shift=0, head=()):
        return cls(tuple(head), "eps-power", (scale, power, shift))

    @property
    def horizon(self):
        return len(self.head) if self.tail_rule == "explicit-finite" else math.inf

    def _rule_eps(self, n):
        if self.tail_rule == "eps-geometric":
            C, q = self.eps_params
            return C * q ** n
        C, p, s = self.eps_params
        if isinstance(p, Fraction) and p.denominator == 1 and isinstance(C, Fraction) \
                and isinstance(s, Fraction):
            return C / (n + s) ** int(p)
        return float(C) * float(n + s) ** (-float(p))

    def epsilon(self, n: int):
        """``eps_n = 1/4 - gamma_n`` computed without cancellation for rule terms."""
        if n < 1:
            raise PreconditionError("gamma is indexed from 1")
        if n <= len(self.head):
            g = self.head[n - 1]
            return QUARTER - g if isinstance(g, Fraction) else 0.25 - g
        rule = self.tail_rule
        if rule == "repeat-last":
            return self.epsilon(len(self.head))
        if rule == "repeat-cycle":
            return self.epsilon((n - 1) % len(self.head) + 1)
        if rule == "explicit-finite":
            raise SequenceExhaustedError(f"gamma_{n} is beyond the {len(self.head)} given terms")
        return self._rule_eps(n)

    def gamma(self, n: int):
        if n <= len(self.head):
            if n < 1:
                raise PreconditionError("gamma is indexed from 1")
            return self.head[n - 1]
        e = self.epsilon(n)
        return QUARTER - e if isinstance(e, Fraction) else 0.25 - e

    def log_delta(self, n: int) -> float:
        """``log(gamma_1 ... gamma_n)``, summed in log space."""
        return math.fsum(math.log(self.gamma(k)) for k in range(1, n + 1))

    def delta(self, n: int) -> float:
        return math.exp(self.log_delta(n))

    def bounds(self):
        """``(inf gamma_n, sup gamma_n)`` over all defined ``n``."""
        vals = [float(g) for g in self.head]
        if self.tail_rule.startswith("eps-"):
            vals.append(float(self.gamma(len(self.head) + 1)))
            vals.append(0.25)
        return min(vals), max(vals)

    def is_regular(self) -> bool:
        return self.bounds()[0] > 0

    def to_spec(self, **constants) -> RegularSequenceSpec:
        return RegularSequenceSpec.k1_gamma(self, **constants)

    def tower(self, **kw) -> CompositionTower:
        return CompositionTower(self.to_spec(), **kw)


def _ctx_num(x, ctx):
    if ctx is None:
        return float(x)
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def v_map(gamma, t, bits=None):
    """``v_gamma(t) = sqrt(1 - 2 gamma (1 - t))`` for ``0 < gamma <= 1/4``, ``|t| <= 1``."""
    if not 0 < gamma <= QUARTER:
        raise PreconditionError(f"gamma={gamma} outside (0, 1/4]")
    if not -1 <= t <= 1:
        raise PreconditionError(f"t={t} outside [-1, 1]")
    ctx = ext_context(bits) if bits else None
    g = _ctx_num(gamma, ctx)
    t = _ctx_num(t, ctx) if ctx else float(t)
    arg = 1 - 2 * g * (1 - t)
    return ctx.sqrt(arg) if ctx else math.sqrt(max(arg, 0.0))


def _signs(word):
    out = []
    for s in word:
        if s in ("+", 1, "1", "+1"):
            out.append(1)
        elif s in ("-", -1, "-1"):
            out.append(-1)
        else:
            raise PreconditionError(f"bad sign {s!r}")
    return out


def endpoints(gs: GammaSequence, n: int, sign_word, bits=None):
    """``s_1 v_{g_1}(s_2 v_{g_2}( ... s_n v_{g_n}(-1)))`` for a sign word ``s``.

    The all-plus word gives the rightmost solution of ``F_n(x) = -1``.
    """
    signs = _signs(sign_word)
    if len(signs) != n:
        raise PreconditionError(f"sign word of length {len(signs)} for n={n}")
    ctx = ext_context(bits) if bits else None
    x = _ctx_num(-1, ctx) if ctx else -1.0
    for k in range(n, 0, -1):
        x = signs[k - 1] * v_map(gs.gamma(k), x, bits)
    return x


def first_interval_length(gs: GammaSequence, n: int, bits=None):
    """``l_{1,n} = 1 - v_{g_1}(... v_{g_n}(-1))`` without cancellation.

    Uses ``1 - v_g(t) = 2 g (1 - t) / (1 + v_g(t))`` and carries ``1 - t``.
    """
    if n < 0:
        raise PreconditionError("n must be >= 0")
    ctx = ext_context(bits) if bits else None
    u = _ctx_num(2, ctx) if ctx else 2.0
    for k in range(n, 0, -1):
        g = _ctx_num(gs.gamma(k), ctx)
        v = ctx.sqrt(1 - 2 * g * u) if ctx else math.sqrt(max(1.0 - 2.0 * g * u, 0.0))
        u = 2 * g * u / (1 + v)
    return u


def length_bounds(gs: GammaSequence, n: int):
    """``(2 delta_n, (pi^2 / 2) delta_n)``, the bracket on ``l_{1,n}``."""
    d = gs.delta(n)
    return 2.0 * d, (math.pi ** 2 / 2.0) * d


def capacity_closed_form(gs: GammaSequence, tol: float = 1e-14) -> CapacityResult:
    """``2 exp(sum_n 2^-n log gamma_n)`` with tail bound ``2^-N |log inf gamma|``."""
    g_lo = gs.bounds()[0]
    c = abs(math.log(g_lo))
    terms = []
    n = 0
    while n == 0 or c * 2.0 ** -n >= tol:
        if n >= gs.horizon:
            return CapacityResult(2.0 * math.exp(math.fsum(terms)), math.inf, n, True)
        n += 1
        terms.append(math.log(gs.gamma(n)) * 2.0 ** -n)
    return CapacityResult(2.0 * math.exp(math.fsum(terms)), c * 2.0 ** -n, n)


@dataclass
class SmoothnessVerdict:
    verdict: str  # "optimal-holder" | "not-optimal" | "inconclusive"
    reason: str
    partial_sums: list = field(default_factory=list)
    four_n_delta: list = field(default_factory=list)


def _analytic_sum_test(gs: GammaSequence, exponent: float):
    """Convergence of ``sum eps_k**exponent`` decided from the tail rule, or None."""
    rule = gs.tail_rule
    if rule == "repeat-last":
        return gs.epsilon(len(gs.head)) == 0
    if rule == "repeat-cycle":
        return all(gs.epsilon(k) == 0 for k in range(1, len(gs.head) + 1))
    if rule == "eps-geometric":
        return True
    if rule == "eps-power":
        C, p, _ = gs.eps_params
        return C == 0 or float(p) * exponent > 1
    return None


def smoothness_verdict(gs: GammaSequence, horizon: int) -> SmoothnessVerdict:
    """Decide 1/2-Hölder smoothness of the Green function via ``sum eps_k``.

    Explicit tail rules are decided analytically.  Finite data only yields
    partial sums and the equivalent diagnostic ``4^n delta_n``.
    """
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    h = int(min(horizon, gs.horizon))
    eps = [float(gs.epsilon(k)) for k in range(1, h + 1)]
    partial = list(itertools.accumulate(eps))
    fnd = [math.exp(n * math.log(4.0) + gs.log_delta(n)) for n in range(1, h + 1)]
    conv = _analytic_sum_test(gs, 1.0)
    if conv is None:
        return SmoothnessVerdict("inconclusive", "finite data: no limit claimed", partial, fnd)
    if conv:
        return SmoothnessVerdict("optimal-holder", f"{gs.tail_rule}: sum eps_k converges", partial, fnd)
    return SmoothnessVerdict("not-optimal", f"{gs.tail_rule}: sum eps_k diverges", partial, fnd)


def _exact_interval_green(z):
    w = complex(z)
    r = w + np.sqrt(w - 1) * np.sqrt(w + 1)
    return math.log(abs(r))


@dataclass
class HolderProbe:
    max_ratio: float
    samples: list  # (z, distance, G, G / sqrt(distance))
    verdict: str
    exact_ratios: list | None = None


def holder_constant_probe(gs: GammaSequence, tower: CompositionTower | None = None,
                          distances=None, k_max: int = 80) -> HolderProbe:
    """Empirical ``sup G(z) / sqrt(dist(z, K))`` near the endpoints ``+-1``.

    Samples ``z = +-(1 + t)`` and ``z = +-1 + i t``; both lie at distance
    ``t`` from ``K``.  For ``gamma = 1/4`` the exact Green function of
    ``[-1, 1]`` is evaluated alongside.
    """
    tower = tower or gs.tower()
    if distances is None:
        distances = np.logspace(-1, -6, 11)
    samples, exact = [], []
    const_quarter = gs.tail_rule in ("repeat-last", "repeat-cycle") and all(
        g == QUARTER for g in gs.head)
    for t in distances:
        t = float(t)
        for z in (1 + t, -1 - t, complex(1, t), complex(-1, t)):
            G = green(tower, z, k_max).value
            samples.append((z, t, G, G / math.sqrt(t)))
            if const_quarter:
                exact.append(_exact_interval_green(z) / math.sqrt(t))
    verdict = smoothness_verdict(gs, 50).verdict
    return HolderProbe(max(s[3] for s in samples), samples, verdict, exact or None)


def critical_set(gs: GammaSequence, n: int, bits=None, cap: int = DEFAULT_CRITICAL_CAP):
    """Zeros ``Z_{n-1}`` of ``F_{n-1}`` (``Z_0 = {0}``), sorted ascending.

    Each zero is ``+-v_{g_1}(+-v_{g_2}( ... +-v_{g_{n-1}}(0)))``.  The
    residual of ``F_{n-1}`` is verified at the working precision.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    m = n - 1
    if 2 ** m > cap:
        raise PreconditionError(f"2^{m} critical points exceed the cap {cap}")
    ctx = ext_context(bits) if bits else None
    zero = _ctx_num(0, ctx) if ctx else 0.0
    if m == 0:
        return [zero]
    pts = [zero]
    for k in range(m, 0, -1):
        pts = [s * v_map(gs.gamma(k), x, bits) for x in pts for s in (1, -1)]
    pts.sort()
    resid = max(abs(k1_forward(gs, x, m, bits)) for x in pts)
    eps = 2.0 ** -(bits or 53)
    cond = math.exp(-gs.log_delta(m))
    if resid > 64 * eps * cond:
        raise InternalConsistencyError(f"critical point residual {resid} too large at n={n}")
    return pts


def k1_forward(gs: GammaSequence, x, k: int, bits=None):
    """``F_k(x)`` by forward iteration at the working precision."""
    ctx = ext_context(bits) if bits else None
    for j in range(1, k + 1):
        g = _ctx_num(gs.gamma(j), ctx)
        x = (x * x - 1) / (2 * g) + 1
    return x


@dataclass
class PWSummary:
    terms: list
    partial_sums: list
    critical_points: list
    epsilons: list
    error_estimates: list
    verdict_hint: str | None
    lower_bound_holds: bool


def _shifted_green_at_one_plus(gs: GammaSequence, n: int, sigma: float, depth: int):
    """``G_{(f_{n+j})}(1 + sigma)`` by the doubling recursion on ``sigma``.

    ``1 + sigma -> 1 + sigma (2 + sigma) / (2 gamma)``; once the orbit is
    large it is tracked as ``log t`` and the remaining levels contribute
    ``2^-(j+1) (-log 2 gamma)`` each, summed explicitly.
    """
    if sigma == 0:
        return 0.0, 0.0
    L = math.log1p(sigma)
    big = False
    p = 0
    while p < depth or (not big and p < 4000):
        g = float(gs.gamma(n + p + 1))
        if not big:
            sigma = sigma * (2.0 + sigma) / (2.0 * g)
            big = sigma > 1e8
            L = math.log1p(sigma)
        else:
            L = 2.0 * L - math.log(2.0 * g) + math.log1p(-(1.0 - 2.0 * g) * math.exp(-2.0 * L))
        p += 1
    value = L * 2.0 ** -p
    tail = math.fsum(-math.log(2.0 * float(gs.gamma(n + j + 1))) * 2.0 ** -(j + 1)
                     for j in range(p, p + 64))
    err = 2.0 ** -(p + 64) * abs(math.log(2.0 * gs.bounds()[0])) + 2.0 ** -p * math.exp(-2.0 * L)
    return value + tail, err


def pw_sum(gs: GammaSequence, N: int, k_depth: int | None = None) -> PWSummary:
    """Partial sums of ``PW = sum_n s_n`` with ``s_n = 2^(n-1) G(z)``, ``z`` in ``Z_{n-1}``.

    Since ``F_n`` equals ``-1 - sigma_n`` on ``Z_{n-1}`` with
    ``sigma_n = 2 eps_n / gamma_n`` and every ``f_k`` is even,
    ``s_n = G_{(f_{n+j})}(1 + sigma_n) / 2``.  ``k_depth`` is the total
    level reached for term ``n`` (default ``n + 40``).
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    terms, errs, crit, epss = [], [], [], []
    for n in range(1, N + 1):
        depth = (k_depth if k_depth is not None else n + 40) - n
        eps = gs.epsilon(n)
        g = gs.gamma(n)
        sigma = float(2 * eps / g)
        G, err = _shifted_green_at_one_plus(gs, n, sigma, max(depth, 1))
        terms.append(G / 2.0)
        errs.append(err / 2.0)
        epss.append(float(eps))
        crit.append(_first_critical_point(gs, n))
    partial = list(itertools.accumulate(terms))
    lower_ok = all(s > 2 * e or (e == 0 and s == 0) for s, e in zip(terms, epss))
    conv = _analytic_sum_test(gs, 0.5)
    hint = None if conv is None else ("convergent-criterion" if conv else "divergent-criterion")
    return PWSummary(terms, partial, crit, epss, errs, hint, lower_ok)


def _first_critical_point(gs, n):
    """The all-plus zero of ``F_{n-1}`` (``0`` for ``n = 1``)."""
    x = 0.0
    for k in range(n - 1, 0, -1):
        x = v_map(gs.gamma(k), x)
    return x


def diagnostic_rows(gs: GammaSequence, N: int, k_depth: int | None = None):
    """Rows ``(n, gamma_n, eps_n, delta_n, l_{1,n}, s_n, S_n)`` for ``n = 1..N``."""
    pw = pw_sum(gs, N, k_depth)
    rows = []
    for n in range(1, N + 1):
        rows.append((n, float(gs.gamma(n)), float(gs.epsilon(n)), gs.delta(n),
                     float(first_interval_length(gs, n)), pw.terms[n - 1], pw.partial_sums[n - 1]))
    return rows
