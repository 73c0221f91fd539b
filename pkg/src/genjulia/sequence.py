"""Regular polynomial sequences, composition towers and the Green function.

A sequence ``(f_n)`` is described by a :class:`RegularSequenceSpec`; the
compositions ``F_k = f_k o ... o f_1`` are handled by a
:class:`CompositionTower`, which materialises ``F_k`` only while its degree
stays under a cap and otherwise evaluates level by level, switching to
log-polar bookkeeping once an orbit is large.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exceptions import PreconditionError, RegularityError, SequenceExhaustedError
from .poly_core import (
    DEFAULT_DEGREE_CAP,
    FLOAT64,
    RATIONAL,
    Polynomial,
    compose,
    parse_scalar,
)

FAMILIES = ("explicit", "quadratic_c", "k1_gamma", "autonomous")
TAILS = ("repeat-last", "repeat-cycle")

# |w| above which orbits are tracked as (log|w|, arg w)
LOG_SWITCH = 1e6
DEFAULT_K_MAX = 60
_CONSTANT_FLOOR = 1e-12


def _coerce_poly(p):
    if isinstance(p, Polynomial):
        return p
    vals = list(p)
    try:
        return Polynomial(tuple(parse_scalar(v, RATIONAL) for v in vals), RATIONAL)
    except (PreconditionError, ValueError, TypeError):
        return Polynomial(tuple(vals), FLOAT64)


@dataclass(frozen=True)
class RegularSequenceSpec:
    """Defining data of a polynomial sequence ``(f_n)``.

    Use the class-method constructors rather than the raw fields.  ``A1``,
    ``A2``, ``A3`` default to the tightest witnesses over the defining
    data (valid for all ``n`` because every tail rule only repeats it),
    floored at a tiny positive value.
    """

    family: str
    polynomials: tuple = ()
    tail: str = "repeat-last"
    gamma: object = None
    offset: int = 0
    A1: float | None = None
    A2: float | None = None
    A3: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown family {self.family!r}")
        if self.family in ("explicit", "quadratic_c") and self.tail not in TAILS:
            raise PreconditionError(f"unknown tail rule {self.tail!r}")
        if self.family != "k1_gamma" and not self.polynomials:
            raise PreconditionError("at least one polynomial is required")
        if self.A1 is None or self.A2 is None or self.A3 is None:
            w1, w2, w3 = self._default_constants()
            object.__setattr__(self, "A1", w1 if self.A1 is None else self.A1)
            object.__setattr__(self, "A2", w2 if self.A2 is None else self.A2)
            object.__setattr__(self, "A3", w3 if self.A3 is None else self.A3)
        for name in ("A1", "A2", "A3"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def explicit(cls, polynomials, tail="repeat-last", **constants):
        polys = tuple(_coerce_poly(p) for p in polynomials)
        return cls("explicit", polys, tail, **constants)

    @classmethod
    def autonomous(cls, polynomial, **constants):
        return cls("autonomous", (_coerce_poly(polynomial),), "repeat-last", **constants)

    @classmethod
    def quadratic_c(cls, cs, tail="repeat-last", **constants):
        polys = tuple(_coerce_poly([c, 0, 1]) for c in cs)
        return cls("quadratic_c", polys, tail, **constants)

    @classmethod
    def k1_gamma(cls, gamma_sequence, **constants):
        return cls("k1_gamma", (), "repeat-last", gamma_sequence, **constants)

    # -- generated terms --------------------------------------------------
    @property
    def horizon(self):
        """Number of defined terms, ``math.inf`` for infinite sequences."""
        if self.family == "k1_gamma":
            h = self.gamma.horizon
            return h - self.offset if h != math.inf else h
        return math.inf

    def poly(self, n: int) -> Polynomial:
        """The ``n``-th generator ``f_n`` (1-based)."""
        if n < 1:
            raise PreconditionError("generators are indexed from 1")
        p = self._cache.get(n)
        if p is not None:
            return p
        i = n + self.offset
        if self.family == "k1_gamma":
            p = k1_polynomial(self.gamma.gamma(i))
        elif self.family == "autonomous":
            p = self.polynomials[0]
        elif self.tail == "repeat-last":
            p = self.polynomials[min(i, len(self.polynomials)) - 1]
        else:
            p = self.polynomials[(i - 1) % len(self.polynomials)]
        if p.degree < 2:
            raise PreconditionError(f"f_{n} has degree {p.degree} < 2")
        self._cache[n] = p
        return p

    def shifted(self, k: int) -> RegularSequenceSpec:
        """The sequence ``(f_{k+n})_n`` with the same regularity constants."""
        return RegularSequenceSpec(self.family, self.polynomials, self.tail, self.gamma,
                                   self.offset + k, self.A1, self.A2, self.A3)

    def _defining_terms(self):
        if self.family == "k1_gamma":
            return []
        return list(self.polynomials)

    def _default_constants(self):
        if self.family == "k1_gamma":
            g_lo, g_hi = self.gamma.bounds()
            if g_lo <= 0:
                raise PreconditionError("gamma is not bounded away from 0; sequence is not regular")
            a1 = 1.0 / (2.0 * g_hi)
            a2 = 1.0 - 2.0 * g_lo
            a3 = math.log(1.0 / (2.0 * g_lo)) / 2.0
            return a1, max(a2, _CONSTANT_FLOOR), max(a3, _CONSTANT_FLOOR)
        w = _witnesses(self._defining_terms())
        return w[0], max(w[1], _CONSTANT_FLOOR), max(w[2], _CONSTANT_FLOOR)

    @property
    def escape_radius(self) -> float:
        return escape_radius(self.A1, self.A2)


def k1_polynomial(gamma) -> Polynomial:
    """``(z**2 - 1) / (2 gamma) + 1`` with exact coefficients for rational gamma."""
    if isinstance(gamma, Fraction):
        s = 1 / (2 * gamma)
        return Polynomial((1 - s, Fraction(0), s), RATIONAL)
    s = 1.0 / (2.0 * float(gamma))
    return Polynomial((1.0 - s, 0.0, s), FLOAT64)


def _witnesses(polys):
    min_lead, max_ratio, max_log = math.inf, 0.0, -math.inf
    for p in polys:
        lead = abs(complex(p.leading))
        min_lead = min(min_lead, lead)
        for c in p.coeffs[:-1]:
            max_ratio = max(max_ratio, abs(complex(c)) / lead)
        max_log = max(max_log, math.log(lead) / p.degree)
    return min_lead, max_ratio, max_log


@dataclass
class RegularityReport:
    passed: bool
    horizon: int
    min_leading: float
    max_ratio: float
    max_log_leading_per_degree: float
    violations: list


def validate_regularity(spec: RegularSequenceSpec, horizon: int, raise_on_failure=False):
    """Check the three regularity inequalities for ``n = 1..horizon``.

    The report carries the tightest witnesses so that valid constants can
    be read off.  Each violation names ``n``, ``j`` and the inequality.
    """
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    horizon = int(min(horizon, spec.horizon))
    violations = []
    polys = []
    for n in range(1, horizon + 1):
        p = spec.poly(n)
        polys.append(p)
        d = p.degree
        lead = abs(complex(p.leading))
        if not lead >= spec.A1:
            violations.append(dict(n=n, j=d, inequality="A1",
                                   message=f"|a_{{{n},{d}}}|={lead:g} < A1"))
        for j, c in enumerate(p.coeffs[:-1]):
            if not abs(complex(c)) <= spec.A2 * lead:
                violations.append(dict(n=n, j=j, inequality="A2",
                                       message=f"|a_{{{n},{j}}}|={abs(complex(c)):g} > A2*|a_{{{n},{d}}}|"))
        if not math.log(lead) <= spec.A3 * d:
            violations.append(dict(n=n, j=d, inequality="A3",
                                   message=f"log|a_{{{n},{d}}}|={math.log(lead):g} > A3*{d}"))
    w = _witnesses(polys)
    report = RegularityReport(not violations, horizon, w[0], w[1], w[2], violations)
    if violations and raise_on_failure:
        raise RegularityError("; ".join(v["message"] for v in violations), violations)
    return report


def escape_radius(A1: float, A2: float) -> float:
    """Smallest float ``R > 1 + A2`` with ``A1 R (1 - A2/(R-1)) > 2``.

    The boundary is the larger root of ``A1 R^2 - (A1(1+A2)+2) R + 2 = 0``;
    the returned value is nudged above it until the inequality is strict.
    """
    if not (A1 > 0 and A2 > 0):
        raise PreconditionError("A1 and A2 must be positive")
    b = A1 * (1.0 + A2) + 2.0
    R = (b + math.sqrt(b * b - 8.0 * A1)) / (2.0 * A1)
    R = math.nextafter(R, math.inf)
    while not (R > 1.0 + A2 and A1 * R * (1.0 - A2 / (R - 1.0)) > 2.0):
        R = math.nextafter(R, math.inf)
    return R


@dataclass(frozen=True)
class _Level:
    coeffs: tuple
    degree: int
    log_lead: float
    arg_lead: float
    ratios: tuple  # a_i / a_d for i < d


class CompositionTower:
    """The compositions ``F_k`` of a sequence, materialised lazily.

    ``F(k)`` expands the composition while ``D_k <= cap``; everything else
    goes through level-by-level evaluation.
    """

    def __init__(self, spec: RegularSequenceSpec, cap: int = DEFAULT_DEGREE_CAP):
        self.spec = spec
        self.cap = cap
        self._levels: dict[int, _Level] = {}
        self._F: dict[int, Polynomial] = {}
        self._D = [1]

    def f(self, n):
        return self.spec.poly(n)

    def degree(self, k: int) -> int:
        """Cumulative degree ``D_k = d_1...d_k`` (``D_0 = 1``)."""
        while len(self._D) <= k:
            self._D.append(self._D[-1] * self.f(len(self._D)).degree)
        return self._D[k]

    def log_leading(self, k: int) -> float:
        """``sum_{j<=k} log|a_{j,d_j}| / D_j``."""
        return math.fsum(self.level(j).log_lead / self.degree(j) for j in range(1, k + 1))

    def log_abs_leading_F(self, k: int) -> float:
        """``log|lead F_k|``; equals ``D_k * log_leading(k)``."""
        Dk = self.degree(k)
        return math.fsum(self.level(j).log_lead * (Dk // self.degree(j)) for j in range(1, k + 1))

    def level(self, n) -> _Level:
        lv = self._levels.get(n)
        if lv is None:
            p = self.f(n)
            cs = tuple(complex(c) for c in p.coeffs)
            lead = cs[-1]
            lv = _Level(cs, p.degree, math.log(abs(lead)), cmath.phase(lead),
                        tuple(c / lead for c in cs[:-1]))
            self._levels[n] = lv
        return lv

    def F(self, k: int) -> Polynomial:
        """The expanded composition ``F_k``; ``F(0)`` is the identity."""
        if k == 0:
            p = self.f(1)
            return Polynomial((0, 1), p.mode, p.bits)
        if k in self._F:
            return self._F[k]
        prev = self.F(k - 1)
        Fk = compose(self.f(k), prev, cap=self.cap) if k > 1 else self.f(1)
        self._F[k] = Fk
        return Fk

    def shifted(self, k: int) -> CompositionTower:
        return CompositionTower(self.spec.shifted(k), self.cap)

    @property
    def escape_radius(self):
        return self.spec.escape_radius


@dataclass
class OrbitState:
    """A point of an orbit, linear (``w``) or log-polar (``log_abs``, ``arg``)."""

    w: complex | None
    log_abs: float
    arg: float

    @classmethod
    def of(cls, z):
        z = complex(z)
        return cls(z, math.log(abs(z)) if z != 0 else -math.inf, cmath.phase(z))

    @property
    def log_scale(self):
        return self.w is None

    def value(self):
        if self.w is not None:
            return self.w
        if self.log_abs > 700:
            return None
        return cmath.exp(complex(self.log_abs, self.arg))


def _step(lv: _Level, st: OrbitState) -> OrbitState:
    d = lv.degree
    if st.w is not None and (abs(st.w) <= LOG_SWITCH and d * st.log_abs + lv.log_lead < 600):
        w = lv.coeffs[-1]
        z = st.w
        for c in reversed(lv.coeffs[:-1]):
            w = w * z + c
        a = abs(w)
        if a > LOG_SWITCH:
            return OrbitState(None, math.log(a), cmath.phase(w))
        return OrbitState(w, math.log(a) if a > 0 else -math.inf, cmath.phase(w) if a > 0 else 0.0)
    # log-polar step: log f(w) = log a_d + d log w + log(1 + eta)
    L, th = st.log_abs, st.arg
    eta = 0j
    for i, r in enumerate(lv.ratios):
        if r != 0:
            e = (i - d) * L
            if e > -745:
                eta += r * cmath.exp(complex(e, (i - d) * th))
    one_eta = 1 + eta
    L2 = lv.log_lead + d * L + math.log(abs(one_eta))
    th2 = math.remainder(lv.arg_lead + d * th + cmath.phase(one_eta), 2 * math.pi)
    if L2 <= math.log(LOG_SWITCH):
        w = cmath.exp(complex(L2, th2))
        return OrbitState(w, L2, th2)
    return OrbitState(None, L2, th2)


@dataclass
class TowerValue:
    """Result of :func:`tower_eval`: ``F_k(z)`` or its log-polar form."""

    value: complex | None
    log_abs: float
    arg: float
    level: int
    escaped_at: int | None
    log_scale: bool


def _check_point(z):
    z = complex(z)
    if cmath.isnan(z):
        raise PreconditionError("NaN input point")
    return z


def _orbit(tower: CompositionTower, state: OrbitState, k: int):
    """Yield ``(level, state)`` for levels ``1..k`` starting from ``state``."""
    for n in range(1, k + 1):
        state = _step(tower.level(n), state)
        yield n, state


def tower_eval(tower: CompositionTower, z, k: int) -> TowerValue:
    """Iterate ``w <- f_j(w)`` for ``j = 1..k``, recording the first escape."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    z = _check_point(z)
    logR = math.log(tower.escape_radius)
    escaped_at = None
    st = OrbitState.of(z)
    for n, st in _orbit(tower, st, k):
        if escaped_at is None and st.log_abs > logR:
            escaped_at = n
    return TowerValue(st.value(), st.log_abs, st.arg, k, escaped_at, st.log_scale)


@dataclass
class GreenResult:
    value: float
    level_used: int
    error_estimate: float
    escaped: bool
    escaped_at: int | None = None


def _tail_constant(spec):
    return 2.0 * spec.A3 + max(0.0, -math.log(spec.A1))


def _green_from_state(tower, st, k_max) -> GreenResult:
    spec = tower.spec
    k_max = int(min(k_max, spec.horizon))
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    logR = math.log(tower.escape_radius)
    escaped_at = None
    for n, st in _orbit(tower, st, k_max):
        if escaped_at is None and st.log_abs > logR:
            escaped_at = n
    if escaped_at is None:
        return GreenResult(0.0, k_max, 0.0, False, None)
    DK = tower.degree(k_max)
    value = st.log_abs / DK
    q = spec.A2 / (math.exp(min(st.log_abs, 700.0)) - 1.0)
    eta_bound = -math.log1p(-q) if q < 1 else math.inf
    err = (_tail_constant(spec) + 2.0 * eta_bound) / DK
    return GreenResult(max(value, 0.0), k_max, err, True, escaped_at)


def green(tower: CompositionTower, z, k_max: int = DEFAULT_K_MAX) -> GreenResult:
    """Green function of the complement of the Julia set, pole at infinity.

    Returns ``log|F_K(z)| / D_K`` at ``K = k_max`` if the orbit left the
    escape disk by then, else ``0`` with ``escaped=False`` (bounded up to
    ``k_max``, which is not a membership claim).
    """
    z = _check_point(z)
    return _green_from_state(tower, OrbitState.of(z), k_max)


def green_functional_check(tower: CompositionTower, z, k: int, k_max: int = DEFAULT_K_MAX) -> float:
    """``|G(z) - G_shift(F_k(z)) / D_k|`` with ``G_shift`` for ``(f_{k+n})``."""
    z = _check_point(z)
    lhs = green(tower, z, k_max)
    if not lhs.escaped:
        raise PreconditionError("green_functional_check needs an escaping point")
    st = OrbitState.of(z)
    for _, st in _orbit(tower, st, k):
        pass
    rhs = _green_from_state(tower.shifted(k), st, k_max)
    return abs(lhs.value - rhs.value / tower.degree(k))


@dataclass
class CapacityResult:
    value: float
    tail_bound: float
    levels: int
    diverged: bool = False


def capacity(tower: CompositionTower, tol: float = 1e-14, max_levels: int = 10_000) -> CapacityResult:
    """``exp(-sum_j log|a_{j,d_j}| / D_j)`` truncated once the tail bound is below ``tol``.

    The tail after level ``k`` is at most ``(2 A3 + max(0, -log A1)) / D_k``
    since ``sum_{j>k} d_j / D_j <= 2 / D_k`` when every ``d_j >= 2``.
    """
    spec = tower.spec
    c = _tail_constant(spec)
    terms = []
    k = 0
    while True:
        if k >= 1 and c / tower.degree(k) < tol:
            break
        if k >= spec.horizon or k >= max_levels:
            return CapacityResult(math.exp(-math.fsum(terms)), math.inf, k, True)
        k += 1
        terms.append(tower.level(k).log_lead / tower.degree(k))
    return CapacityResult(math.exp(-math.fsum(terms)), c / tower.degree(k), k)


def green_grid(tower, xs, ys, k_max=DEFAULT_K_MAX):
    """Green values on the grid ``xs x ys``, row-major in ``y`` then ``x``."""
    return [[green(tower, complex(x, y), k_max) for x in xs] for y in ys]
