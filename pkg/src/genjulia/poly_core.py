"""Dense univariate polynomials over three scalar modes.

Coefficients are stored in ascending order (index ``j`` holds the
coefficient of ``z**j``).  Three scalar modes are supported:

``"float64"``
    Python ``complex`` scalars, the default.
``"extended"``
    ``mpmath`` complex scalars at a configurable mantissa width.
``"rational"``
    ``fractions.Fraction`` scalars; exact, valid for real rational
    coefficients only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np

from .exceptions import MaterializationCapError, PreconditionError

FLOAT64 = "float64"
EXTENDED = "extended"
RATIONAL = "rational"
MODES = (FLOAT64, EXTENDED, RATIONAL)

DEFAULT_DEGREE_CAP = 4096
DEFAULT_EXTENDED_BITS = 128

_CONTEXTS: dict[int, mpmath.ctx_mp.MPContext] = {}


def ext_context(bits):
    """Return a private mpmath context working at ``bits`` of mantissa."""
    bits = int(bits)
    if bits < 53:
        raise PreconditionError(f"extended precision needs >= 53 bits, got {bits}")
    ctx = _CONTEXTS.get(bits)
    if ctx is None:
        ctx = mpmath.MPContext()
        ctx.prec = bits
        _CONTEXTS[bits] = ctx
    return ctx


def parse_scalar(value, mode=FLOAT64, bits=None):
    """Convert ``value`` (number or string such as ``"3/8"``) to a mode scalar."""
    if mode == RATIONAL:
        if isinstance(value, Rational):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value.strip())
        if isinstance(value, float):
            return Fraction(value)
        if isinstance(value, complex) and value.imag == 0:
            return Fraction(value.real)
        raise PreconditionError(f"cannot represent {value!r} exactly as a rational")
    if isinstance(value, str):
        text = value.strip()
        try:
            value = Fraction(text)
        except ValueError:
            value = complex(text.replace("i", "j"))
    if mode == EXTENDED:
        ctx = ext_context(bits or DEFAULT_EXTENDED_BITS)
        if isinstance(value, Fraction):
            return ctx.mpc(ctx.mpf(value.numerator) / value.denominator)
        return ctx.mpc(value)
    if mode != FLOAT64:
        raise PreconditionError(f"unknown scalar mode {mode!r}")
    return complex(value)


def _is_zero(c):
    return c == 0


@dataclass(frozen=True)
class Polynomial:
    """Immutable dense polynomial with a nonzero leading coefficient.

    Parameters
    ----------
    coeffs : sequence
        Coefficients in ascending order.  Trailing zeros are dropped.
    mode : str
        One of ``"float64"``, ``"extended"``, ``"rational"``.
    bits : int, optional
        Mantissa width for the extended mode.
    overflow : bool
        Set by :func:`compose` when float coefficients left the finite range.
    log_abs_leading : float, optional
        ``log|leading coefficient|``, kept exact-in-log when ``overflow``.
    """

    coeffs: tuple
    mode: str = FLOAT64
    bits: int | None = None
    overflow: bool = False
    log_abs_leading: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise PreconditionError(f"unknown scalar mode {self.mode!r}")
        bits = self.bits
        if self.mode == EXTENDED and bits is None:
            bits = DEFAULT_EXTENDED_BITS
            object.__setattr__(self, "bits", bits)
        if self.mode != EXTENDED:
            object.__setattr__(self, "bits", None)
        cs = [parse_scalar(c, self.mode, bits) for c in self.coeffs]
        while len(cs) > 1 and _is_zero(cs[-1]):
            cs.pop()
        if not cs or _is_zero(cs[-1]):
            raise PreconditionError("the zero polynomial is not allowed")
        object.__setattr__(self, "coeffs", tuple(cs))
        if self.log_abs_leading is None and not self.overflow:
            object.__setattr__(self, "log_abs_leading", _log_abs(cs[-1]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other):
        if isinstance(other, Polynomial):
            mode, bits = _common_mode(self, other)
            a, b = self.to_mode(mode, bits).coeffs, other.to_mode(mode, bits).coeffs
            n = max(len(a), len(b))
            zero = parse_scalar(0, mode, bits)
            cs = [(a[i] if i < len(a) else zero) + (b[i] if i < len(b) else zero)
                  for i in range(n)]
            return Polynomial(tuple(cs), mode, bits)
        c = parse_scalar(other, self.mode, self.bits)
        return Polynomial((self.coeffs[0] + c,) + self.coeffs[1:], self.mode, self.bits)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Polynomial):
            return self + other.scale(-1)
        return self + (-parse_scalar(other, self.mode, self.bits))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            mode, bits = _common_mode(self, other)
            cs = _mul(self.to_mode(mode, bits).coeffs, other.to_mode(mode, bits).coeffs, mode)
            return Polynomial(cs, mode, bits)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor):
        f = parse_scalar(factor, self.mode, self.bits)
        return Polynomial(tuple(c * f for c in self.coeffs), self.mode, self.bits)

    def monic(self):
        """Divide through by the leading coefficient."""
        lead = self.leading
        return Polynomial(tuple(c / lead for c in self.coeffs), self.mode, self.bits)

    def to_mode(self, mode, bits=None):
        if mode == self.mode and (mode != EXTENDED or bits in (None, self.bits)):
            return self
        if mode == RATIONAL:
            vals = []
            for c in self.coeffs:
                if isinstance(c, Fraction):
                    vals.append(c)
                elif complex(c).imag != 0:
                    raise PreconditionError("complex coefficients have no rational form")
                else:
                    vals.append(Fraction(complex(c).real))
            return Polynomial(tuple(vals), RATIONAL)
        if mode == EXTENDED:
            ctx = ext_context(bits or DEFAULT_EXTENDED_BITS)
            vals = [parse_scalar(c, EXTENDED, ctx.prec) if isinstance(c, Fraction) else ctx.mpc(c)
                    for c in self.coeffs]
            return Polynomial(tuple(vals), EXTENDED, ctx.prec)
        return Polynomial(tuple(complex(c) for c in self.coeffs), FLOAT64)

    def as_array(self) -> np.ndarray:
        """Coefficients as a complex128 array (ascending order)."""
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def is_real(self) -> bool:
        return all(isinstance(c, Fraction) or complex(c).imag == 0 for c in self.coeffs)

    def real_coeffs(self) -> list[float]:
        return [float(c) if isinstance(c, Fraction) else complex(c).real for c in self.coeffs]

    def __repr__(self):
        body = ", ".join(str(c) for c in self.coeffs)
        return f"Polynomial([{body}], mode={self.mode!r})"


def _log_abs(c):
    if isinstance(c, Fraction):
        return math.log(abs(c.numerator)) - math.log(c.denominator)
    try:
        a = abs(complex(c))
    except (OverflowError, TypeError):
        return float(mpmath.log(abs(c)))
    if a == 0:
        return -math.inf
    if math.isinf(a):
        return float(mpmath.log(abs(mpmath.mpc(c)))) if not isinstance(c, complex) else math.inf
    return math.log(a)


def _common_mode(p, q):
    if p.mode == q.mode == RATIONAL:
        return RATIONAL, None
    if EXTENDED in (p.mode, q.mode):
        return EXTENDED, max(p.bits or 0, q.bits or 0) or DEFAULT_EXTENDED_BITS
    return FLOAT64, None


def _mul(a, b, mode):
    if mode == FLOAT64:
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
        return tuple(complex(x) for x in out)
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if _is_zero(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return tuple(out)


def evaluate(p: Polynomial, z):
    """Horner evaluation of ``p`` at ``z``.

    Exact when ``p`` is rational and ``z`` is rational.  A float overflow
    is reported as ``complex(inf, 0)`` rather than raised.
    """
    cs = p.coeffs
    if p.mode == RATIONAL and isinstance(z, Rational):
        z = Fraction(z)
    elif p.mode == EXTENDED:
        ctx = ext_context(p.bits)
        z = parse_scalar(z, EXTENDED, p.bits) if isinstance(z, Rational) else ctx.mpc(z)
    elif p.mode == RATIONAL:
        if isinstance(z, (mpmath.mpf, mpmath.mpc)) or type(z).__module__.startswith("mpmath"):
            return evaluate(p.to_mode(EXTENDED, getattr(getattr(z, "context", None), "prec", None)), z)
        z = complex(z)
        cs = tuple(complex(c) for c in cs)
    else:
        z = complex(z)
    acc = cs[-1]
    try:
        for c in reversed(cs[:-1]):
            acc = acc * z + c
    except OverflowError:
        return complex(math.inf, 0.0)
    if isinstance(acc, complex) and not cmath.isfinite(acc):
        return complex(math.inf, 0.0)
    return acc


def evaluate_many(p: Polynomial, zs) -> np.ndarray:
    """Vectorised float Horner evaluation over an array of points."""
    zs = np.asarray(zs, dtype=complex)
    acc = np.full(zs.shape, complex(p.coeffs[-1]), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for c in reversed(p.coeffs[:-1]):
            acc = acc * zs + complex(c)
    return acc


def derivative(p: Polynomial) -> Polynomial:
    if p.degree < 1:
        raise PreconditionError("derivative needs degree >= 1")
    cs = tuple(c * j for j, c in enumerate(p.coeffs) if j > 0)
    return Polynomial(cs, p.mode, p.bits)


def compose(outer: Polynomial, inner: Polynomial, cap: int = DEFAULT_DEGREE_CAP) -> Polynomial:
    """Return ``outer(inner(z))``.

    Raises
    ------
    MaterializationCapError
        If the result degree would exceed ``cap``; evaluate the tower
        level by level instead.
    """
    if outer.degree < 1 or inner.degree < 1:
        raise PreconditionError("compose needs both degrees >= 1")
    deg = outer.degree * inner.degree
    if deg > cap:
        raise MaterializationCapError(
            f"composition degree {deg} exceeds the cap {cap}; use tower evaluation")
    mode, bits = _common_mode(outer, inner)
    o = outer.to_mode(mode, bits).coeffs
    inn = inner.to_mode(mode, bits).coeffs
    acc = (o[-1],)
    for c in reversed(o[:-1]):
        acc = _mul(acc, inn, mode)
        acc = (acc[0] + c,) + acc[1:]
    log_lead = outer.log_abs_leading + outer.degree * inner.log_abs_leading
    overflow = mode == FLOAT64 and not all(cmath.isfinite(c) for c in acc)
    if overflow:
        return Polynomial(acc, mode, bits, overflow=True, log_abs_leading=log_lead)
    return Polynomial(acc, mode, bits)


@dataclass(frozen=True)
class PowerSumTable:
    """Root power sums ``s_1..s_K`` of a degree-``source_degree`` polynomial."""

    values: tuple
    source_degree: int
    valid_up_to: int

    def __getitem__(self, k):
        """1-based access: ``table[k]`` is ``s_k``."""
        if not 1 <= k <= self.valid_up_to:
            raise IndexError(k)
        return self.values[k - 1]


def power_sums(p: Polynomial, K: int) -> PowerSumTable:
    """Sums of the ``k``-th powers of the roots of ``p`` for ``k = 1..K``.

    Uses Newton's identities on the coefficient ratios only, so the
    constant term never enters and the result is unchanged by ``p + c``.
    Valid for ``1 <= K <= deg p - 1``.
    """
    n = p.degree
    if not 1 <= K <= n - 1:
        raise PreconditionError(f"power sums need 1 <= K <= deg-1 = {n - 1}, got K={K}")
    a = p.coeffs
    lead = a[n]
    s = []
    for k in range(1, K + 1):
        acc = k * a[n - k]
        for i in range(1, k):
            acc = acc + a[n - i] * s[k - i - 1]
        s.append(-acc / lead)
    return PowerSumTable(tuple(s), n, K)
