"""Preimage counting measures approximating the equilibrium measure.

``nu_k^a`` puts mass ``1/D_k`` on every root of ``F_k(z) = a``.  The roots
are found backwards one generator at a time, so every solve has the
degree of a single ``f_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AnchorError, PreconditionError, RootFindingError
from .sequence import CompositionTower, RegularSequenceSpec, escape_radius

DEFAULT_POINT_CAP = 2 ** 20
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class DiscreteMeasure:
    """Equal-weight point masses at ``points`` (roots with multiplicity)."""

    points: np.ndarray
    anchor: complex
    level: int

    @property
    def weight(self) -> float:
        return 1.0 / len(self.points)

    @property
    def total_mass(self) -> float:
        return self.weight * len(self.points)

    def __len__(self):
        return len(self.points)

    def integrate(self, values) -> complex:
        """Mean of ``values`` sampled at ``points``."""
        return complex(np.mean(values))

    def moment(self, j: int) -> complex:
        return self.integrate(self.points ** j)


@dataclass
class AnchorCertificate:
    a: complex
    satisfied: bool
    margin: float


def check_anchor(spec: RegularSequenceSpec, a) -> AnchorCertificate:
    """Evaluate ``|a| A1 (1 - A2 / (|a| - 1)) > 2``; ``margin`` is LHS minus 2."""
    r = abs(complex(a))
    if r <= 1:
        return AnchorCertificate(complex(a), False, -math.inf)
    lhs = r * spec.A1 * (1.0 - spec.A2 / (r - 1.0))
    return AnchorCertificate(complex(a), lhs > 2.0, lhs - 2.0)


def default_anchor(spec: RegularSequenceSpec) -> float:
    """Twice the escape radius, on the positive real axis."""
    return 2.0 * escape_radius(spec.A1, spec.A2)


def _solve_level(coeffs: np.ndarray, betas: np.ndarray, level: int) -> np.ndarray:
    """All roots of ``f(w) = beta`` for each ``beta``; shape ``(len(betas) * d,)``."""
    d = len(coeffs) - 1
    lead = coeffs[-1]
    monic = coeffs / lead
    m = len(betas)
    comp = np.zeros((m, d, d), dtype=complex)
    if d > 1:
        idx = np.arange(d - 1)
        comp[:, idx + 1, idx] = 1.0
    comp[:, :, -1] = -monic[:-1]
    comp[:, 0, -1] = -(monic[0] - betas / lead)
    try:
        roots = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"eigenvalue solve failed at level {level}") from exc
    bad = ~np.all(np.isfinite(roots), axis=1)
    if bad.any():
        b = betas[np.argmax(bad)]
        raise RootFindingError(f"root solve did not converge at level {level} for beta={b}")
    roots = _polish(coeffs, roots, betas[:, None])
    return roots.reshape(-1)


def _polish(coeffs, w, beta):
    """One damped Newton step on ``f(w) - beta``; kept only where it helps."""
    dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))
    with np.errstate(all="ignore"):
        f = np.polynomial.polynomial.polyval(w, coeffs) - beta
        df = np.polynomial.polynomial.polyval(w, dcoeffs)
        step = np.where(np.abs(df) > 0, f / df, 0)
        cand = w - step
        f2 = np.polynomial.polynomial.polyval(cand, coeffs) - beta
        better = np.isfinite(cand) & (np.abs(f2) <= np.abs(f))
        half = w - 0.5 * step
        f3 = np.polynomial.polynomial.polyval(half, coeffs) - beta
        better_half = ~better & np.isfinite(half) & (np.abs(f3) < np.abs(f))
    return np.where(better, cand, np.where(better_half, half, w))


def preimage_measure(tower: CompositionTower, a=None, k: int = 10,
                     point_cap: int = DEFAULT_POINT_CAP, check: bool = True) -> DiscreteMeasure:
    """Normalised counting measure on the ``D_k`` roots of ``F_k(z) = a``.

    Roots are solved backwards: ``f_k(w) = a``, then ``f_{k-1}(w) = beta``
    for each root ``beta`` found, down to ``f_1``.  Each solve takes the
    companion-matrix eigenvalues followed by one damped Newton step.
    Points are returned sorted by ``(re, im)``.
    """
    spec = tower.spec
    if a is None:
        a = default_anchor(spec)
    if check:
        cert = check_anchor(spec, a)
        if not cert.satisfied:
            raise AnchorError(f"anchor a={a} fails the escape inequality (margin {cert.margin:g})")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    Dk = tower.degree(k)
    if Dk > point_cap:
        raise PreconditionError(f"D_k={Dk} exceeds the point cap {point_cap}")
    pts = np.array([complex(a)])
    for j in range(k, 0, -1):
        coeffs = np.array(tower.level(j).coeffs, dtype=complex)
        pts = _solve_level(coeffs, pts, j)
    order = np.lexsort((pts.imag, pts.real))
    return DiscreteMeasure(pts[order], complex(a), k)


def disk_mass(m: DiscreteMeasure, z0, t: float) -> float:
    """Mass of the open disk ``|z - z0| < t``."""
    return float(np.count_nonzero(np.abs(m.points - complex(z0)) < t)) * m.weight


def _log_integral(dist, w, R, t_min):
    inside = dist < R
    lo = np.maximum(dist[inside], t_min)
    lo = lo[lo < R]
    return float(w * np.sum(np.log(R / lo)))


def density_integral(m: DiscreteMeasure, z0, r: float, quadrature_points: int | None = None):
    """Bracket ``(I_r, 3 I_{4r})`` with ``I_s = int_{t_min}^s m(D_t(z0)) / t dt``.

    ``t_min`` is the larger of ``1e-4 r`` and the distance from ``z0`` to
    the nearest point (below which the disk is empty).  The step function
    ``t -> m(D_t(z0))`` is integrated exactly unless ``quadrature_points``
    asks for the trapezoid rule in ``log t``.
    """
    if not 0 < r < 1:
        raise PreconditionError("r must lie in (0, 1)")
    dist = np.abs(m.points - complex(z0))
    if not np.any(dist < 4 * r):
        return 0.0, 0.0
    t_min = max(1e-4 * r, float(dist.min()))
    if quadrature_points is None:
        return (_log_integral(dist, m.weight, r, t_min),
                3.0 * _log_integral(dist, m.weight, 4 * r, t_min))

    def trap(R):
        if t_min >= R:
            return 0.0
        s = np.linspace(math.log(t_min), math.log(R), quadrature_points)
        vals = [disk_mass(m, z0, math.exp(x)) for x in s]
        return float(_trapezoid(vals, s))

    return trap(r), 3.0 * trap(4 * r)


def support_radius(m: DiscreteMeasure) -> float:
    return float(np.max(np.abs(m.points)))


def ks_distance(m: DiscreteMeasure, cdf) -> float:
    """Kolmogorov distance between the real parts of ``m`` and a CDF."""
    x = np.sort(m.points.real)
    n = len(x)
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
