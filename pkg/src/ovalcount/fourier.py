"""Fourier-side approximants of the normalised counting error.

Poisson summation turns the counting error into a sum over the dual
lattice.  Each dual vector l contributes, through the two boundary points
with outer normals +l and -l, oscillations

    w(+-l) cos(2 pi t Y(+-l) -+ 2 pi <alpha, l> - 3 pi / 4) / |l|^{3/2},

where w is a power of the curvature radius (see ``CURVATURE_POWER``).
Grouping the multiples m l of each primitive l gives S_{A,prime}, whose
m-series is phi evaluated at the phase t Y(l) + <alpha, l>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import OvalCurve
from .lattice import (PrimitiveIndex, ReducedBasis, UnimodularLattice, dual, enumerate_primitive,
                      enumerate_vectors, reduce)
from .limit_law import CURVATURE_POWER, ZETA_3_2, phi, phi_tail_bound
from .counting import DEFAULT_CAP, error_normalized


@dataclass(frozen=True)
class ApproximantConfig:
    """Cut-off A, m-series truncation and its tolerance.

    ``m_max=None`` sums the m-series exactly (closed form of phi).
    ``power`` is the exponent of the curvature radius in the weights.
    """

    A: float
    m_max: int | None = None
    tolerance: float = 1e-8
    power: float = CURVATURE_POWER

    def __post_init__(self):
        if self.A <= 0:
            raise DomainError("A must be positive")
        if self.m_max is not None and self.m_max < 1:
            raise DomainError("m_max must be positive")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")

    @classmethod
    def certified(cls, A: float, tolerance: float, curve: OvalCurve,
                  power: float = CURVATURE_POWER) -> "ApproximantConfig":
        """Smallest m_max with 2/sqrt(m_max) <= tolerance / (max w * zeta(3/2))."""
        w_max = curve.curvature_bounds()[1] ** power
        m_max = math.ceil((2.0 * w_max * ZETA_3_2 / tolerance) ** 2)
        return cls(A=A, m_max=m_max, tolerance=tolerance, power=power)

    def is_certified(self, curve: OvalCurve) -> bool:
        w_max = curve.curvature_bounds()[1] ** self.power
        return phi_tail_bound(self.m_max) <= self.tolerance / (w_max * ZETA_3_2)


def nu(curve: OvalCurve, l, t: float, power: float = CURVATURE_POWER) -> np.ndarray:
    """w(l) cos(2 pi t Y(l) - 3 pi / 4) with w = rho^power."""
    l = np.asarray(l, dtype=float)
    return curve.curvature_radius(l) ** power * np.cos(2 * np.pi * t * curve.y_gamma(l) - 0.75 * np.pi)


def h_A(curve: OvalCurve, L: UnimodularLattice, t: float, cfg: ApproximantConfig,
        symmetric_form: bool | None = None) -> float:
    """Sum over dual vectors 0 < |l| <= A of (nu(l) + nu(-l)) / (2 pi |l|^{3/2}).

    For symmetric curves the equivalent form sum nu(l) / (pi |l|^{3/2}) is used
    unless ``symmetric_form`` says otherwise.
    """
    if symmetric_form is None:
        symmetric_form = curve.symmetric
    l = enumerate_vectors(dual(L), cfg.A)
    if l.shape[0] == 0:
        return 0.0
    scale = np.hypot(l[:, 0], l[:, 1]) ** -1.5
    if symmetric_form:
        return float((scale * nu(curve, l, t, cfg.power)).sum() / np.pi)
    both = nu(curve, l, t, cfg.power) + nu(curve, -l, t, cfg.power)
    return float((scale * both).sum() / (2 * np.pi))


def dual_primitive(L: UnimodularLattice, A: float) -> np.ndarray:
    """Primitive dual vectors of norm <= A, one from each pair +-l."""
    rb = reduce(dual(L), strict=False)
    return enumerate_primitive(rb, A).v


def s_A_prime(curve: OvalCurve, L: UnimodularLattice, t: float, cfg: ApproximantConfig,
              alpha=(0.0, 0.0)) -> float:
    """(1/pi) sum over primitive dual l (one per pair) of
    [w(l) phi(t Y(l) + <alpha, l>) + w(-l) phi(t Y(-l) - <alpha, l>)] / |l|^{3/2}.
    """
    v = dual_primitive(L, cfg.A)
    if v.shape[0] == 0:
        return 0.0
    shift = v @ np.asarray(alpha, dtype=float)
    plus = curve.curvature_radius(v) ** cfg.power * phi(t * curve.y_gamma(v) + shift, cfg.m_max)
    minus = curve.curvature_radius(-v) ** cfg.power * phi(t * curve.y_gamma(-v) - shift, cfg.m_max)
    scale = np.hypot(v[:, 0], v[:, 1]) ** -1.5
    return float((scale * (plus + minus)).sum() / np.pi)


def s_A_prime_tail_bound(curve: OvalCurve, L: UnimodularLattice, cfg: ApproximantConfig) -> float:
    """Certified bound on |s_A_prime(m_max) - s_A_prime(exact)|."""
    if cfg.m_max is None:
        return 0.0
    v = dual_primitive(L, cfg.A)
    if v.shape[0] == 0:
        return 0.0
    w = curve.curvature_radius(v) ** cfg.power + curve.curvature_radius(-v) ** cfg.power
    scale = np.hypot(v[:, 0], v[:, 1]) ** -1.5
    return float((scale * w).sum() / np.pi * phi_tail_bound(cfg.m_max))


def delta_A_prime(curve: OvalCurve, L: UnimodularLattice, t: float, cfg: ApproximantConfig,
                  alpha=(0.0, 0.0), cap: int = DEFAULT_CAP) -> float:
    """|normalised counting error - s_A_prime|."""
    exact = error_normalized(curve, L, t, alpha, cap=cap).normalized
    return abs(exact - s_A_prime(curve, L, t, cfg, alpha))


def _vector(rb: ReducedBasis, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return k[..., :1] * rb.e1 + k[..., 1:2] * rb.e2


def theta_k(curve: OvalCurve, rb: ReducedBasis, k, t: float, mirrored: bool = False):
    """t Y(+-(k1 e1 + k2 e2)) mod 1; ``mirrored`` selects the antipodal phase."""
    v = _vector(rb, k)
    if mirrored:
        v = -v
    val = np.mod(t * curve.y_gamma(v), 1.0)
    val = np.where(val >= 1.0, 0.0, val)
    return float(val) if np.ndim(val) == 0 else val


def phases_batch(curve: OvalCurve, e1: np.ndarray, e2: np.ndarray, k, t: float) -> np.ndarray:
    """theta_k for many reduced bases at once (e1, e2 of shape (n, 2))."""
    k1, k2 = PrimitiveIndex(*k)
    v = k1 * np.asarray(e1) + k2 * np.asarray(e2)
    val = np.mod(t * curve.y_gamma(v), 1.0)
    return np.where(val >= 1.0, 0.0, val)


def w_k(curve: OvalCurve, rb: ReducedBasis, k) -> float:
    """<s(v), x(v)> with s(x, y) = (x, -y): the derivative of Y(delta(1 + h) v) at h = 0."""
    v = _vector(rb, k)
    if not np.any(v):
        raise DomainError("k must be non-zero")
    x = curve.support_point(v)
    return float(v[0] * x[0] - v[1] * x[1])
