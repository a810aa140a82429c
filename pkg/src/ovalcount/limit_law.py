"""The random series describing the limit law of the normalised counting error.

The basic building block is

    phi(theta) = sum_{m >= 1} cos(2 pi m theta - 3 pi / 4) / m^{3/2}
               = Re(exp(-3 pi i / 4) Li_{3/2}(exp(2 pi i theta))),

evaluated either exactly through the polylogarithm expansion around 1

    Li_s(e^mu) = Gamma(1 - s) (-mu)^{s - 1} + sum_k zeta(s - k) mu^k / k!,

valid for |mu| < 2 pi (we use theta reduced to [-1/2, 1/2]), or by direct
truncation of the m-series, which is the independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .errors import DomainError, InsufficientData
from .geometry import OvalCurve
from .lattice import ReducedBasis, enumerate_primitive, reduce_batch, sample_haar_batch
from .stats import EmpiricalDistribution, empirical_moment

CURVATURE_POWER = 0.5
PHASE_SHIFT = -0.75 * np.pi
N_POLYLOG_TERMS = 64
ZETA_3_2 = 2.6123753486854883
ZETA_3 = 1.2020569031595942


@lru_cache(maxsize=1)
def _polylog_coeffs() -> np.ndarray:
    mpmath.mp.dps = 30
    return np.array([float(mpmath.zeta(1.5 - k) / mpmath.factorial(k)) for k in range(N_POLYLOG_TERMS)])


def _li_3_2_unit(theta: np.ndarray) -> np.ndarray:
    """Li_{3/2}(exp(2 pi i theta)) for real theta."""
    x = theta - np.rint(theta)
    mu = 2j * np.pi * x
    acc = np.zeros(x.shape, dtype=complex)
    for c in _polylog_coeffs()[::-1]:
        acc = acc * mu + c
    # Gamma(-1/2) = -2 sqrt(pi); principal branch of (-mu)^{1/2}
    return acc - 2.0 * math.sqrt(math.pi) * np.sqrt(-mu)


def phi_tail_bound(m_max: int | None) -> float:
    """Bound 2/sqrt(m_max) on the neglected m-tail (0 for the exact evaluation)."""
    return 0.0 if m_max is None else 2.0 / math.sqrt(m_max)


def phi(theta, m_max: int | None = None) -> np.ndarray:
    """phi(theta), exact when ``m_max`` is None, else the first ``m_max`` terms."""
    theta = np.asarray(theta, dtype=float)
    if m_max is None:
        return (np.exp(1j * PHASE_SHIFT) * _li_3_2_unit(theta)).real
    if m_max < 1:
        raise DomainError("m_max must be positive")
    flat = np.mod(theta.ravel(), 1.0)
    out = np.zeros(flat.shape)
    block = max(1, 2 ** 22 // max(1, flat.size))
    for start in range(1, m_max + 1, block):
        m = np.arange(start, min(start + block, m_max + 1), dtype=float)
        out += (np.cos(2 * np.pi * np.outer(flat, m) + PHASE_SHIFT) * m ** -1.5).sum(-1)
    return out.reshape(theta.shape)


def phi_alpha(theta, v, alpha, m_max: int | None = None) -> np.ndarray:
    """phi with the m-th term shifted by 2 pi m <alpha, v>."""
    shift = np.asarray(v, dtype=float) @ np.asarray(alpha, dtype=float)
    return phi(np.asarray(theta, dtype=float) + shift, m_max)


def phi_gamma2(curve: OvalCurve, theta1, theta2, v, alpha=(0.0, 0.0), m_max: int | None = None,
               power: float = CURVATURE_POWER) -> np.ndarray:
    """w(v) phi(theta1 + <alpha, v>) + w(-v) phi(theta2 - <alpha, v>), w = rho^power."""
    v = np.asarray(v, dtype=float)
    shift = v @ np.asarray(alpha, dtype=float)
    w_plus = curve.curvature_radius(v) ** power
    w_minus = curve.curvature_radius(-v) ** power
    return (w_plus * phi(np.asarray(theta1) + shift, m_max)
            + w_minus * phi(np.asarray(theta2) - shift, m_max))


@dataclass(frozen=True)
class LimitConfig:
    """Truncation and sample sizes for the limit series.

    ``m_max=None`` evaluates the m-series exactly.  ``pairing`` selects how
    the symmetric case treats the two antipodal terms under a translation:
    ``"paired"`` keeps phi(theta + a) + phi(theta - a) with a common phase,
    ``"literal"`` uses 2 phi(theta + a).
    """

    A: float = 40.0
    m_max: int | None = None
    n_theta: int = 1
    n_lattice: int = 10_000
    seed: int = 0
    power: float = CURVATURE_POWER
    condition_min_norm: float | None = None
    pairing: str = "paired"

    def __post_init__(self):
        if self.A <= 0 or self.n_theta < 1 or self.n_lattice < 0:
            raise DomainError("A and n_theta must be positive, n_lattice non-negative")
        if self.m_max is not None and self.m_max < 1:
            raise DomainError("m_max must be positive")
        if self.pairing not in ("paired", "literal"):
            raise DomainError(f"unknown pairing {self.pairing!r}")

    def to_dict(self) -> dict:
        return dict(A=self.A, m_max=self.m_max, n_theta=self.n_theta, n_lattice=self.n_lattice,
                    seed=self.seed, power=self.power, condition_min_norm=self.condition_min_norm,
                    pairing=self.pairing)


@dataclass
class SeriesTerms:
    """Per-lattice data of the truncated series: vectors and weights."""

    v: np.ndarray
    scale: np.ndarray  # |v|^{-3/2}
    w_plus: np.ndarray
    w_minus: np.ndarray
    shift: np.ndarray  # <alpha, v>


def series_terms(curve: OvalCurve, rb: ReducedBasis, alpha, A: float,
                 power: float = CURVATURE_POWER) -> SeriesTerms:
    prim = enumerate_primitive(rb, A)
    v = prim.v
    if v.shape[0] == 0:
        z = np.zeros(0)
        return SeriesTerms(v, z, z, z, z)
    return SeriesTerms(v=v, scale=np.hypot(v[:, 0], v[:, 1]) ** -1.5,
                       w_plus=curve.curvature_radius(v) ** power,
                       w_minus=curve.curvature_radius(-v) ** power,
                       shift=v @ np.asarray(alpha, dtype=float))


def evaluate_series(curve: OvalCurve, terms: SeriesTerms, theta1: np.ndarray, theta2: np.ndarray | None,
                    m_max: int | None = None, pairing: str = "paired") -> np.ndarray:
    """Series values for phase arrays of shape (draws, n_terms).

    ``theta2=None`` is the symmetric case: the antipodal term uses theta1.
    """
    if terms.v.shape[0] == 0:
        return np.zeros(theta1.shape[0])
    if theta2 is None:
        if pairing == "literal":
            vals = 2.0 * terms.w_plus * phi(theta1 + terms.shift, m_max)
        else:
            vals = (terms.w_plus * phi(theta1 + terms.shift, m_max)
                    + terms.w_minus * phi(theta1 - terms.shift, m_max))
    else:
        vals = (terms.w_plus * phi(theta1 + terms.shift, m_max)
                + terms.w_minus * phi(theta2 - terms.shift, m_max))
    return (vals * terms.scale).sum(-1) / np.pi


def sample_limit_series(curve: OvalCurve, rb: ReducedBasis, alpha, cfg: LimitConfig,
                        rng: np.random.Generator, size: int | None = None):
    """Draw the truncated limit series for a fixed lattice.

    Fresh uniform phases are drawn for every primitive index: one per index
    for a symmetric curve, an independent pair otherwise.  With no
    translation the symmetric value is (2/pi) sum rho^p(e) phi(theta_e) / |e|^{3/2}.
    Returns a float, or an array of ``size`` independent draws.
    """
    terms = series_terms(curve, rb, alpha, cfg.A, cfg.power)
    n = 1 if size is None else size
    k = terms.v.shape[0]
    theta1 = rng.random((n, k))
    theta2 = None if curve.symmetric else rng.random((n, k))
    out = evaluate_series(curve, terms, theta1, theta2, cfg.m_max, cfg.pairing)
    return float(out[0]) if size is None else out


def series_m_tail_bound(terms: SeriesTerms, m_max: int | None) -> float:
    """Certified bound on the change of any series value when the m-series is summed exactly."""
    if m_max is None or terms.v.shape[0] == 0:
        return 0.0
    return float(((terms.w_plus + terms.w_minus) * terms.scale).sum() / np.pi * phi_tail_bound(m_max))


def series_tail_sd(curve: OvalCurve, rb: ReducedBasis, A: float, power: float = CURVATURE_POWER,
                   outer: float | None = None) -> float:
    """Upper bound on the standard deviation (over phases) of the terms with |e| > A.

    Each term has second moment at most (w(e) + w(-e))^2 zeta(3)/2 / |e|^3;
    terms up to ``outer`` (default 8A) are summed exactly and the rest uses
    the asymptotic density (6/pi) r dr of primitive vectors in a half-plane,
    which contributes (6/pi) / outer times the largest weight.
    """
    outer = 8.0 * A if outer is None else outer
    big = enumerate_primitive(rb, outer)
    r = np.hypot(big.v[:, 0], big.v[:, 1])
    sel = r > A
    w = curve.curvature_radius(big.v[sel]) ** power + curve.curvature_radius(-big.v[sel]) ** power
    w_max = 2.0 * curve.curvature_bounds()[1] ** power
    var = (w * w * r[sel] ** -3.0).sum() + w_max ** 2 * 6.0 / np.pi / outer
    return math.sqrt(var * ZETA_3 / 2.0) / np.pi


# ---------------------------------------------------------------------- Monte Carlo
def _sample_seed(root: int, index: int) -> int:
    return int(np.random.SeedSequence([root, index]).generate_state(1)[0])


def draw_reduced_lattice(rng: np.random.Generator, min_norm: float | None = None) -> ReducedBasis:
    """Haar lattice conditioned on genericity (and on |L|_1 >= min_norm if given)."""
    while True:
        basis = sample_haar_batch(rng, 1)
        e1, e2, generic = reduce_batch(basis)
        if not generic[0]:
            continue
        rb = ReducedBasis(e1[0], e2[0])
        if min_norm is not None and rb.norm1 < min_norm:
            continue
        return rb


def limit_sample(curve: OvalCurve, alpha, cfg: LimitConfig, index: int) -> np.ndarray:
    """The ``n_theta`` draws attached to lattice number ``index`` (independently seeded)."""
    rng = np.random.default_rng(_sample_seed(cfg.seed, index))
    rb = draw_reduced_lattice(rng, cfg.condition_min_norm)
    return sample_limit_series(curve, rb, alpha, cfg, rng, size=cfg.n_theta)


def estimate_cdf(curve: OvalCurve, alpha=(0.0, 0.0), cfg: LimitConfig = LimitConfig(),
                 indices=None) -> EmpiricalDistribution:
    """Empirical law of the truncated limit series over Haar lattices and phases."""
    idx = range(cfg.n_lattice) if indices is None else indices
    chunks = [limit_sample(curve, alpha, cfg, i) for i in idx]
    values = np.concatenate(chunks) if chunks else np.zeros(0)
    meta = {"kind": "limit_series", "config": cfg.to_dict(), "alpha": [float(a) for a in alpha],
            "curve": curve.name, "root_seed": cfg.seed}
    return EmpiricalDistribution(values, meta)


@dataclass
class MomentReport:
    orders: list[float]
    sizes: list[int]
    estimates: dict[float, list[float]]
    spread: dict[float, float]
    stable: dict[float, bool]
    increasing: dict[float, bool]
    tail_slope: float
    tail_range: tuple[float, float]
    extra: dict = field(default_factory=dict)


def moment_diagnostics(dist: EmpiricalDistribution, orders, stability_tol: float = 0.10,
                       seed: int = 0, tail_range: tuple[float, float] = (1e-3, 1e-2)) -> MomentReport:
    """Nested-subsample moment estimates and a tail-slope fit.

    The sample is put in a seeded random order; E|S|^p is computed on the
    first n/4, n/2 and n values.  ``spread`` is (max - min)/max of the three
    estimates, ``stable`` means spread <= ``stability_tol`` and
    ``increasing`` means strictly increasing estimates.  The tail slope is
    the least-squares slope of log P(|S| > x) against log x over the order
    statistics whose survival probability lies in ``tail_range``.
    """
    x = np.asarray(dist.samples)
    n = x.size
    if n < 1000:
        raise InsufficientData(f"moment diagnostics need at least 1000 samples, got {n}")
    orders = [float(p) for p in orders]
    if any(not 0 < p <= 4 for p in orders):
        raise DomainError("moment orders must lie in (0, 4]")
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = x[perm]
    sizes = [n // 4, n // 2, n]
    estimates, spread, stable, increasing = {}, {}, {}, {}
    for p in orders:
        est = [empirical_moment(shuffled[:s], p) for s in sizes]
        estimates[p] = est
        spread[p] = (max(est) - min(est)) / max(est)
        stable[p] = spread[p] <= stability_tol
        increasing[p] = bool(est[0] < est[1] < est[2])
    a = np.sort(np.abs(x))[::-1]
    surv = np.arange(1, n + 1) / n
    sel = (surv >= tail_range[0]) & (surv <= tail_range[1]) & (a > 0)
    slope = float(np.polyfit(np.log(a[sel]), np.log(surv[sel]), 1)[0]) if sel.sum() >= 3 else float("nan")
    return MomentReport(orders, sizes, estimates, spread, stable, increasing, slope, tail_range)


def mean_report(dist: EmpiricalDistribution) -> dict:
    """Sample mean, standard error and z-score against zero."""
    x = np.asarray(dist.samples)
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return {"mean": mean, "std_error": se, "z": mean / se if se > 0 else 0.0}

