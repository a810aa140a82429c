"""Exact lattice-point counts in t Omega + alpha and their Gaussian regularisation.

Exact counting walks the rows of a reduced basis (e1, e2): points of the row
k2 e2 + s e1 inside the body form the integer range [ceil(s_lo), floor(s_hi)]
where (s_lo, s_hi) is the chord of that line, so the work is proportional to
the number of rows rather than the number of points.

The regularised count replaces each indicator by its convolution with the
centred Gaussian kernel

    lambda(x; t) = (t^2 / 4 pi) exp(-t^2 |x|^2 / 4),

whose Fourier transform is exp(-|xi|^2 / t^2).  Then chi(n) is the probability
that M n + sigma Z lies in t Omega, with sigma^2 = 2 / t^2 and Z a standard
normal vector; only lattice points close to the boundary need the integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import DomainError, NumericError, ResourceCapExceeded
from .geometry import OvalCurve
from .lattice import UnimodularLattice, gauss_reduce_batch

DEFAULT_CAP = 10 ** 9
BOUNDARY_RTOL = 1e-12
TRUNCATION_EPS = 1e-12
# half-width (in standard deviations) of the transverse integration window
Z_WINDOW = 9.0


@dataclass
class ErrorSample:
    """One draw of the normalised counting error."""

    t: float
    alpha: tuple[float, float]
    count: int
    error: float
    normalized: float
    approximants: dict[str, float] = field(default_factory=dict)
    seed: int | None = None

    def to_record(self) -> dict:
        return {
            "seed": self.seed,
            "t": self.t,
            "alpha": list(self.alpha),
            "count": self.count,
            "error": self.error,
            "normalized": self.normalized,
            "approximants": dict(self.approximants),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ErrorSample":
        return cls(t=float(rec["t"]), alpha=tuple(rec["alpha"]), count=int(rec["count"]),
                   error=float(rec["error"]), normalized=float(rec["normalized"]),
                   approximants=dict(rec.get("approximants", {})), seed=rec.get("seed"))


def _short_basis(L: UnimodularLattice) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    b1, b2 = gauss_reduce_batch(L.basis[None])
    e1, e2 = b1[0], b2[0]
    inv_t = np.linalg.inv(np.column_stack([e1, e2])).T
    return e1, e2, inv_t[:, 0], inv_t[:, 1]


def _index_range(curve: OvalCurve, f: np.ndarray, t: float, alpha: np.ndarray) -> tuple[int, int]:
    """Integer range of <x, f> over t Omega + alpha (slightly enlarged)."""
    shift = float(alpha @ f)
    top = shift + t * (1 + BOUNDARY_RTOL) * float(curve.y_gamma(f))
    bottom = shift - t * (1 + BOUNDARY_RTOL) * float(curve.y_gamma(-f))
    return math.ceil(bottom - 1e-9), math.floor(top + 1e-9)


def candidate_count(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0)) -> int:
    """Size of the parallelogram cover of t Omega + alpha in reduced coordinates."""
    alpha = np.asarray(alpha, dtype=float)
    _, _, f1, f2 = _short_basis(L)
    lo1, hi1 = _index_range(curve, f1, t, alpha)
    lo2, hi2 = _index_range(curve, f2, t, alpha)
    return max(0, hi1 - lo1 + 1) * max(0, hi2 - lo2 + 1)


def _row_chords(curve, e1, e2, k2, t, alpha):
    p = k2[:, None] * e2[None, :]
    return curve.chord(p, e1, t, alpha)


def count_points(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0),
                 method: str = "rows", cap: int = DEFAULT_CAP, chunk: int = 1 << 16) -> int:
    """Number of points of L in t Omega + alpha (boundary points included).

    ``method="rows"`` intersects each lattice row with the body;
    ``method="cover"`` tests every point of the parallelogram cover with
    :meth:`OvalCurve.contains`.  Both raise :class:`ResourceCapExceeded`
    when the cover holds more than ``cap`` candidates.
    """
    if t <= 0:
        raise DomainError("dilation t must be positive")
    alpha = np.asarray(alpha, dtype=float)
    n_cand = candidate_count(curve, L, t, alpha)
    if n_cand > cap:
        raise ResourceCapExceeded(f"{n_cand} candidates exceed the cap of {cap}")
    e1, e2, f1, f2 = _short_basis(L)
    lo2, hi2 = _index_range(curve, f2, t, alpha)
    if hi2 < lo2:
        return 0
    total = 0
    if method == "rows":
        t_eff = t * (1 + BOUNDARY_RTOL)
        for start in range(lo2, hi2 + 1, chunk):
            k2 = np.arange(start, min(start + chunk, hi2 + 1), dtype=float)
            s_lo, s_hi, hit = _row_chords(curve, e1, e2, k2, t_eff, alpha)
            n = np.floor(s_hi[hit]) - np.ceil(s_lo[hit]) + 1
            total += int(np.maximum(n, 0).sum())
        return total
    if method == "cover":
        lo1, hi1 = _index_range(curve, f1, t, alpha)
        k1 = np.arange(lo1, hi1 + 1, dtype=float)
        rows_per_chunk = max(1, chunk // max(1, k1.size))
        for start in range(lo2, hi2 + 1, rows_per_chunk):
            k2 = np.arange(start, min(start + rows_per_chunk, hi2 + 1), dtype=float)
            pts = k1[None, :, None] * e1 + k2[:, None, None] * e2
            total += int(curve.contains(pts, t, alpha).sum())
        return total
    raise DomainError(f"unknown counting method {method!r}")


def error_normalized(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0),
                     seed: int | None = None, cap: int = DEFAULT_CAP) -> ErrorSample:
    """Counting error count - t^2 Area and its normalisation by sqrt(t)."""
    count = count_points(curve, L, t, alpha, cap=cap)
    error = count - t * t * curve.area()
    alpha_t = (float(alpha[0]), float(alpha[1]))
    return ErrorSample(t=float(t), alpha=alpha_t, count=count, error=float(error),
                       normalized=float(error / math.sqrt(t)), seed=seed)


# ---------------------------------------------------------------------- regularisation
def _smoothstep_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, 1] pushed through w(u) = 3u^2 - 2u^3.

    The substitution flattens square-root behaviour at both ends, which
    appears when the window edge is a line tangent to the body.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    return u * u * (3.0 - 2.0 * u), 0.5 * w * 6.0 * u * (1.0 - u)


def _interval_prob(s_lo, s_hi, sigma):
    """P(s_lo <= sigma Z <= s_hi) for standard normal Z, avoiding cancellation."""
    a = s_lo / sigma
    b = s_hi / sigma
    pos = a > 0
    return np.where(pos, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))


def _chi_frame(curve, q, t):
    norm = np.hypot(q[:, 0], q[:, 1])
    safe = np.where(norm > 0, norm, 1.0)
    d = np.where((norm > 0)[:, None], q / safe[:, None], np.array([1.0, 0.0]))
    nrm = np.stack([-d[:, 1], d[:, 0]], axis=-1)
    sigma = math.sqrt(2.0) / t
    # lines parallel to d through q + b nrm meet t Omega iff b lies in [b_lo, b_hi]
    b_hi = t * curve.y_gamma(nrm) - (q * nrm).sum(-1)
    b_lo = -t * curve.y_gamma(-nrm) - (q * nrm).sum(-1)
    z_lo = np.maximum(b_lo / sigma, -Z_WINDOW)
    z_hi = np.minimum(b_hi / sigma, Z_WINDOW)
    return d, nrm, sigma, z_lo, z_hi


def _chi_rule(curve, q, d, nrm, sigma, z_lo, z_hi, t, n_nodes):
    u, w = _smoothstep_nodes(n_nodes)
    span = np.maximum(z_hi - z_lo, 0.0)
    z = z_lo[:, None] + span[:, None] * u[None, :]
    base = q[:, None, :] + sigma * z[..., None] * nrm[:, None, :]
    s_lo, s_hi, hit = curve.chord(base, d[:, None, :], t)
    g = np.where(hit, _interval_prob(np.nan_to_num(s_lo), np.nan_to_num(s_hi), sigma), 0.0)
    dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return span * (g * dens * w[None, :]).sum(-1)


def chi_regularized(curve: OvalCurve, points, t: float, alpha=(0.0, 0.0),
                    tol: float = 1e-10) -> np.ndarray:
    """Gaussian-blurred indicator chi at plane points ``points`` (shape (m, 2)).

    chi(p) = P(p + sigma Z in t Omega + alpha), sigma = sqrt(2)/t.  In the
    frame (d, n) with d along p - alpha, the probability is an integral over
    the transverse coordinate of the Gaussian mass of a chord; it is computed
    by Gauss-Legendre rules with 64 and 128 nodes and, where they disagree by
    more than ``tol``, by adaptive quadrature.
    """
    if t <= 0:
        raise DomainError("dilation t must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    q = pts - np.asarray(alpha, dtype=float)
    if q.shape[0] == 0:
        return np.zeros(0)
    d, nrm, sigma, z_lo, z_hi = _chi_frame(curve, q, t)
    coarse = _chi_rule(curve, q, d, nrm, sigma, z_lo, z_hi, t, 64)
    fine = _chi_rule(curve, q, d, nrm, sigma, z_lo, z_hi, t, 128)
    out = fine.copy()
    bad = np.nonzero(np.abs(fine - coarse) > tol)[0]
    for i in bad:
        def integrand(z, i=i):
            base = q[i] + sigma * z * nrm[i]
            s_lo, s_hi, hit = curve.chord(base, d[i], t)
            if not hit:
                return 0.0
            return float(_interval_prob(s_lo, s_hi, sigma)) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

        if z_hi[i] <= z_lo[i]:
            out[i] = 0.0
            continue
        val, err = integrate.quad(integrand, z_lo[i], z_hi[i], epsabs=1e-11, epsrel=1e-11, limit=200)
        if not err <= 1e-8:
            raise NumericError(f"chi quadrature did not converge at {pts[i]!r}: "
                               f"estimate {val!r}, error bound {err!r}")
        out[i] = val
    return np.clip(out, 0.0, 1.0)


def truncation_distance(t: float, eps: float = TRUNCATION_EPS) -> float:
    """Distance beyond which |chi - indicator| <= eps, from exp(-t^2 d^2 / 4) <= eps."""
    return 2.0 / t * math.sqrt(math.log(1.0 / eps))


def boundary_band(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0),
                  eps: float = TRUNCATION_EPS) -> np.ndarray:
    """Lattice points whose distance to t gamma + alpha may be below the truncation distance.

    Uses dist(x, t gamma) >= |r_gamma(x) - t| min h, so it suffices to take
    the points with gauge in [t - delta, t + delta], delta = d_trunc / min h.
    """
    alpha = np.asarray(alpha, dtype=float)
    grid = np.linspace(0.0, 2 * np.pi, curve.grid_resolution, endpoint=False)
    h_min = 0.99 * float(curve.support_value(grid).min())
    delta = truncation_distance(t, eps) / h_min
    outer = t + delta
    inner = t - delta
    e1, e2, f1, f2 = _short_basis(L)
    lo2, hi2 = _index_range(curve, f2, outer, alpha)
    k2 = np.arange(lo2, hi2 + 1, dtype=float)
    if k2.size == 0:
        return np.zeros((0, 2))
    so_lo, so_hi, hit_o = _row_chords(curve, e1, e2, k2, outer, alpha)
    if inner > 0:
        si_lo, si_hi, hit_i = _row_chords(curve, e1, e2, k2, inner, alpha)
    else:
        hit_i = np.zeros_like(hit_o)
        si_lo = si_hi = np.full_like(so_lo, np.nan)
    chunks = []
    for j in np.nonzero(hit_o)[0]:
        a, b = math.ceil(so_lo[j]), math.floor(so_hi[j])
        if hit_i[j]:
            c, e = math.ceil(si_lo[j]) - 1, math.floor(si_hi[j]) + 1
            ks = np.concatenate([np.arange(a, min(c, b) + 1), np.arange(max(e, a), b + 1)])
        else:
            ks = np.arange(a, b + 1)
        if ks.size:
            chunks.append(ks[:, None] * e1 + k2[j] * e2)
    return np.concatenate(chunks) if chunks else np.zeros((0, 2))


def count_regularized(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0),
                      eps: float = TRUNCATION_EPS, cap: int = DEFAULT_CAP) -> float:
    """N_reg = sum over lattice points of chi.

    Equal to the exact count plus the corrections chi - 1_inside over the
    boundary band; points outside the band change the sum by less than eps
    each (and far less in total).  The band sum is compensated (math.fsum).
    """
    count = count_points(curve, L, t, alpha, cap=cap)
    band = boundary_band(curve, L, t, alpha, eps)
    if band.shape[0] == 0:
        return float(count)
    chi = chi_regularized(curve, band, t, alpha)
    inside = curve.contains(band, t, alpha).astype(float)
    return count + math.fsum((chi - inside).tolist())


def f_poisson(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0),
              eps: float = TRUNCATION_EPS) -> float:
    """F(M, t) = (N_reg - Area(t Omega)) / sqrt(t), with M the reduced representative of L."""
    # the regularised sum runs over M Z^2 = L, so any basis of L gives the same value
    n_reg = count_regularized(curve, L, t, alpha, eps)
    return (n_reg - t * t * curve.area()) / math.sqrt(t)


def delta_1(curve: OvalCurve, L: UnimodularLattice, t: float, alpha=(0.0, 0.0)) -> float:
    """|normalised exact error - F(M, t)|."""
    exact = error_normalized(curve, L, t, alpha).normalized
    return abs(exact - f_poisson(curve, L, t, alpha))
