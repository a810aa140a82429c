"""Strictly convex ovals described by a trigonometric-polynomial support function.

An oval is stored through its support function

    h(theta) = c0 + sum_{n=1..N} (a_n cos(n theta) + b_n sin(n theta)),

anchored at the origin, which must lie inside the body.  Everything the
counting and Fourier code needs follows from h and its first two derivatives:

* Y(xi) = |xi| h(arg xi), the positively homogeneous extension of h,
* x(xi) = h u + h' u_perp, the boundary point with outer normal xi/|xi|,
* rho(xi) = h + h'', the curvature radius at x(xi),
* Gamma(phi), the polar radius of the boundary in direction phi.

All evaluation methods accept arrays; vectors are arrays whose last axis has
length 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi

# Relative tolerance used when refitting support functions (ellipses, transforms).
FIT_TOLERANCE = 1e-13


def _as_vec(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2:
        raise DomainError(f"expected vectors with last axis of length 2, got shape {xi.shape}")
    return xi


def _nonzero_angle(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(norm == 0.0):
        raise DomainError("zero vector has no direction")
    return np.arctan2(xi[..., 1], xi[..., 0]), norm


@dataclass(frozen=True, eq=False)
class OvalCurve:
    """Closed, analytic, strictly convex curve gamma with 0 inside Omega_gamma.

    Parameters
    ----------
    c0 : float
        Constant Fourier coefficient of the support function.
    a, b : array_like
        Cosine and sine coefficients for harmonics 1..N.
    grid_resolution : int
        Number of angles used to validate positivity and convexity.
    name : str
        Free-form label, echoed into output metadata.
    """

    c0: float
    a: np.ndarray
    b: np.ndarray
    grid_resolution: int = 4096
    name: str = "custom"
    symmetric: bool = field(init=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if a.ndim != 1 or a.shape != b.shape:
            raise DomainError("cosine and sine coefficient arrays must be 1-D and of equal length")
        if self.grid_resolution < 8:
            raise DomainError("grid_resolution must be at least 8")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "_n", np.arange(1, a.size + 1, dtype=float))
        object.__setattr__(self, "_c", a - 1j * b)

        grid = np.linspace(0.0, TWO_PI, self.grid_resolution, endpoint=False)
        h = self.support_value(grid)
        if not np.all(h > 0):
            raise DomainError("origin is not interior: support function is not positive")
        rho = h + self._derivative(grid, 2)
        if not np.all(rho > 0):
            raise DomainError("curve is not strictly convex: h + h'' is not positive")
        h_flip = self.support_value(grid + np.pi)
        object.__setattr__(self, "symmetric", bool(np.max(np.abs(h_flip - h)) < 1e-12))

    # ------------------------------------------------------------------ constructors
    @classmethod
    def disk(cls, radius: float = 1.0, grid_resolution: int = 4096) -> "OvalCurve":
        return cls(radius, [], [], grid_resolution, name="disk" if radius == 1.0 else f"disk({radius!r})")

    @classmethod
    def from_coeffs(cls, coeffs, grid_resolution: int = 4096, name: str = "custom") -> "OvalCurve":
        """Build from the flat list ``[c0, a1, b1, a2, b2, ...]``."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size % 2 != 1:
            raise DomainError("coefficient list must have odd length [c0, a1, b1, ...]")
        return cls(coeffs[0], coeffs[1::2], coeffs[2::2], grid_resolution, name=name)

    @classmethod
    def fit(cls, support: Callable[[np.ndarray], np.ndarray], tol: float = FIT_TOLERANCE,
            max_harmonics: int = 4096, grid_resolution: int = 4096, name: str = "custom") -> "OvalCurve":
        """Fit a trigonometric polynomial to a sampled support function.

        The number of harmonics doubles until the fit residual, measured on a
        grid four times denser than the sampling grid, drops below ``tol``
        times the maximum of the support function.
        """
        n_samples = 32
        while True:
            theta = np.linspace(0.0, TWO_PI, n_samples, endpoint=False)
            spec = np.fft.rfft(support(theta)) / n_samples
            n_harm = n_samples // 2 - 1
            c0 = spec[0].real
            a = 2.0 * spec[1:n_harm + 1].real
            b = -2.0 * spec[1:n_harm + 1].imag
            check = np.linspace(0.0, TWO_PI, 4 * n_samples, endpoint=False) + np.pi / (4 * n_samples)
            ref = support(check)
            scale = np.max(np.abs(ref))
            n = np.arange(1, n_harm + 1)
            approx = c0 + np.cos(np.outer(check, n)) @ a + np.sin(np.outer(check, n)) @ b
            residual = np.max(np.abs(approx - ref))
            if residual < tol * scale:
                break
            if n_harm >= max_harmonics:
                raise DomainError(f"support function fit did not reach tolerance {tol} "
                                  f"with {n_harm} harmonics (residual {residual:.3g})")
            n_samples *= 2
        keep = np.nonzero(np.abs(a) + np.abs(b) > tol * scale * 1e-3)[0]
        last = keep[-1] + 1 if keep.size else 0
        return cls(c0, a[:last], b[:last], grid_resolution, name=name)

    @classmethod
    def ellipse(cls, a: float, b: float, grid_resolution: int = 4096) -> "OvalCurve":
        """Centred ellipse with semi-axes ``a`` (along x) and ``b`` (along y)."""
        if a <= 0 or b <= 0:
            raise DomainError("ellipse semi-axes must be positive")

        def support(theta):
            return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)

        return cls.fit(support, grid_resolution=grid_resolution, name=f"ellipse({a!r},{b!r})")

    # ------------------------------------------------------------------ coefficients
    @property
    def n_harmonics(self) -> int:
        return self.a.size

    def coeffs(self) -> np.ndarray:
        """Flat coefficient list ``[c0, a1, b1, ...]``."""
        out = np.empty(2 * self.a.size + 1)
        out[0] = self.c0
        out[1::2] = self.a
        out[2::2] = self.b
        return out

    def _derivative(self, theta, order: int) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.a.size == 0:
            return np.full(theta.shape, self.c0 if order == 0 else 0.0)
        phase = np.exp(1j * theta[..., None] * self._n)
        val = (phase @ (self._c * (1j * self._n) ** order)).real
        return val + self.c0 if order == 0 else val

    def support_value(self, theta) -> np.ndarray:
        """h(theta); 2 pi periodic."""
        return self._derivative(theta, 0)

    def support_derivatives(self, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(h, h', h'') at ``theta`` in a single pass."""
        theta = np.asarray(theta, dtype=float)
        if self.a.size == 0:
            z = np.zeros(theta.shape)
            return np.full(theta.shape, self.c0), z, z.copy()
        phase = np.exp(1j * theta[..., None] * self._n)
        c = np.stack([self._c, self._c * 1j * self._n, -self._c * self._n ** 2], axis=1)
        vals = (phase @ c).real
        return vals[..., 0] + self.c0, vals[..., 1], vals[..., 2]

    # ------------------------------------------------------------------ geometry
    def y_gamma(self, xi) -> np.ndarray:
        """Y(xi) = <xi, x(xi)> = |xi| h(arg xi)."""
        ang, norm = _nonzero_angle(_as_vec(xi))
        return norm * self.support_value(ang)

    def boundary_point(self, theta) -> np.ndarray:
        """Point of gamma whose outer normal has angle ``theta``."""
        h, dh, _ = self.support_derivatives(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([h * c - dh * s, h * s + dh * c], axis=-1)

    def support_point(self, xi) -> np.ndarray:
        """x(xi): the boundary point where the outer normal is xi/|xi|."""
        ang, _ = _nonzero_angle(_as_vec(xi))
        return self.boundary_point(ang)

    def curvature_radius(self, xi) -> np.ndarray:
        """rho(xi) = h + h'' at arg xi; invariant under positive scaling of xi."""
        ang, _ = _nonzero_angle(_as_vec(xi))
        h, _, d2h = self.support_derivatives(ang)
        return h + d2h

    def curvature_bounds(self) -> tuple[float, float]:
        """(min rho, max rho) over the validation grid."""
        grid = np.linspace(0.0, TWO_PI, self.grid_resolution, endpoint=False)
        h, _, d2h = self.support_derivatives(grid)
        rho = h + d2h
        return float(rho.min()), float(rho.max())

    def polar_radius(self, phi) -> np.ndarray:
        """Gamma(phi): the r > 0 with r (cos phi, sin phi) on gamma.

        The normal angle theta of that boundary point satisfies
        |theta - phi| < pi/2 and arg x(theta) is increasing in theta, so a
        bracketing bisection in theta converges to machine precision.
        """
        phi = np.asarray(phi, dtype=float)
        lo = phi - np.pi / 2
        hi = phi + np.pi / 2
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            p = self.boundary_point(mid)
            diff = np.angle(np.exp(1j * (np.arctan2(p[..., 1], p[..., 0]) - phi)))
            below = diff < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        p = self.boundary_point(0.5 * (lo + hi))
        # project onto the ray to remove the residual angular error
        return p[..., 0] * np.cos(phi) + p[..., 1] * np.sin(phi)

    def gauge(self, x) -> np.ndarray:
        """r_gamma(x) = |x| / Gamma(arg x), with r_gamma(0) = 0."""
        x = _as_vec(x)
        norm = np.hypot(x[..., 0], x[..., 1])
        gam = self.polar_radius(np.arctan2(x[..., 1], x[..., 0]))
        return np.where(norm == 0.0, 0.0, norm / gam)

    def contains(self, point, t: float = 1.0, alpha=(0.0, 0.0)) -> np.ndarray:
        """Membership in t Omega + alpha; points within 1e-12 t of the boundary count as inside."""
        if t <= 0:
            raise DomainError("dilation t must be positive")
        x = _as_vec(point) - np.asarray(alpha, dtype=float)
        return self.gauge(x) <= t * (1.0 + 1e-12)

    def area(self) -> float:
        """(1/2) int (h^2 - h'^2) d theta, evaluated exactly from the coefficients."""
        n2 = self._n ** 2
        return float(np.pi * self.c0 ** 2 + 0.5 * np.pi * np.sum((1.0 - n2) * (self.a ** 2 + self.b ** 2)))

    def transform(self, D, tol: float = FIT_TOLERANCE) -> "OvalCurve":
        """The image curve D gamma for D in SL_2(R), refit as a support function.

        Uses Y_{D gamma}(xi) = Y_gamma(D^T xi).
        """
        D = np.asarray(D, dtype=float)
        if D.shape != (2, 2) or abs(np.linalg.det(D) - 1.0) > 1e-12:
            raise DomainError("transform requires a 2x2 matrix of determinant 1")

        def support(theta):
            u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            return self.y_gamma(u @ D)  # rows of u @ D are D^T u

        return OvalCurve.fit(support, tol=tol, grid_resolution=self.grid_resolution,
                             name=f"{self.name}|transformed")

    # ------------------------------------------------------------------ chords
    def chord(self, p, d, t: float = 1.0, alpha=(0.0, 0.0), max_iter: int = 100):
        """Intersect the lines ``p + s d`` with t Omega + alpha.

        Returns ``(s_lo, s_hi, hit)``.  Where ``hit`` is False the interval is
        empty and ``s_lo``/``s_hi`` are NaN.  Lines and bodies are handled in
        batches: ``p`` and ``d`` broadcast against each other.

        The boundary angle theta at an intersection solves
        t <x(theta), n> = <p - alpha, n> with n the unit normal of the line;
        the left-hand side is monotone on each half circle between arg n and
        arg n + pi, so each end of the chord is found by a safeguarded Newton
        iteration inside its own bracket.
        """
        p = _as_vec(p)
        d = _as_vec(d)
        p, d = np.broadcast_arrays(p, d)
        dn = np.hypot(d[..., 0], d[..., 1])
        if np.any(dn == 0):
            raise DomainError("line direction must be non-zero")
        du = d / dn[..., None]
        n = np.stack([-du[..., 1], du[..., 0]], axis=-1)
        theta_n = np.arctan2(n[..., 1], n[..., 0])
        q = p - np.asarray(alpha, dtype=float)
        c = (q[..., 0] * n[..., 0] + q[..., 1] * n[..., 1]) / t

        top = self.support_value(theta_n)
        bottom = -self.support_value(theta_n + np.pi)
        hit = (bottom <= c) & (c <= top)
        shape = c.shape

        h_scale = float(np.abs(self.coeffs()).sum())
        flat_tn = theta_n.ravel()
        flat_c = c.ravel()
        flat_hit = hit.ravel()

        ends = []
        for sign in (-1.0, 1.0):
            # increasing on (theta_n - pi, theta_n); decreasing on (theta_n, theta_n + pi)
            lo = flat_tn - (np.pi if sign < 0 else 0.0)
            hi = flat_tn + (0.0 if sign < 0 else np.pi)
            x = 0.5 * (lo + hi)
            orient = 1.0 if sign < 0 else -1.0
            act = np.nonzero(flat_hit)[0]
            for it in range(max_iter):
                if act.size == 0:
                    break
                xa = x[act]
                h, dh, d2h = self.support_derivatives(xa)
                delta = xa - flat_tn[act]
                val = orient * (h * np.cos(delta) - dh * np.sin(delta) - flat_c[act])
                slope = -orient * (h + d2h) * np.sin(delta)
                neg = val < 0
                lo_a = np.where(neg, xa, lo[act])
                hi_a = np.where(neg, hi[act], xa)
                with np.errstate(divide="ignore", invalid="ignore"):
                    newton = xa - val / slope
                ok = (slope > 0) & (newton > lo_a) & (newton < hi_a)
                if it >= 40:
                    ok[:] = False
                x_new = np.where(ok, newton, 0.5 * (lo_a + hi_a))
                done = ((np.abs(val) <= 4e-16 * h_scale) | (np.abs(x_new - xa) <= 4e-16 * (1.0 + np.abs(xa)))
                        | (hi_a - lo_a <= 1e-15))
                x[act] = np.where(np.abs(val) <= 4e-16 * h_scale, xa, x_new)
                lo[act] = lo_a
                hi[act] = hi_a
                act = act[~done]
            x = x.reshape(shape)
            pt = t * self.boundary_point(x) - q
            ends.append((pt[..., 0] * du[..., 0] + pt[..., 1] * du[..., 1]) / dn)
        s_lo = np.where(hit, np.minimum(ends[0], ends[1]), np.nan)
        s_hi = np.where(hit, np.maximum(ends[0], ends[1]), np.nan)
        return s_lo, s_hi, hit

    # ------------------------------------------------------------------ distances
    def distance(self, x, t: float = 1.0, alpha=(0.0, 0.0), n_grid: int = 256) -> np.ndarray:
        """Euclidean distance from ``x`` to the curve t gamma + alpha.

        A coarse grid over the normal angle locates the nearest boundary
        point; Newton's method on the stationarity condition refines it, with
        a fallback to the grid value if the refinement would not improve it.
        """
        x = _as_vec(x) - np.asarray(alpha, dtype=float)
        flat = x.reshape(-1, 2)
        grid = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
        bpts = t * self.boundary_point(grid)
        out = np.empty(flat.shape[0])
        chunk = max(1, 2 ** 20 // n_grid)
        for start in range(0, flat.shape[0], chunk):
            pts = flat[start:start + chunk]
            d2 = ((pts[:, None, :] - bpts[None, :, :]) ** 2).sum(-1)
            theta = grid[np.argmin(d2, axis=1)]
            best = np.sqrt(d2.min(axis=1))
            for _ in range(30):
                h, dh, d2h = self.support_derivatives(theta)
                c, s = np.cos(theta), np.sin(theta)
                bx = t * (h * c - dh * s)
                by = t * (h * s + dh * c)
                rho = h + d2h
                tx, ty = -s, c
                diff_x, diff_y = pts[:, 0] - bx, pts[:, 1] - by
                # derivative of the boundary point is t rho u_perp
                f = diff_x * tx + diff_y * ty
                nx, ny = c, s
                fp = -t * rho + (diff_x * (-nx) + diff_y * (-ny))
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = np.where(fp != 0, f / fp, 0.0)
                step = np.clip(step, -np.pi / n_grid * 4, np.pi / n_grid * 4)
                theta = theta - step
                if np.max(np.abs(step)) < 1e-15:
                    break
            refined = np.hypot(pts[:, 0] - t * (self.boundary_point(theta)[:, 0]),
                               pts[:, 1] - t * (self.boundary_point(theta)[:, 1]))
            out[start:start + chunk] = np.minimum(refined, best)
        return out.reshape(x.shape[:-1])


def support_value(curve: OvalCurve, theta):
    return curve.support_value(theta)


def y_gamma(curve: OvalCurve, xi):
    return curve.y_gamma(xi)


def support_point(curve: OvalCurve, xi):
    return curve.support_point(xi)


def curvature_radius(curve: OvalCurve, xi):
    return curve.curvature_radius(xi)


def polar_radius(curve: OvalCurve, phi):
    return curve.polar_radius(phi)


def contains(curve: OvalCurve, point, t: float = 1.0, alpha=(0.0, 0.0)):
    return curve.contains(point, t, alpha)


def area(curve: OvalCurve) -> float:
    return curve.area()


def transform(curve: OvalCurve, D) -> OvalCurve:
    return curve.transform(D)
