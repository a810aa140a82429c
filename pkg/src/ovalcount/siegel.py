"""Siegel transforms of radial test functions over random unimodular lattices.

S(f)(L) sums f over the non-zero (or only the primitive) vectors of L.  For
Haar-random L its mean is int f in the all-vector case and int f / zeta(2)
over primitive vectors.  Monte Carlo runs are split into fixed-size chunks,
each with its own seed derived from the root seed, so results do not depend
on how the chunks are distributed over workers.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .lattice import UnimodularLattice, enumerate_vectors, reduce_batch, sample_haar_batch
from .stats import wilson_interval

ZETA_2 = math.pi ** 2 / 6
C1 = 1.0 / ZETA_2
C2 = C1 ** 2
CHUNK = 20_000
MODES = ("primitive", "all")


@dataclass(frozen=True)
class TestFunction:
    """Radial, compactly supported test function.

    kind ``"radial-indicator"``: indicator of |x| <= radius.
    kind ``"radial-smooth"``: 1 up to radius - width, then a cosine taper to 0 at radius.
    kind ``"annulus"``: indicator of inner < |x| <= radius.
    All are scaled by ``amplitude``.
    """

    __test__ = False  # not a pytest class

    kind: str
    radius: float
    width: float = 0.0
    inner: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("radial-indicator", "radial-smooth", "annulus"):
            raise DomainError(f"unknown test function kind {self.kind!r}")
        if self.radius <= 0:
            raise DomainError("radius must be positive")
        if self.kind == "radial-smooth" and not 0 < self.width <= self.radius:
            raise DomainError("smoothing width must lie in (0, radius]")
        if self.kind == "annulus" and not 0 <= self.inner < self.radius:
            raise DomainError("annulus needs 0 <= inner < radius")

    @classmethod
    def ball(cls, radius: float) -> "TestFunction":
        return cls("radial-indicator", radius)

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(self.kind, self.radius, self.width, self.inner, self.amplitude * c)

    def profile(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "radial-indicator":
            out = (r <= self.radius).astype(float)
        elif self.kind == "annulus":
            out = ((r > self.inner) & (r <= self.radius)).astype(float)
        else:
            r0 = self.radius - self.width
            taper = 0.5 * (1.0 + np.cos(np.pi * (r - r0) / self.width))
            out = np.where(r <= r0, 1.0, np.where(r <= self.radius, taper, 0.0))
        return self.amplitude * out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.profile(np.hypot(x[..., 0], x[..., 1]))

    @property
    def integral(self) -> float:
        """Closed-form integral over the plane."""
        R = self.radius
        if self.kind == "radial-indicator":
            val = math.pi * R * R
        elif self.kind == "annulus":
            val = math.pi * (R * R - self.inner ** 2)
        else:
            r0 = R - self.width
            val = math.pi * r0 * r0 + 0.5 * math.pi * (R * R - r0 * r0) - 2.0 * self.width ** 2 / math.pi
        return self.amplitude * val

    @property
    def integral_of_square(self) -> float:
        """Integral of f^2 (closed form for indicators, quadrature for the taper)."""
        if self.kind != "radial-smooth":
            return self.amplitude * self.integral
        from scipy import integrate
        val, _ = integrate.quad(lambda r: 2 * math.pi * r * float(self.profile(r)) ** 2, 0, self.radius,
                                points=[self.radius - self.width], epsabs=1e-13, epsrel=1e-13)
        return val


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")


def siegel_transform(f: TestFunction, L: UnimodularLattice, mode: str = "primitive") -> float:
    """Sum of f over non-zero (``mode="all"``) or primitive lattice vectors."""
    _check_mode(mode)
    v = enumerate_vectors(L, f.radius, primitive=(mode == "primitive"))
    return float(f(v).sum()) if v.shape[0] else 0.0


def _batch_vectors(e1: np.ndarray, e2: np.ndarray, R: float, primitive: bool):
    """All (lattice index, vector) pairs with 0 < |v| <= R for reduced bases e1, e2 (n, 2)."""
    n = e1.shape[0]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    kmax = np.floor(R * np.hypot(e1[:, 0], e1[:, 1]) / det + 1e-9).astype(np.int64)
    K = int(kmax.max()) if n else 0
    rows_lat, rows_k2 = [], []
    for k2 in range(-K, K + 1):
        sel = np.nonzero(kmax >= abs(k2))[0]
        rows_lat.append(sel)
        rows_k2.append(np.full(sel.size, k2))
    lat = np.concatenate(rows_lat)
    k2 = np.concatenate(rows_k2).astype(float)
    a = (e1[lat] ** 2).sum(-1)
    b = 2 * k2 * (e1[lat] * e2[lat]).sum(-1)
    c = k2 * k2 * (e2[lat] ** 2).sum(-1) - R * R
    disc = b * b - 4 * a * c
    ok = disc >= 0
    lat, k2, a, b, disc = lat[ok], k2[ok], a[ok], b[ok], disc[ok]
    lo = np.floor((-b - np.sqrt(disc)) / (2 * a)).astype(np.int64)
    hi = np.ceil((-b + np.sqrt(disc)) / (2 * a)).astype(np.int64)
    counts = hi - lo + 1
    idx = np.repeat(np.arange(lat.size), counts)
    k1 = lo[idx] + np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    lat_i = lat[idx]
    k2i = k2[idx].astype(np.int64)
    vec = k1[:, None] * e1[lat_i] + k2i[:, None] * e2[lat_i]
    g = np.gcd(k1, k2i)
    keep = (np.hypot(vec[:, 0], vec[:, 1]) <= R) & ((g == 1) if primitive else (g > 0))
    return lat_i[keep], vec[keep]


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, chunk]))


def siegel_samples(f: TestFunction, n_samples: int, seed: int, mode: str = "primitive") -> np.ndarray:
    """S(f)(L_i) for n_samples Haar lattices."""
    _check_mode(mode)
    out = []
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        m = min(CHUNK, n_samples - start)
        bases = sample_haar_batch(_chunk_rng(seed, c), m)
        e1, e2, _ = reduce_batch(bases)
        lat, vec = _batch_vectors(e1, e2, f.radius, mode == "primitive")
        out.append(np.bincount(lat, weights=f(vec), minlength=m))
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class SiegelReport:
    formula: str
    mode: str
    n: int
    predicted: float
    estimate: float
    std_error: float
    z: float
    verdict: bool

    def to_dict(self) -> dict:
        return asdict(self)


def validate_mean(f: TestFunction, n_samples: int, seed: int = 0, mode: str = "primitive") -> SiegelReport:
    """Monte Carlo mean of S(f) against c int f (c = 1/zeta(2) for primitive vectors, 1 otherwise)."""
    if n_samples < 1000:
        raise DomainError("at least 1000 samples are required")
    x = siegel_samples(f, n_samples, seed, mode)
    predicted = (C1 if mode == "primitive" else 1.0) * f.integral
    est = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    z = (est - predicted) / se if se > 0 else (0.0 if est == predicted else math.inf)
    return SiegelReport("mean", mode, n_samples, predicted, est, se, float(z), bool(abs(z) < 3))


@dataclass
class VarianceReport:
    n: int
    second_moment: float
    std_error: float
    integral: float
    integral_sq: float
    implied_constant: float

    def to_dict(self) -> dict:
        return asdict(self)


def validate_variance(f, n_samples: int, seed: int = 0, mode: str = "primitive") -> VarianceReport:
    """Empirical E[S(f)^2] and the implied constant (E[S^2] - c2 (int f)^2) / int f^2."""
    if not isinstance(f, TestFunction):
        raise DomainError("the second-moment check needs an even TestFunction")
    if n_samples < 1000:
        raise DomainError("at least 1000 samples are required")
    x = siegel_samples(f, n_samples, seed, mode)
    sq = x * x
    m2 = float(sq.mean())
    c2 = C2 if mode == "primitive" else 1.0
    implied = (m2 - c2 * f.integral ** 2) / f.integral_of_square
    return VarianceReport(n_samples, m2, float(sq.std(ddof=1) / math.sqrt(x.size)), f.integral,
                          f.integral_of_square, float(implied))


@dataclass
class SmallBallReport:
    epsilons: list[float]
    n: int
    probabilities: list[float]
    intervals: list[tuple[float, float]]
    ratios: list[float]
    spread: float  # (max ratio - min ratio) / min ratio

    def to_dict(self) -> dict:
        return asdict(self)


def shortest_norms(n_samples: int, seed: int) -> np.ndarray:
    """|L|_1 for n_samples Haar lattices."""
    out = []
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        m = min(CHUNK, n_samples - start)
        e1, _, _ = reduce_batch(sample_haar_batch(_chunk_rng(seed, c), m))
        out.append(np.hypot(e1[:, 0], e1[:, 1]))
    return np.concatenate(out) if out else np.zeros(0)


def small_ball_probability(epsilons, n_samples: int, seed: int = 0) -> SmallBallReport:
    """Empirical P(|L|_1 < eps) with Wilson intervals and the ratios P / eps^2."""
    eps = [float(e) for e in epsilons]
    if any(not 0 < e < 1 for e in eps):
        raise DomainError("each epsilon must lie in (0, 1)")
    norms = shortest_norms(n_samples, seed)
    hits = [int((norms < e).sum()) for e in eps]
    probs = [h / n_samples for h in hits]
    ratios = [p / (e * e) for p, e in zip(probs, eps)]
    spread = (max(ratios) - min(ratios)) / min(ratios) if min(ratios) > 0 else math.inf
    return SmallBallReport(eps, n_samples, probs, [wilson_interval(h, n_samples) for h in hits], ratios, spread)
