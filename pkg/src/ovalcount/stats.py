"""Empirical distributions and the goodness-of-fit statistics used by the experiments."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .errors import DomainError


@dataclass(eq=False)
class EmpiricalDistribution:
    """Sorted sample with provenance metadata."""

    samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if x.size == 0:
            raise DomainError("an empirical distribution needs at least one sample")
        x.setflags(write=False)
        self.samples = x

    def __len__(self) -> int:
        return self.samples.size

    def cdf(self, z) -> np.ndarray:
        """Fraction of samples <= z."""
        return np.searchsorted(self.samples, np.asarray(z, dtype=float), side="right") / self.samples.size

    def quantile(self, q) -> np.ndarray:
        return np.quantile(self.samples, q)

    def moment(self, p: float) -> float:
        return empirical_moment(self, p)

    def histogram(self, bins=50, range_=None) -> list[tuple[float, float, int, float]]:
        """Rows (bin_left, bin_right, count, cum_fraction)."""
        counts, edges = np.histogram(self.samples, bins=bins, range=range_)
        cum = np.cumsum(counts) / self.samples.size
        return [(float(edges[i]), float(edges[i + 1]), int(counts[i]), float(cum[i]))
                for i in range(counts.size)]

    def write_histogram_csv(self, path, bins=50, range_=None) -> None:
        lines = ["bin_left,bin_right,count,cum_fraction"]
        lines += [f"{a!r},{b!r},{c},{f!r}" for a, b, c, f in self.histogram(bins, range_)]
        Path(path).write_text("\n".join(lines) + "\n")

    def save(self, path) -> None:
        """JSON header line prefixed by '#', then one value per line (exact decimal repr)."""
        body = "\n".join(repr(float(v)) for v in self.samples)
        Path(path).write_text("# " + json.dumps(self.metadata, sort_keys=True) + "\n" + body + "\n")

    @classmethod
    def load(cls, path) -> "EmpiricalDistribution":
        lines = Path(path).read_text().splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            meta = json.loads(lines[0][1:])
            lines = lines[1:]
        return cls(np.array([float(s) for s in lines if s.strip()]), meta)


def _values(d) -> np.ndarray:
    x = d.samples if isinstance(d, EmpiricalDistribution) else np.asarray(d, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    return x


def ks_distance(a, b) -> float:
    """Sup-distance between the two empirical distribution functions."""
    x, y = np.sort(_values(a)), np.sort(_values(b))
    z = np.concatenate([x, y])
    fx = np.searchsorted(x, z, side="right") / x.size
    fy = np.searchsorted(y, z, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def chi_square_uniform(samples, bins_per_dim: int = 20, return_statistic: bool = False):
    """p-value of the chi-square test of uniformity on [0,1) or [0,1)^2.

    ``samples`` has shape (n,) or (n, 1) for d = 1 and (n, 2) for d = 2.
    Raises :class:`DomainError` when fewer than 5 samples per cell are expected.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if d not in (1, 2):
        raise DomainError("only dimensions 1 and 2 are supported")
    if np.any((x < 0) | (x >= 1)):
        raise DomainError("samples must lie in [0, 1)")
    cells = bins_per_dim ** d
    expected = n / cells
    if expected < 5:
        raise DomainError(f"expected count per cell {expected:.2f} is below 5")
    idx = np.minimum((x * bins_per_dim).astype(int), bins_per_dim - 1)
    flat = idx[:, 0] if d == 1 else idx[:, 0] * bins_per_dim + idx[:, 1]
    observed = np.bincount(flat, minlength=cells)
    stat = float(((observed - expected) ** 2).sum() / expected)
    p = float(sps.chi2.sf(stat, cells - 1))
    return (p, stat) if return_statistic else p


def empirical_moment(dist, p: float) -> float:
    """(1/n) sum |x_i|^p."""
    if p <= 0:
        raise DomainError("moment order must be positive")
    return float(np.mean(np.abs(_values(dist)) ** p))


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    ci = sps.binomtest(successes, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)
