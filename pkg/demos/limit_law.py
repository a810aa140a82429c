"""Compare the normalised counting error at large t with samples of the limit series.

Run: python3 demos/limit_law.py   (about a minute)
"""
import numpy as np

from ovalcount.counting import error_normalized
from ovalcount.geometry import OvalCurve
from ovalcount.limit_law import LimitConfig, draw_reduced_lattice, estimate_cdf, mean_report, phi
from ovalcount.stats import ks_distance

# phi is the building block: mean zero, but skewed.
x = phi((np.arange(10_000) + 0.5) / 10_000)
print(f"phi(U): mean {x.mean():+.2e}, median {np.median(x):.4f}, range [{x.min():.3f}, {x.max():.3f}]")

disk = OvalCurve.disk()
n = 2000
rng = np.random.default_rng(1)
err = np.array([error_normalized(disk, draw_reduced_lattice(rng).lattice(), 300.0).normalized
                for _ in range(n)])
lim = estimate_cdf(disk, (0, 0), LimitConfig(A=30, n_lattice=n, seed=2))
print(f"\n{n} Haar lattices, disk, t = 300")
print(f"error quantiles 10/50/90%: {np.round(np.quantile(err, [0.1, 0.5, 0.9]), 3)}")
print(f"limit quantiles 10/50/90%: {np.round(np.quantile(lim.samples, [0.1, 0.5, 0.9]), 3)}")
print(f"KS distance {ks_distance(err, lim):.4f}  (sampling noise alone is about {1.36 * np.sqrt(2 / n):.3f})")
print("limit series mean:", {k: round(v, 4) for k, v in mean_report(lim).items()})
