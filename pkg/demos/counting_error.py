"""Count lattice points in dilated ovals and watch the error scale like sqrt(t).

Run: python3 demos/counting_error.py
"""
import numpy as np

from ovalcount.counting import error_normalized, f_poisson
from ovalcount.geometry import OvalCurve
from ovalcount.lattice import UnimodularLattice, sample_haar

disk = OvalCurve.disk()
oval = OvalCurve.from_coeffs([1.0, 0.1, 0.05, 0.02, -0.03], name="lopsided")

# The circle problem on Z^2: 13 points in the disk of radius 2.
s = error_normalized(disk, UnimodularLattice.standard(), 2.0)
print(f"Z^2, disk, t = 2: count {s.count}, area {s.count - s.error:.4f}, R / sqrt(t) = {s.normalized:.4f}")

# A random unimodular lattice and a non-symmetric oval.
L = sample_haar(np.random.default_rng(0))
print("\nHaar lattice basis:\n", np.round(L.basis, 4))
print(f"{'t':>6} {'count':>8} {'area':>12} {'R/sqrt(t)':>10} {'smoothed':>10}")
for t in (10.0, 50.0, 100.0, 200.0, 400.0):
    s = error_normalized(oval, L, t)
    print(f"{t:6.0f} {s.count:8d} {s.count - s.error:12.2f} {s.normalized:10.4f} {f_poisson(oval, L, t):10.4f}")
print("The normalised error stays O(1) while the count grows like t^2.")
