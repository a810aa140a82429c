"""The Fourier approximant closes the gap to the exact error, and its phases equidistribute.

Run: python3 demos/gap_and_phases.py
"""
import numpy as np

from ovalcount.cli import equidist_phases
from ovalcount.fourier import ApproximantConfig, delta_A_prime
from ovalcount.geometry import OvalCurve
from ovalcount.limit_law import draw_reduced_lattice
from ovalcount.stats import chi_square_uniform

disk = OvalCurve.disk()
rng = np.random.default_rng(3)
lattices = [draw_reduced_lattice(rng).lattice() for _ in range(300)]
for A, t in ((5, 50.0), (15, 150.0), (30, 500.0)):
    gaps = np.array([delta_A_prime(disk, L, t, ApproximantConfig(A=A)) for L in lattices])
    print(f"A = {A:2d}, t = {t:5.0f}: median gap {np.median(gaps):.3f}, P(gap >= 0.5) = {(gaps >= 0.5).mean():.3f}")

th = equidist_phases(OvalCurve.ellipse(2, 1), 5000, seed=0, t=1e4)
print(f"\nellipse phases at t = 1e4: 1D chi-square p = {chi_square_uniform(th[:, 0], 20):.3f}, "
      f"joint 5x5 p = {chi_square_uniform(th, 5):.3f}")
