"""Haar-random lattices: the Siegel mean value formula and the small-ball law.

Run: python3 demos/siegel_and_haar.py
"""
import math

from ovalcount.siegel import TestFunction, small_ball_probability, validate_mean

for R in (0.5, 1.0, 2.0):
    rep = validate_mean(TestFunction.ball(R), 50_000, seed=0)
    print(f"primitive vectors in a ball of radius {R}: mean {rep.estimate:.4f} "
          f"vs (6 / pi^2) pi R^2 = {rep.predicted:.4f}  (z = {rep.z:+.2f})")

rep = small_ball_probability([0.05, 0.1, 0.2], 200_000, seed=0)
print("\nP(|L|_1 < eps) / eps^2:", [round(r, 4) for r in rep.ratios], f"(theory 3/pi = {3 / math.pi:.4f})")
