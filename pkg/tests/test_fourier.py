import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ovalcount.errors import DomainError
from ovalcount.fourier import (ApproximantConfig, delta_A_prime, dual_primitive, h_A, nu, phases_batch,
                               s_A_prime, s_A_prime_tail_bound, theta_k, w_k)
from ovalcount.lattice import PrimitiveIndex, UnimodularLattice, dual, geodesic_apply, reduce, sample_haar
from ovalcount.limit_law import phi, phi_gamma2

from conftest import random_curve

Z2 = UnimodularLattice.standard()
Z2_RB = reduce(Z2, strict=False)

# Independent enumeration of the 28 non-zero integer vectors with |l| <= 3, disk weights 1.
DISK_Z2_HA_A3_T10 = -0.3267056465900063


# ---------------------------------------------------------------- nu
def test_nu_examples(disk, ellipse):
    assert nu(disk, [1.0, 0.0], 1.0) == pytest.approx(-math.sqrt(2) / 2, abs=1e-14)
    assert nu(disk, [0.6, 0.8], 0.37) == pytest.approx(nu(disk, [1.2, 1.6], 0.185), abs=1e-13)
    assert nu(ellipse, [1.0, 0.0], 0.25, power=1.0) == pytest.approx(math.sqrt(2) / 4, abs=1e-10)
    assert nu(ellipse, [1.0, 0.0], 0.25) == pytest.approx(0.5, abs=1e-10)  # sqrt(rho) weight
    with pytest.raises(DomainError):
        nu(disk, [0.0, 0.0], 1.0)


def test_nu_bounded(lopsided):
    rng = np.random.default_rng(1)
    l = rng.normal(size=(500, 2))
    assert np.all(np.abs(nu(lopsided, l, 3.3)) <= lopsided.curvature_bounds()[1] ** 0.5 + 1e-12)


# ---------------------------------------------------------------- h_A
def test_h_A_empty_and_branches(ellipse):
    L = sample_haar(np.random.default_rng(2))
    first = reduce(dual(L)).norm1
    assert h_A(ellipse, L, 5.0, ApproximantConfig(A=0.9 * first)) == 0.0
    cfg = ApproximantConfig(A=6.0)
    a = h_A(ellipse, L, 5.0, cfg, symmetric_form=True)
    b = h_A(ellipse, L, 5.0, cfg, symmetric_form=False)
    assert a == pytest.approx(b, abs=1e-12)


def test_h_A_disk_z2_oracle(disk):
    assert h_A(disk, Z2, 10.0, ApproximantConfig(A=3.0)) == pytest.approx(DISK_Z2_HA_A3_T10, abs=1e-13)


def test_h_A_regroups_into_prime_m_series(lopsided):
    """Each dual vector is m times a primitive one: h_A(A) = sum over primes with m up to A / |l|."""
    L = sample_haar(np.random.default_rng(3))
    t, A = 4.7, 12.0
    total = 0.0
    for l in dual_primitive(L, A):
        for sign in (1.0, -1.0):
            v = sign * l
            m = np.arange(1, int(A / np.hypot(*v)) + 1)
            w = lopsided.curvature_radius(v) ** 0.5
            total += w * (np.cos(2 * np.pi * m * t * lopsided.y_gamma(v) - 0.75 * np.pi) * m ** -1.5).sum() \
                / np.hypot(*v) ** 1.5
    assert h_A(lopsided, L, t, ApproximantConfig(A=A)) == pytest.approx(total / np.pi, abs=1e-12)


# ---------------------------------------------------------------- s_A_prime
def test_s_A_prime_alpha_zero_same_path(lopsided):
    L = sample_haar(np.random.default_rng(4))
    cfg = ApproximantConfig(A=10)
    assert s_A_prime(lopsided, L, 9.1, cfg) == s_A_prime(lopsided, L, 9.1, cfg, (0.0, 0.0))


def test_s_A_prime_single_pair(lopsided):
    L = UnimodularLattice(np.diag([5.0, 0.2]))  # dual has the single primitive pair +-(0.2, 0) below A = 1
    cfg = ApproximantConfig(A=1.0)
    l = np.array([0.2, 0.0])
    assert dual_primitive(L, 1.0).shape[0] == 1
    t, alpha = 13.3, np.array([0.4, -0.9])
    expected = phi_gamma2(lopsided, t * lopsided.y_gamma(l), t * lopsided.y_gamma(-l), l, alpha) \
        / (math.pi * 0.2 ** 1.5)
    assert s_A_prime(lopsided, L, t, cfg, alpha) == pytest.approx(expected, abs=1e-12)


def test_s_A_prime_integer_alpha_shift(ellipse, lopsided):
    for c in (ellipse, lopsided):
        cfg = ApproximantConfig(A=8, m_max=200)
        a = s_A_prime(c, Z2, 6.1, cfg, (0.3, 0.2))
        b = s_A_prime(c, Z2, 6.1, cfg, (1.3, 0.2))
        assert a == pytest.approx(b, abs=1e-9)


def test_s_A_prime_symmetric_collapse(ellipse):
    """For a symmetric curve and alpha = 0 both cosine terms coincide."""
    L = sample_haar(np.random.default_rng(5))
    v = dual_primitive(L, 10)
    val = (ellipse.curvature_radius(v) ** 0.5 * phi(7.0 * ellipse.y_gamma(v)) * np.hypot(v[:, 0], v[:, 1]) ** -1.5)
    assert s_A_prime(ellipse, L, 7.0, ApproximantConfig(A=10)) == pytest.approx(2 * val.sum() / np.pi, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_s_A_prime_m_tail_certified(seed):
    rng = np.random.default_rng(seed)
    c = random_curve(rng)
    L = sample_haar(rng)
    cfg = ApproximantConfig.certified(A=6.0, tolerance=0.5, curve=c)
    assert cfg.is_certified(c)
    t = rng.uniform(1, 100)
    alpha = rng.uniform(-1, 1, 2)
    exact = s_A_prime(c, L, t, ApproximantConfig(A=6.0), alpha)
    small = s_A_prime(c, L, t, cfg, alpha)
    big = s_A_prime(c, L, t, ApproximantConfig(A=6.0, m_max=4 * cfg.m_max), alpha)
    bound = s_A_prime_tail_bound(c, L, cfg)
    assert abs(small - exact) <= bound
    assert abs(small - big) <= bound


def test_approximant_config_validation():
    with pytest.raises(DomainError):
        ApproximantConfig(A=0)
    with pytest.raises(DomainError):
        ApproximantConfig(A=1, m_max=0)


# ---------------------------------------------------------------- delta_A_prime
def test_delta_A_prime_deterministic(disk):
    L = sample_haar(np.random.default_rng(6))
    cfg = ApproximantConfig(A=10)
    d = delta_A_prime(disk, L, 40.0, cfg)
    assert d == delta_A_prime(disk, L, 40.0, cfg)
    assert d >= 0


# ---------------------------------------------------------------- theta_k and w_k
def test_theta_k_examples(disk, lopsided):
    assert theta_k(disk, Z2_RB, PrimitiveIndex(1, 0), 0.0) == 0.0
    assert theta_k(disk, Z2_RB, PrimitiveIndex(1, 0), 2.25) == pytest.approx(0.25, abs=1e-14)
    rb = reduce(sample_haar(np.random.default_rng(7)))
    th = theta_k(lopsided, rb, (2, -1), 31.0)
    mirrored = theta_k(lopsided, rb, (2, -1), 31.0, mirrored=True)
    v = 2 * rb.e1 - rb.e2
    assert th == pytest.approx((31 * lopsided.y_gamma(v)) % 1, abs=1e-12)
    assert mirrored == pytest.approx((31 * lopsided.y_gamma(-v)) % 1, abs=1e-12)
    assert 0 <= th < 1


def test_theta_symmetric_mirror_equal(ellipse):
    rb = reduce(sample_haar(np.random.default_rng(8)))
    for k in [(1, 0), (1, 1), (3, -2)]:
        assert theta_k(ellipse, rb, k, 77.7) == pytest.approx(theta_k(ellipse, rb, k, 77.7, mirrored=True), abs=1e-9)


def test_phases_batch_matches_scalar(lopsided):
    rng = np.random.default_rng(9)
    rbs = [reduce(sample_haar(rng)) for _ in range(20)]
    e1 = np.array([r.e1 for r in rbs])
    e2 = np.array([r.e2 for r in rbs])
    batch = phases_batch(lopsided, e1, e2, (1, 1), 1e3)
    np.testing.assert_allclose(batch, [theta_k(lopsided, r, (1, 1), 1e3) for r in rbs], atol=1e-12)


def test_w_k_examples(disk):
    assert w_k(disk, Z2_RB, (1, 0)) == pytest.approx(1.0, abs=1e-15)
    assert w_k(disk, Z2_RB, (1, 1)) == pytest.approx(0.0, abs=1e-15)


def test_w_k_taylor_expansion(lopsided):
    """|Y(flowed v) - Y(v) - h W_k| = O(h^2): log-log slope near 2."""
    L = sample_haar(np.random.default_rng(10))
    rb = reduce(L)
    k = (1, 1)
    v = rb.combine(k)
    y0 = lopsided.y_gamma(v)
    wk = w_k(lopsided, rb, k)
    hs = np.array([1e-2, 1e-3, 1e-4])
    res = []
    for h in hs:
        flowed = reduce(geodesic_apply(L, 1 + h))
        res.append(abs(lopsided.y_gamma(flowed.combine(k)) - y0 - h * wk))
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert 1.8 < slope < 2.2
