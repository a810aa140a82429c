import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats as sps

from ovalcount.errors import DomainError, InsufficientData
from ovalcount.lattice import ReducedBasis, UnimodularLattice, reduce, sample_haar
from ovalcount.limit_law import (ZETA_3, LimitConfig, draw_reduced_lattice, estimate_cdf, evaluate_series,
                                 moment_diagnostics, phi, phi_alpha, phi_gamma2, phi_tail_bound,
                                 sample_limit_series, series_m_tail_bound, series_terms, series_tail_sd)
from ovalcount.stats import EmpiricalDistribution

# High-precision direct summation (mpmath nsum of the cosine series).
PHI_EXACT = {0.0: -1.84722832406008039798, 0.3: 0.82956457333490436765}
# Same oracle for phi(theta + <alpha, v>) at theta = 0.1, v = (0.7, -1.3), alpha = (0.25, 0.6).
PHI_ALPHA_EXACT = 0.55434504782161323
PHI_MEDIAN = 0.24348878956759257


def direct_phi(theta, m_max):
    m = np.arange(1, m_max + 1)
    return float((np.cos(2 * np.pi * m * theta - 0.75 * np.pi) * m ** -1.5).sum())


# ---------------------------------------------------------------- phi
def test_phi_exact_values():
    for theta, val in PHI_EXACT.items():
        assert phi(theta) == pytest.approx(val, abs=1e-13)


def test_phi_truncated_within_tail_bound():
    for m_max in (10, 1000, 20000):
        for theta, val in PHI_EXACT.items():
            assert abs(phi(theta, m_max) - val) <= phi_tail_bound(m_max)


def test_phi_truncated_matches_direct_loop():
    rng = np.random.default_rng(1)
    for theta in rng.random(10):
        assert phi(theta, 500) == pytest.approx(direct_phi(theta, 500), abs=1e-12)


def test_phi_mean_zero_on_grid():
    K = 10_000
    assert abs(phi(np.arange(K) / K).mean()) < 1e-3


def test_phi_parseval():
    mean, _ = integrate.quad(lambda x: float(phi(x)), 0, 1, limit=400, points=[0.5])
    sq, _ = integrate.quad(lambda x: float(phi(x)) ** 2, 0, 1, limit=400, points=[0.5])
    assert abs(mean) < 1e-8
    assert sq == pytest.approx(ZETA_3 / 2, abs=1e-7)


def test_phi_periodic_and_rejects_bad_truncation():
    assert phi(0.37) == pytest.approx(phi(5.37), abs=1e-13)
    with pytest.raises(DomainError):
        phi(0.1, 0)


def test_phi_not_symmetric_in_law():
    """phi(U) has mean 0 but is skewed: range [-1.847, 0.830], median 0.2435 (direct sum, 4000 terms)."""
    x = phi((np.arange(20_000) + 0.5) / 20_000)
    assert abs(x.mean()) < 1e-6
    assert np.median(x) == pytest.approx(PHI_MEDIAN, abs=1e-3)
    assert x.min() == pytest.approx(PHI_EXACT[0.0], abs=1e-3)


def test_phi_phase_invariance_in_law():
    rng = np.random.default_rng(0)
    u = rng.random(100_000)
    w = rng.random(100_000)
    assert sps.ks_2samp(phi(u), phi(np.mod(w + 0.318, 1.0))).pvalue > 0.01


# ---------------------------------------------------------------- phi_alpha
def test_phi_alpha_reduces_to_phi():
    assert phi_alpha(0.2, [1.0, 2.0], [0.0, 0.0]) == phi(0.2)
    assert phi_alpha(0.2, [1.0, 2.0], [1.0, 1.0]) == pytest.approx(phi(0.2), abs=1e-12)
    assert phi_alpha(0.2, [1.0, 2.0], [1.0, 1.0], 300) == pytest.approx(phi(0.2, 300), abs=1e-11)


def test_phi_alpha_half_shift_even_terms():
    """Shift 1/2 flips odd terms only, so phi(theta) + phi_alpha = 2 sum over even m = 2^{-1/2} phi(2 theta)."""
    for theta in (0.05, 0.3, 0.71):
        total = phi(theta) + phi_alpha(theta, [1.0, 0.0], [0.5, 0.0])
        assert total == pytest.approx(phi(2 * theta) / math.sqrt(2), abs=1e-12)


def test_phi_alpha_direct_summation():
    assert phi_alpha(0.1, [0.7, -1.3], [0.25, 0.6]) == pytest.approx(PHI_ALPHA_EXACT, abs=1e-10)
    shift = 0.7 * 0.25 - 1.3 * 0.6
    assert phi_alpha(0.1, [0.7, -1.3], [0.25, 0.6], 400) == pytest.approx(direct_phi(0.1 + shift, 400), abs=1e-10)


# ---------------------------------------------------------------- phi_gamma2
def test_phi_gamma2_symmetric(ellipse, disk):
    v = [0.3, 1.1]
    rho = ellipse.curvature_radius(v)
    assert phi_gamma2(ellipse, 0.2, 0.2, v) == pytest.approx(2 * math.sqrt(rho) * phi(0.2), abs=1e-12)
    assert phi_gamma2(ellipse, 0.2, 0.2, v, power=1.0) == pytest.approx(2 * rho * phi(0.2), abs=1e-12)
    assert phi_gamma2(disk, 0.1, 0.6, v) == pytest.approx(phi(0.1) + phi(0.6), abs=1e-14)


def test_phi_gamma2_ellipse_vertex(ellipse):
    # rho(+-(1, 0)) = 0.5 each
    assert phi_gamma2(ellipse, 0.0, 0.0, [1.0, 0.0], power=1.0) == pytest.approx(PHI_EXACT[0.0], abs=1e-9)
    assert phi_gamma2(ellipse, 0.0, 0.0, [1.0, 0.0]) == pytest.approx(math.sqrt(2) * PHI_EXACT[0.0], abs=1e-9)
    with pytest.raises(DomainError):
        phi_gamma2(ellipse, 0.0, 0.0, [0.0, 0.0])


def test_phi_gamma2_alpha_phases(lopsided):
    v, a = np.array([1.0, -0.5]), np.array([0.3, 0.7])
    s = v @ a
    expected = (lopsided.curvature_radius(v) ** 0.5 * phi(0.2 + s)
                + lopsided.curvature_radius(-v) ** 0.5 * phi(0.9 - s))
    assert phi_gamma2(lopsided, 0.2, 0.9, v, a) == pytest.approx(expected, abs=1e-14)


# ---------------------------------------------------------------- series
def test_series_empty_below_first_minimum(disk):
    rb = reduce(sample_haar(np.random.default_rng(3)))
    cfg = LimitConfig(A=0.5 * rb.norm1)
    assert sample_limit_series(disk, rb, (0, 0), cfg, np.random.default_rng(0)) == 0.0


def test_series_symmetric_value(disk):
    rb = reduce(UnimodularLattice.standard(), strict=False)
    cfg = LimitConfig(A=2.5)
    rng = np.random.default_rng(4)
    val = sample_limit_series(disk, rb, (0, 0), cfg, rng)
    theta = np.random.default_rng(4).random((1, 8))
    r = np.hypot(*np.array([(0, 1), (1, -2), (1, -1), (1, 0), (1, 1), (1, 2), (2, -1), (2, 1)]).T)
    assert val == pytest.approx(2 / math.pi * (phi(theta[0]) / r ** 1.5).sum(), abs=1e-13)


def test_symmetric_and_general_branches_agree_in_law(disk):
    rb = reduce(sample_haar(np.random.default_rng(5)))
    cfg = LimitConfig(A=10)
    sym = sample_limit_series(disk, rb, (0, 0), cfg, np.random.default_rng(6), size=100_000)
    terms = series_terms(disk, rb, (0, 0), cfg.A)
    theta = np.random.default_rng(7).random((100_000, terms.v.shape[0]))
    gen = evaluate_series(disk, terms, theta, theta.copy())
    assert sps.ks_2samp(sym, gen).pvalue > 0.01


def test_nonsymmetric_uses_independent_pairs(lopsided):
    rb = reduce(sample_haar(np.random.default_rng(8)))
    cfg = LimitConfig(A=6)
    terms = series_terms(lopsided, rb, (0, 0), cfg.A)
    rng = np.random.default_rng(9)
    got = sample_limit_series(lopsided, rb, (0, 0), cfg, rng, size=3)
    rng = np.random.default_rng(9)
    t1 = rng.random((3, terms.v.shape[0]))
    t2 = rng.random((3, terms.v.shape[0]))
    ref = (((terms.w_plus * phi(t1) + terms.w_minus * phi(t2)) * terms.scale).sum(-1)) / math.pi
    np.testing.assert_allclose(got, ref, atol=1e-13)


def test_doubling_A_within_tail_sd(disk):
    rng = np.random.default_rng(10)
    for _ in range(5):
        rb = draw_reduced_lattice(rng)
        small = series_terms(disk, rb, (0, 0), 20.0)
        big = series_terms(disk, rb, (0, 0), 40.0)
        theta = rng.random((4000, big.v.shape[0]))
        # reuse the phases of the shared terms so only the added terms differ
        idx = [i for i, v in enumerate(big.v) if np.hypot(*v) <= 20.0]
        inc = evaluate_series(disk, big, theta, None) - evaluate_series(disk, small, theta[:, idx], None)
        assert inc.std() < series_tail_sd(disk, rb, 20.0)


def test_series_m_truncation_within_bound(lopsided):
    rb = reduce(sample_haar(np.random.default_rng(14)))
    terms = series_terms(lopsided, rb, (0.2, -0.4), 8.0)
    rng = np.random.default_rng(15)
    t1, t2 = rng.random((50, terms.v.shape[0])), rng.random((50, terms.v.shape[0]))
    exact = evaluate_series(lopsided, terms, t1, t2)
    for m_max in (10, 100):
        cut = evaluate_series(lopsided, terms, t1, t2, m_max)
        assert np.abs(cut - exact).max() <= series_m_tail_bound(terms, m_max)
    assert series_m_tail_bound(terms, None) == 0.0


# ---------------------------------------------------------------- estimate_cdf
def test_estimate_cdf_deterministic_and_centred(disk, tmp_path):
    cfg = LimitConfig(A=20, n_lattice=4000, seed=11)
    a = estimate_cdf(disk, (0, 0), cfg)
    b = estimate_cdf(disk, (0, 0), cfg)
    a.save(tmp_path / "a.dist")
    b.save(tmp_path / "b.dist")
    assert (tmp_path / "a.dist").read_bytes() == (tmp_path / "b.dist").read_bytes()
    x = np.asarray(a.samples)
    assert abs(x.mean()) < 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert a.metadata["root_seed"] == 11


def test_conditioning_respects_min_norm():
    rng = np.random.default_rng(12)
    assert all(draw_reduced_lattice(rng, 0.5).norm1 >= 0.5 for _ in range(200))


def test_limit_config_validation():
    with pytest.raises(DomainError):
        LimitConfig(A=-1)
    with pytest.raises(DomainError):
        LimitConfig(pairing="other")


# ---------------------------------------------------------------- moment_diagnostics
def test_moment_diagnostics_errors():
    with pytest.raises(InsufficientData):
        moment_diagnostics(EmpiricalDistribution(np.ones(999)), [1.0])
    with pytest.raises(DomainError):
        moment_diagnostics(EmpiricalDistribution(np.ones(2000)), [4.5])


def test_moment_diagnostics_pareto_slope():
    """Symmetric Pareto sample with tail index 4/3: fitted slope near -4/3, low moments stable."""
    rng = np.random.default_rng(13)
    x = rng.pareto(4 / 3, 400_000) + 1.0
    x *= rng.choice([-1, 1], x.size)
    rep = moment_diagnostics(EmpiricalDistribution(x), [0.5, 2.0])
    assert -1.5 < rep.tail_slope < -1.15
    assert rep.stable[0.5]
    assert rep.sizes == [100_000, 200_000, 400_000]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 5))
def test_phi_integer_shift_property(theta, k):
    # phi has a square-root cusp at integers, so rounding of theta + k is amplified by 1/sqrt(dist)
    dist = max(min(theta, 1 - theta), 1e-300)
    tol = 1e-12 + 1e-14 * (k + 1) / math.sqrt(dist)
    assert phi_alpha(theta, [float(k), 0.0], [1.0, 0.0]) == pytest.approx(phi(theta), abs=tol)
