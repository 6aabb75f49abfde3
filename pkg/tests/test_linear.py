import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predcp.errors import DomainError, StructuralError
from predcp.kld_priors import exponential, gamma, gamma_exp_mixture, log_cauchy
from predcp.linear import (DivergenceMap, LinearModelSpec, cov_density,
                           ecp_beta1_density, ecp_map, kld_linear,
                           kld_multivariate, marginal_beta_density,
                           nonlocal_pdf, predcp_divergence_linear, predcp_map,
                           profile_mass, propriety_integral, shrinkage_profile,
                           tail_probability)
from predcp.quadrature import integrate_semi_infinite

X1 = LinearModelSpec(x=1.0, sigma_y=1.0)
TAU_GRID = np.geomspace(1e-6, 1e4, 60)


# ------------------------------------------------------------- divergence map

def test_kld_linear_at_zero():
    assert kld_linear(X1, 0.0) == (0.0, 0.0)


def test_kld_linear_hand_value():
    v, d = kld_linear(X1, 1.0)
    assert v == pytest.approx(-0.5 * math.log(2.0) + 0.5, abs=1e-15)
    assert v == pytest.approx(0.15342640972002736, abs=1e-15)
    assert d == pytest.approx(0.25, abs=1e-15)


def test_kld_linear_small_feature_flattens():
    # Quadrature oracle (KL between N(0, 1.0625) and N(0, 1)) gives
    # 9.3768909178e-4; small x flattens the map by ~160x vs x = 1.
    v, _ = kld_linear(LinearModelSpec(x=0.25), 1.0)
    assert v == pytest.approx(0.00093768909178258, rel=1e-10)
    assert v < kld_linear(X1, 1.0)[0] / 100


def test_kld_linear_matches_gaussian_kl_quadrature():
    # independent oracle: numerically integrate the defining KL integrand
    for x, tau in [(1.0, 1.0), (0.25, 1.0), (2.0, 0.3)]:
        s2p = 1.0 + x * x * tau

        def integrand(y):
            # integrate over the symmetric pair to cover (-inf, inf)
            def one(z):
                lp = -z * z / (2 * s2p) - 0.5 * math.log(2 * math.pi * s2p)
                lq = -z * z / 2 - 0.5 * math.log(2 * math.pi)
                return math.exp(lp) * (lp - lq)
            return one(y) + one(-y) if y > 0 else one(0.0)

        oracle = integrate_semi_infinite(integrand, 0.0).value
        v, _ = kld_linear(LinearModelSpec(x=x), tau)
        assert v == pytest.approx(oracle, rel=1e-7, abs=1e-10)


def test_predcp_divergence_values():
    assert predcp_divergence_linear(X1, 0.0) == (0.0, 0.5)
    assert predcp_divergence_linear(X1, 1.0) == (0.5, 0.5)


def test_jensen_dominance_and_vanishing_gap():
    for x in (0.25, 1.0, 2.0):
        spec = LinearModelSpec(x=x)
        ecp_v, _ = kld_linear(spec, TAU_GRID)
        pre_v, _ = predcp_divergence_linear(spec, TAU_GRID)
        assert np.all(pre_v >= ecp_v)
    # gap = log1p(c tau)/2 ~ c tau / 2 -> 0 at the origin
    gaps = [predcp_divergence_linear(X1, t)[0] - kld_linear(X1, t)[0]
            for t in (1e-2, 1e-4, 1e-6)]
    assert gaps[2] < gaps[1] < gaps[0]
    assert 0 <= gaps[2] < 1e-5


def test_monotone_bijectivity_on_log_grid():
    for spec in (X1, LinearModelSpec(x=0.25),
                 LinearModelSpec(design=np.eye(3) * 0.7)):
        for dmap in (ecp_map(spec), predcp_map(spec)):
            ders = np.array([dmap.derivative(t) for t in TAU_GRID])
            vals = np.array([dmap.value(t) for t in TAU_GRID])
            assert np.all(ders > 0)
            assert np.all(np.diff(vals) > 0)


def test_derivative_matches_finite_differences():
    for spec in (X1, LinearModelSpec(x=0.3),
                 LinearModelSpec(design=np.array([[1.0, 0.2], [0.4, 2.0]]))):
        dmap = ecp_map(spec)
        for tau in np.geomspace(1e-4, 1e3, 30):
            h = 1e-5 * max(tau, 1e-3)
            fd = (dmap.value(tau + h) - dmap.value(tau - h)) / (2 * h)
            assert dmap.derivative(tau) == pytest.approx(fd, rel=1e-8)


# ------------------------------------------------------------- multivariate

def test_multivariate_reduces_to_scalar():
    m = LinearModelSpec(design=np.array([[0.7]]), sigma_y=1.3)
    s = LinearModelSpec(x=0.7, sigma_y=1.3)
    for tau in TAU_GRID:
        mv, md = kld_multivariate(m, tau)
        sv, sd = kld_linear(s, tau)
        assert mv == pytest.approx(sv, rel=1e-12, abs=1e-15)
        assert md == pytest.approx(sd, rel=1e-12, abs=1e-15)


def test_multivariate_identity_design():
    spec = LinearModelSpec(design=np.eye(2))
    v, d = kld_multivariate(spec, 1.0)
    assert v == pytest.approx(2 * (-0.5 * math.log(2) + 0.5), abs=1e-14)
    assert v == pytest.approx(0.3068528194400547, abs=1e-14)
    assert d == pytest.approx(0.5, abs=1e-14)
    assert kld_multivariate(spec, 0.0) == (0.0, 0.0)


def test_multivariate_rank_deficient():
    # duplicated rows: rank 1, zero eigenvalues contribute nothing
    spec = LinearModelSpec(design=np.array([[1.0, 0.0], [1.0, 0.0]]))
    v, d = kld_multivariate(spec, 2.0)
    v1, d1 = kld_linear(LinearModelSpec(x=math.sqrt(2.0)), 2.0)
    assert v == pytest.approx(v1, rel=1e-12)
    assert d == pytest.approx(d1, rel=1e-12)


# ------------------------------------------------------------- cov density

def test_cov_density_vanishes_at_origin_for_ecp():
    d = cov_density(exponential(0.5), ecp_map(X1), 1e-10)
    assert 0 <= d < 1e-9


def test_cov_density_hand_value():
    # pi_KL = 2 exp(-2 u) at u = -log(2)/2 + 1/2 gives 2 * (2/e); times the
    # volume term 1/4 this is exactly 1/e.
    d = cov_density(exponential(0.5), ecp_map(X1), 1.0)
    assert d == pytest.approx(1.0 / math.e, rel=1e-12)
    assert d == pytest.approx(0.36787944117144233, rel=1e-12)


def test_predcp_density_max_at_origin_and_decreasing():
    dmap = predcp_map(X1)
    dens = [cov_density(exponential(0.5), dmap, t)
            for t in [1e-12, 0.1, 0.5, 1.0, 3.0]]
    assert dens[0] == pytest.approx(1.0, rel=1e-9)  # x^2/(2 sigma^2 lambda)
    assert np.all(np.diff(dens) < 0)


def test_cov_density_rejects_negative_tau():
    with pytest.raises(DomainError):
        cov_density(exponential(0.5), ecp_map(X1), -1.0)


def test_propriety_all_family_map_pairs():
    # The eps shift inside pi_KL costs exactly CDF_family(1e-12) of mass:
    # negligible for the light-at-zero families, 3.8e-3 for gamma(0.2, 2),
    # and 1.15e-2 for log-Cauchy(1), whose near-origin mass decays only
    # like 1/|log u|.  The log-Cauchy budget below reflects that floor.
    families = [exponential(0.5), gamma(0.2, 2.0), log_cauchy(1.0),
                gamma_exp_mixture(0.5)]
    for spec in (X1, LinearModelSpec(x=0.25)):
        for dmap in (ecp_map(spec), predcp_map(spec)):
            for fam in families:
                res = propriety_integral(fam, dmap)
                budget = 2e-2 if fam.family == "log_cauchy" else 1e-2
                assert abs(res.value - 1.0) < budget, (fam.family, res)


def test_feature_dependence_stochastic_ordering():
    # more informative features concentrate the prior near tau = 0
    fam = gamma_exp_mixture(0.5)
    probs = []
    for x in (0.25, 0.5, 1.0, 2.0):
        p, _ = tail_probability(fam, ecp_map(LinearModelSpec(x=x)), 1.0)
        probs.append(p)
    assert np.all(np.diff(probs) < 0)


# ------------------------------------------------------------- marginal

def test_marginal_symmetric():
    for fam in (exponential(0.5), log_cauchy(1.0)):
        a, _ = marginal_beta_density(fam, X1, 1.3)
        b, _ = marginal_beta_density(fam, X1, -1.3)
        assert a == pytest.approx(b, abs=1e-8)


def test_marginal_normalizes():
    # trapezoid over a dense beta grid: certifying 1e-2 does not need the
    # adaptive machinery on the outer integral, and the exponential-prior
    # marginal is numerically zero far before beta = 50
    fam = exponential(0.5)
    grid = np.concatenate([np.linspace(1e-3, 2.0, 120),
                           np.geomspace(2.0, 50.0, 80)[1:]])
    dens = [marginal_beta_density(fam, X1, b, global_tol=1e-4,
                                  panel_tol=1e-6)[0] for b in grid]
    mass = 2 * np.trapezoid(dens, grid)
    assert mass == pytest.approx(1.0, abs=1e-2)


def test_marginal_heavier_tails_for_small_feature():
    fam = log_cauchy(1.0)
    at_small_x, _ = marginal_beta_density(fam, LinearModelSpec(x=0.25), 3.0)
    at_unit_x, _ = marginal_beta_density(fam, X1, 3.0)
    assert at_small_x > at_unit_x


# ------------------------------------------------------------- shrinkage

def test_shrinkage_jacobian_at_half():
    dmap = ecp_map(X1)
    fam = exponential(0.5)
    assert shrinkage_profile(fam, dmap, 0.5) == pytest.approx(
        4.0 * cov_density(fam, dmap, 1.0), rel=1e-12)


def test_shrinkage_accepts_model_spec():
    fam = exponential(0.5)
    assert shrinkage_profile(fam, X1, 0.5) == pytest.approx(
        shrinkage_profile(fam, ecp_map(X1), 0.5), rel=1e-15)


def test_shrinkage_domain():
    for bad in (0.0, 1.0, -0.2, 1.4):
        with pytest.raises(DomainError):
            shrinkage_profile(exponential(0.5), X1, bad)


def test_shrinkage_mass_preserved():
    for fam in (exponential(0.5), gamma_exp_mixture(0.5)):
        res = profile_mass(fam, ecp_map(X1))
        assert res.value == pytest.approx(1.0, abs=1e-2)


def test_shrinkage_prefers_strong_shrinkage_for_large_feature():
    # P(kappa > 1/2) = P(tau < 1); compare x = 3 against x = 0.1
    fam = log_cauchy(1.0)
    p3, _ = tail_probability(fam, ecp_map(LinearModelSpec(x=3.0)), 1.0)
    p01, _ = tail_probability(fam, ecp_map(LinearModelSpec(x=0.1)), 1.0)
    assert (1 - p3) > (1 - p01)


# ------------------------------------------------------------- tails

def test_tail_probability_full_support():
    p, _ = tail_probability(exponential(0.5), ecp_map(X1), 0.0)
    assert p == pytest.approx(1.0, abs=1e-3)


def test_tail_probability_far_tail_small():
    p, _ = tail_probability(exponential(0.5), ecp_map(X1), 1e6)
    assert p < 0.05


def test_tail_probability_rank_monotone_small():
    fam = gamma_exp_mixture(0.5)
    probs = []
    n = 6
    for r in range(1, n + 1):
        d = np.zeros((n, n))
        for i in range(n):
            d[i, i % r] = 1.0
        p, _ = tail_probability(fam, ecp_map(LinearModelSpec(design=d)), 1.0)
        probs.append(p)
    assert np.all(np.diff(probs) >= -1e-12)


# ------------------------------------------------------------- beta1, nonlocal

def test_beta1_zero_at_null():
    assert ecp_beta1_density(exponential(0.5), X1, 0.0) == 0.0


def test_beta1_normalizes():
    spec = LinearModelSpec(x=1.0, sigma_y=1.0, intercept_sd=1.0)
    fam = exponential(0.5)
    res = integrate_semi_infinite(
        lambda b: float(ecp_beta1_density(fam, spec, b)), 0.0)
    assert 2 * res.value == pytest.approx(1.0, abs=1e-2)


def test_beta1_symmetric():
    spec = LinearModelSpec(x=0.7, sigma_y=1.0, intercept_sd=0.5)
    fam = log_cauchy(1.0)
    b = np.linspace(0.1, 4, 17)
    assert np.allclose(ecp_beta1_density(fam, spec, b),
                       ecp_beta1_density(fam, spec, -b), rtol=1e-14)


def test_beta1_log_cauchy_has_interior_mode():
    spec = LinearModelSpec(x=1.0, sigma_y=1.0, intercept_sd=1.0)
    fam = log_cauchy(1.0)
    grid = np.linspace(0.05, 6.0, 800)
    dens = ecp_beta1_density(fam, spec, grid)
    k = int(np.argmax(dens))
    assert 0 < k < len(grid) - 1  # a genuine interior local maximum
    assert dens[k] > dens[0] and dens[k] > dens[-1]


def test_nonlocal_values():
    assert nonlocal_pdf(1.0, 0.0) == 0.0
    assert nonlocal_pdf(1.0, 1.0) == pytest.approx(
        math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-14)
    assert nonlocal_pdf(1.0, 1.0) == pytest.approx(0.24197072451914337, rel=1e-13)


def test_nonlocal_normalizes_tightly():
    for sigma in (0.5, 1.0, 2.5):
        res = integrate_semi_infinite(lambda b: nonlocal_pdf(sigma, b), 0.0)
        assert 2 * res.value == pytest.approx(1.0, abs=1e-6)


def test_nonlocal_rejects_bad_scale():
    with pytest.raises(DomainError):
        nonlocal_pdf(0.0, 1.0)


# ------------------------------------------------------------- spec validation

def test_model_spec_validation():
    with pytest.raises(StructuralError):
        LinearModelSpec()
    with pytest.raises(StructuralError):
        LinearModelSpec(x=1.0, design=np.eye(2))
    with pytest.raises(DomainError):
        LinearModelSpec(x=1.0, sigma_y=0.0)
    with pytest.raises(DomainError):
        LinearModelSpec(design=np.array([[np.inf]]))


@given(st.floats(min_value=0.05, max_value=5.0),
       st.floats(min_value=0.0, max_value=100.0))
@settings(max_examples=150, deadline=None)
def test_map_properties(x, tau):
    spec = LinearModelSpec(x=x)
    v, d = kld_linear(spec, tau)
    pv, pd = predcp_divergence_linear(spec, tau)
    assert v >= 0 and d >= 0
    assert pv >= v  # Jensen
    assert pd >= d
