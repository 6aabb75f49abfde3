import math

import numpy as np
import pytest

from predcp.errors import DegenerateMapError, DomainError, StructuralError
from predcp.kld_priors import exponential, log_cauchy
from predcp.linear import LinearModelSpec, cov_density, ecp_map, kld_linear
from predcp.mcprior import (McConfig, check_monotone, check_propriety,
                            depthwise_log_predcp, joint_density_grid,
                            linear_mc_divergence, linear_mc_divergence_samples,
                            log_cov_density, mc_divergence,
                            mc_divergence_samples, meta_modular_log_prior,
                            network_divergence_map, predcp_log_density,
                            resnet_variance_divergence,
                            resnet_variance_divergence_samples)
from predcp.linear import DivergenceMap
from predcp.network import NetworkSpec, ObservationModel, weight_state

GAUSS = ObservationModel.gaussian(1.0)
CAT3 = ObservationModel.categorical(3)


def small_net(residual=True, depth=2, width=8, out=1):
    spec = NetworkSpec(2, width, out, depth, residual=residual)
    return spec, weight_state(spec, 0)


def inputs(spec, n=16, seed=1):
    return np.random.default_rng(seed).normal(size=(n, spec.input_dim))


# ---------------------------------------------------------------- mc config

def test_mc_config_validation():
    with pytest.raises(DomainError):
        McConfig(samples=0)
    with pytest.raises(DomainError):
        McConfig(samples=3, antithetic=True)


def test_determinism_bit_identical():
    spec, w = small_net()
    X = inputs(spec)
    mc = McConfig(samples=32, master_seed=42)
    a = mc_divergence(spec, w, X, GAUSS, [1.0, 0.5], 2, mc)
    b = mc_divergence(spec, w, X, GAUSS, [1.0, 0.5], 2, mc)
    assert a == b


def test_zero_tau_gives_exactly_zero_divergence():
    for residual in (True, False):
        spec, w = small_net(residual=residual)
        X = inputs(spec)
        mc = McConfig(samples=16, master_seed=1)
        v, _ = mc_divergence(spec, w, X, GAUSS, [0.0, 1.0], 1, mc)
        assert v == 0.0


def test_layer_out_of_range():
    spec, w = small_net()
    with pytest.raises(StructuralError):
        mc_divergence(spec, w, inputs(spec), GAUSS, [1.0, 1.0], 3,
                      McConfig(samples=4))


def test_negative_tau_rejected():
    spec, w = small_net()
    with pytest.raises(DomainError):
        mc_divergence(spec, w, inputs(spec), GAUSS, [-1.0, 1.0], 1,
                      McConfig(samples=4))


# ---------------------------------------------------------------- linear MC

def test_linear_mc_matches_closed_form_within_three_se():
    spec = LinearModelSpec(x=1.0, sigma_y=1.0)
    mc = McConfig(samples=10 ** 4, master_seed=7)
    for tau in (0.25, 1.0, 4.0):
        kl_s, der_s = linear_mc_divergence_samples(spec, tau, mc)
        se = kl_s.std(ddof=1) / math.sqrt(mc.samples)
        assert abs(kl_s.mean() - tau / 2) < 3 * se
        # the derivative of the exactly-linear map carries the same draws
        assert der_s.mean() == pytest.approx(kl_s.mean() / tau, rel=1e-12)


def test_linear_predcp_log_density_example():
    # closed-form composition: log(2 e^{-1}) + log(1/2) = -1
    spec = LinearModelSpec(x=1.0, sigma_y=1.0)
    mc = McConfig(samples=4096, master_seed=3)
    v, d = linear_mc_divergence(spec, 1.0, mc)
    logdens = log_cov_density(exponential(0.5), v, d)
    assert logdens == pytest.approx(-1.0, abs=0.1)


def test_jensen_dominance_at_estimator_level():
    spec = LinearModelSpec(x=1.0, sigma_y=1.0)
    mc = McConfig(samples=2048, master_seed=11)
    for tau in np.geomspace(1e-3, 10, 9):
        kl_s, _ = linear_mc_divergence_samples(spec, tau, mc)
        se = kl_s.std(ddof=1) / math.sqrt(mc.samples)
        ecp_val, _ = kld_linear(spec, tau)
        assert kl_s.mean() >= ecp_val - 3 * se


def test_antithetic_pairing_mirrors_noise():
    from predcp.mcprior import mc_noise
    anti = McConfig(samples=4, master_seed=5, antithetic=True)
    a = mc_noise(anti, 0, 1, (3, 3))
    b = mc_noise(anti, 1, 1, (3, 3))
    assert np.array_equal(a, -b)


def test_antithetic_pairing_stays_unbiased():
    # pairing changes the draws, not the estimand; no variance claim is
    # asserted because the squared-divergence integrand is close to even in
    # the noise, where mirroring cannot help
    spec, w = small_net(depth=1)
    X = inputs(spec)
    plain = McConfig(samples=2048, master_seed=5)
    anti = McConfig(samples=2048, master_seed=5, antithetic=True)
    kp, _ = mc_divergence_samples(spec, w, X, GAUSS, [1.0], 1, plain)
    ka, _ = mc_divergence_samples(spec, w, X, GAUSS, [1.0], 1, anti)
    se = kp.std(ddof=1) / math.sqrt(kp.size)
    assert abs(kp.mean() - ka.mean()) < 4 * se


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("obs,tol", [(GAUSS, 1e-4), (CAT3, 1e-3)],
                         ids=["gaussian", "categorical"])
def test_derivative_matches_central_differences(obs, tol):
    out = 1 if obs.kind == "gaussian" else 3
    spec, w = small_net(out=out)
    X = inputs(spec)
    mc = McConfig(samples=32, master_seed=9)
    for layer, tau in ((1, 0.8), (2, 2.5)):
        taus = np.array([0.8, 2.5])
        _, der = mc_divergence(spec, w, X, obs, taus, layer, mc)
        h = 1e-6 * max(tau, 1.0)
        tp, tm = taus.copy(), taus.copy()
        tp[layer - 1] += h
        tm[layer - 1] -= h
        vp, _ = mc_divergence(spec, w, X, obs, tp, layer, mc)
        vm, _ = mc_divergence(spec, w, X, obs, tm, layer, mc)
        fd = (vp - vm) / (2 * h)
        assert der == pytest.approx(fd, rel=tol)


def test_crn_continuity_near_origin():
    spec, w = small_net()
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=2)
    v1, d1 = mc_divergence(spec, w, X, GAUSS, [1e-9, 1.0], 1, mc)
    v2, d2 = mc_divergence(spec, w, X, GAUSS, [2e-9, 1.0], 1, mc)
    assert abs(v2 - v1) < 1e-8
    assert d1 == pytest.approx(d2, rel=1e-6)
    assert d1 > 0  # derivative stays informative at the origin


# ---------------------------------------------------------------- density

def test_degenerate_dead_layer_raises():
    spec, w = small_net(residual=False)
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=4)
    with pytest.raises(DegenerateMapError) as exc:
        predcp_log_density(exponential(0.5), spec, w, X, GAUSS,
                           [0.0, 1.0], 2, mc)
    assert exc.value.layer == 2


def test_residual_skip_keeps_layer_two_alive():
    spec, w = small_net(residual=True)
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=4)
    val = predcp_log_density(exponential(0.5), spec, w, X, GAUSS,
                             [0.0, 1.0], 2, mc)
    assert math.isfinite(val)


# ---------------------------------------------------------------- depthwise

def test_depthwise_all_zero_tau_well_defined_residual():
    # skip connections keep every layer's map alive at tau = 0: each
    # divergence is exactly 0 (guarded by the eps shift) and the density
    # is finite
    spec, w = small_net(residual=True)
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=6)
    res = depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS,
                               [0.0, 0.0], mc)
    assert all(t.kappa == 0.0 for t in res.layers)
    assert math.isfinite(res.total)


def test_depthwise_all_zero_tau_plain_degenerates_at_layer_two():
    # a plain net's second layer is dead once the first is off: the same
    # configuration that is well-defined for resnets raises here
    spec, w = small_net(residual=False)
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=6)
    with pytest.raises(DegenerateMapError) as exc:
        depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS,
                             [0.0, 0.0], mc)
    assert exc.value.layer == 2


def test_depthwise_single_layer_equals_pointwise():
    spec, w = small_net(depth=1)
    X = inputs(spec)
    mc = McConfig(samples=32, master_seed=8)
    res = depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS, [0.7], mc)
    single = predcp_log_density(exponential(0.5), spec, w, X, GAUSS, [0.7], 1, mc)
    assert res.total == single


def test_depthwise_monotone_sweeps():
    spec, w = small_net(residual=True)
    X = inputs(spec)
    mc = McConfig(samples=32, master_seed=10)
    grid = np.geomspace(1e-2, 10, 7)
    k1 = [depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS,
                               [t, 1.0], mc).layers[0].kappa for t in grid]
    k2 = [depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS,
                               [1.0, t], mc).layers[1].kappa for t in grid]
    assert np.all(np.diff(k1) > 0)
    assert np.all(np.diff(k2) > 0)
    assert all(k > 0 for k in k1 + k2)


def test_depthwise_batch_mean_invariance():
    spec, w = small_net()
    X = inputs(spec, n=8)
    X2 = np.vstack([X, X])
    mc = McConfig(samples=16, master_seed=12)
    a = depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS, [1.0, 1.0], mc)
    b = depthwise_log_predcp(exponential(0.5), spec, w, X2, GAUSS, [1.0, 1.0], mc)
    for ta, tb in zip(a.layers, b.layers):
        assert ta.kappa == pytest.approx(tb.kappa, rel=1e-12)
        assert ta.dkappa_dtau == pytest.approx(tb.dkappa_dtau, rel=1e-12)


# ---------------------------------------------------------------- joint grid

def test_joint_grid_single_cell_matches_depthwise():
    spec, w = small_net()
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=14)
    res = joint_density_grid(exponential(0.5), spec, w, X, GAUSS,
                             [0.8], [1.2], mc)
    direct = depthwise_log_predcp(exponential(0.5), spec, w, X, GAUSS,
                                  [0.8, 1.2], mc)
    assert res.density[0, 0] == pytest.approx(math.exp(direct.total), rel=1e-12)
    assert not res.degenerate[0, 0]


def test_joint_grid_degeneracy_masks():
    grid = np.array([0.0, 0.5, 1.0])
    X_seed = 15
    mc = McConfig(samples=16, master_seed=16)
    spec_p, w_p = small_net(residual=False)
    res_p = joint_density_grid(exponential(0.5), spec_p, w_p,
                               inputs(spec_p, seed=X_seed), GAUSS, grid, grid, mc)
    spec_r, w_r = small_net(residual=True)
    res_r = joint_density_grid(exponential(0.5), spec_r, w_r,
                               inputs(spec_r, seed=X_seed), GAUSS, grid, grid, mc)
    # plain net: the tau1 = 0 row kills layer 2 (masked); residual never
    assert np.all(res_p.degenerate[0, :])
    assert not np.any(res_p.degenerate[1:, :])
    assert not np.any(res_r.degenerate)
    assert np.all(res_p.density[0, :] == 0.0)
    # residual L-shape: both axes carry positive density away from origin
    assert res_r.density[0, 2] > 0
    assert res_r.density[2, 0] > 0


def test_joint_grid_worker_invariance():
    spec, w = small_net()
    X = inputs(spec)
    mc = McConfig(samples=8, master_seed=17)
    grid = np.array([0.3, 1.0, 2.0])
    a = joint_density_grid(exponential(0.5), spec, w, X, GAUSS, grid, grid, mc,
                           workers=1)
    b = joint_density_grid(exponential(0.5), spec, w, X, GAUSS, grid, grid, mc,
                           workers=4)
    assert np.array_equal(a.density, b.density)
    assert np.array_equal(a.degenerate, b.degenerate)


def test_joint_grid_requires_depth_two():
    spec, w = small_net(depth=3)
    with pytest.raises(StructuralError):
        joint_density_grid(exponential(0.5), spec, w, inputs(spec), GAUSS,
                           [1.0], [1.0], McConfig(samples=4))


# ---------------------------------------------------------------- variance id

def test_variance_divergence_zero_tau():
    spec, w = small_net(depth=1)
    X = inputs(spec)
    v, d = resnet_variance_divergence(spec, w, X, 0.0, McConfig(samples=64))
    assert v == 0.0
    assert d > 0


def test_variance_divergence_exact_linearity():
    spec, w = small_net(depth=1)
    X = inputs(spec)
    mc = McConfig(samples=128, master_seed=19)
    v1, _ = resnet_variance_divergence(spec, w, X, 0.7, mc)
    v2, _ = resnet_variance_divergence(spec, w, X, 1.4, mc)
    assert v2 == 2.0 * v1


def test_variance_divergence_needs_residual():
    spec, w = small_net(depth=1, residual=False)
    with pytest.raises(StructuralError):
        resnet_variance_divergence(spec, w, inputs(spec), 1.0, McConfig(samples=4))


def test_variance_divergence_agrees_with_mc_divergence():
    spec, w = small_net(depth=1)
    X = inputs(spec)
    tau = 0.7
    mc = McConfig(samples=4000, master_seed=20)
    kl_s, _ = mc_divergence_samples(spec, w, X, GAUSS, [tau], 1, mc)
    c_s = resnet_variance_divergence_samples(spec, w, X, tau, mc)
    se = math.hypot(kl_s.std(ddof=1) / math.sqrt(kl_s.size),
                    tau * c_s.std(ddof=1) / math.sqrt(c_s.size))
    assert abs(kl_s.mean() - tau * c_s.mean()) < 3 * se


# ---------------------------------------------------------------- meta prior

def test_meta_all_zero_tau():
    spec, w = small_net(out=3)
    tasks = np.random.default_rng(21).normal(size=(3, 6, spec.input_dim))
    mc = McConfig(samples=8, master_seed=22)
    res = meta_modular_log_prior(exponential(0.5), spec, w, tasks,
                                 [0.0, 0.0], mc, CAT3)
    assert all(t.kappa == 0.0 for t in res.layers)
    assert math.isfinite(res.total)


def test_meta_single_module_matches_pointwise_density():
    # with one module and nonzero global parameters, the modular prior and
    # the layer prior are structurally the same computation
    spec = NetworkSpec(2, 6, 3, 1, residual=False)
    w = weight_state(spec, 23)
    phi = np.random.default_rng(24).normal(size=(6, 6)) * 0.5
    w.phi[0][:] = phi
    w.sigma = 1.0  # literal N(phi, tau I)
    X = inputs(spec, n=10, seed=25)
    mc = McConfig(samples=16, master_seed=26)
    meta = meta_modular_log_prior(exponential(0.5), spec, w, [X], [0.9], mc, CAT3)
    point = predcp_log_density(exponential(0.5), spec, w, X, CAT3, [0.9], 1, mc)
    assert meta.total == pytest.approx(point, rel=1e-12)


def test_meta_derivative_matches_fd():
    spec = NetworkSpec(2, 6, 3, 2, residual=True)
    w = weight_state(spec, 27)
    for m in range(2):
        w.phi[m][:] = np.random.default_rng(30 + m).normal(size=(6, 6)) * 0.3
    tasks = np.random.default_rng(28).normal(size=(2, 5, 2))
    mc = McConfig(samples=16, master_seed=29)

    def kl_of(m, taus):
        return meta_modular_log_prior(exponential(0.5), spec, w, tasks,
                                      taus, mc, CAT3).layers[m - 1]

    taus = [0.6, 1.3]
    for m in (1, 2):
        term = kl_of(m, taus)
        h = 1e-6
        up, dn = list(taus), list(taus)
        up[m - 1] += h
        dn[m - 1] -= h
        fd = (kl_of(m, up).kappa - kl_of(m, dn).kappa) / (2 * h)
        assert term.dkappa_dtau == pytest.approx(fd, rel=1e-3)


def test_meta_empty_tasks_rejected():
    spec, w = small_net(out=3)
    with pytest.raises(StructuralError):
        meta_modular_log_prior(exponential(0.5), spec, w, [], [1.0, 1.0],
                               McConfig(samples=4), CAT3)


# ---------------------------------------------------------------- checks

def test_check_monotone_linear_map_passes():
    rep = check_monotone(ecp_map(LinearModelSpec(x=1.0)),
                         np.geomspace(1e-6, 1e4, 40))
    assert rep.passed and rep.first_violation is None


def test_check_monotone_detects_constant_map():
    spec, w = small_net(residual=False)
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=31)
    dmap = network_divergence_map(spec, w, X, GAUSS, [0.0, 1.0], 2, mc)
    rep = check_monotone(dmap, np.geomspace(1e-4, 1e2, 10))
    assert not rep.passed
    assert rep.first_violation is not None


def test_check_monotone_grid_validation():
    with pytest.raises(DomainError):
        check_monotone(ecp_map(LinearModelSpec(x=1.0)), [1.0, 0.5])


def test_check_propriety_linear():
    rep = check_propriety(exponential(0.5), ecp_map(LinearModelSpec(x=1.0)))
    assert abs(rep.integral - 1.0) < 0.02


def test_check_propriety_flags_broken_volume_term():
    base = ecp_map(LinearModelSpec(x=1.0))
    broken = DivergenceMap(value=base.value,
                           derivative=lambda t: 0.5 * base.derivative(t))
    rep = check_propriety(exponential(0.5), broken)
    assert rep.integral == pytest.approx(0.5, abs=0.02)


def test_network_map_crn_smoothness():
    spec, w = small_net()
    X = inputs(spec)
    mc = McConfig(samples=16, master_seed=33)
    dmap = network_divergence_map(spec, w, X, GAUSS, [1.0, 1.0], 2, mc)
    vals = [dmap.value(t) for t in (1.0, 1.0 + 1e-9)]
    assert vals[1] - vals[0] < 1e-8
    assert vals[1] > vals[0]  # still strictly increasing under CRN
