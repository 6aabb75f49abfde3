"""Monte-Carlo divergence maps with exact scalar sensitivities.

The expected predictive divergence for a target layer is estimated with S
non-centered weight samples; its derivative w.r.t. the layer's scale tau is
propagated exactly through the same forward pass as a first-order
sensitivity in s = sqrt(tau) (dual values), then converted by
d/dtau = (d/ds) / (2 s).  Only a scalar's derivative is ever needed, so no
reverse-mode machinery is involved.

Semantics of the base model for target layer l: the same network with the
layer's weights at their prior mean Phi_l, evaluated *through* the layer.
For residual nets with Phi = 0 this is identical to reading out the
previous layer's hidden units (the cached-predictions recursion); for plain
nets the zero-weight layer produces zero outputs, which keeps the
divergence map anchored at D(0) = 0 and strictly increasing — a plain
net's layer map degenerates to a constant exactly when its input units are
dead (all-zero), which is how "layer 2 cannot act unless layer 1 does"
shows up numerically.

Noise is derived per (master seed, sample index, layer index) with
counter-based streams, so estimates are deterministic and independent of
evaluation order, and sweeps in tau reuse identical draws (common random
numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateMapError, DomainError, StructuralError
from .kld_priors import KldPriorSpec, log_pdf
from .linear import DivergenceMap, EPS_KL, LinearModelSpec, cov_density
from .network import (NetworkSpec, ObservationModel, WeightState, block,
                      block_dual, obs_kld, obs_kld_dual)
from .quadrature import QuadResult, integrate_semi_infinite

#: Derivatives with magnitude below this are treated as a degenerate map.
DEGENERACY_EPS = 1e-14

#: Floor on s = sqrt(tau) used for the sensitivity pass near the origin.
S_FLOOR = 1e-6

_MC_STREAM = 11   # spawn-key prefix for divergence-map noise
_VAR_STREAM = 13  # separate prefix so the variance estimator is independent


@dataclass(frozen=True)
class McConfig:
    """Sample count, master seed, and optional antithetic pairing.

    Estimates are a pure function of (config, inputs); per-sample noise is
    derived from (master_seed, sample index, layer index) irrespective of
    scheduling.  Antithetic pairing evaluates (Xi, -Xi) couples and is off
    by default, matching the plain estimator.
    """

    samples: int = 64
    master_seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError("samples must be >= 1")
        if self.antithetic and self.samples % 2:
            raise DomainError("antithetic pairing needs an even sample count")


def mc_noise(mc: McConfig, sample_index: int, layer_index: int, shape,
             stream: int = _MC_STREAM):
    if mc.antithetic:
        base, sign = sample_index // 2, (1.0 if sample_index % 2 == 0 else -1.0)
    else:
        base, sign = sample_index, 1.0
    ss = np.random.SeedSequence(mc.master_seed, spawn_key=(stream, base, layer_index))
    draw = np.random.Generator(np.random.Philox(ss)).standard_normal(shape)
    return sign * draw


def _layer_noise_stack(mc: McConfig, layer_index: int, shape, stream=_MC_STREAM):
    return np.stack([mc_noise(mc, s, layer_index, shape, stream)
                     for s in range(mc.samples)])


def _check_layer(spec: NetworkSpec, layer: int):
    if not 1 <= layer <= spec.depth:
        raise StructuralError(f"target layer must be in [1, {spec.depth}], got {layer}")


def _tau_vec(spec: NetworkSpec, tau_vec) -> np.ndarray:
    t = np.asarray(tau_vec, dtype=float)
    if t.shape != (spec.depth,):
        raise StructuralError(f"need {spec.depth} tau values, got shape {t.shape}")
    if np.any(t < 0):
        raise DomainError("tau must be >= 0")
    return t


def _propagate_sampled(spec, weights, mc, taus, h, upto):
    """Advance the per-sample hidden states through blocks 1..upto."""
    dh = spec.hidden_dim
    for j in range(1, upto + 1):
        xi = _layer_noise_stack(mc, j, (dh, dh))
        w = weights.phi[j - 1] + math.sqrt(taus[j - 1] * weights.sigma) * xi
        h = block(h, w, spec.residual)
    return h


def _layer_kl_terms(spec, weights, obs, mc, h, layer, tau_l, xi=None):
    """Per-sample divergence and d/ds terms for one target layer.

    h: (S, N, D_h) hidden states entering the layer (constant in tau_l).
    Returns (kl_rows_mean, dkl_ds_rows_mean, s_eff, h_extended_exact).
    """
    dh = spec.hidden_dim
    if xi is None:
        xi = _layer_noise_stack(mc, layer, (dh, dh))
    w_dot = math.sqrt(weights.sigma) * xi
    s_exact = math.sqrt(tau_l)
    s_eff = max(s_exact, S_FLOOR)
    phi = weights.phi[layer - 1]

    h_base = block(h, phi, spec.residual)
    f_base = h_base @ weights.w_out

    h_dual, h_dual_dot = block_dual(h, np.zeros_like(h), phi + s_eff * w_dot,
                                    w_dot, spec.residual)
    f_dual = h_dual @ weights.w_out
    f_dual_dot = h_dual_dot @ weights.w_out

    if s_exact == s_eff:
        h_exact, f_exact = h_dual, f_dual
    else:
        h_exact = block(h, phi + s_exact * w_dot, spec.residual)
        f_exact = h_exact @ weights.w_out

    val_rows = obs_kld(obs, f_exact, f_base)            # (S, N)
    _, dot_rows = obs_kld_dual(obs, f_dual, f_dual_dot, f_base)
    return val_rows.mean(axis=1), dot_rows.mean(axis=1), s_eff, h_exact


def mc_divergence_samples(spec: NetworkSpec, weights: WeightState, X,
                          obs: ObservationModel, tau_vec, layer: int,
                          mc: McConfig):
    """Per-sample (divergence, d/dtau) arrays for the target layer."""
    _check_layer(spec, layer)
    taus = _tau_vec(spec, tau_vec)
    weights.check_shapes(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h0 = X @ weights.w_in
    h = np.broadcast_to(h0, (mc.samples,) + h0.shape)
    h = _propagate_sampled(spec, weights, mc, taus, h, layer - 1)
    kl_s, dot_s, s_eff, _ = _layer_kl_terms(spec, weights, obs, mc, h, layer,
                                            taus[layer - 1])
    return kl_s, dot_s / (2.0 * s_eff)


def mc_divergence(spec: NetworkSpec, weights: WeightState, X,
                  obs: ObservationModel, tau_vec, layer: int,
                  mc: McConfig) -> Tuple[float, float]:
    """Batch-mean MC estimate of the layer divergence and its tau-derivative."""
    kl_s, der_s = mc_divergence_samples(spec, weights, X, obs, tau_vec, layer, mc)
    return float(kl_s.mean()), float(der_s.mean())


def linear_mc_divergence_samples(spec: LinearModelSpec, tau, mc: McConfig):
    """MC estimator of the linear-Gaussian predictive divergence.

    The degenerate "network" with identity features and a single weight:
    beta = sqrt(tau) * xi, predictions x * beta against the base at 0.
    Validates the estimator machinery against the closed form
    x^2 tau / (2 sigma_y^2).
    """
    if spec.x is None:
        raise StructuralError("linear MC estimator is defined for the scalar model")
    if tau < 0:
        raise DomainError("tau must be >= 0")
    xi = np.array([mc_noise(mc, s, 1, ()) for s in range(mc.samples)])
    s_exact = math.sqrt(tau)
    s_eff = max(s_exact, S_FLOOR)
    f_exact = spec.x * (s_exact * xi)
    f_dual = spec.x * (s_eff * xi)
    f_dot = spec.x * xi
    s2 = spec.sigma_y ** 2
    kl_s = f_exact ** 2 / (2.0 * s2)
    dot_s = f_dual * f_dot / s2
    return kl_s, dot_s / (2.0 * s_eff)


def linear_mc_divergence(spec: LinearModelSpec, tau, mc: McConfig):
    kl_s, der_s = linear_mc_divergence_samples(spec, tau, mc)
    return float(kl_s.mean()), float(der_s.mean())


def log_cov_density(pi_kl: KldPriorSpec, value: float, derivative: float,
                    layer: Optional[int] = None) -> float:
    """log pi_KL(value + eps) + log|derivative|, with degeneracy guarded."""
    if abs(derivative) < DEGENERACY_EPS:
        raise DegenerateMapError(
            f"divergence map derivative {derivative!r} is numerically zero"
            + (f" at layer {layer}" if layer else ""), layer=layer)
    return float(log_pdf(pi_kl, value + EPS_KL)) + math.log(abs(derivative))


def predcp_log_density(pi_kl: KldPriorSpec, spec: NetworkSpec,
                       weights: WeightState, X, obs: ObservationModel,
                       tau_vec, layer: int, mc: McConfig) -> float:
    """Log density contribution of one layer's scale under the transformed prior."""
    value, derivative = mc_divergence(spec, weights, X, obs, tau_vec, layer, mc)
    return log_cov_density(pi_kl, value, derivative, layer=layer)


@dataclass(frozen=True)
class LayerEval:
    layer: int
    kappa: float
    dkappa_dtau: float
    log_density: float

    def to_json_dict(self):
        return {"layer": self.layer, "kappa": self.kappa,
                "dkappa_dtau": self.dkappa_dtau, "logdensity": self.log_density}


@dataclass(frozen=True)
class PriorEvalResult:
    layers: Tuple[LayerEval, ...]

    @property
    def total(self) -> float:
        return sum(t.log_density for t in self.layers)


def depthwise_log_predcp(pi_kl: KldPriorSpec, spec: NetworkSpec,
                         weights: WeightState, X, obs: ObservationModel,
                         tau_vec, mc: McConfig) -> PriorEvalResult:
    """Bottom-up evaluation over all layers with cached hidden states.

    One pass: the extended states of layer l (at its exact scale) are
    retained and serve the base evaluation of layer l+1, so the whole prior
    costs L forward propagations of the S-sample stack.
    """
    taus = _tau_vec(spec, tau_vec)
    weights.check_shapes(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h0 = X @ weights.w_in
    h = np.broadcast_to(h0, (mc.samples,) + h0.shape)
    terms: List[LayerEval] = []
    for layer in range(1, spec.depth + 1):
        kl_s, dot_s, s_eff, h = _layer_kl_terms(spec, weights, obs, mc, h,
                                                layer, taus[layer - 1])
        kappa = float(kl_s.mean())
        der = float(dot_s.mean()) / (2.0 * s_eff)
        log_term = log_cov_density(pi_kl, kappa, der, layer=layer)
        terms.append(LayerEval(layer, kappa, der, log_term))
    return PriorEvalResult(tuple(terms))


@dataclass(frozen=True)
class JointGridResult:
    tau1: np.ndarray
    tau2: np.ndarray
    density: np.ndarray     # (len(tau1), len(tau2))
    degenerate: np.ndarray  # bool mask, same shape


def joint_density_grid(pi_kl: KldPriorSpec, spec: NetworkSpec,
                       weights: WeightState, X, obs: ObservationModel,
                       tau1_grid, tau2_grid, mc: McConfig,
                       workers: int = 1) -> JointGridResult:
    """exp(depth-wise log prior) over a (tau1, tau2) grid for an L=2 net.

    Cells whose map degenerates (dead second layer of a plain net) carry
    density 0 and a raised mask bit instead of -inf surprises.
    """
    if spec.depth != 2:
        raise StructuralError("joint grid is defined for depth-2 networks")
    t1 = np.asarray(tau1_grid, dtype=float)
    t2 = np.asarray(tau2_grid, dtype=float)
    density = np.zeros((t1.size, t2.size))
    degenerate = np.zeros((t1.size, t2.size), dtype=bool)

    def cell(idx):
        i, j = idx
        try:
            res = depthwise_log_predcp(pi_kl, spec, weights, X, obs,
                                       (t1[i], t2[j]), mc)
            return i, j, math.exp(res.total), False
        except DegenerateMapError:
            return i, j, 0.0, True

    indices = [(i, j) for i in range(t1.size) for j in range(t2.size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, indices))
    else:
        results = [cell(idx) for idx in indices]
    for i, j, d, bad in results:
        density[i, j] = d
        degenerate[i, j] = bad
    return JointGridResult(t1, t2, density, degenerate)


def resnet_variance_divergence_samples(spec: NetworkSpec, weights: WeightState,
                                       X, tau_l, mc: McConfig, layer: int = 1,
                                       tau_vec=None, sigma_y: float = 1.0):
    """Per-sample terms of the variance-identity estimator.

    For a residual net with Gaussian noise, the layer divergence equals
    tau_l/(2 sigma_y^2) times the mean predictive variance contributed by
    the layer's transformation; positive homogeneity of the activation
    pulls sqrt(tau_l) out of the forward pass, so tau never enters the
    sampled term.  Uses a noise stream disjoint from mc_divergence's, which
    makes the two estimators independent cross-checks of each other.
    """
    if not spec.residual:
        raise StructuralError("the variance identity holds for residual nets")
    if tau_l < 0:
        raise DomainError("tau must be >= 0")
    _check_layer(spec, layer)
    weights.check_shapes(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dh = spec.hidden_dim
    if tau_vec is None:
        taus = np.zeros(spec.depth)
    else:
        taus = _tau_vec(spec, tau_vec)
    h0 = X @ weights.w_in
    h = np.broadcast_to(h0, (mc.samples,) + h0.shape)
    h = _propagate_sampled(spec, weights, mc, taus, h, layer - 1)
    xi = _layer_noise_stack(mc, layer, (dh, dh), stream=_VAR_STREAM)
    w_tilde = math.sqrt(weights.sigma) * xi
    v = np.maximum(h @ w_tilde, 0.0) @ weights.w_out     # (S, N, out)
    sq = (v ** 2).sum(axis=-1).mean(axis=1)              # (S,)
    return sq / (2.0 * sigma_y ** 2)


def resnet_variance_divergence(spec: NetworkSpec, weights: WeightState, X,
                               tau_l, mc: McConfig, layer: int = 1,
                               tau_vec=None, sigma_y: float = 1.0):
    """(value, derivative): value = tau_l * C with the MC variance constant C."""
    c_s = resnet_variance_divergence_samples(spec, weights, X, tau_l, mc,
                                             layer=layer, tau_vec=tau_vec,
                                             sigma_y=sigma_y)
    c = float(c_s.mean())
    return tau_l * c, c


def meta_modular_log_prior(pi_kl: KldPriorSpec, spec: NetworkSpec,
                           weights: WeightState, task_inputs, tau_vec,
                           mc: McConfig,
                           obs: Optional[ObservationModel] = None) -> PriorEvalResult:
    """Modular prior over per-module adaptation scales.

    The base predictions use the global parameters (every block at Phi);
    for module m, parameters theta_m = Phi_m + sqrt(tau_m * Sigma) Xi are
    sampled with the module swapped in and all other blocks global.  The
    per-module divergence averages over every input row of every task in
    the batch, and each module contributes
    log pi_KL(KL_m) + log|d KL_m / d tau_m|.

    Set the weight state's sigma to 1 for the literal N(phi, tau I) form.
    """
    taus = _tau_vec(spec, tau_vec)
    weights.check_shapes(spec)
    if obs is None:
        obs = ObservationModel.categorical(max(spec.output_dim, 2))
    rows = _stack_task_inputs(spec, task_inputs)
    dh = spec.hidden_dim
    h0 = rows @ weights.w_in

    # global (base) forward: every module at its prior mean; broadcast over
    # the sample axis for the row-wise divergence
    h_base = h0
    for m in range(spec.depth):
        h_base = block(h_base, weights.phi[m], spec.residual)
    f_base = np.broadcast_to(h_base @ weights.w_out,
                             (mc.samples, h0.shape[0], spec.output_dim))

    terms: List[LayerEval] = []
    zeros = np.zeros((mc.samples,) + h0.shape)
    for m in range(1, spec.depth + 1):
        xi = _layer_noise_stack(mc, m, (dh, dh))
        w_dot = math.sqrt(weights.sigma) * xi
        s_exact = math.sqrt(taus[m - 1])
        s_eff = max(s_exact, S_FLOOR)

        def fwd(s, with_dual):
            h = np.broadcast_to(h0, (mc.samples,) + h0.shape)
            h_dot = zeros
            for j in range(1, spec.depth + 1):
                if j == m:
                    w = weights.phi[j - 1] + s * w_dot
                    h, h_dot = block_dual(h, h_dot, w, w_dot, spec.residual)
                else:
                    w = weights.phi[j - 1]
                    if with_dual:
                        h, h_dot = block_dual(h, h_dot, w, np.zeros_like(w),
                                              spec.residual)
                    else:
                        h = block(h, w, spec.residual)
            return h, h_dot

        h_dual, h_dual_dot = fwd(s_eff, True)
        f_dual = h_dual @ weights.w_out
        f_dual_dot = h_dual_dot @ weights.w_out
        if s_exact == s_eff:
            f_exact = f_dual
        else:
            f_exact = fwd(s_exact, False)[0] @ weights.w_out
        val_rows = obs_kld(obs, f_exact, f_base)
        _, dot_rows = obs_kld_dual(obs, f_dual, f_dual_dot, f_base)
        kl_m = float(val_rows.mean())
        der = float(dot_rows.mean()) / (2.0 * s_eff)
        log_term = log_cov_density(pi_kl, kl_m, der, layer=m)
        terms.append(LayerEval(m, kl_m, der, log_term))
    return PriorEvalResult(tuple(terms))


def _stack_task_inputs(spec, task_inputs):
    if isinstance(task_inputs, np.ndarray) and task_inputs.ndim == 3:
        mats = list(task_inputs)
    else:
        mats = [np.atleast_2d(np.asarray(t, dtype=float)) for t in task_inputs]
    if not mats or any(m.size == 0 for m in mats):
        raise StructuralError("task batch must contain at least one non-empty task")
    for m in mats:
        if m.shape[1] != spec.input_dim:
            raise StructuralError("task inputs must have input_dim columns")
    return np.vstack(mats)


def network_divergence_map(spec: NetworkSpec, weights: WeightState, X,
                           obs: ObservationModel, tau_vec, layer: int,
                           mc: McConfig) -> DivergenceMap:
    """The layer's divergence map as closures over scalar tau.

    The per-sample hidden states entering the layer and the layer's noise
    stack are precomputed once: all evaluations share identical draws
    (common random numbers), so the map is smooth in tau and safe for root
    finding and quadrature, and each evaluation costs one block pass.
    """
    _check_layer(spec, layer)
    taus = _tau_vec(spec, tau_vec)
    weights.check_shapes(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h0 = X @ weights.w_in
    h = np.broadcast_to(h0, (mc.samples,) + h0.shape)
    h = _propagate_sampled(spec, weights, mc, taus, h, layer - 1)
    xi = _layer_noise_stack(mc, layer, (spec.hidden_dim,) * 2)
    memo = {}

    def at(tau):
        t = float(tau)
        if t not in memo:
            kl_s, dot_s, s_eff, _ = _layer_kl_terms(spec, weights, obs, mc, h,
                                                    layer, t, xi=xi)
            memo[t] = (float(kl_s.mean()),
                       float(dot_s.mean()) / (2.0 * s_eff))
        return memo[t]

    return DivergenceMap(value=lambda t: at(t)[0], derivative=lambda t: at(t)[1])


@dataclass(frozen=True)
class MonotoneReport:
    passed: bool
    n_points: int
    first_violation: Optional[Tuple[int, float, str]] = None


def check_monotone(dmap: DivergenceMap, tau_grid) -> MonotoneReport:
    """Verify strictly increasing values and strictly positive derivatives."""
    grid = np.asarray(tau_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("tau grid must be 1-D, ascending, with >= 2 points")
    prev = None
    for i, t in enumerate(grid):
        v = float(dmap.value(t))
        d = float(dmap.derivative(t))
        if d <= 0:
            return MonotoneReport(False, grid.size,
                                  (i, float(t), f"derivative {d:.3e} <= 0"))
        if prev is not None and v <= prev:
            return MonotoneReport(False, grid.size,
                                  (i, float(t), f"value not increasing ({v:.6e} <= {prev:.6e})"))
        prev = v
    return MonotoneReport(True, grid.size)


@dataclass(frozen=True)
class ProprietyReport:
    integral: float
    error_estimate: float
    converged: bool
    panels: int


def check_propriety(pi_kl: KldPriorSpec, dmap: DivergenceMap) -> ProprietyReport:
    """Total transformed-prior mass on (0, inf); callers verify monotonicity
    first (check_monotone) since the change of variables assumes it."""
    res: QuadResult = integrate_semi_infinite(
        lambda t: float(cov_density(pi_kl, dmap, t)), 0.0)
    return ProprietyReport(res.value, res.error, res.converged, res.panels)
