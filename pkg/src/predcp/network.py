"""Minimal ReLU network: truncated forward passes and predictive divergences.

Architecture: h0 = X W_in, then `depth` hidden blocks on the D_h-wide state
(residual: h <- h + relu(h W); plain: h <- relu(h W)), and a linear read-out
F = h W_out.  There are no biases and no normalization layers.  Truncated
("short-circuited") evaluation at layer l multiplies the layer-l hidden
units directly with W_out; l = 0 reads out h0.

Weights follow the non-centered form W_l = Phi_l + sqrt(tau_l * Sigma) Xi_l
with standardized noise Xi_l, which exposes tau_l as an explicit scalar
input.  Sigma defaults to 1/D_h (fan-in scaling) so per-layer divergences
are comparable across widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DomainError, StructuralError


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_dim: int
    output_dim: int
    depth: int
    residual: bool = True

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise StructuralError(f"{name} must be >= 1")
        if self.depth < 0:
            raise StructuralError("depth must be >= 0")

    def to_json_dict(self):
        return {"input_dim": self.input_dim, "hidden_dim": self.hidden_dim,
                "output_dim": self.output_dim, "depth": self.depth,
                "residual": self.residual}

    @classmethod
    def from_json_dict(cls, obj):
        return cls(input_dim=obj["input_dim"], hidden_dim=obj["hidden_dim"],
                   output_dim=obj["output_dim"], depth=obj["depth"],
                   residual=bool(obj.get("residual", True)))


@dataclass(frozen=True)
class ObservationModel:
    kind: str  # "gaussian" | "categorical"
    sigma_y: float = 1.0
    classes: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "categorical"):
            raise DomainError(f"unknown observation model {self.kind!r}")
        if self.kind == "gaussian" and not (self.sigma_y > 0):
            raise DomainError("sigma_y must be > 0")
        if self.kind == "categorical" and (self.classes is None or self.classes < 2):
            raise DomainError("categorical model needs classes >= 2")

    @classmethod
    def gaussian(cls, sigma_y=1.0):
        return cls("gaussian", sigma_y=sigma_y)

    @classmethod
    def categorical(cls, classes):
        return cls("categorical", classes=classes)


@dataclass
class WeightState:
    """Fixed input/output weights plus per-layer (Phi, Xi, Sigma)."""

    w_in: np.ndarray
    w_out: np.ndarray
    phi: List[np.ndarray]
    xi: List[np.ndarray]
    sigma: float  # entrywise variance scale of the hidden blocks

    def check_shapes(self, spec: NetworkSpec):
        dh = spec.hidden_dim
        if self.w_in.shape != (spec.input_dim, dh):
            raise StructuralError(f"w_in shape {self.w_in.shape} != {(spec.input_dim, dh)}")
        if self.w_out.shape != (dh, spec.output_dim):
            raise StructuralError(f"w_out shape {self.w_out.shape} != {(dh, spec.output_dim)}")
        if len(self.phi) != spec.depth or len(self.xi) != spec.depth:
            raise StructuralError("phi/xi must have one entry per hidden block")
        for m in (*self.phi, *self.xi):
            if m.shape != (dh, dh):
                raise StructuralError(f"hidden block shape {m.shape} != {(dh, dh)}")


_WEIGHT_STREAM = 87  # spawn key separating weight-state draws from MC noise


def weight_state(spec: NetworkSpec, seed) -> WeightState:
    """Reproducible state from (spec, seed): W_in, W_out ~ N(0, I/fan-in),
    zero prior means, standardized per-layer noise, Sigma = 1/D_h."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_WEIGHT_STREAM,)))
    dh = spec.hidden_dim
    w_in = rng.standard_normal((spec.input_dim, dh)) / math.sqrt(spec.input_dim)
    w_out = rng.standard_normal((dh, spec.output_dim)) / math.sqrt(dh)
    phi = [np.zeros((dh, dh)) for _ in range(spec.depth)]
    xi = [rng.standard_normal((dh, dh)) for _ in range(spec.depth)]
    return WeightState(w_in=w_in, w_out=w_out, phi=phi, xi=xi, sigma=1.0 / dh)


def realize_weights(phi, xi, sigma, tau_vec):
    """W_l = Phi_l + sqrt(tau_l) * sqrt(Sigma) * Xi_l, elementwise.

    tau_l = 0 reproduces Phi_l bit-exactly.
    """
    tau_vec = np.asarray(tau_vec, dtype=float)
    if tau_vec.shape != (len(phi),):
        raise StructuralError(f"need one tau per layer ({len(phi)}), got {tau_vec.shape}")
    if np.any(tau_vec < 0):
        raise DomainError("tau must be >= 0")
    out = []
    for p, z, t in zip(phi, xi, tau_vec):
        if t == 0.0:
            out.append(p.copy())
        else:
            out.append(p + math.sqrt(t * sigma) * z)
    return out


def relu(z):
    return np.maximum(z, 0.0)


def block(h, w, residual):
    """One hidden block; h may carry leading batch dimensions."""
    a = relu(h @ w)
    return h + a if residual else a


def block_dual(h, h_dot, w, w_dot, residual):
    """Block with first-order sensitivity in a scalar s, given (W, dW/ds).

    The ReLU gate uses the right-derivative at exactly zero pre-activation
    (a measure-zero event for live layers).
    """
    z = h @ w
    z_dot = h_dot @ w + h @ w_dot
    a = relu(z)
    a_dot = np.where(z >= 0, z_dot, 0.0)
    if residual:
        return h + a, h_dot + a_dot
    return a, a_dot


def forward(spec: NetworkSpec, weights: WeightState, X, use_layers,
            tau_vec=None, blocks=None):
    """Truncated linear outputs: through W_in, hidden blocks 1..use_layers,
    then the layer-`use_layers` hidden units times W_out.

    Concrete block weights are taken from `blocks` if given, otherwise
    realized from (phi, xi, sigma, tau_vec); tau_vec defaults to all-ones.
    """
    if not 0 <= use_layers <= spec.depth:
        raise StructuralError(f"use_layers must be in [0, {spec.depth}], got {use_layers}")
    weights.check_shapes(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.input_dim:
        raise StructuralError(f"X has {X.shape[1]} columns, expected {spec.input_dim}")
    if blocks is None:
        if tau_vec is None:
            tau_vec = np.ones(spec.depth)
        blocks = realize_weights(weights.phi, weights.xi, weights.sigma, tau_vec)
    h = X @ weights.w_in
    for l in range(use_layers):
        h = block(h, blocks[l], spec.residual)
    return h @ weights.w_out


def softmax(logits):
    logits = np.asarray(logits, dtype=float)
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_scaled(logits, tau):
    """softmax(tau * logits): the temperature map whose min/max coordinates
    are strictly monotone in tau (uniform at tau = 0, one-hot as tau -> inf)."""
    if tau < 0:
        raise DomainError("tau must be >= 0")
    return softmax(np.asarray(logits, dtype=float) * tau)


def log_softmax(logits):
    logits = np.asarray(logits, dtype=float)
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def obs_kld(model: ObservationModel, f_plus, f_zero):
    """Per-row divergence between the predictive distributions at two
    linear outputs.  Gaussian: ||f+ - f0||^2 / (2 sigma_y^2).  Categorical:
    rows are logits; KL between the softmax distributions.

    Accepts single rows or (N, D) batches; identical rows give exactly 0.
    """
    f_plus = np.asarray(f_plus, dtype=float)
    f_zero = np.asarray(f_zero, dtype=float)
    if f_plus.shape != f_zero.shape:
        raise StructuralError("rows must have identical shape")
    if model.kind == "gaussian":
        out = np.sum((f_plus - f_zero) ** 2, axis=-1) / (2.0 * model.sigma_y ** 2)
    else:
        lp = log_softmax(f_plus)
        lq = log_softmax(f_zero)
        out = np.sum(np.exp(lp) * (lp - lq), axis=-1)
        out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def obs_kld_dual(model: ObservationModel, f_plus, f_plus_dot, f_zero):
    """(kld, d kld/ds) rows given the extended output's sensitivity.

    The base output is constant in s.  Categorical gradient:
    d KL / d f_k = p_k ((log p_k - log q_k) - KL).
    """
    if model.kind == "gaussian":
        val = np.sum((f_plus - f_zero) ** 2, axis=-1) / (2.0 * model.sigma_y ** 2)
        dot = np.sum((f_plus - f_zero) * f_plus_dot, axis=-1) / model.sigma_y ** 2
        return val, dot
    lp = log_softmax(f_plus)
    lq = log_softmax(f_zero)
    p = np.exp(lp)
    val = np.sum(p * (lp - lq), axis=-1)
    grad = p * ((lp - lq) - val[..., None])
    dot = np.sum(grad * f_plus_dot, axis=-1)
    return np.maximum(val, 0.0), dot
