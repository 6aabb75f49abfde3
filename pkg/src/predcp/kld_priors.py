"""Density families placed on the divergence value.

All densities live on the nonnegative half-line.  Parameterizations (the
single registry; the CLI and JSON configs use these exact keyword names):

    exponential         scale            e**(-x/scale) / scale
    gamma               shape, scale     x**(shape-1) e**(-x/scale) / (Gamma(shape) scale**shape)
    log_cauchy          scale            (1/(pi x)) * scale / (log(x)**2 + scale**2)
    half_cauchy         scale            (2/(pi scale)) / (1 + (x/scale)**2)
    gamma_exp_mixture   weight, gamma_shape, gamma_scale, exp_scale
                        weight * gamma + (1 - weight) * exponential

Note on the gamma: the shape-scale density above carries scale**shape in
the normalizer.  A published variant omits that factor (it only integrates
to one for shape = 1); we use the standard, properly normalized form so the
propriety invariant holds for every parameter setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import special

from .errors import DomainError

FAMILIES = ("exponential", "gamma", "log_cauchy", "half_cauchy", "gamma_exp_mixture")

_REQUIRED_PARAMS = {
    "exponential": ("scale",),
    "gamma": ("shape", "scale"),
    "log_cauchy": ("scale",),
    "half_cauchy": ("scale",),
    "gamma_exp_mixture": ("weight", "gamma_shape", "gamma_scale", "exp_scale"),
}


@dataclass(frozen=True)
class KldPriorSpec:
    """A density family with parameters, used as the prior on a divergence."""

    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _REQUIRED_PARAMS:
            raise DomainError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        required = _REQUIRED_PARAMS[self.family]
        missing = [k for k in required if k not in self.params]
        extra = [k for k in self.params if k not in required]
        if missing or extra:
            raise DomainError(
                f"{self.family} takes params {required}; missing={missing} unexpected={extra}")
        object.__setattr__(self, "params", dict(self.params))
        for name, v in self.params.items():
            if not math.isfinite(v):
                raise DomainError(f"{self.family}.{name} must be finite, got {v}")
            if name == "weight":
                if not 0.0 <= v <= 1.0:
                    raise DomainError(f"mixture weight must be in [0, 1], got {v}")
            elif v <= 0.0:
                raise DomainError(f"{self.family}.{name} must be > 0, got {v}")

    def to_json_dict(self):
        return {"family": self.family, "params": dict(self.params)}

    @classmethod
    def from_json_dict(cls, obj):
        return cls(family=obj["family"], params=obj.get("params", {}))


def exponential(scale):
    return KldPriorSpec("exponential", {"scale": scale})


def gamma(shape, scale):
    return KldPriorSpec("gamma", {"shape": shape, "scale": scale})


def log_cauchy(scale):
    return KldPriorSpec("log_cauchy", {"scale": scale})


def half_cauchy(scale):
    return KldPriorSpec("half_cauchy", {"scale": scale})


def gamma_exp_mixture(weight, gamma_shape=0.2, gamma_scale=2.0, exp_scale=0.5):
    return KldPriorSpec("gamma_exp_mixture", {
        "weight": weight, "gamma_shape": gamma_shape,
        "gamma_scale": gamma_scale, "exp_scale": exp_scale})


def _check_nonnegative(x):
    if np.any(np.asarray(x) < 0):
        raise DomainError("density argument must be >= 0")


def pdf(spec: KldPriorSpec, x):
    """Family density at x >= 0.  log_cauchy additionally requires x > 0."""
    _check_nonnegative(x)
    x = np.asarray(x, dtype=float)
    p = spec.params
    if spec.family == "exponential":
        out = np.exp(-x / p["scale"]) / p["scale"]
    elif spec.family == "gamma":
        out = _gamma_pdf(x, p["shape"], p["scale"])
    elif spec.family == "log_cauchy":
        if np.any(x == 0):
            raise DomainError("log_cauchy density undefined at x = 0")
        # exp-of-log form: the direct denominator overflows for x near the
        # float ceiling while the density is still representable
        lam = p["scale"]
        logx = np.log(x)
        out = np.exp(math.log(lam) - math.log(math.pi) - logx
                     - np.log(logx ** 2 + lam ** 2))
    elif spec.family == "half_cauchy":
        s = p["scale"]
        out = 2.0 / (np.pi * s * (1.0 + (x / s) ** 2))
    else:
        w = p["weight"]
        out = (w * _gamma_pdf(x, p["gamma_shape"], p["gamma_scale"])
               + (1.0 - w) * np.exp(-x / p["exp_scale"]) / p["exp_scale"])
    return out if out.ndim else float(out)


def _gamma_pdf(x, shape, scale):
    # shape < 1 diverges at the origin; the limit value inf is returned rather
    # than raising, since x = 0 is in the support.
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)
        logpdf = ((shape - 1.0) * logx - x / scale
                  - math.lgamma(shape) - shape * math.log(scale))
        out = np.exp(logpdf)
    if shape == 1.0:
        out = np.where(x == 0, 1.0 / scale, out)
    elif shape > 1.0:
        out = np.where(x == 0, 0.0, out)
    else:
        out = np.where(x == 0, np.inf, out)
    return out


def log_pdf(spec: KldPriorSpec, x):
    """log of pdf, computed in a form that survives pdf underflow.

    Raises DomainError where the pdf is exactly zero (log_cauchy at x <= 0,
    gamma with shape > 1 at x = 0).
    """
    _check_nonnegative(x)
    x = np.asarray(x, dtype=float)
    p = spec.params
    if spec.family == "exponential":
        out = -x / p["scale"] - math.log(p["scale"])
    elif spec.family == "gamma":
        if p["shape"] > 1.0 and np.any(x == 0):
            raise DomainError("gamma pdf is 0 at x = 0 for shape > 1")
        with np.errstate(divide="ignore"):
            out = _gamma_logpdf(x, p["shape"], p["scale"])
    elif spec.family == "log_cauchy":
        if np.any(x == 0):
            raise DomainError("log_cauchy pdf is 0 for x <= 0")
        lam = p["scale"]
        out = (math.log(lam) - math.log(math.pi) - np.log(x)
               - np.log(np.log(x) ** 2 + lam ** 2))
    elif spec.family == "half_cauchy":
        s = p["scale"]
        out = (math.log(2.0) - math.log(math.pi) - math.log(s)
               - np.log1p((x / s) ** 2))
    else:
        w = p["weight"]
        with np.errstate(divide="ignore"):
            lg = _gamma_logpdf(x, p["gamma_shape"], p["gamma_scale"])
            le = -x / p["exp_scale"] - math.log(p["exp_scale"])
            if w == 0.0:
                out = le
            elif w == 1.0:
                out = lg
            else:
                out = np.logaddexp(math.log(w) + lg, math.log1p(-w) + le)
    return out if np.asarray(out).ndim else float(out)


def _gamma_logpdf(x, shape, scale):
    if shape == 1.0:
        return -x / scale - math.log(scale)
    return ((shape - 1.0) * np.log(x) - x / scale
            - math.lgamma(shape) - shape * math.log(scale))


def sample(spec: KldPriorSpec, rng_seed, size=None):
    """Deterministic draws given the seed.

    log_cauchy exponentiates a Cauchy draw; half_cauchy takes |Cauchy|;
    the mixture selects a component per draw.
    """
    rng = np.random.default_rng(rng_seed)
    p = spec.params
    n = 1 if size is None else size
    if spec.family == "exponential":
        out = rng.exponential(p["scale"], size=n)
    elif spec.family == "gamma":
        out = rng.gamma(p["shape"], p["scale"], size=n)
    elif spec.family == "log_cauchy":
        # extreme Cauchy draws overflow to inf, a faithful stand-in for
        # values beyond float range
        with np.errstate(over="ignore"):
            out = np.exp(p["scale"] * rng.standard_cauchy(size=n))
    elif spec.family == "half_cauchy":
        out = p["scale"] * np.abs(rng.standard_cauchy(size=n))
    else:
        pick = rng.random(size=n) < p["weight"]
        g = rng.gamma(p["gamma_shape"], p["gamma_scale"], size=n)
        e = rng.exponential(p["exp_scale"], size=n)
        out = np.where(pick, g, e)
    return float(out[0]) if size is None else out


def _cdf(spec: KldPriorSpec, x):
    """Internal CDF used by sampling diagnostics; not part of the public API."""
    _check_nonnegative(x)
    x = np.asarray(x, dtype=float)
    p = spec.params
    if spec.family == "exponential":
        out = -np.expm1(-x / p["scale"])
    elif spec.family == "gamma":
        out = special.gammainc(p["shape"], x / p["scale"])
    elif spec.family == "log_cauchy":
        with np.errstate(divide="ignore"):
            out = np.where(x == 0, 0.0,
                           0.5 + np.arctan(np.log(np.maximum(x, 1e-300)) / p["scale"]) / np.pi)
    elif spec.family == "half_cauchy":
        out = (2.0 / np.pi) * np.arctan(x / p["scale"])
    else:
        w = p["weight"]
        out = (w * special.gammainc(p["gamma_shape"], x / p["gamma_scale"])
               + (1.0 - w) * -np.expm1(-x / p["exp_scale"]))
    return out if out.ndim else float(out)
