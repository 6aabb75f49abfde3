"""Complexity priors for linear models and ReLU networks.

A prior on a flexibility scale tau is obtained by placing a density on the
predictive divergence between an extended and a base model and changing
variables through the divergence map D(tau).  The library provides the
density families, closed-form linear-model maps, Monte-Carlo network maps
with exact scalar sensitivities, prior sampling by numerical inversion,
and numerical verification of propriety and bijectivity.
"""

from .errors import (DegenerateMapError, DomainError, PredcpError,
                     StructuralError, UnboundedMapError)
from .kld_priors import (FAMILIES, KldPriorSpec, exponential, gamma,
                         gamma_exp_mixture, half_cauchy, log_cauchy, log_pdf,
                         pdf, sample)
from .linear import (EPS_KL, DivergenceMap, LinearModelSpec, cov_density,
                     ecp_beta1_density, ecp_map, kld_linear, kld_multivariate,
                     marginal_beta_density, nonlocal_pdf, predcp_divergence_linear,
                     predcp_map, profile_mass, propriety_integral,
                     shrinkage_profile, tail_probability)
from .mcprior import (DEGENERACY_EPS, JointGridResult, LayerEval, McConfig,
                      MonotoneReport, PriorEvalResult, ProprietyReport,
                      check_monotone, check_propriety, depthwise_log_predcp,
                      joint_density_grid, linear_mc_divergence,
                      linear_mc_divergence_samples, log_cov_density,
                      mc_divergence, mc_divergence_samples,
                      meta_modular_log_prior, network_divergence_map,
                      predcp_log_density, resnet_variance_divergence,
                      resnet_variance_divergence_samples)
from .network import (NetworkSpec, ObservationModel, WeightState, forward,
                      obs_kld, realize_weights, softmax, softmax_scaled,
                      weight_state)
from .quadrature import QuadResult, integrate_adaptive, integrate_semi_infinite
from .sampler import (PRIOR_KINDS, SamplerConfig, TauDraw, invert_map,
                      sample_function_draws, sample_tau)

__version__ = "0.1.0"
