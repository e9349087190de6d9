"""Determinantal point processes: exact inference, sampling, learning and summarization."""
from .core import (
    NotPSDError,
    PSDClampWarning,
    QPhiDecomposition,
    SymmetricKernel,
    as_subset,
    build_l,
    conditional_prob,
    l_from_k,
    log_normalizer,
    log_prob,
    marginal_kernel,
    marginal_prob,
    similarity_of,
)
from .infer import BudgetSpec, SelectionResult, exact_map_bruteforce, greedy_map, mmr_select, sampled_map
from .learn import ConditionalModel, Instance, build_conditional_l, gradient, log_likelihood, quality, train
from .sampler import SamplerState, empirical_marginals

__all__ = [
    "NotPSDError",
    "PSDClampWarning",
    "QPhiDecomposition",
    "SymmetricKernel",
    "as_subset",
    "build_l",
    "conditional_prob",
    "l_from_k",
    "log_normalizer",
    "log_prob",
    "marginal_kernel",
    "marginal_prob",
    "similarity_of",
    "BudgetSpec",
    "SelectionResult",
    "exact_map_bruteforce",
    "greedy_map",
    "mmr_select",
    "sampled_map",
    "ConditionalModel",
    "Instance",
    "build_conditional_l",
    "gradient",
    "log_likelihood",
    "quality",
    "train",
    "SamplerState",
    "empirical_marginals",
]

__version__ = "0.1.0"
