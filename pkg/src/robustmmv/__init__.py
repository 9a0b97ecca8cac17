"""Robust multichannel sparse recovery of complex-valued signals."""

from .loss import HuberLoss, LeastSquaresLoss, consistency_factor, threshold_from_quantile
from .mmv import hard_threshold, row_norms, row_support, sparsify_to_support, weighted_inner_product
from .solver import RecoveryResult, SolverConfig, hub_sniht, sniht

__all__ = [
    "HuberLoss", "LeastSquaresLoss", "consistency_factor", "threshold_from_quantile",
    "hard_threshold", "row_norms", "row_support", "sparsify_to_support",
    "weighted_inner_product", "RecoveryResult", "SolverConfig", "hub_sniht", "sniht",
]
