"""Representation-similarity and training-stability analyses."""

from .attention import AttnDistanceReport, attention_match
from .confusion import GradConfusionStats, example_gradient, gradient_confusion
from .isometry import (
    JACOBIAN_BUDGET,
    SingularSpectrum,
    input_jacobian,
    jacobian_singular_values,
)
from .perturbation import (
    DEFAULT_SIGMAS,
    PerturbReport,
    PerturbRow,
    perturbation_variance,
)
from .pwcca import PwccaReport, cca_correlations, pwcca, pwcca_report
from .representations import ReprMatrix, collect_representations, sample_positions

__all__ = [
    "AttnDistanceReport", "attention_match",
    "GradConfusionStats", "example_gradient", "gradient_confusion",
    "JACOBIAN_BUDGET", "SingularSpectrum", "input_jacobian",
    "jacobian_singular_values",
    "DEFAULT_SIGMAS", "PerturbReport", "PerturbRow", "perturbation_variance",
    "PwccaReport", "cca_correlations", "pwcca", "pwcca_report",
    "ReprMatrix", "collect_representations", "sample_positions",
]
