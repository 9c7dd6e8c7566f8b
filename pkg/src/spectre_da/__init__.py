"""Random-matrix estimates of the spectrum of data augmentation Markov operators."""

__version__ = "0.1.0"

from .numerics import CapabilityError, ContractError, InputError, NumericError, delta2, symmetric_eigenvalues
from .spectrum import (
    NSchedule,
    build_erma_matrix,
    build_mcrma_matrix,
    build_mcrma_unnormalized_matrix,
    eigenvalue_trajectory,
    n_schedule,
    spectrum_estimate,
)

__all__ = [
    "CapabilityError",
    "ContractError",
    "InputError",
    "NSchedule",
    "NumericError",
    "build_erma_matrix",
    "build_mcrma_matrix",
    "build_mcrma_unnormalized_matrix",
    "delta2",
    "eigenvalue_trajectory",
    "n_schedule",
    "spectrum_estimate",
    "symmetric_eigenvalues",
]
