"""Unitary-equivariant force networks.

Thin Python surface over the C++ core: dataset generation, FIRE training,
force prediction, molecular dynamics, and the structural checks (unitary
equivariance, gradient consistency, parity).
"""

from ._core import (
    ARGON_MASS_U,
    K_BOLTZMANN_EV_PER_K,
    ContractViolation,
    Dataset,
    ForceModel,
    IoError,
    LJParams,
    Trajectory,
    derive_seed,
    equivariance_deviation,
    generate_dataset,
    gradient_relative_error,
    lj_forces,
    lj_pair_energy,
    lj_total_energy,
    load_dataset,
    load_model,
    parity_deviation,
    relative_positions,
    simulate,
    train_force_model,
)

__version__ = "0.1.0"

__all__ = [
    "ARGON_MASS_U",
    "K_BOLTZMANN_EV_PER_K",
    "ContractViolation",
    "Dataset",
    "ForceModel",
    "IoError",
    "LJParams",
    "Trajectory",
    "derive_seed",
    "equivariance_deviation",
    "generate_dataset",
    "gradient_relative_error",
    "lj_forces",
    "lj_pair_energy",
    "lj_total_energy",
    "load_dataset",
    "load_model",
    "parity_deviation",
    "relative_positions",
    "simulate",
    "train_force_model",
]
