"""Hinged-plate MEMS free-boundary simulator."""

from ._memsflow import (
    Parameters,
    admissible_check,
    compute_g,
    eigenvalue,
    electrostatic_energy,
    estimate_lambda_star,
    mechanical_energy,
    simulate,
    solve_potential,
    spectrum,
    verify,
)

__all__ = [
    "Parameters",
    "admissible_check",
    "compute_g",
    "eigenvalue",
    "electrostatic_energy",
    "estimate_lambda_star",
    "mechanical_energy",
    "simulate",
    "solve_potential",
    "spectrum",
    "verify",
]
