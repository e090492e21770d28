"""Numerical laboratory for Morawetz multiplier identities and resolvent
estimates of the magnetic Helmholtz equation on exterior domains."""

__version__ = "0.1.0"

from .fields import PotentialPair, builtin_potential, magnetic_data, potential_from_expressions
from .geometry import Obstacle, make_obstacle, partition_boundary, star_shape_report
from .manufactured import ManufacturedField, manufactured_field, outgoing_wave, shell_bump
from .morawetz import (HelmholtzInstance, estimate_report, identity_breakdown,
                       manufacture_instance, sanity_checks, smooth_multiplier,
                       zero_resonance_diagnostic)
from .multipliers import bilaplacian_parts, multiplier_set
from .norms import dyadic_N, duality_check, morrey_sup, smallness_report
from .quadrature import ShellGrid, build_shell_grid, integrate_surface, integrate_volume
from .solver import SolverConfig, assemble_and_solve, limiting_absorption_scan

__all__ = [
    "HelmholtzInstance", "ManufacturedField", "Obstacle", "PotentialPair", "ShellGrid",
    "SolverConfig", "assemble_and_solve", "bilaplacian_parts", "build_shell_grid",
    "builtin_potential", "duality_check", "dyadic_N", "estimate_report", "identity_breakdown",
    "integrate_surface", "integrate_volume", "limiting_absorption_scan", "magnetic_data",
    "make_obstacle", "manufacture_instance", "manufactured_field", "morrey_sup",
    "multiplier_set", "outgoing_wave", "partition_boundary", "potential_from_expressions",
    "sanity_checks", "shell_bump", "smallness_report", "smooth_multiplier",
    "star_shape_report", "zero_resonance_diagnostic",
]
