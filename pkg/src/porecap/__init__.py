"""Diffusive capture by circular pores on a plane or a unit sphere."""

from .errors import (AssemblyError, ConvergenceError, DomainError, GeometryError, InvalidInputError,
                     PorecapError, SingularInputError, SolverError, TableBuildError,
                     UnsupportedConfigurationError)
from .formulas import (berg_purcell, electrified_disk, homogenized_flux, leakage_be, leakage_bp,
                       planar_asymptotic_flux, relative_error, sphere_asymptotic_flux,
                       sphere_single_pore_flux, strieder_two_pore_flux)
from .geometry import (Pore, PoreConfiguration, Surface, chord_distance, fibonacci_sphere,
                       pattern_planar, platonic_vertices, validate_nonoverlap)
from .solver import FluxSolution, SpectralParams, assemble_matrix, compute_flux, solve

__all__ = [
    "AssemblyError", "ConvergenceError", "DomainError", "GeometryError", "InvalidInputError",
    "PorecapError", "SingularInputError", "SolverError", "TableBuildError",
    "UnsupportedConfigurationError",
    "berg_purcell", "electrified_disk", "homogenized_flux", "leakage_be", "leakage_bp",
    "planar_asymptotic_flux", "relative_error", "sphere_asymptotic_flux",
    "sphere_single_pore_flux", "strieder_two_pore_flux",
    "Pore", "PoreConfiguration", "Surface", "chord_distance", "fibonacci_sphere",
    "pattern_planar", "platonic_vertices", "validate_nonoverlap",
    "FluxSolution", "SpectralParams", "assemble_matrix", "compute_flux", "solve",
]
