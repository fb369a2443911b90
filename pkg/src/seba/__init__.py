"""Spectra and eigenfunction localization for point scatterers on rectangles.

The operator is the Laplacian on a unit-area rectangle with Dirichlet
boundary conditions plus a point scatterer (a self-adjoint extension
pinned at an interior point), parametrized by a coupling constant
alpha in (-inf, +inf].
"""
from .basis import (BasisMode, RectGeometry, SpectralBasis, build_basis,
                    eigenfunction_value, weyl_count_estimate)
from .config import RunConfig, emit_config, parse_config
from .errors import (BasisSizeError, ConfigError, CutoffError, DomainError,
                     EmptyBasisError, InsufficientBasisError, NoRootError,
                     NormalizationError, NumericalError, PoleProximityError,
                     SebaError)
from .localization import (LocalizationRecord, SweepResult, amplitude_at_scatterer,
                           amplitude_curve, default_alpha_grid, l2_ratio,
                           localization_table, localized_count, overlap_integral,
                           scan_alpha, sweep_eccentricity)
from .scatterer import (PERTURBED, UNPERTURBED, EigenvalueClass, PerturbedMode,
                        ScattererConfig, ScattererSpectrum, classify_eigenvalue,
                        compute_spectrum, f_derivative, f_eval, mode_field,
                        solve_secular_on_interval)

__version__ = "0.1.0"

__all__ = [
    "BasisMode", "RectGeometry", "SpectralBasis", "build_basis",
    "eigenfunction_value", "weyl_count_estimate",
    "RunConfig", "emit_config", "parse_config",
    "SebaError", "ConfigError", "NumericalError", "EmptyBasisError",
    "BasisSizeError", "DomainError", "PoleProximityError", "NoRootError",
    "InsufficientBasisError", "NormalizationError", "CutoffError",
    "LocalizationRecord", "SweepResult", "amplitude_at_scatterer",
    "amplitude_curve", "default_alpha_grid", "l2_ratio", "localization_table",
    "localized_count", "overlap_integral", "scan_alpha", "sweep_eccentricity",
    "PERTURBED", "UNPERTURBED", "EigenvalueClass", "PerturbedMode",
    "ScattererConfig", "ScattererSpectrum", "classify_eigenvalue",
    "compute_spectrum", "f_derivative", "f_eval", "mode_field",
    "solve_secular_on_interval",
]
