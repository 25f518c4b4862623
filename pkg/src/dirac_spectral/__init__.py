"""Forward and inverse spectral theory for Dirac operators on a finite interval.

Pipeline: Dirac measure -> transfer matrix -> de Branges function ->
Gelfand-Levitan function phi -> Fredholm kernels -> canonical system H ->
Dirac density.
"""

from .config import DEFAULT, Tolerances
from .core import (
    CanonicalSystem,
    DiracMeasure,
    Direction,
    GLFunction,
    GridFunction1D,
    PointMass,
    SpectralMeasure,
    g_of,
    jump_factor,
)
from .forward import (
    canonical_weyl_function,
    db_function,
    eigenvalues,
    exponential_type,
    spectral_measure,
    transfer_matrix,
    weyl_function,
)
from .gl_extract import check_phi, phi_from_dirac, phi_from_E, phi_from_series, phi_from_spectral_measure
from .inverse import dirac_to_h, fredholm_solve, h_to_dirac, kernel_pair, reconstruct_H
from .series import E_via_series, dP_density, k_function, omega_weight

__version__ = "0.1.0"

__all__ = [
    "DEFAULT",
    "Tolerances",
    "CanonicalSystem",
    "DiracMeasure",
    "Direction",
    "GLFunction",
    "GridFunction1D",
    "PointMass",
    "SpectralMeasure",
    "g_of",
    "jump_factor",
    "canonical_weyl_function",
    "db_function",
    "eigenvalues",
    "exponential_type",
    "spectral_measure",
    "transfer_matrix",
    "weyl_function",
    "check_phi",
    "phi_from_dirac",
    "phi_from_E",
    "phi_from_series",
    "phi_from_spectral_measure",
    "dirac_to_h",
    "fredholm_solve",
    "h_to_dirac",
    "kernel_pair",
    "reconstruct_H",
    "E_via_series",
    "dP_density",
    "k_function",
    "omega_weight",
]
