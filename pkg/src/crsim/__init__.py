"""Simulator for fixed-frequency transmon pairs with multi-path couplers.

Covers the static crosstalk analysis (ZZ, mu, J_eff, dispersive shifts),
rotating-frame cross-resonance dynamics, direct-CNOT calibration, and
two-qubit Clifford randomized benchmarking.
"""

from .config import load_device_config
from .model import BusModeSpec, DeviceModel, TransmonSpec, build_hamiltonian, validate_model
from .spectrum import (
    diagonalize,
    dispersive_shift,
    fit_j0_to_zz,
    j_eff,
    mu_matrix_element,
    static_rates,
    sweep_static,
    zz_exact,
    zz_perturbative,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BusModeSpec",
    "DeviceModel",
    "TransmonSpec",
    "build_hamiltonian",
    "validate_model",
    "load_device_config",
    "diagonalize",
    "dispersive_shift",
    "fit_j0_to_zz",
    "j_eff",
    "mu_matrix_element",
    "static_rates",
    "sweep_static",
    "zz_exact",
    "zz_perturbative",
]
