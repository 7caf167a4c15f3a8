"""Finite-N norm inflation laboratory for fractional Hartree and cubic Schrodinger equations."""

from .harness import ExperimentConfig, build_sigma, run_inflation, verify_lemma_suite
from .lattice import CubeUnion, FreqLattice, GridFn, convolve, fractional_phase, indicator
from .norms import fl_norm, mod_norm, weight_mass
from .picard import ModelParams, PicardExpansion, build_stack, truncated_solution, u3_direct
from .regimes import RegimePoint, certificate_for, classify, region_grid, verify_certificate
from .resonance import classify_Ed, cone_check, resonant_family

__version__ = "0.1.0"

__all__ = [
    "CubeUnion",
    "ExperimentConfig",
    "FreqLattice",
    "GridFn",
    "ModelParams",
    "PicardExpansion",
    "RegimePoint",
    "build_sigma",
    "build_stack",
    "certificate_for",
    "classify",
    "classify_Ed",
    "cone_check",
    "convolve",
    "fl_norm",
    "fractional_phase",
    "indicator",
    "mod_norm",
    "region_grid",
    "resonant_family",
    "run_inflation",
    "truncated_solution",
    "u3_direct",
    "verify_certificate",
    "weight_mass",
]
