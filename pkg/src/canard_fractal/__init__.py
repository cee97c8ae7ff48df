"""Fractal analysis of planar piecewise-smooth slow-fast Lienard systems."""

__version__ = "0.1.0"

from .errors import (AssumptionViolation, CanardFractalError, DomainError, EstimatorError,
                     FlowError, QuadratureError, RegimeError, UnsupportedCase)
from .model import ClassicalLienard, PwsLienard, ScalarFn, validate_hopf, validate_interval
from .series import gbar_series, multiplicity_m0
from .sdi import sdi_pm, sdi_total, sdi_normal_form
from .relation import find_balanced, orbit_generate, slow_relation
from .fractal import box_dimension, gap_dimension, predict_dimension
from .blowup import beta_constants, delta_scan
from .simulate import alpha_sweep, cycle_search, integrate_pws

__all__ = [
    "AssumptionViolation", "CanardFractalError", "DomainError", "EstimatorError", "FlowError",
    "QuadratureError", "RegimeError", "UnsupportedCase", "ClassicalLienard", "PwsLienard",
    "ScalarFn", "validate_hopf", "validate_interval", "gbar_series", "multiplicity_m0",
    "sdi_pm", "sdi_total", "sdi_normal_form", "find_balanced", "orbit_generate",
    "slow_relation", "box_dimension", "gap_dimension", "predict_dimension", "beta_constants",
    "delta_scan", "alpha_sweep", "cycle_search", "integrate_pws",
]
