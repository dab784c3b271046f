"""Estimators and fitters: CAR, fringes, CHSH, tomography, power curves."""
from .car import CarEstimate, car_from_counts, estimate_car
from .chsh import ANGLES_I, ANGLES_S, ChshResult, chsh, chsh_probabilities, setting_angles, setting_label
from .fits import CarFit, SinglesFit, SlopeFit, car_model, fit_car_curve, fit_log_slope, fit_singles_curve
from .fringes import FitError, FringeFit, fit_fringe
from .report import Metric, format_summary, to_json, write_json, write_table
from .tomography import (JAMES_SETTINGS, FidelityEstimate, MleResult, fidelity_with_error, linear_tomography,
                         mle_tomography)

__all__ = [
    "CarEstimate", "car_from_counts", "estimate_car", "ANGLES_I", "ANGLES_S", "ChshResult", "chsh",
    "chsh_probabilities", "setting_angles", "setting_label", "CarFit", "SinglesFit", "SlopeFit", "car_model",
    "fit_car_curve", "fit_log_slope", "fit_singles_curve", "FitError", "FringeFit", "fit_fringe", "Metric",
    "format_summary", "to_json", "write_json", "write_table", "JAMES_SETTINGS", "FidelityEstimate",
    "MleResult", "fidelity_with_error", "linear_tomography", "mle_tomography",
]
