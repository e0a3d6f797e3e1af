"""Least-squares estimators for resonances, SHG, shot-noise sweeps and squeezing spectra."""

from sqzlab.estimation.core import fit_model, r_squared
from sqzlab.estimation.coupling import coupling_diagnostic
from sqzlab.estimation.fitters import (
    fit_linear_origin,
    fit_lorentzian,
    fit_shg_quadratic,
    fit_squeezing_model,
    invert_squeezing_pair,
)

__all__ = [
    "coupling_diagnostic",
    "fit_linear_origin",
    "fit_lorentzian",
    "fit_model",
    "fit_shg_quadratic",
    "fit_squeezing_model",
    "invert_squeezing_pair",
    "r_squared",
]
