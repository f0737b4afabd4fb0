"""Numerical laboratory for pure-jump Levy processes.

Symbols and scale functions (:mod:`levylab.symbol`, :mod:`levylab.profile`),
lattice densities (:mod:`levylab.density`, :mod:`levylab.bounds`), decay
rates (:mod:`levylab.rates`) and a Monte Carlo oracle (:mod:`levylab.mc`).
"""
__version__ = "0.1.0"

from .errors import (DegenerateProfile, DivergentMoment, GridUnderresolved, GridUnderresolvedWarning,
                     HWViolated, IncomparableMeasures, InsufficientSamples, InsufficientSpan,
                     InvalidModel, LevyLabError, NoLevyMeasure, NonIntegrable, OutOfRange,
                     QuadratureFailed, RateOverflow, ShiftTooLarge)
from .models import (BernsteinSpec, ExplicitSymbol, Lamperti, Layered, Polar, Relativistic,
                     SpectralMeasure, Stable, SubordinateBM, Tempered, Truncated, Truncation,
                     CATALOG, model_from_dict, model_from_json, model_to_dict)
from .symbol import (decompose_check, eval_residual, eval_symbol, eval_truncated, hw_index,
                     levy_moment, symbol_values)
from .profile import PhiProfile, h_of_t, phi_inverse, phi_profile
from .density import DensityGrid, GridSpec, density, rescaled_density
from .bounds import BoundReport, envelope_check, integral_condition, psi_factor
from .rates import (InverseBernstein, LogCorrectedPower, PowerLaw, RateFit, RateSeries,
                    baseline_compare, factorization_gap, grad_norm, hypothesis_report, rate_fit,
                    tv_distance)
from .mc import EmpiricalDist, SamplerConfig, empirical_tv_lower, ks_statistic, sample_increments
