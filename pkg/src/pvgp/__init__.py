"""Gaussian-process forecasting of PV power from historical output and cloud coverage.

The library is organised in five layers:

* :mod:`pvgp.kernels`     -- covariance kernel specs, evaluation, text form
* :mod:`pvgp.gp`          -- exact GP inference and hyperparameter fitting
* :mod:`pvgp.geotime`     -- national-grid projection, solar position, time index
* :mod:`pvgp.pipeline`    -- dataset ingestion, filters, HRV patch means, joins
* :mod:`pvgp.experiments` -- forecast protocols, grids, reports, synthetic data

:mod:`pvgp.cli` wires everything into the ``pvgp`` command.
"""

from .geotime import BRITISH_NATIONAL_GRID, GeoPoint, TransverseMercator, latlon_to_tm, solar_elevation, tm_to_latlon
from .gp import PosteriorPrediction, TrainingSet, fit_hyperparameters, log_marginal_likelihood, posterior, sample_prior
from .kernels import KernelSpec, parse
from .pipeline import AssembledSeries, HrvRasterStack, PvSystem, assemble, filter_systems, hrv_patch_mean
from .experiments import ExperimentConfig, ExperimentReport, forecast_4h, forecast_48h, generate_synthetic, mae, run_grid

__version__ = "0.1.0"

__all__ = [
    "KernelSpec",
    "parse",
    "TrainingSet",
    "PosteriorPrediction",
    "posterior",
    "log_marginal_likelihood",
    "fit_hyperparameters",
    "sample_prior",
    "GeoPoint",
    "TransverseMercator",
    "BRITISH_NATIONAL_GRID",
    "latlon_to_tm",
    "tm_to_latlon",
    "solar_elevation",
    "PvSystem",
    "HrvRasterStack",
    "AssembledSeries",
    "assemble",
    "filter_systems",
    "hrv_patch_mean",
    "ExperimentConfig",
    "ExperimentReport",
    "mae",
    "forecast_48h",
    "forecast_4h",
    "run_grid",
    "generate_synthetic",
    "__version__",
]
