"""Design-adaptive local polynomial regression at a point."""

from .bandwidth import (
    build_grid,
    build_interval_grid,
    estimate_sigma,
    ideal_bandwidth,
    select_bandwidth_symmetric,
    select_interval,
)
from .locpoly import Interval, SampleSet, Symmetric, fit_local
from .rvdesign import DesignSpec, ModulusSpec, RateModel
from .testbed import DatasetSpec, TargetFunction, synthesize

__all__ = [
    "DatasetSpec",
    "DesignSpec",
    "Interval",
    "ModulusSpec",
    "RateModel",
    "SampleSet",
    "Symmetric",
    "TargetFunction",
    "build_grid",
    "build_interval_grid",
    "estimate_sigma",
    "fit_local",
    "ideal_bandwidth",
    "select_bandwidth_symmetric",
    "select_interval",
    "synthesize",
]

__version__ = "0.1.0"
