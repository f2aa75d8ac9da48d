"""Query-driven selectivity estimation with uniform mixture models."""

from .geometry import Box, Interval, Region, intersect, region_intersect_volume, region_volume, volume
from .model import MixtureModel, ObservedQuery, UniformPrior
from .subpop import SubpopConfig
from .trainer import TrainConfig, TrainingSystem, assemble, fit, solve_analytic, solve_projected_gradient, train

__version__ = "0.1.0"
