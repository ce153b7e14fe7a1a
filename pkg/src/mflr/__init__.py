"""Multifidelity linear regression with control-variate estimators."""

from .allocation import Allocation, allocate, validate_allocation
from .coefficients import (CoefficientStrategy, build_strategy, mf_A_star, mf_alpha_star,
                           mf_mean_alpha)
from .errors import ConfigError, DataError, MflrError, NumericalError
from .estimators import (FitResult, NestedSampleSet, fit, mf_cxy_matrix, mf_cxy_scalar, mfmc_mean,
                         predict, sf_cxy)
from .experiments import ExperimentPlan, ExperimentReport, allocation_variation, load_dataset, run_experiment
from .features import FeatureMap, InputDistribution, exact_cxx, full_quadratic, linear, sample_cxx
from .models import ModelSet, cdr_pair, exp_pair, get_family
from .statistics import ModelStats, exact_stats_exp, pilot_stats, stats_from_dataset

__version__ = "0.1.0"
