"""preftrack: track a time-varying objective while learning user satisfaction.

The package couples three pieces that usually live on separate timescales:
a known, time-varying engineering objective; an unknown per-user satisfaction
function learned online from noisy feedback through Gaussian-process
confidence bounds; and an inexact projected-gradient solver that advances the
decision a fixed number of steps per tick.  Regret accounting, bound
evaluation, baselines and a benchmark CLI sit on top.
"""

from .baselines import SyntheticUserModel, ZeroOrderState, zero_order_grad
from .experiment import ExperimentConfig, run_experiment, sweep
from .gp import GpPosterior, Observation, SamplePath, sample_path
from .kernels import KernelSpec
from .loop import FeedbackSchedule, LoopState, SamplePathUser, StepOutcome, UserModel
from .objectives import ObjectiveMetadata, TimeVaryingQuadratic
from .regret import BoundInputs, RegretLedger, TrueObjective, info_gain_greedy, theoretical_bound
from .solver import BoxDomain, SolverConfig
from .ucb import ConfidenceParams, beta, estimate_ab

__all__ = [
    "BoundInputs",
    "BoxDomain",
    "ConfidenceParams",
    "ExperimentConfig",
    "FeedbackSchedule",
    "GpPosterior",
    "KernelSpec",
    "LoopState",
    "Observation",
    "ObjectiveMetadata",
    "RegretLedger",
    "SamplePath",
    "SamplePathUser",
    "SolverConfig",
    "StepOutcome",
    "SyntheticUserModel",
    "TimeVaryingQuadratic",
    "TrueObjective",
    "UserModel",
    "ZeroOrderState",
    "beta",
    "estimate_ab",
    "info_gain_greedy",
    "run_experiment",
    "sample_path",
    "sweep",
    "theoretical_bound",
    "zero_order_grad",
]

__version__ = "0.1.0"
