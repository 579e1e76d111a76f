"""Incentivized exploration with reward drift over uniformly discretized Lipschitz bandits."""

__version__ = "0.1.0"

from .errors import BanditError, BudgetExceeded, DiagnosticUndefined, InvalidParameter, InvalidState
from .space import GridCover, build_cover, optimal_psi, points_per_dim, snap
from .env import DriftModel, MeanRewardModel, NoiseModel, drift, mean_reward, sample_reward, verify_lipschitz
from .core import (
    ArmStats,
    RunResult,
    StepRecord,
    check_trace,
    compensation,
    run_arms,
    run_episode,
    select_greedy,
    select_principal,
    ucb_index,
)
from .contextual import ContextArmTable, contextual_optimal_psi, run_contextual_episode
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    run_baseline,
    run_experiment,
    run_table,
    sublinearity_slope,
    theoretical_bound,
    write_csv,
)
from .oracle import brute_force_expectation, monte_carlo_expectation
