"""Whittle index scheduling for minimum Age of Incorrect Information."""
from .closed_forms import (
    Metric,
    avg_active,
    avg_aoi,
    avg_aoii,
    check_indexability,
    stationary_mass,
    whittle_aoi,
    whittle_aoii,
    whittle_intersection,
)
from .core import SlotOutcome, SourceParams, gap_pmf, predicted_aoii, simulate_true_source, step_empirical, step_predicted
from .mdp import DualProblem, delta_v, extract_threshold, rvia_solve, solve_dual, threshold_boundary
from .policies import PolicyKind, compute_indices, select_top_m
from .simulator import SimConfig, estimate_cost, occupancy_measure, run_episode

__version__ = "0.1.0"
