"""Gibbs systems and Delta-local chains on finite state spaces."""

from .lab import (
    BarrierReport,
    ChainTrace,
    GibbsSystem,
    HittingReport,
    Regions,
    barrier_experiment,
    barrier_ratio,
    detailed_balance_residual,
    draw_observation,
    gibbs_exact,
    hitting_experiment,
    regions,
    regions_at,
    run_chain,
    transition_matrix,
)
from .spaces import RademacherTensor, StateSpace, SubsetSphere

__all__ = [
    "BarrierReport", "ChainTrace", "GibbsSystem", "HittingReport", "Regions",
    "RademacherTensor", "StateSpace", "SubsetSphere", "barrier_experiment", "barrier_ratio",
    "detailed_balance_residual", "draw_observation", "gibbs_exact", "hitting_experiment",
    "regions", "regions_at", "run_chain", "transition_matrix",
]
