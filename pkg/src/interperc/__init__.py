"""Percolation and cascading failures on asymmetrically interdependent networks."""

from .core import (CouplingPair, LayerGraph, MultilayerSystem, Pairing, coupling_strengths, degree_sequence,
                   giant_component, make_pairing)
from .cascade import CascadeConfig, CascadeOutcome, EnsemblePoint, estimate_pc_from_curve, run_cascade, run_ensemble
from .theory import (DegreeDist, PhasePoint, SolverParams, find_pc_first_order, find_theta_c, giant_fraction_theory,
                     h_eval, pc_second_order, poisson_dist, powerlaw_dist, solve_fixed_point)

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig", "CascadeOutcome", "CouplingPair", "DegreeDist", "EnsemblePoint", "LayerGraph",
    "MultilayerSystem", "Pairing", "PhasePoint", "SolverParams", "coupling_strengths", "degree_sequence",
    "estimate_pc_from_curve", "find_pc_first_order", "find_theta_c", "giant_component", "giant_fraction_theory",
    "h_eval", "make_pairing", "pc_second_order", "poisson_dist", "powerlaw_dist", "run_cascade", "run_ensemble",
    "solve_fixed_point",
]
