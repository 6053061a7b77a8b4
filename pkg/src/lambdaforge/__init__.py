"""Simulation, decoding and metrology for repetition and surface codes."""

__version__ = "0.1.0"

from .codes import CodeKind, CodeSpec, build_code, build_repetition, build_surface, repetition_truth_table
from .decoder import apply_correction, brute_force_matching, build_decoding_graph, majority_decode, mwpm
from .metrology import estimate_pl, find_threshold, fit_lambda, lambda_x_experiment
from .noise_sim import NoiseParams, inject_and_run, run_shot
from .pauli_algebra import PauliString, commutator_is_zero, commutes, multiply
from .resources import budget_report, lambda_from_eps, required_order

__all__ = [
    "CodeKind", "CodeSpec", "build_code", "build_repetition", "build_surface",
    "repetition_truth_table", "apply_correction", "brute_force_matching",
    "build_decoding_graph", "majority_decode", "mwpm", "estimate_pl", "find_threshold",
    "fit_lambda", "lambda_x_experiment", "NoiseParams", "inject_and_run", "run_shot",
    "PauliString", "commutator_is_zero", "commutes", "multiply", "budget_report",
    "lambda_from_eps", "required_order",
]
