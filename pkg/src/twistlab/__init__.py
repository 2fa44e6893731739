"""Numerical toolkit for Hamiltonians on (degenerate) Liouville domains.

Modules: ``geometry`` (collar profiles and the square-root map), ``hamflow``
(collar charts, Hamiltonian vector fields, flows), ``extension`` (linear-at-
infinity extensions), ``action`` (action growth), ``smoothing`` (families
``H_eps``), ``index`` (frames, block decompositions, Robbin--Salamon index),
``orbits`` (periodic points and chords), ``models`` and ``cli``.
"""
from .errors import TwistLabError
from .geometry import CollarPoint, CollarProfile, degeneration_map, nondegeneration_map, solve_phi
from .hamflow import CollarChart, HamiltonianModel, Trajectory, integrate_flow
from .extension import ExtendedHamiltonian, ExtensionParams, build_extension, choose_constants
from .action import admissible_extension, compute_action, verify_action_growth
from .smoothing import build_family, nondegenerate_hamiltonian
from .index import block_decompose, linearize_flow, rotation_path, rs_index
from .orbits import FiberLagrangian, find_chords, find_periodic_points, prime_iterate_survey

__version__ = "0.1.0"

__all__ = [
    "TwistLabError", "CollarPoint", "CollarProfile", "degeneration_map", "nondegeneration_map", "solve_phi",
    "CollarChart", "HamiltonianModel", "Trajectory", "integrate_flow",
    "ExtendedHamiltonian", "ExtensionParams", "build_extension", "choose_constants",
    "admissible_extension", "compute_action", "verify_action_growth",
    "build_family", "nondegenerate_hamiltonian",
    "block_decompose", "linearize_flow", "rotation_path", "rs_index",
    "FiberLagrangian", "find_chords", "find_periodic_points", "prime_iterate_survey",
    "__version__",
]
