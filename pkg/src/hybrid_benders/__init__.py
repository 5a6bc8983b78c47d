"""Hybrid Benders decomposition for binary/continuous MILPs with a QUBO master."""

from .benders import hbd_solve
from .cuts import max_coverage, select_multicuts, solve_subproblem
from .errors import HbdError
from .harness import compute_metrics, oracle_solve, run_benchmark
from .lp_simplex import LinearProgram, LpStatus, Sense, solve_lp
from .model import (
    BendersConfig, BendersCut, ManualPenalties, MilpInstance, SolveReport, Status,
    generate_generic_instance, load_instance, save_instance,
)
from .qubo_encode import QuboModel, build_phi_encoding, encode_master, tighten_phi_bounds
from .qubo_solve import solve_exact, solve_sa

__all__ = [
    "BendersConfig", "BendersCut", "HbdError", "LinearProgram", "LpStatus", "ManualPenalties",
    "MilpInstance", "QuboModel", "Sense", "SolveReport", "Status", "build_phi_encoding",
    "compute_metrics", "encode_master", "generate_generic_instance", "hbd_solve",
    "load_instance", "max_coverage", "oracle_solve", "run_benchmark", "save_instance",
    "select_multicuts", "solve_exact", "solve_lp", "solve_sa", "solve_subproblem",
    "tighten_phi_bounds",
]
