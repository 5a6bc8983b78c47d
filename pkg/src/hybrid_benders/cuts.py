"""Benders cut generation and multi-cut selection.

Feasibility cuts come from the L-shaped construction: when the subproblem
at ``x_hat`` is infeasible, the slack-augmented problem

    slack:  min e.s   s.t.  A x_hat + G y - s <= b,  y, s >= 0

is always feasible, and a vertex ``mu`` of its dual

    dual:   max (b - A x_hat).mu  s.t.  G^T mu <= 0,  -1 <= mu <= 0

with positive value yields the cut ``(b - A x).mu <= 0``, which ``x_hat``
violates and every subproblem-feasible ``x`` satisfies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InternalInconsistencyError, UnboundedProblemError
from .lp_simplex import LinearProgram, LpStatus, Sense, solve_lp
from .model import FEASIBILITY, OPTIMALITY, BendersCut, MilpInstance

DENSITY_THRESHOLD = 1e-9
ENUMERATION_LIMIT = 100_000


@dataclass(frozen=True)
class SubproblemResult:
    feasible: bool
    objective: float = float("nan")
    y: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None


def subproblem_lp(inst: MilpInstance, x_hat) -> LinearProgram:
    rhs = inst.b - inst.A @ np.asarray(x_hat, dtype=float)
    return LinearProgram.from_matrices(inst.h, inst.G, "<=", rhs, Sense.MAX)


def solve_subproblem(inst: MilpInstance, x_hat) -> SubproblemResult:
    """``max h.y  s.t.  G y <= b - A x_hat, y >= 0``."""
    sol = solve_lp(subproblem_lp(inst, x_hat))
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedProblemError(f"subproblem unbounded at x={list(x_hat)}")
    if sol.status is LpStatus.INFEASIBLE:
        return SubproblemResult(False)
    return SubproblemResult(True, sol.objective, sol.primal, sol.dual)


def make_optimality_cut(mu_o, inst: MilpInstance, iteration: int = 0) -> BendersCut:
    """``phi <= (b - A x).mu_o`` as ``b.mu_o - (A^T mu_o).x - phi >= 0``."""
    mu_o = np.asarray(mu_o, dtype=float)
    return BendersCut(OPTIMALITY, -(inst.A.T @ mu_o), float(inst.b @ mu_o), mu_o, iteration)


def feasibility_dual_lp(inst: MilpInstance, x_hat) -> LinearProgram:
    residual = inst.b - inst.A @ np.asarray(x_hat, dtype=float)
    return LinearProgram.from_matrices(
        residual, inst.G.T, "<=", np.zeros(inst.p), Sense.MAX,
        var_bounds=[(-1.0, 0.0)] * inst.m1,
    )


def feasibility_slack_lp(inst: MilpInstance, x_hat) -> LinearProgram:
    """The slack problem over ``(y, s)``; its optimum measures how infeasible ``x_hat`` is."""
    residual = inst.b - inst.A @ np.asarray(x_hat, dtype=float)
    matrix = np.hstack([inst.G, -np.eye(inst.m1)])
    objective = np.r_[np.zeros(inst.p), np.ones(inst.m1)]
    return LinearProgram.from_matrices(objective, matrix, "<=", residual, Sense.MIN)


def make_feasibility_cut(inst: MilpInstance, x_hat, iteration: int = 0,
                         tol: float = 1e-6) -> BendersCut:
    sol = solve_lp(feasibility_dual_lp(inst, x_hat))
    if not sol.optimal or sol.objective <= tol:
        raise InternalInconsistencyError(
            f"violation dual at x={list(x_hat)} has value {sol.objective} ({sol.status.value}) "
            "although the subproblem is infeasible"
        )
    mu = np.clip(sol.primal, -1.0, 0.0)
    return BendersCut(FEASIBILITY, -(inst.A.T @ mu), float(inst.b @ mu), mu, iteration)


def cut_for(inst: MilpInstance, x_hat, iteration: int = 0):
    """Subproblem result and the cut it dictates at ``x_hat``."""
    sp = solve_subproblem(inst, x_hat)
    if sp.feasible:
        return sp, make_optimality_cut(sp.mu, inst, iteration)
    return sp, make_feasibility_cut(inst, x_hat, iteration)


# -- multi-cut selection ------------------------------------------------------------

def density_matrix(cuts: Sequence[BendersCut], n: int,
                   threshold: float = DENSITY_THRESHOLD) -> np.ndarray:
    """``D[k, j] = 1`` iff cut ``k`` has a nonzero coefficient on ``x_j``."""
    if not cuts:
        return np.zeros((0, n), dtype=np.int8)
    coeffs = np.array([cut.coeffs for cut in cuts]).reshape(len(cuts), n)
    return (np.abs(coeffs) > threshold).astype(np.int8)


def max_coverage(D: np.ndarray, M: int) -> list:
    """Rows of ``D`` (at most ``M``) covering the most columns.

    Exact by enumeration when ``C(k, M) <= 1e5``, greedy otherwise. Ties go
    to the smaller subset, then the lexicographically smaller index tuple.
    """
    D = np.asarray(D)
    k = D.shape[0]
    if not 1 <= M <= k:
        raise ValueError(f"need 1 <= M <= k, got M={M}, k={k}")
    masks = [sum(1 << j for j in np.flatnonzero(row)) for row in D]
    if math.comb(k, M) <= ENUMERATION_LIMIT:
        best, best_cover = None, -1
        for size in range(1, M + 1):
            for subset in itertools.combinations(range(k), size):
                covered = 0
                for i in subset:
                    covered |= masks[i]
                cover = bin(covered).count("1")
                if cover > best_cover:
                    best, best_cover = subset, cover
        return list(best)
    chosen, covered = [], 0
    while len(chosen) < M:
        gains = [(bin(masks[i] & ~covered).count("1"), -i) for i in range(k) if i not in chosen]
        gain, neg_i = max(gains)
        if gain == 0 and chosen:
            break
        chosen.append(-neg_i)
        covered |= masks[-neg_i]
    return sorted(chosen)


def select_multicuts(candidates: Sequence[BendersCut], M: int, n: Optional[int] = None) -> list:
    """Subset of ``candidates`` chosen by unweighted maximum coverage of the x columns."""
    if n is None:
        n = candidates[0].coeffs.size
    picked = max_coverage(density_matrix(candidates, n), M)
    return [candidates[i] for i in picked]
