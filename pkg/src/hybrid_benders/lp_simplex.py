"""Dense two-phase simplex with Bland's rule.

Every LP in the package goes through :func:`solve_lp`: the Benders
subproblem, the feasibility-cut violation LPs, and the bound-tightening LPs
over the binary relaxation. Duals are read off the final basis, so an
optimal answer always comes with a *vertex* of the dual polyhedron.

Sign convention for ``LpSolution.dual``: the Lagrangian is
``c.x + dual.(rhs - A x)``, so for a maximization the dual of a ``<=`` row
is nonnegative and the dual of a ``>=`` row is nonpositive; for a
minimization the signs flip. ``rhs . dual`` plus the bound contributions of
the reduced costs equals the optimal objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import NumericalInstabilityError

if TYPE_CHECKING:
    from .model import BendersCut, MilpInstance

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8

LE, EQ, GE = "<=", "=", ">="
_FLIP = {LE: GE, GE: LE, EQ: EQ}


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """``sense`` of ``objective . x`` subject to ``rows`` and ``var_bounds``.

    ``rows`` holds ``(coefficients, relation, rhs)`` triples with relation one
    of ``"<="``, ``"="``, ``">="``. ``var_bounds`` defaults to ``x >= 0``.
    """

    objective: np.ndarray
    sense: Sense = Sense.MAX
    rows: tuple = ()
    var_bounds: Optional[tuple] = None

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float).ravel()
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "sense", Sense(self.sense))
        rows = []
        for coeffs, rel, rhs in self.rows:
            coeffs = np.asarray(coeffs, dtype=float).ravel()
            if coeffs.shape != obj.shape:
                raise ValueError(
                    f"row has {coeffs.size} coefficients, expected {obj.size}"
                )
            if rel not in _FLIP:
                raise ValueError(f"unknown relation {rel!r}")
            rows.append((coeffs, rel, float(rhs)))
        object.__setattr__(self, "rows", tuple(rows))
        if self.var_bounds is None:
            bounds = tuple((0.0, np.inf) for _ in range(obj.size))
        else:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.var_bounds)
            if len(bounds) != obj.size:
                raise ValueError("var_bounds length differs from num_vars")
        for lo, hi in bounds:
            if lo > hi:
                raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
        object.__setattr__(self, "var_bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @classmethod
    def from_matrices(cls, objective, matrix, relations, rhs, sense=Sense.MAX,
                      var_bounds=None) -> "LinearProgram":
        matrix = np.asarray(matrix, dtype=float).reshape(-1, len(objective))
        if isinstance(relations, str):
            relations = [relations] * matrix.shape[0]
        rows = tuple(zip(matrix, relations, np.asarray(rhs, dtype=float).ravel()))
        return cls(objective, sense, rows, var_bounds)


@dataclass
class LpSolution:
    status: LpStatus
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    objective: float = float("nan")
    reduced_costs: Optional[np.ndarray] = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def dual_objective(self, lp: LinearProgram) -> float:
        """Objective of the dual problem at ``self.dual``.

        Reduced costs that are numerically zero are dropped so that free or
        half-bounded variables do not contribute ``0 * inf``.
        """
        if not self.optimal:
            raise ValueError("dual objective is only defined at an optimum")
        rhs = np.array([r for _, _, r in lp.rows])
        value = float(rhs @ self.dual) if rhs.size else 0.0
        pick = max if lp.sense is Sense.MAX else min
        for d, (lo, hi) in zip(self.reduced_costs, lp.var_bounds):
            if abs(d) <= PIVOT_TOL:
                continue
            value += pick(d * lo, d * hi)
        return value


@dataclass
class _Tableau:
    tab: np.ndarray          # rows = B^-1 [A | b]
    basis: list
    pivots: int = 0
    cap: int = 0
    dropped: list = field(default_factory=list)

    def pivot(self, r: int, e: int) -> None:
        tab = self.tab
        tab[r] /= tab[r, e]
        col = tab[:, e].copy()
        col[r] = 0.0
        tab -= np.outer(col, tab[r])
        self.basis[r] = e
        self.pivots += 1
        if self.pivots > self.cap:
            raise NumericalInstabilityError(
                f"simplex exceeded {self.cap} pivots"
            )

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> bool:
        """Maximize ``cost . z`` from the current basis. False if unbounded."""
        tab = self.tab
        while True:
            basis = np.asarray(self.basis, dtype=int)
            if tab.shape[0]:
                reduced = cost - cost[basis] @ tab[:, :-1]
            else:
                reduced = cost.copy()
            reduced[~allowed] = 0.0
            reduced[basis] = 0.0
            entering = np.flatnonzero(reduced > PIVOT_TOL)
            if entering.size == 0:
                return True
            e = int(entering[0])
            col = tab[:, e]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return False
            ratios = tab[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, e)


def _standardize(lp: LinearProgram):
    """Shift/split variables to z >= 0 and append finite upper bounds as rows.

    Returns ``(T, shift, A, rel, rhs)`` with ``x = shift + T z``.
    """
    n = lp.num_vars
    columns, shift, bound_rows = [], np.zeros(n), []
    for j, (lo, hi) in enumerate(lp.var_bounds):
        if np.isfinite(lo):
            shift[j] = lo
            columns.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    T = np.zeros((n, len(columns)))
    for k, (j, s) in enumerate(columns):
        T[j, k] = s

    A_rows, rel, rhs = [], [], []
    for coeffs, r, b in lp.rows:
        A_rows.append(coeffs @ T)
        rel.append(r)
        rhs.append(b - coeffs @ shift)
    for k, width in bound_rows:
        row = np.zeros(len(columns))
        row[k] = 1.0
        A_rows.append(row)
        rel.append(LE)
        rhs.append(width)
    A = np.array(A_rows).reshape(len(A_rows), len(columns))
    return T, shift, A, rel, np.array(rhs, dtype=float)


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` exactly up to floating-point pivoting tolerances.

    Raises NumericalInstabilityError when the Bland-rule pivot count exceeds
    ``50 * (columns + rows)`` of the standardized problem.
    """
    T, shift, A, rel, rhs = _standardize(lp)
    m, nz = A.shape
    m_orig = len(lp.rows)

    signs = np.where(rhs < 0, -1.0, 1.0)
    A = A * signs[:, None]
    rhs = rhs * signs
    rel = [_FLIP[r] if s < 0 else r for r, s in zip(rel, signs)]

    n_slack = sum(r != EQ for r in rel)
    art_rows = [i for i, r in enumerate(rel) if r != LE]
    ncols = nz + n_slack + len(art_rows)
    A_std = np.zeros((m, ncols))
    A_std[:, :nz] = A
    basis = [0] * m
    k = nz
    for i, r in enumerate(rel):
        if r == LE:
            A_std[i, k] = 1.0
            basis[i] = k
            k += 1
        elif r == GE:
            A_std[i, k] = -1.0
            k += 1
    art_start = k
    for a, i in enumerate(art_rows):
        A_std[i, art_start + a] = 1.0
        basis[i] = art_start + a

    tableau = _Tableau(
        tab=np.hstack([A_std, rhs[:, None]]),
        basis=basis,
        cap=50 * (ncols + m) + 50,
    )
    is_art = np.zeros(ncols, dtype=bool)
    is_art[art_start:] = True

    if art_rows:
        phase1 = np.where(is_art, -1.0, 0.0)
        tableau.run(phase1, np.ones(ncols, dtype=bool))
        infeas = -phase1[tableau.basis] @ tableau.tab[:, -1]
        if infeas > FEAS_TOL * (1.0 + np.abs(rhs).max(initial=0.0)):
            return LpSolution(LpStatus.INFEASIBLE, pivots=tableau.pivots)
        _drive_out_artificials(tableau, is_art)

    keep = np.flatnonzero(~is_art)
    col_map = -np.ones(ncols, dtype=int)
    col_map[keep] = np.arange(keep.size)
    tableau.tab = np.hstack([tableau.tab[:, keep], tableau.tab[:, -1:]])
    tableau.basis = [int(col_map[b]) for b in tableau.basis]
    A_kept = np.delete(A_std, tableau.dropped, axis=0)[:, keep]

    obj_sign = 1.0 if lp.sense is Sense.MAX else -1.0
    cost = np.zeros(keep.size)
    cost[:nz] = obj_sign * (lp.objective @ T)
    if not tableau.run(cost, np.ones(keep.size, dtype=bool)):
        return LpSolution(LpStatus.UNBOUNDED, pivots=tableau.pivots)

    z = np.zeros(keep.size)
    z[tableau.basis] = tableau.tab[:, -1]
    x = shift + T @ z[:nz]

    y_kept = (
        np.linalg.solve(A_kept[:, tableau.basis].T, cost[tableau.basis])
        if tableau.basis else np.zeros(0)
    )
    y = np.zeros(m)
    y[np.setdiff1d(np.arange(m), tableau.dropped)] = y_kept
    y = obj_sign * signs * y
    dual = y[:m_orig]
    A_orig = np.array([coeffs for coeffs, _, _ in lp.rows]).reshape(m_orig, lp.num_vars)
    reduced = lp.objective - A_orig.T @ dual
    return LpSolution(
        LpStatus.OPTIMAL,
        primal=x,
        dual=dual,
        objective=float(lp.objective @ x),
        reduced_costs=reduced,
        pivots=tableau.pivots,
    )


def _drive_out_artificials(tableau: _Tableau, is_art: np.ndarray) -> None:
    r = 0
    while r < len(tableau.basis):
        if not is_art[tableau.basis[r]]:
            r += 1
            continue
        row = tableau.tab[r, :-1]
        candidates = np.flatnonzero((np.abs(row) > PIVOT_TOL) & ~is_art)
        if candidates.size:
            tableau.pivot(r, int(candidates[0]))
            r += 1
        else:
            # redundant equality: remember its original index, dual is 0
            original = _original_row_index(tableau, r)
            tableau.dropped.append(original)
            tableau.tab = np.delete(tableau.tab, r, axis=0)
            del tableau.basis[r]


def _original_row_index(tableau: _Tableau, r: int) -> int:
    # rows are deleted in increasing original order, so count survivors
    alive = [i for i in range(len(tableau.basis) + len(tableau.dropped))
             if i not in tableau.dropped]
    return alive[r]


# -- bound-tightening LPs over the binary relaxation -------------------------

RELAXATION_KINDS = ("lower", "upper", "cut_slack")


def solve_binary_relaxation(inst: "MilpInstance", kind: str,
                            cut: "BendersCut | None" = None,
                            phi_bounds: Sequence[float] | None = None) -> LpSolution:
    """Solve an LP over ``{x in [0,1]^n, y >= 0 : Ax + Gy <= b, Bx <= b'}``.

    kind:
      ``"lower"``     minimize ``h.y`` (the phi lower bound)
      ``"upper"``     maximize ``h.y`` (the phi upper bound)
      ``"cut_slack"`` maximize the slack a cut can take: for an optimality
                      cut ``constant + coeffs.x - phi`` with phi boxed by
                      ``phi_bounds``; for a feasibility cut
                      ``-(constant + coeffs.x)``.

    Variables are ordered ``x, y`` (then ``phi`` for optimality-cut slack).
    """
    n, p = inst.n, inst.p
    with_phi = kind == "cut_slack" and cut is not None and cut.kind == "optimality"
    nv = n + p + int(with_phi)
    rows = []
    for i in range(inst.m1):
        coeffs = np.zeros(nv)
        coeffs[:n] = inst.A[i]
        coeffs[n:n + p] = inst.G[i]
        rows.append((coeffs, LE, inst.b[i]))
    for k in range(inst.m2):
        coeffs = np.zeros(nv)
        coeffs[:n] = inst.B[k]
        rows.append((coeffs, LE, inst.bprime[k]))
    bounds = [(0.0, 1.0)] * n + [(0.0, np.inf)] * p
    objective = np.zeros(nv)
    constant = 0.0
    sense = Sense.MAX

    if kind == "lower":
        objective[n:n + p] = inst.h
        sense = Sense.MIN
    elif kind == "upper":
        objective[n:n + p] = inst.h
    elif kind == "cut_slack":
        if cut is None:
            raise ValueError("cut_slack needs a cut")
        if with_phi:
            if phi_bounds is None:
                raise ValueError("optimality-cut slack needs phi_bounds")
            objective[:n] = cut.coeffs
            objective[-1] = -1.0
            constant = cut.constant
            bounds.append((float(phi_bounds[0]), float(phi_bounds[1])))
        else:
            objective[:n] = -cut.coeffs
            constant = -cut.constant
    else:
        raise ValueError(f"kind must be one of {RELAXATION_KINDS}")

    sol = solve_lp(LinearProgram(objective, sense, tuple(rows), tuple(bounds)))
    if sol.optimal and constant:
        sol.objective += constant
    return sol
