"""Hybrid Benders decomposition loop.

Each iteration re-encodes the master problem as a QUBO, minimizes it with the
configured backend, decodes candidate ``x`` assignments in energy order and
solves the subproblem at them to produce cuts.

Candidate walk: the lowest-energy master-feasible decode is examined first.
If the subproblem value there reaches the decoded ``phi`` the loop has
converged. Otherwise its cut is added, unless an identical cut is already in
the master, in which case the walk moves down to the next decode. Soft
penalties let ``phi`` overshoot a tight cut, so an already-resolved ``x`` can
keep winning the QUBO; the walk turns that stall into progress on other
candidates. When no retained candidate yields a new cut the master cannot be
tightened any further and the loop stops with the best incumbent.
"""

from __future__ import annotations

import dataclasses
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cuts import cut_for, select_multicuts
from .errors import InstanceInfeasibleError, MasterInfeasibleError
from .model import BendersConfig, BendersCut, MilpInstance, SolveReport, Status
from .qubo_encode import (
    PenaltySet, PhiEncoding, QuboModel, build_phi_encoding, compute_penalties,
    decode, encode_master, tighten_phi_bounds,
)
from .qubo_solve import get_backend

FEAS_TOL = 1e-9
MAX_RETENTION = 4096


@dataclass
class Incumbent:
    x: np.ndarray
    y: np.ndarray
    objective: float


def check_master_feasible(x, inst: MilpInstance) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(inst.B @ x <= inst.bprime + FEAS_TOL))


def is_op_feasible(inst: MilpInstance, x, y, tol: float = FEAS_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = 1.0 + np.abs(inst.b)
    return bool(
        np.all((x == 0) | (x == 1))
        and np.all(y >= -tol)
        and np.all(inst.A @ x + inst.G @ y <= inst.b + tol * scale)
        and check_master_feasible(x, inst)
    )


@dataclass
class MasterState:
    inst: MilpInstance
    phi_encoding: PhiEncoding
    penalties: PenaltySet
    cuts: list = field(default_factory=list)
    best_incumbent: Optional[Incumbent] = None
    iteration: int = 0
    slack_cache: dict = field(default_factory=dict)

    def encode(self, method: str) -> QuboModel:
        return encode_master(self.inst, self.cuts, self.phi_encoding, self.penalties,
                             method, self.slack_cache)

    def has_cut(self, cut: BendersCut, extra=()) -> bool:
        return any(cut.same_as(other) for other in (*self.cuts, *extra))

    def offer(self, x, y, objective: float) -> bool:
        """Record ``(x, y)`` if it is OP-feasible and beats the incumbent."""
        if not is_op_feasible(self.inst, x, y):
            return False
        if self.best_incumbent is not None and objective <= self.best_incumbent.objective:
            return False
        self.best_incumbent = Incumbent(np.array(x, dtype=int), np.array(y, dtype=float),
                                        float(objective))
        return True


def _seed(config: BendersConfig, iteration: int) -> int:
    return (config.rng_seed + 1_000_003 * iteration) % 2**63


def hbd_solve(inst: MilpInstance, config: BendersConfig = BendersConfig()) -> SolveReport:
    """Run the hybrid Benders loop on ``inst``.

    Raises UnboundedProblemError when a subproblem is unbounded and
    EncodingImpossibleError when phi has no finite upper bound.
    """
    clock = defaultdict(float)
    started = time.perf_counter()

    def finish(report: SolveReport) -> SolveReport:
        clock["total"] = time.perf_counter() - started
        report.wall_time_ms = {k: 1000.0 * v for k, v in clock.items()}
        return report

    tick = time.perf_counter()
    try:
        lb, ub = tighten_phi_bounds(inst)
    except InstanceInfeasibleError as exc:
        return finish(SolveReport(Status.INFEASIBLE, None, None, None, 0,
                                  termination="relaxation_infeasible", notes=[str(exc)]))
    clock["bounds"] += time.perf_counter() - tick

    state = MasterState(inst, build_phi_encoding(lb, ub, config.epsilon),
                        compute_penalties(inst, ub, config.penalties))
    backend = get_backend(config.backend, config.sa_sweeps, config.sa_restarts)
    k, M = config.multicut or (1, 1)
    retention = min(max(32, 2 ** inst.n), MAX_RETENTION)
    # every x is among the decodes, so a saturated walk has examined them all
    exhaustive = config.backend == "exact" and 2 ** inst.n <= retention
    evaluated: dict = {}
    qubit_counts, trace, notes = [], [], []
    status, termination = None, ""

    for it in range(1, config.max_iterations + 1):
        state.iteration = it
        tick = time.perf_counter()
        try:
            model = state.encode(config.conversion)
        except MasterInfeasibleError as exc:
            notes.append(f"iteration {it}: {exc}")
            status, termination = Status.INFEASIBLE, "master_infeasible"
            break
        clock["encode"] += time.perf_counter() - tick
        qubit_counts.append(model.num_bits)

        tick = time.perf_counter()
        samples = backend(model, seed=_seed(config, it), retention=retention,
                          distinct_on=model.x_bits)
        clock["qubo"] += time.perf_counter() - tick

        candidates, seen, rejected = [], set(), 0
        for sample in samples:
            dec = decode(model, sample.bits)
            key = tuple(dec.x)
            if key in seen:
                continue
            seen.add(key)
            if check_master_feasible(dec.x, inst):
                candidates.append(dec)
            else:
                rejected += 1
        step = {"iteration": it, "num_bits": model.num_bits,
                "master_infeasible_decodes": rejected}
        if not candidates:
            notes.append(f"iteration {it}: no master-feasible decode")
            step["failed"] = True
            trace.append(step)
            continue
        if rejected and tuple(decode(model, samples.best.bits).x) not in {
                tuple(c.x) for c in candidates}:
            notes.append(f"iteration {it}: best decode violates Bx <= b'")

        tick = time.perf_counter()
        top = candidates[0]
        step.update(x_hat=[int(v) for v in top.x], phi_hat=top.phi)
        new_cuts, converged, walked = [], False, 0
        for rank, cand in enumerate(candidates):
            walked += 1
            key = tuple(int(v) for v in cand.x)
            if key not in evaluated:
                evaluated[key] = cut_for(inst, cand.x, it)
            sp, cut = evaluated[key]
            if sp.feasible:
                state.offer(cand.x, sp.y, float(inst.c @ cand.x) + sp.objective)
            if rank == 0:
                step["sp_objective"] = sp.objective if sp.feasible else None
                if sp.feasible and sp.objective >= top.phi - config.convergence_tol:
                    converged = True
                    break
            if not state.has_cut(cut, new_cuts):
                new_cuts.append(dataclasses.replace(cut, iteration_created=it))
                if len(new_cuts) >= k:
                    break
        clock["subproblem"] += time.perf_counter() - tick
        step["candidates_walked"] = walked

        if converged:
            step["cuts_added"] = 0
            trace.append(step)
            status, termination = Status.OPTIMAL, "converged"
            break
        if not new_cuts:
            step["cuts_added"] = 0
            trace.append(step)
            termination = "saturated"
            if exhaustive:
                status = Status.OPTIMAL if state.best_incumbent else Status.INFEASIBLE
            else:
                status = Status.FEASIBLE if state.best_incumbent else Status.ITERATION_LIMIT
            break
        selected = new_cuts if len(new_cuts) <= M else select_multicuts(new_cuts, M, inst.n)
        state.cuts.extend(selected)
        step["cuts_added"] = len(selected)
        trace.append(step)
    else:
        termination = "iteration_limit"
        status = Status.FEASIBLE if state.best_incumbent else Status.ITERATION_LIMIT

    inc = state.best_incumbent
    if inc is None and status in (Status.OPTIMAL, Status.FEASIBLE):
        status = Status.INFEASIBLE
    if inc is not None and status == Status.INFEASIBLE:
        # a cut or row claimed infeasibility although a feasible point is known
        notes.append("infeasibility claim contradicted by incumbent")
        status = Status.FEASIBLE
    return finish(SolveReport(
        status=status,
        x_best=None if inc is None else inc.x,
        y_best=None if inc is None else inc.y,
        objective=None if inc is None else inc.objective,
        iterations=state.iteration,
        cuts=list(state.cuts),
        qubit_counts=qubit_counts,
        phi_bounds=(lb, ub),
        termination=termination,
        notes=notes,
        trace=trace,
    ))
