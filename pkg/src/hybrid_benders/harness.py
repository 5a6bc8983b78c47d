"""Brute-force oracle, benchmark sweeps and the summary metrics.

CSV columns (fixed, in order)::

    instance_seed,variant,status,objective,opt,gap,iterations,qubit_max,wall_time_ms

``objective``/``opt``/``gap`` are empty when undefined. ``wall_time_ms`` is
empty unless timing is requested, which keeps repeated sweeps byte-identical.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .benders import check_master_feasible, hbd_solve
from .cuts import solve_subproblem
from .errors import HbdError, UnboundedProblemError
from .model import (
    CONSTRUCTIVE, EXPONENTIAL, SLACK, BendersConfig, ManualPenalties, MilpInstance, Status,
)

CSV_COLUMNS = ("instance_seed", "variant", "status", "objective", "opt", "gap",
               "iterations", "qubit_max", "wall_time_ms")
OPT_RTOL = 1e-6
ORACLE_MAX_N = 20
UNIT_PENALTIES = ManualPenalties(1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    optimum: Optional[float] = None
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None


def oracle_solve(inst: MilpInstance) -> OracleResult:
    """Enumerate every master-feasible ``x`` and solve its y-LP."""
    if inst.n > ORACLE_MAX_N:
        raise ValueError(f"oracle enumerates 2^n assignments; n={inst.n} > {ORACLE_MAX_N}")
    best = OracleResult(False)
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits, dtype=int)
        if not check_master_feasible(x, inst):
            continue
        sp = solve_subproblem(inst, x)
        if not sp.feasible:
            continue
        value = float(inst.c @ x) + sp.objective
        if not best.feasible or value > best.optimum:
            best = OracleResult(True, value, x, sp.y)
    return best


def requires_feasibility_cut(inst: MilpInstance) -> bool:
    """True if some master-feasible ``x`` has an infeasible subproblem."""
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits, dtype=int)
        if check_master_feasible(x, inst) and not solve_subproblem(inst, x).feasible:
            return True
    return False


# -- variants -------------------------------------------------------------------

def variant_config(label: str, backend: str = "exact", epsilon: float = 0.25,
                   max_iterations: int = 50, seed: int = 0,
                   multicut: tuple = (5, 3), manual: ManualPenalties = UNIT_PENALTIES,
                   sa_sweeps: int = 2000, sa_restarts: int = 8) -> BendersConfig:
    """Translate ``HBD_<S|E>_<C|M>[_MC]`` or ``SA`` into a configuration.

    ``SA`` is the HBD loop on the annealing backend with unit manual
    penalties and slack conversion.
    """
    common = dict(epsilon=epsilon, max_iterations=max_iterations, rng_seed=seed,
                  sa_sweeps=sa_sweeps, sa_restarts=sa_restarts)
    if label == "SA":
        return BendersConfig(conversion=SLACK, penalties=manual, backend="sa", **common)
    parts = label.split("_")
    if len(parts) not in (3, 4) or parts[0] != "HBD" or (len(parts) == 4 and parts[3] != "MC"):
        raise ValueError(f"bad variant label {label!r}")
    conversion = {"S": SLACK, "E": EXPONENTIAL}.get(parts[1])
    penalties = {"C": CONSTRUCTIVE, "M": manual}.get(parts[2])
    if conversion is None or penalties is None:
        raise ValueError(f"bad variant label {label!r}")
    return BendersConfig(conversion=conversion, penalties=penalties, backend=backend,
                         multicut=multicut if len(parts) == 4 else None, **common)


# -- records and metrics --------------------------------------------------------

@dataclass
class BenchmarkRecord:
    instance_seed: str
    variant: str
    status: str
    objective: Optional[float]
    opt: Optional[float]
    gap: Optional[float]
    iterations: int
    qubit_max: int
    wall_time_ms: Optional[float] = None
    error: str = ""

    @property
    def feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)

    @property
    def optimal(self) -> bool:
        return (self.feasible and self.objective is not None and self.opt is not None
                and abs(self.objective - self.opt) <= OPT_RTOL * (1 + abs(self.opt)))

    @property
    def gap_absolute(self) -> bool:
        return self.opt is not None and abs(self.opt) <= 1e-9

    def csv_row(self) -> list:
        def num(v):
            return "" if v is None else repr(float(v))
        return [self.instance_seed, self.variant, self.status, num(self.objective),
                num(self.opt), num(self.gap), str(self.iterations), str(self.qubit_max),
                num(self.wall_time_ms)]


def optimality_gap(objective: Optional[float], opt: Optional[float]) -> Optional[float]:
    """``(opt - obj) / opt``; the absolute difference when ``opt`` is zero."""
    if objective is None or opt is None:
        return None
    if abs(opt) <= 1e-9:
        return abs(opt - objective)
    return (opt - objective) / opt


def _quartiles(values) -> Optional[dict]:
    if not values:
        return None
    q1, med, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return {"q1": float(q1), "median": float(med), "q3": float(q3),
            "min": float(min(values)), "max": float(max(values))}


def compute_metrics(records: Sequence[BenchmarkRecord]) -> dict:
    count = len(records)
    feasible = [r for r in records if r.feasible]
    optimal = [r for r in records if r.optimal]
    gaps = [r.gap for r in feasible if r.gap is not None]
    return {
        "count": count,
        "feasible": len(feasible),
        "optimal": len(optimal),
        "feasibility_rate": len(feasible) / count if count else 0.0,
        "optimality_rate": len(optimal) / count if count else 0.0,
        "gap": _quartiles(gaps),
        "gap_absolute_fallbacks": sum(r.gap_absolute for r in feasible),
        "iterations": _quartiles([r.iterations for r in records]),
        "errors": sum(r.status == Status.ERROR for r in records),
    }


def records_to_csv(records: Sequence[BenchmarkRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    def num(v):
        return None if v == "" else float(v)
    return [
        BenchmarkRecord(r["instance_seed"], r["variant"], r["status"], num(r["objective"]),
                        num(r["opt"]), num(r["gap"]), int(r["iterations"]),
                        int(r["qubit_max"]), num(r["wall_time_ms"]))
        for r in rows
    ]


# -- sweep ----------------------------------------------------------------------

def _run_one(args) -> BenchmarkRecord:
    ident, inst, label, opt, options, record_timing = args
    try:
        report = hbd_solve(inst, variant_config(label, **options))
    except HbdError as exc:
        return BenchmarkRecord(ident, label, Status.ERROR, None, opt, None, 0, 0,
                               error=f"{type(exc).__name__}: {exc}")
    return BenchmarkRecord(
        ident, label, report.status, report.objective, opt,
        optimality_gap(report.objective, opt), report.iterations,
        max(report.qubit_counts, default=0),
        report.wall_time_ms.get("total") if record_timing else None,
    )


def run_benchmark(instances: Sequence[tuple], variants: Sequence[str],
                  out_dir: Optional[os.PathLike] = None, workers: int = 1,
                  record_timing: bool = False, **options) -> tuple:
    """Solve every ``(instance id, instance)`` with every variant label.

    ``options`` go to :func:`variant_config` (backend, epsilon, seed, ...).
    Rows come out in (instance, variant) order whatever the worker count.
    Writes ``results.csv`` and ``summary.json`` into ``out_dir`` when given.
    Returns ``(records, summary)``.
    """
    for label in variants:
        variant_config(label, **options)  # fail fast on bad labels
    oracle = {}
    for ident, inst in instances:
        try:
            res = oracle_solve(inst)
            oracle[ident] = res.optimum if res.feasible else None
        except UnboundedProblemError:
            oracle[ident] = None
    jobs = [(str(ident), inst, label, oracle[ident], options, record_timing)
            for ident, inst in instances for label in variants]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    summary = {
        "overall": compute_metrics(records),
        "variants": {v: compute_metrics([r for r in records if r.variant == v])
                     for v in variants},
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(records_to_csv(records))
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return records, summary
