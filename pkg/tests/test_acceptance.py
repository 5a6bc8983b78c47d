"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line with the measured numbers, so
``pytest tests/test_acceptance.py -v`` doubles as a report.
"""

import math
import time

import numpy as np
import pytest

from hybrid_benders.benders import check_master_feasible, hbd_solve, is_op_feasible
from hybrid_benders.cli import main as cli_main
from hybrid_benders.cuts import (
    feasibility_dual_lp, feasibility_slack_lp, make_feasibility_cut, max_coverage,
    select_multicuts, solve_subproblem,
)
from hybrid_benders.harness import oracle_solve
from hybrid_benders.lp_simplex import LpStatus, Sense, solve_lp
from hybrid_benders.model import BendersConfig, BendersCut
from hybrid_benders.qubo_encode import (
    build_phi_encoding, compute_penalties, decode, encode_master, tighten_phi_bounds,
)

from conftest import all_binary, small_instances
from test_cuts import brute_force_coverage, infeasible_pairs
from test_lp_simplex import STATUS_LIBRARY, _dual_feasible, _random_lp, _scipy, lp
from test_qubo_encode import all_energies, subset_sums


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def oracles(suite):
    return {inst.seed: oracle_solve(inst) for inst in suite}


def _run_suite(suite, config):
    start = time.perf_counter()
    reports = [hbd_solve(inst, config) for inst in suite]
    return reports, time.perf_counter() - start


@pytest.fixture(scope="module")
def slack_runs(suite):
    return _run_suite(suite, BendersConfig(conversion="slack", penalties="constructive"))


def _grid_miss(inst, rep, opt):
    enc = build_phi_encoding(*rep.phi_bounds, 0.25)
    return not enc.represents(opt.optimum - float(inst.c @ opt.x))


def test_1_exact_backend_end_to_end(suite, oracles, slack_runs, report):
    start = time.perf_counter()
    reports, solve_time = slack_runs
    feasible = matched = 0
    unflagged = []
    for inst, rep in zip(suite, reports):
        opt = oracles[inst.seed]
        feasible += rep.x_best is not None and is_op_feasible(inst, rep.x_best, rep.y_best)
        if rep.objective is not None and abs(rep.objective - opt.optimum) <= 1e-6 * (1 + abs(opt.optimum)):
            matched += 1
        elif not _grid_miss(inst, rep, opt):
            unflagged.append(inst.seed)
    elapsed = solve_time + time.perf_counter() - start
    ok = feasible == len(suite) and matched >= 95 and not unflagged and elapsed < 60
    report(1, ok, f"OP-feasible {feasible}/{len(suite)}, oracle match {matched}/{len(suite)}, "
                  f"non-grid misses {unflagged}, {elapsed:.1f}s")


def test_2_exponential_feasibility(suite, report):
    reports, elapsed = _run_suite(suite, BendersConfig(conversion="exponential"))
    feasible = sum(r.x_best is not None and is_op_feasible(inst, r.x_best, r.y_best)
                   for inst, r in zip(suite, reports))
    ok = feasible == len(suite) and elapsed < 60
    report(2, ok, f"OP-feasible {feasible}/{len(suite)}, {elapsed:.1f}s")


def test_3_feasibility_cut_correctness(report):
    pairs = infeasible_pairs(200)
    excluded = valid = dual_match = 0
    for inst, x_hat in pairs:
        cut = make_feasibility_cut(inst, x_hat)
        residual = inst.b - inst.A @ x_hat
        excluded += residual @ cut.mu > 0
        violation = solve_lp(feasibility_slack_lp(inst, x_hat)).objective
        dual = solve_lp(feasibility_dual_lp(inst, x_hat)).objective
        dual_match += abs(violation - dual) <= 1e-6 * (1 + abs(violation))
        valid += all(cut.value(x) <= 1e-7 for x in all_binary(inst.n)
                     if check_master_feasible(x, inst) and solve_subproblem(inst, x).feasible)
    n = len(pairs)
    ok = n == 200 and excluded == valid == dual_match == n
    report(3, ok, f"{n} pairs: excluded {excluded}, valid {valid}, slack LP = dual LP {dual_match}")


def test_4_penalty_ranking(report):
    checked, feasible, seed = 0, 0, 0
    while checked < 50:
        inst = small_instances(1, max_n=3, start=seed)[0]
        seed = inst.seed + 1
        lb, ub = tighten_phi_bounds(inst)
        model = encode_master(inst, [], build_phi_encoding(lb, ub, 0.25),
                              compute_penalties(inst, ub), "slack")
        if model.num_bits > 20:
            continue
        bits, energy = all_energies(model)
        best = decode(model, bits[int(np.argmin(energy))])
        checked += 1
        feasible += check_master_feasible(best.x, inst)
    report(4, feasible == checked, f"global minimizer master-feasible on {feasible}/{checked}")


def _expected_bits(lb, ub, eps):
    P = math.floor(math.log2(math.floor(ub))) + 1 if ub >= 1 else 0
    D = math.floor(math.log2(1 / eps)) + 1
    N = math.floor(math.log2(abs(lb))) + 1 if lb <= -1 else 0
    return P, D, N


def test_5_encoding_arithmetic(report):
    rng = np.random.default_rng(5)
    table = [(-3.0, 10.0, 0.25), (0.0, 12.0, 0.25), (-5.0, -1.0, 0.5), (0.0, 0.0, 1.0),
             (-0.5, 0.5, 0.5), (0.0, 0.75, 0.25)]
    while len(table) < 50:
        lb = float(rng.choice([0.0, -rng.integers(1, 40), -rng.uniform(0, 40)]))
        ub = float(rng.choice([0.0, rng.integers(1, 60), rng.uniform(0, 60)]))
        if rng.random() < 0.2:
            ub = min(ub, 0.0)
        if lb > ub:
            lb, ub = ub, lb
        table.append((lb, ub, float(rng.choice([1.0, 0.5, 0.25, 0.125, 0.1]))))
    wrong, grid_fail = [], 0
    for lb, ub, eps in table:
        enc = build_phi_encoding(lb, ub, eps)
        if (enc.P, enc.D, enc.N) != _expected_bits(lb, ub, eps):
            wrong.append((lb, ub, eps))
        if (ub <= 0 and enc.P) or (lb >= 0 and enc.N):
            wrong.append((lb, ub, eps))
        if enc.num_bits <= 14:
            sums = subset_sums(enc.bit_weights)
            step = 2.0 ** -enc.D
            # the allocated range: integer parts cover floor(|lb|) and floor(ub)
            lo = -round((2 ** enc.N - 1) / step) if enc.N else math.ceil(max(lb, enc.min_value) / step)
            hi = round((2 ** enc.P - 1) / step) if enc.P else math.floor(min(ub, enc.max_value) / step)
            grid_fail += sum(round(k * step, 9) not in sums for k in range(lo, hi + 1))
    first = build_phi_encoding(-3, 10, 0.25)
    ok = (first.P, first.D, first.N) == (4, 3, 2) and not wrong and grid_fail == 0
    report(5, ok, f"(-3,10,0.25) -> P={first.P} D={first.D} N={first.N}; "
                  f"{len(table)} cases, formula mismatches {wrong}, unreachable grid points {grid_fail}")


def test_6_qubit_saving(suite, slack_runs, report):
    reports, _ = slack_runs
    violations = []
    for inst, rep in zip(suite, reports):
        if inst.m2 < 1:
            continue
        lb, ub = tighten_phi_bounds(inst)
        enc = build_phi_encoding(lb, ub, 0.25)
        pen = compute_penalties(inst, ub)
        for cuts in ([], rep.cuts):
            s = encode_master(inst, cuts, enc, pen, "slack").num_bits
            e = encode_master(inst, cuts, enc, pen, "exponential").num_bits
            if not e < s:
                violations.append((inst.seed, len(cuts), e, s))
    report(6, not violations, f"exponential < slack on every master state; violations {violations}")


def test_7_multicut_selection(report):
    rng = np.random.default_rng(77)
    agree = cases = 0
    while cases < 500:
        k, n = int(rng.integers(1, 9)), int(rng.integers(1, 13))
        M = int(rng.integers(1, k + 1))
        if math.comb(k, M) > 10**5:
            continue
        D = (rng.random((k, n)) < rng.uniform(0.05, 0.8)).astype(float)
        cuts = [BendersCut("optimality", row * rng.uniform(0.5, 2.0, n), 0.0, [0.0])
                for row in D]
        picked = [cuts.index(c) for c in select_multicuts(cuts, M, n)]
        cases += 1
        agree += picked == brute_force_coverage(D.astype(int), M)[0] == max_coverage(D, M)
    report(7, agree == cases, f"matches brute force on {agree}/{cases} density matrices")


def test_8_convergence_trend(suite, slack_runs, report):
    single, _ = slack_runs
    multi, _ = _run_suite(suite, BendersConfig(multicut=(5, 3)))
    med_single = float(np.median([r.iterations for r in single]))
    med_multi = float(np.median([r.iterations for r in multi]))
    report(8, med_multi <= med_single,
           f"median iterations with multicut {med_multi}, without {med_single}")


def test_9_lp_solver(report):
    rng = np.random.default_rng(9)
    duality = optimal = 0
    while optimal < 500:
        problem = _random_lp(rng)
        ref = _scipy(problem)
        sol = solve_lp(problem)
        if ref.status != 0:
            continue
        optimal += 1
        scale = 1 + abs(sol.objective)
        ref_obj = -ref.fun if problem.sense is Sense.MAX else ref.fun
        duality += (sol.status is LpStatus.OPTIMAL
                    and abs(sol.dual_objective(problem) - sol.objective) <= 1e-6 * scale
                    and abs(sol.objective - ref_obj) <= 1e-6 * scale
                    and _dual_feasible(problem, sol))
    statuses = sum(solve_lp(lp(o, r, s, b)).status is e for o, r, s, b, e in STATUS_LIBRARY)
    ok = duality == optimal and statuses == len(STATUS_LIBRARY) == 20
    report(9, ok, f"strong duality {duality}/{optimal}, status library {statuses}/{len(STATUS_LIBRARY)}")


def test_10_determinism(tmp_path, report):
    inst_dir = tmp_path / "instances"
    assert cli_main(["generate", "--count", "8", "--seed", "100", "--max-n", "4",
                     "--out", str(inst_dir)]) == 0
    outputs = []
    for run in ("first", "second"):
        code = cli_main(["bench", "--instances", str(inst_dir), "--variants",
                         "HBD_S_C,HBD_E_C,HBD_S_C_MC,SA", "--out", str(tmp_path / run)])
        assert code == 0
        outputs.append((tmp_path / run / "results.csv").read_bytes())
    rows = outputs[0].count(b"\n") - 1
    report(10, outputs[0] == outputs[1], f"two bench runs, {rows} rows, byte-identical: "
                                         f"{outputs[0] == outputs[1]}")
