import itertools
import math

import numpy as np
import pytest

from hybrid_benders.benders import check_master_feasible
from hybrid_benders.errors import InternalInconsistencyError, UnboundedProblemError
from hybrid_benders.lp_simplex import solve_lp
from hybrid_benders.model import BendersCut, MilpInstance, generate_generic_instance
from hybrid_benders.cuts import (
    cut_for, density_matrix, feasibility_dual_lp, feasibility_slack_lp, make_feasibility_cut,
    make_optimality_cut, max_coverage, select_multicuts, solve_subproblem,
)

from conftest import T1, T2, all_binary


def infeasible_pairs(count):
    """(instance, x_hat) pairs with master-feasible x_hat and infeasible subproblem."""
    pairs, seed = [], 0
    while len(pairs) < count:
        inst = generate_generic_instance(seed)
        seed += 1
        if inst.n > 4:
            continue
        for x in all_binary(inst.n):
            if check_master_feasible(x, inst) and not solve_subproblem(inst, x).feasible:
                pairs.append((inst, x))
    return pairs[:count]


def test_subproblem_t1():
    at0, at1 = solve_subproblem(T1, [0]), solve_subproblem(T1, [1])
    assert at0.feasible and at0.objective == pytest.approx(12) and at0.mu.tolist() == [3]
    assert at1.feasible and at1.objective == pytest.approx(9) and at1.mu.tolist() == [3]


def test_subproblem_t2_infeasible_at_zero():
    assert not solve_subproblem(T2, [0]).feasible


def test_unbounded_subproblem_raises():
    inst = MilpInstance(n=1, p=1, m1=1, m2=0, c=[1], h=[1], A=[[1]], G=[[-1]], b=[0],
                        B=np.zeros((0, 1)), bprime=[])
    with pytest.raises(UnboundedProblemError):
        solve_subproblem(inst, [0])


def test_optimality_cut_t1():
    cut = make_optimality_cut([3.0], T1)
    assert cut.kind == "optimality" and cut.constant == 12 and cut.coeffs.tolist() == [-3]


def test_zero_dual_gives_phi_le_zero():
    cut = make_optimality_cut([0.0], T1)
    assert cut.constant == 0 and cut.coeffs.tolist() == [0]


def test_optimality_cut_is_tight_at_its_source():
    inst = generate_generic_instance(4)
    for x in all_binary(inst.n):
        sp, cut = cut_for(inst, x)
        if sp.feasible:
            assert cut.value(x) == pytest.approx(sp.objective, abs=1e-7)


def test_feasibility_cut_t2():
    cut = make_feasibility_cut(T2, [0])
    assert cut.kind == "feasibility"
    assert cut.mu.tolist() == [-1, -1]
    assert cut.constant == pytest.approx(1) and cut.coeffs.tolist() == [-1]
    assert cut.value([0]) == pytest.approx(1) and cut.value([1]) == pytest.approx(0)
    assert T2.G.T @ cut.mu == pytest.approx([0])


def test_feasibility_cut_on_feasible_point_is_inconsistent():
    with pytest.raises(InternalInconsistencyError):
        make_feasibility_cut(T2, [1])


def test_feasibility_cuts_on_200_infeasible_subproblems():
    for inst, x_hat in infeasible_pairs(200):
        cut = make_feasibility_cut(inst, x_hat)
        assert np.all((cut.mu <= 0) & (cut.mu >= -1))
        measure = solve_lp(feasibility_slack_lp(inst, x_hat)).objective
        dual = solve_lp(feasibility_dual_lp(inst, x_hat)).objective
        assert abs(measure - dual) <= 1e-6 * (1 + abs(measure))
        assert cut.value(x_hat) > 0
        assert cut.value(x_hat) == pytest.approx(measure, abs=1e-6)
        for x in all_binary(inst.n):
            sp = solve_subproblem(inst, x)
            if check_master_feasible(x, inst) and sp.feasible:
                assert cut.value(x) <= 1e-7


def test_optimality_cuts_bound_every_subproblem_value():
    for seed in range(30):
        inst = generate_generic_instance(seed)
        if inst.n > 4:
            continue
        xs = [x for x in all_binary(inst.n) if check_master_feasible(x, inst)]
        values = {tuple(x): solve_subproblem(inst, x) for x in xs}
        for x in xs:
            sp = values[tuple(x)]
            if not sp.feasible:
                continue
            cut = make_optimality_cut(sp.mu, inst)
            for other in xs:
                if values[tuple(other)].feasible:
                    assert values[tuple(other)].objective <= cut.value(other) + 1e-7


# -- multi-cut selection --------------------------------------------------------------

def brute_force_coverage(D, M):
    best, best_cover = None, -1
    for size in range(1, M + 1):
        for subset in itertools.combinations(range(D.shape[0]), size):
            cover = int(D[list(subset)].any(axis=0).sum())
            if cover > best_cover:
                best, best_cover = list(subset), cover
    return best, best_cover


def test_coverage_example():
    D = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0]])
    assert max_coverage(D, 2) == [0, 1]


def test_single_candidate():
    assert max_coverage(np.array([[0, 1]]), 1) == [0]


def test_all_zero_rows_prefer_smallest_subset():
    assert max_coverage(np.zeros((3, 4), dtype=int), 2) == [0]


def test_coverage_rejects_bad_budget():
    with pytest.raises(ValueError):
        max_coverage(np.ones((2, 2)), 3)


def test_coverage_equals_brute_force_on_500_matrices():
    rng = np.random.default_rng(99)
    for _ in range(500):
        k, n = int(rng.integers(1, 9)), int(rng.integers(1, 13))
        M = int(rng.integers(1, k + 1))
        D = (rng.random((k, n)) < rng.uniform(0.1, 0.7)).astype(int)
        assert math.comb(k, M) <= 10**5
        picked = max_coverage(D, M)
        assert picked == brute_force_coverage(D, M)[0]


def test_greedy_is_within_approximation_bound():
    rng = np.random.default_rng(7)
    k, n, M = 20, 12, 8
    assert math.comb(k, M) > 10**5
    for _ in range(3):
        D = (rng.random((k, n)) < 0.15).astype(int)
        picked = max_coverage(D, M)
        assert len(picked) <= M
        greedy = int(D[picked].any(axis=0).sum())
        masks = [int(sum(1 << j for j in np.flatnonzero(row))) for row in D]
        exact = 0
        for subset in itertools.combinations(masks, M):
            covered = 0
            for m in subset:
                covered |= m
            exact = max(exact, bin(covered).count("1"))
        assert greedy >= (1 - 1 / math.e) * exact


def test_density_threshold_ignores_float_noise():
    cuts = [BendersCut("optimality", [1e-12, 2.0, 0.0], 1.0, [1.0]),
            BendersCut("feasibility", [0.0, 0.0, -1.0], 1.0, [-1.0])]
    assert density_matrix(cuts, 3).tolist() == [[0, 1, 0], [0, 0, 1]]


def test_select_multicuts_returns_cut_objects():
    cuts = [BendersCut("optimality", c, 1.0, [1.0]) for c in
            ([1.0, 1.0, 0, 0], [0, 0, 1.0, 1.0], [1.0, 0, 1.0, 0])]
    assert select_multicuts(cuts, 2) == cuts[:2]
