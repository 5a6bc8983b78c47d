"""Anatomy of a feasibility cut.

For an x whose subproblem is infeasible, the slack problem measures the
total violation and its dual supplies the multipliers of the cut. Strong
duality makes the two numbers agree, and the cut keeps every x with a
feasible subproblem.
"""

import numpy as np

from hybrid_benders import generate_generic_instance, solve_lp, solve_subproblem
from hybrid_benders.benders import check_master_feasible
from hybrid_benders.cuts import feasibility_dual_lp, feasibility_slack_lp, make_feasibility_cut

for seed in range(200):
    inst = generate_generic_instance(seed)
    xs = [np.array([(i >> j) & 1 for j in range(inst.n)]) for i in range(2 ** inst.n)]
    xs = [x for x in xs if check_master_feasible(x, inst)]
    bad = [x for x in xs if not solve_subproblem(inst, x).feasible]
    if bad:
        break

x_hat = bad[0]
violation = solve_lp(feasibility_slack_lp(inst, x_hat)).objective
dual_value = solve_lp(feasibility_dual_lp(inst, x_hat)).objective
cut = make_feasibility_cut(inst, x_hat)
print(f"seed {seed}: subproblem infeasible at x_hat={x_hat.tolist()}")
print(f"  total violation {violation:g}, dual value {dual_value:g}")
print(f"  multipliers mu={(np.round(cut.mu, 4) + 0.0).tolist()}")
print(f"  cut: {cut.constant:g} + {np.round(cut.coeffs, 4).tolist()} . x <= 0\n")
for x in xs:
    sp = solve_subproblem(inst, x)
    print(f"  x={x.tolist()}  cut lhs {cut.value(x):8.3f}  subproblem "
          f"{'feasible' if sp.feasible else 'infeasible'}")
