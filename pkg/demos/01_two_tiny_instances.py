"""Walk through the Benders loop on two one-binary problems.

The first converges on optimality cuts alone. In the second, x = 0 leaves
the continuous part infeasible, so the loop has to derive a feasibility cut
before it settles on x = 1.
"""

from hybrid_benders import BendersConfig, MilpInstance, hbd_solve, oracle_solve

# max 2x + 3y  s.t.  x + y <= 4,  x <= 1
first = MilpInstance(n=1, p=1, m1=1, m2=1, c=[2], h=[3], A=[[1]], G=[[1]], b=[4],
                     B=[[1]], bprime=[1])
# max x + y  s.t.  y <= 1 + x,  y >= 2
second = MilpInstance(n=1, p=1, m1=2, m2=1, c=[1], h=[1], A=[[-1], [0]], G=[[1], [-1]],
                      b=[1, -2], B=[[1]], bprime=[1])


def show(name, inst):
    report = hbd_solve(inst, BendersConfig(conversion="slack", epsilon=0.25))
    print(f"== {name}: phi bounds {report.phi_bounds}")
    for step in report.trace:
        print(f"  iteration {step['iteration']}: {step['num_bits']} qubits, "
              f"x_hat={step.get('x_hat')} phi_hat={step.get('phi_hat')} "
              f"subproblem={step.get('sp_objective')} candidates walked={step.get('candidates_walked', 0)} "
              f"cuts added={step['cuts_added']}")
    for cut in report.cuts:
        terms = " ".join(f"{a:+g}*x{j}" for j, a in enumerate(cut.coeffs))
        rel = ">= phi" if cut.kind == "optimality" else "<= 0"
        print(f"  {cut.kind} cut: {cut.constant:g} {terms} {rel}")
    print(f"  -> {report.status} ({report.termination}): x={report.x_best.tolist()} "
          f"y={report.y_best.tolist()} objective={report.objective:g}; "
          f"brute force says {oracle_solve(inst).optimum:g}\n")


show("optimality cuts only", first)
show("needs a feasibility cut", second)
