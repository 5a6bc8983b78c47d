"""A small benchmark sweep over solver variants.

Compares slack and exponential conversion, with and without multicut,
against the annealing baseline that uses unit penalties. Results land in a
CSV plus a JSON summary; rerunning produces the same CSV byte for byte.
"""

import sys
import tempfile
from pathlib import Path

from hybrid_benders import generate_generic_instance, run_benchmark

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="sweep-"))
instances = [(str(s), inst) for s, inst in
             ((s, generate_generic_instance(s)) for s in range(40)) if inst.n <= 4][:20]
variants = ["HBD_S_C", "HBD_E_C", "HBD_S_C_MC", "SA"]
_, summary = run_benchmark(instances, variants, out, sa_sweeps=500, sa_restarts=4)

print(f"{'variant':<12} {'feasible':>9} {'optimal':>8} {'median gap':>11} {'median iters':>13}")
for label in variants:
    m = summary["variants"][label]
    gap = m["gap"]["median"] if m["gap"] else float("nan")
    print(f"{label:<12} {m['feasibility_rate']:>9.2f} {m['optimality_rate']:>8.2f} "
          f"{gap:>11.3f} {m['iterations']['median']:>13g}")
print(f"\nrows in {out / 'results.csv'}, summary in {out / 'summary.json'}")
