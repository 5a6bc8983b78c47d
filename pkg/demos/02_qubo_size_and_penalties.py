"""How big is the master QUBO, and where do the qubits go?

Bit counts for phi follow from LP bounds on the subproblem value. Slack
conversion adds bits per constraint; the exponential penalty adds none.
"""

from hybrid_benders import generate_generic_instance, hbd_solve
from hybrid_benders.qubo_encode import (
    PhiBit, SlackBit, XBit, build_phi_encoding, compute_penalties, encode_master,
    tighten_phi_bounds,
)

inst = generate_generic_instance(3)
lb, ub = tighten_phi_bounds(inst)
enc = build_phi_encoding(lb, ub, epsilon=0.25)
pen = compute_penalties(inst, ub)
print(f"instance seed 3: n={inst.n} p={inst.p} m1={inst.m1}, c={inst.c.tolist()}")
print(f"phi in [{lb:g}, {ub:g}] -> P={enc.P} D={enc.D} N={enc.N}")
print(f"Ub={pen.Ub:g}: weights x {pen.pi_obj_x:g}, phi {pen.pi_obj_phi:g}, "
      f"cuts {pen.pi_obj_cut:g}, master rows {pen.pi_cons_MP:g}\n")

cuts = hbd_solve(inst).cuts
print(f"{'cuts':>5} {'slack':>6} {'exponential':>12}   slack breakdown (x/phi/slack)")
for k in range(len(cuts) + 1):
    s = encode_master(inst, cuts[:k], enc, pen, "slack")
    e = encode_master(inst, cuts[:k], enc, pen, "exponential")
    parts = [len(s.indices(t)) for t in (XBit, PhiBit, SlackBit)]
    print(f"{k:>5} {s.num_bits:>6} {e.num_bits:>12}   {parts[0]}/{parts[1]}/{parts[2]}")
