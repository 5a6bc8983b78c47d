"""Does adding several cuts per iteration pay off?

Runs the exact-backend loop with one cut per iteration and with up to three
cuts chosen by maximum coverage out of five candidates, over a batch of
small generated instances.
"""

import numpy as np

from hybrid_benders import BendersConfig, generate_generic_instance, hbd_solve

instances = [generate_generic_instance(s) for s in range(60)]
instances = [inst for inst in instances if inst.n <= 4][:40]

single = [hbd_solve(inst).iterations for inst in instances]
multi = [hbd_solve(inst, BendersConfig(multicut=(5, 3))).iterations for inst in instances]

print(f"{len(instances)} instances")
print(f"  one cut per iteration:   median {np.median(single):g}, mean {np.mean(single):.2f}")
print(f"  up to 3 of 5 candidates: median {np.median(multi):g}, mean {np.mean(multi):.2f}")
fewer = sum(m < s for s, m in zip(single, multi))
print(f"  multicut needed fewer iterations on {fewer}, more on "
      f"{sum(m > s for s, m in zip(single, multi))}")
