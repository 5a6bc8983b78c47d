import numpy as np
import pytest

from hybrid_benders.model import MilpInstance, generate_generic_instance

# max 2x + 3y  s.t.  x + y <= 4,  x <= 1
T1 = MilpInstance(n=1, p=1, m1=1, m2=1, c=[2], h=[3], A=[[1]], G=[[1]], b=[4],
                  B=[[1]], bprime=[1])

# max x + y  s.t.  y <= 1 + x,  y >= 2,  x <= 1   (x = 0 leaves no feasible y)
T2 = MilpInstance(n=1, p=1, m1=2, m2=1, c=[1], h=[1], A=[[-1], [0]], G=[[1], [-1]],
                  b=[1, -2], B=[[1]], bprime=[1])


def small_instances(count: int, max_n: int = 4, start: int = 0) -> list:
    """The first ``count`` generated instances with at most ``max_n`` binaries."""
    out, seed = [], start
    while len(out) < count:
        inst = generate_generic_instance(seed)
        if inst.n <= max_n:
            out.append(inst)
        seed += 1
    return out


@pytest.fixture
def t1():
    return T1


@pytest.fixture
def t2():
    return T2


@pytest.fixture(scope="session")
def suite():
    return small_instances(100)


def all_binary(n: int) -> np.ndarray:
    """Every x in {0,1}^n, one per row, bit j of row i = (i >> j) & 1."""
    idx = np.arange(2 ** n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(int)
