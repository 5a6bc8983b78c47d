"""MILP master problem -> QUBO.

The master problem is ``max c.x + phi`` over binary ``x`` subject to
``B x <= b'`` and the accumulated Benders cuts. The QUBO built here is a
*minimization*: objective terms enter negated, constraints enter as
nonnegative (slack method) or Taylor-expanded exponential (exponential
method) penalties.

Bit layout is always ``[x bits | phi bits | slack bits]``; every bit carries a
role tag in ``QuboModel.registry``.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EncodingImpossibleError, InstanceInfeasibleError, MasterInfeasibleError
from .lp_simplex import LpStatus, solve_binary_relaxation
from .model import (
    CONSTRUCTIVE, EXPONENTIAL, OPTIMALITY, SLACK,
    BendersCut, ManualPenalties, MilpInstance, PenaltyMode,
)

_SNAP = 1e-9


# -- role tags ------------------------------------------------------------------

@dataclass(frozen=True)
class XBit:
    index: int


@dataclass(frozen=True)
class PhiBit:
    position: int
    weight: float


@dataclass(frozen=True)
class SlackBit:
    constraint: str
    position: int
    weight: float


Role = Union[XBit, PhiBit, SlackBit]


def role_to_dict(role: Role) -> dict:
    if isinstance(role, XBit):
        return {"role": "x", "index": role.index}
    if isinstance(role, PhiBit):
        return {"role": "phi", "position": role.position, "weight": role.weight}
    return {"role": "slack", "constraint": role.constraint,
            "position": role.position, "weight": role.weight}


def role_from_dict(doc: dict) -> Role:
    kind = doc.get("role")
    if kind == "x":
        return XBit(int(doc["index"]))
    if kind == "phi":
        return PhiBit(int(doc["position"]), float(doc["weight"]))
    if kind == "slack":
        return SlackBit(str(doc["constraint"]), int(doc["position"]), float(doc["weight"]))
    raise ValueError(f"unknown role tag {doc!r}")


# -- phi encoding ---------------------------------------------------------------

def _integer_bits(bound: float) -> int:
    """Bits so that ``2**bits - 1 >= floor(bound)``; zero when bound < 1."""
    whole = math.floor(bound + _SNAP)
    return int(math.floor(math.log2(whole))) + 1 if whole >= 1 else 0


@dataclass(frozen=True)
class PhiEncoding:
    """Fixed-point bits for phi.

    Positive integer bits weigh ``2**i``, fractional bits ``2**-j`` and
    negative bits ``-2**(k-1)``. When ``-1 < lb < 0`` a single extra bit of
    weight ``-(1 - 2**-D)`` (``fallback``) keeps ``lb`` reachable.
    """

    P: int
    D: int
    N: int
    fallback: bool = False
    lb: float = 0.0
    ub: float = 0.0
    epsilon: float = 0.25

    @property
    def bit_weights(self) -> np.ndarray:
        w = [2.0 ** i for i in range(self.P)]
        w += [2.0 ** -j for j in range(1, self.D + 1)]
        w += [-(2.0 ** (k - 1)) for k in range(1, self.N + 1)]
        if self.fallback:
            w.append(-(1.0 - 2.0 ** -self.D))
        return np.array(w)

    @property
    def num_bits(self) -> int:
        return self.P + self.D + self.N + int(self.fallback)

    @property
    def max_value(self) -> float:
        w = self.bit_weights
        return float(w[w > 0].sum())

    @property
    def min_value(self) -> float:
        w = self.bit_weights
        return float(w[w < 0].sum())

    def represents(self, value: float, tol: float = 1e-9) -> bool:
        """True if some bit pattern encodes ``value`` (within ``tol``)."""
        scaled = value * 2.0 ** self.D
        on_grid = abs(scaled - round(scaled)) <= tol * 2.0 ** self.D
        return on_grid and self.min_value - tol <= value <= self.max_value + tol


def build_phi_encoding(lb: float, ub: float, epsilon: float) -> PhiEncoding:
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if lb > ub:
        raise ValueError(f"lb={lb} exceeds ub={ub}")
    P = _integer_bits(ub)
    D = int(math.floor(math.log2(1.0 / epsilon) + _SNAP)) + 1
    N = _integer_bits(abs(lb)) if lb <= -1 else 0
    fallback = -1 < lb < 0
    return PhiEncoding(P, D, N, fallback, float(lb), float(ub), float(epsilon))


def tighten_phi_bounds(inst: MilpInstance) -> tuple:
    """LP bounds on ``h.y`` over the binary relaxation: ``(min, max)``."""
    upper = solve_binary_relaxation(inst, "upper")
    if upper.status is LpStatus.UNBOUNDED:
        raise EncodingImpossibleError("phi upper-bound LP is unbounded")
    if upper.status is LpStatus.INFEASIBLE:
        raise InstanceInfeasibleError("LP relaxation of the instance is infeasible")
    lower = solve_binary_relaxation(inst, "lower")
    if not lower.optimal:
        raise InstanceInfeasibleError(f"phi lower-bound LP is {lower.status.value}")
    return _snap(lower.objective), _snap(upper.objective)


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) <= 1e-9 * (1 + abs(v)) else float(v)


# -- penalties --------------------------------------------------------------------

@dataclass(frozen=True)
class PenaltySet:
    Ub: float
    pi_obj_x: float
    pi_obj_phi: float
    pi_obj_cut: float
    pi_cons_MP: float


def compute_penalties(inst: MilpInstance, phi_max: float,
                      mode: PenaltyMode = CONSTRUCTIVE) -> PenaltySet:
    """Penalty weights from ``Ub = |sum(c)| + |phi_max| + 1``.

    Note the absolute value of the *sum* of ``c``, not the sum of absolute
    values; for mixed-sign ``c`` this can under-bound ``c.x + phi``.
    """
    Ub = abs(float(np.sum(inst.c))) + abs(float(phi_max)) + 1.0
    if isinstance(mode, ManualPenalties):
        return PenaltySet(Ub, mode.pi_obj_x, mode.pi_obj_phi, mode.pi_obj_cut, mode.pi_cons_MP)
    if mode != CONSTRUCTIVE:
        raise ValueError(f"unknown penalty mode {mode!r}")
    return PenaltySet(Ub, 3.0 * Ub, Ub, Ub, Ub * Ub)


# -- QUBO model -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuboModel:
    """``energy(bits) = offset + sum_{i<=j} quadratic[i, j] * bits_i * bits_j``."""

    num_bits: int
    quadratic: dict
    offset: float
    registry: tuple

    def __post_init__(self):
        if len(self.registry) != self.num_bits:
            raise ValueError("registry must tag every bit exactly once")
        for (i, j) in self.quadratic:
            if not 0 <= i <= j < self.num_bits:
                raise ValueError(f"term ({i}, {j}) is not canonical")

    @classmethod
    def from_terms(cls, num_bits: int, terms, offset: float = 0.0,
                   registry: Optional[Sequence[Role]] = None) -> "QuboModel":
        """Canonicalize ``terms`` (dict or iterable of ``(i, j, v)``) to ``i <= j``."""
        items = terms.items() if isinstance(terms, dict) else ((t[:2], t[2]) for t in terms)
        merged = defaultdict(float)
        for (i, j), v in items:
            i, j = (int(i), int(j)) if i <= j else (int(j), int(i))
            merged[(i, j)] += float(v)
        quadratic = {k: merged[k] for k in sorted(merged) if merged[k] != 0.0}
        if registry is None:
            registry = tuple(XBit(i) for i in range(num_bits))
        return cls(num_bits, quadratic, float(offset), tuple(registry))

    def energy(self, bits) -> float:
        bits = [int(b) for b in bits]
        if len(bits) != self.num_bits:
            raise ValueError(f"expected {self.num_bits} bits, got {len(bits)}")
        total = self.offset
        for (i, j), v in self.quadratic.items():
            if bits[i] and bits[j]:
                total += v
        return total

    def to_matrix(self) -> np.ndarray:
        """Upper-triangular matrix with linear terms on the diagonal."""
        Q = np.zeros((self.num_bits, self.num_bits))
        for (i, j), v in self.quadratic.items():
            Q[i, j] = v
        return Q

    def indices(self, role_type) -> list:
        return [k for k, r in enumerate(self.registry) if isinstance(r, role_type)]

    @property
    def x_bits(self) -> list:
        xs = [(r.index, k) for k, r in enumerate(self.registry) if isinstance(r, XBit)]
        return [k for _, k in sorted(xs)]

    def to_dict(self) -> dict:
        return {
            "num_bits": self.num_bits,
            "offset": self.offset,
            "terms": [[i, j, v] for (i, j), v in self.quadratic.items()],
            "registry": [role_to_dict(r) for r in self.registry],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "QuboModel":
        registry = tuple(role_from_dict(r) for r in doc["registry"])
        return cls.from_terms(int(doc["num_bits"]), doc["terms"], doc["offset"], registry)

    @classmethod
    def from_json(cls, text: str) -> "QuboModel":
        return cls.from_dict(json.loads(text))


class _Builder:
    def __init__(self):
        self.terms = defaultdict(float)
        self.offset = 0.0
        self.registry: list = []

    def new_bits(self, roles) -> list:
        start = len(self.registry)
        self.registry.extend(roles)
        return list(range(start, len(self.registry)))

    def add_linear(self, expr: dict, const: float, scale: float) -> None:
        for i, a in expr.items():
            self.terms[(i, i)] += scale * a
        self.offset += scale * const

    def add_square(self, expr: dict, const: float, scale: float) -> None:
        items = sorted(expr.items())
        for idx, (i, a) in enumerate(items):
            self.terms[(i, i)] += scale * (a * a + 2.0 * const * a)
            for j, b in items[idx + 1:]:
                self.terms[(i, j)] += scale * 2.0 * a * b
        self.offset += scale * const * const

    def add_exponential(self, expr: dict, const: float, scale: float) -> None:
        # g + g^2 / 2 with g = expr + const
        self.add_linear(expr, const, scale)
        self.add_square(expr, const, 0.5 * scale)

    def build(self) -> QuboModel:
        return QuboModel.from_terms(len(self.registry), dict(self.terms),
                                    self.offset, self.registry)


def slack_bits(max_slack: float, fractional: int) -> list:
    """Weights of a nonnegative slack able to reach ``max_slack``."""
    if max_slack < -_SNAP:
        raise MasterInfeasibleError(f"slack upper bound {max_slack} is negative")
    P = _integer_bits(max(max_slack, 0.0))
    D = fractional if max_slack > _SNAP else 0
    return [2.0 ** i for i in range(P)] + [2.0 ** -j for j in range(1, D + 1)]


def cut_slack_bound(inst: MilpInstance, cut: BendersCut, encoding: PhiEncoding) -> float:
    """Largest slack the cut can need over the LP relaxation."""
    sol = solve_binary_relaxation(inst, "cut_slack", cut, (encoding.lb, encoding.ub))
    if not sol.optimal:
        raise MasterInfeasibleError(f"cut slack LP is {sol.status.value}")
    return _snap(sol.objective)


def cut_id(index: int, cut: BendersCut) -> str:
    return f"{'opt' if cut.kind == OPTIMALITY else 'feas'}{index}"


def encode_master(inst: MilpInstance, cuts: Sequence[BendersCut], encoding: PhiEncoding,
                  penalties: PenaltySet, method: str = SLACK,
                  slack_cache: Optional[dict] = None) -> QuboModel:
    """Build the master QUBO for the current cut set.

    ``slack_cache`` maps ``id(cut)`` to its slack bound so repeated
    re-encodings skip the slack LPs.
    """
    if method not in (SLACK, EXPONENTIAL):
        raise ValueError(f"unknown conversion method {method!r}")
    builder = _Builder()
    x = builder.new_bits(XBit(j) for j in range(inst.n))
    weights = encoding.bit_weights
    phi = builder.new_bits(PhiBit(k, float(w)) for k, w in enumerate(weights))
    phi_expr = dict(zip(phi, weights))

    builder.add_linear({x[j]: inst.c[j] for j in range(inst.n)}, 0.0, -penalties.pi_obj_x)
    builder.add_linear(phi_expr, 0.0, -penalties.pi_obj_phi)

    for k in range(inst.m2):
        row = {x[j]: inst.B[k, j] for j in range(inst.n) if inst.B[k, j] != 0}
        rhs = float(inst.bprime[k])
        max_slack = rhs - float(np.minimum(inst.B[k], 0.0).sum())
        if max_slack < -_SNAP:
            raise MasterInfeasibleError(f"master row {k} excludes every x")
        if method == EXPONENTIAL:
            builder.add_exponential(row, -rhs, penalties.pi_cons_MP)
            continue
        integral = np.array_equal(inst.B[k], np.round(inst.B[k])) and rhs == round(rhs)
        s_weights = slack_bits(max_slack, 0 if integral else encoding.D)
        s = builder.new_bits(SlackBit(f"row{k}", i, w) for i, w in enumerate(s_weights))
        builder.add_square({**row, **dict(zip(s, s_weights))}, -rhs, penalties.pi_cons_MP)

    for idx, cut in enumerate(cuts):
        coeffs = {x[j]: cut.coeffs[j] for j in range(inst.n) if cut.coeffs[j] != 0}
        if cut.kind == OPTIMALITY:
            # constant + coeffs.x - phi - s = 0   |   phi - coeffs.x - constant <= 0
            expr = dict(coeffs)
            for bit, w in phi_expr.items():
                expr[bit] = expr.get(bit, 0.0) - w
            const = cut.constant
            fractional = encoding.D
        else:
            # constant + coeffs.x + s = 0         |   constant + coeffs.x <= 0
            expr, const = dict(coeffs), cut.constant
            fractional = 0 if cut.is_integral() else encoding.D
        if method == EXPONENTIAL:
            if cut.kind == OPTIMALITY:
                g = {bit: -a for bit, a in expr.items()}
                builder.add_exponential(g, -const, penalties.pi_obj_cut)
            else:
                builder.add_exponential(expr, const, penalties.pi_obj_cut)
            continue
        key = id(cut)
        if slack_cache is not None and key in slack_cache:
            bound = slack_cache[key]
        else:
            bound = cut_slack_bound(inst, cut, encoding)
            if slack_cache is not None:
                slack_cache[key] = bound
        s_weights = slack_bits(bound, fractional)
        name = cut_id(idx, cut)
        s = builder.new_bits(SlackBit(name, i, w) for i, w in enumerate(s_weights))
        sign = -1.0 if cut.kind == OPTIMALITY else 1.0
        for bit, w in zip(s, s_weights):
            expr[bit] = sign * w
        builder.add_square(expr, const, penalties.pi_obj_cut)
    return builder.build()


@dataclass(frozen=True)
class Decoded:
    x: np.ndarray
    phi: float
    slacks: dict


def decode(model: QuboModel, bits) -> Decoded:
    bits = np.asarray(bits, dtype=int)
    if bits.size != model.num_bits:
        raise ValueError(f"expected {model.num_bits} bits, got {bits.size}")
    n = sum(isinstance(r, XBit) for r in model.registry)
    x = np.zeros(n, dtype=int)
    phi = 0.0
    slacks: dict = {}
    for k, role in enumerate(model.registry):
        if isinstance(role, XBit):
            x[role.index] = bits[k]
        elif isinstance(role, PhiBit):
            phi += role.weight * bits[k]
        else:
            slacks[role.constraint] = slacks.get(role.constraint, 0.0) + role.weight * bits[k]
    return Decoded(x, float(phi), slacks)
