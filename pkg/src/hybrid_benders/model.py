"""Domain types, JSON (de)serialization and the random instance generator.

The MILP shape is fixed::

    max  c.x + h.y
    s.t. A x + G y <= b,   B x <= b',   x in {0,1}^n,  y >= 0
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatchError, GeneratorError, SchemaError
from .lp_simplex import solve_binary_relaxation

OPTIMALITY = "optimality"
FEASIBILITY = "feasibility"

SLACK = "slack"
EXPONENTIAL = "exponential"
CONSTRUCTIVE = "constructive"
BACKENDS = ("exact", "sa")


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MilpInstance:
    n: int
    p: int
    m1: int
    m2: int
    c: np.ndarray
    h: np.ndarray
    A: np.ndarray
    G: np.ndarray
    b: np.ndarray
    B: np.ndarray
    bprime: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        for name in ("n", "p", "m1", "m2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise SchemaError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n < 1 or self.p < 1 or self.m1 < 1 or self.m2 < 0:
            raise DimensionMismatchError(
                f"need n, p, m1 >= 1 and m2 >= 0; got n={self.n}, p={self.p}, "
                f"m1={self.m1}, m2={self.m2}"
            )
        expected = {
            "c": (self.n,), "h": (self.p,), "b": (self.m1,), "bprime": (self.m2,),
            "A": (self.m1, self.n), "G": (self.m1, self.p), "B": (self.m2, self.n),
        }
        for name, shape in expected.items():
            raw = getattr(self, name)
            try:
                arr = np.array(raw, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{name} is not numeric: {exc}") from None
            if len(shape) == 2 and arr.size == 0:
                arr = arr.reshape(shape)
            if arr.shape != shape:
                raise DimensionMismatchError(
                    f"{name} has shape {arr.shape}, expected {shape}"
                )
            object.__setattr__(self, name, _frozen_array(arr))

    def __eq__(self, other):
        if not isinstance(other, MilpInstance):
            return NotImplemented
        return (
            (self.n, self.p, self.m1, self.m2) == (other.n, other.p, other.m1, other.m2)
            and all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("c", "h", "A", "G", "b", "B", "bprime"))
        )

    __hash__ = None

    def is_integral(self) -> bool:
        return all(np.array_equal(a, np.round(a))
                   for a in (self.c, self.h, self.A, self.G, self.b, self.B, self.bprime))


@dataclass(frozen=True, eq=False)
class BendersCut:
    """A Benders cut in canonical form.

    optimality:  ``constant + coeffs.x - phi >= 0``  i.e. ``(b - Ax).mu >= phi``
    feasibility: ``constant + coeffs.x <= 0``        i.e. ``(b - Ax).mu <= 0``
    """

    kind: str
    coeffs: np.ndarray
    constant: float
    mu: np.ndarray
    iteration_created: int = 0

    def __post_init__(self):
        if self.kind not in (OPTIMALITY, FEASIBILITY):
            raise ValueError(f"unknown cut kind {self.kind!r}")
        object.__setattr__(self, "coeffs", _frozen_array(self.coeffs))
        object.__setattr__(self, "mu", _frozen_array(self.mu))
        object.__setattr__(self, "constant", float(self.constant))

    def value(self, x) -> float:
        """``constant + coeffs.x``: the phi bound (optimality) or violation (feasibility)."""
        return self.constant + float(self.coeffs @ np.asarray(x, dtype=float))

    def same_as(self, other: "BendersCut", tol: float = 1e-7) -> bool:
        return (
            self.kind == other.kind
            and abs(self.constant - other.constant) <= tol * (1 + abs(self.constant))
            and np.allclose(self.coeffs, other.coeffs, rtol=tol, atol=tol)
        )

    def is_integral(self, tol: float = 1e-9) -> bool:
        vals = np.append(self.coeffs, self.constant)
        return bool(np.all(np.abs(vals - np.round(vals)) <= tol))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coeffs": self.coeffs.tolist(),
            "constant": self.constant,
            "mu": self.mu.tolist(),
            "iteration_created": self.iteration_created,
        }


@dataclass(frozen=True)
class ManualPenalties:
    pi_obj_x: float
    pi_obj_phi: float
    pi_obj_cut: float
    pi_cons_MP: float


PenaltyMode = Union[str, ManualPenalties]


@dataclass(frozen=True)
class BendersConfig:
    conversion: str = SLACK
    penalties: PenaltyMode = CONSTRUCTIVE
    multicut: Optional[tuple] = None  # (k candidates, M selected)
    epsilon: float = 0.25
    max_iterations: int = 50
    convergence_tol: float = 1e-6
    backend: str = "exact"
    rng_seed: int = 0
    sa_sweeps: int = 2000
    sa_restarts: int = 8

    def __post_init__(self):
        if self.conversion not in (SLACK, EXPONENTIAL):
            raise ValueError(f"conversion must be {SLACK!r} or {EXPONENTIAL!r}")
        if not isinstance(self.penalties, ManualPenalties) and self.penalties != CONSTRUCTIVE:
            raise ValueError("penalties must be 'constructive' or ManualPenalties")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be >= 0")
        if self.multicut is not None:
            k, M = self.multicut
            if not 1 <= M <= k:
                raise ValueError(f"multicut needs 1 <= M <= k, got k={k}, M={M}")
            object.__setattr__(self, "multicut", (int(k), int(M)))
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.sa_sweeps < 0 or self.sa_restarts < 1:
            raise ValueError("sa_sweeps must be >= 0 and sa_restarts >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")


class Status:
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    ERROR = "Error"


@dataclass
class SolveReport:
    status: str
    x_best: Optional[np.ndarray]
    y_best: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int
    cuts: list = field(default_factory=list)
    qubit_counts: list = field(default_factory=list)
    phi_bounds: tuple = (float("nan"), float("nan"))
    wall_time_ms: dict = field(default_factory=dict)
    termination: str = ""
    notes: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def has_solution(self) -> bool:
        return self.x_best is not None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "x_best": None if self.x_best is None else [int(v) for v in self.x_best],
            "y_best": None if self.y_best is None else [float(v) for v in self.y_best],
            "objective": self.objective,
            "iterations": self.iterations,
            "cuts": [cut.to_dict() for cut in self.cuts],
            "qubit_counts": list(self.qubit_counts),
            "phi_bounds": list(self.phi_bounds),
            "wall_time_ms": dict(self.wall_time_ms),
            "termination": self.termination,
            "notes": list(self.notes),
            "trace": list(self.trace),
        }


def report_to_json(report: SolveReport, indent: int = 2) -> str:
    return json.dumps(report.to_dict(), indent=indent)


# -- instance JSON ------------------------------------------------------------

_INT_FIELDS = ("n", "p", "m1", "m2")
_VEC_FIELDS = ("c", "h", "b", "bprime")
_MAT_FIELDS = ("A", "G", "B")


def _encode_float(v: float) -> str:
    # repr is the shortest string that round-trips to the same double
    return repr(float(v))


def _decode_float(name: str, v) -> float:
    if isinstance(v, bool):
        raise SchemaError(f"{name}: booleans are not numbers")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise SchemaError(f"{name}: {v!r} is not a decimal number") from None
    raise SchemaError(f"{name}: expected a number, got {type(v).__name__}")


def instance_to_dict(inst: MilpInstance) -> dict:
    doc = {k: getattr(inst, k) for k in _INT_FIELDS}
    for k in _VEC_FIELDS:
        doc[k] = [_encode_float(v) for v in getattr(inst, k)]
    for k in _MAT_FIELDS:
        doc[k] = [[_encode_float(v) for v in row] for row in getattr(inst, k)]
    if inst.seed is not None:
        doc["seed"] = inst.seed
    return doc


def instance_from_dict(doc: dict) -> MilpInstance:
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    missing = [k for k in _INT_FIELDS + _VEC_FIELDS + _MAT_FIELDS if k not in doc]
    if missing:
        raise SchemaError(f"missing fields: {', '.join(missing)}")
    kwargs = {}
    for k in _INT_FIELDS:
        v = doc[k]
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"{k} must be an integer")
        kwargs[k] = v
    for k in _VEC_FIELDS:
        if not isinstance(doc[k], list):
            raise SchemaError(f"{k} must be an array")
        kwargs[k] = [_decode_float(k, v) for v in doc[k]]
    for k in _MAT_FIELDS:
        rows = doc[k]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise SchemaError(f"{k} must be a nested array (row-major)")
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise DimensionMismatchError(f"{k} has ragged rows")
        kwargs[k] = [[_decode_float(k, v) for v in r] for r in rows]
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise SchemaError("seed must be an integer when present")
    return MilpInstance(seed=seed, **kwargs)


def save_instance(inst: MilpInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1)


def load_instance(text: str) -> MilpInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return instance_from_dict(doc)


# -- generator ----------------------------------------------------------------

MAX_REJECTIONS = 1000


def _draw(rng: np.random.Generator) -> dict:
    n = int(rng.integers(2, 6))
    p = int(rng.integers(2, 11))
    m1 = int(rng.integers(5, 15))
    return dict(
        n=n, p=p, m1=m1, m2=1,
        A=rng.integers(0, 11, size=(m1, n)),
        b=rng.integers(0, 11, size=m1),
        G=rng.integers(-5, 6, size=(m1, p)),
        B=np.ones((1, n)),
        bprime=rng.integers(1, 5, size=1),
        c=rng.integers(0, 11, size=n),
        h=rng.integers(0, 11, size=p),
    )


def generate_generic_instance(seed: int) -> MilpInstance:
    """Draw a random instance of the generic dataset.

    n in [2,5], p in [2,10], m1 in [5,14]; A, b, c, h integer in [0,10];
    G integer in [-5,5]; one all-ones master row with b' in {1,..,4}.
    Draws whose phi upper-bound LP is unbounded are rejected.
    """
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REJECTIONS):
        inst = MilpInstance(seed=int(seed), **_draw(rng))
        if solve_binary_relaxation(inst, "upper").optimal:
            return inst
    raise GeneratorError(f"seed {seed}: {MAX_REJECTIONS} draws rejected")
