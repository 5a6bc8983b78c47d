"""QUBO minimizers: exhaustive enumeration and simulated annealing.

Both backends take a :class:`QuboModel` and return a :class:`SampleSet`
(ascending energy, one entry per distinct bitstring). Reported energies are
always recomputed with ``QuboModel.energy`` so they match the model
bit-for-bit.

Bitstring order: index ``i`` encodes ``bits[k] = (i >> k) & 1``, so bit 0 is
the least significant. "Smallest bitstring" in tie-breaks means smallest
index in this order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from .errors import SizeCapError
from .qubo_encode import QuboModel, SlackBit

EXACT_MAX_BITS = 24
DEFAULT_RETENTION = 32
_CHUNK = 1 << 15


@dataclass(frozen=True)
class Sample:
    bits: tuple
    energy: float


class SampleSet:
    """Deduplicated samples sorted by energy."""

    def __init__(self, model: QuboModel, bitstrings: Sequence[Sequence[int]]):
        seen, samples = set(), []
        for bits in bitstrings:
            key = tuple(int(b) for b in bits)
            if key in seen:
                continue
            seen.add(key)
            samples.append(Sample(key, model.energy(key)))
        samples.sort(key=lambda s: (s.energy, _index(s.bits)))
        self.samples = samples

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def best(self) -> Sample:
        return self.samples[0]


def _index(bits) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def _bits_of(indices: np.ndarray, width: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(width)) & 1).astype(np.int8)


# -- exact ----------------------------------------------------------------------

@dataclass
class _Block:
    bits: np.ndarray          # global bit indices of the block
    u: np.ndarray             # coupling direction over core bits
    options: np.ndarray       # (2^t, t) assignments on the lower envelope
    slopes: np.ndarray
    intercepts: np.ndarray
    breaks: np.ndarray

    def minimize(self, z: np.ndarray):
        seg = np.searchsorted(self.breaks, z, side="left")
        return self.slopes[seg] * z + self.intercepts[seg], seg


def _lower_envelope(slopes, intercepts):
    """Indices of lines forming ``min_k slopes[k] * z + intercepts[k]``, left to right."""
    order = np.lexsort((np.arange(slopes.size), intercepts, -slopes))
    hull: list = []
    for k in order:
        if hull and slopes[hull[-1]] == slopes[k]:
            continue
        while len(hull) >= 2:
            a1, q1 = slopes[hull[-2]], intercepts[hull[-2]]
            a2, q2 = slopes[hull[-1]], intercepts[hull[-1]]
            a3, q3 = slopes[k], intercepts[k]
            if (q3 - q1) * (a1 - a2) <= (q2 - q1) * (a1 - a3):
                hull.pop()
            else:
                break
        hull.append(int(k))
    hull = np.array(hull, dtype=int)
    a, q = slopes[hull], intercepts[hull]
    breaks = (q[1:] - q[:-1]) / (a[:-1] - a[1:])
    return hull, breaks


def _split_blocks(model: QuboModel, Q: np.ndarray, keep_core=()):
    """Separate slack groups that can be minimized in closed form.

    A slack group qualifies when it touches no other slack group and its
    coupling to the remaining bits has rank one, so its best completion
    depends on a single scalar of the core assignment.
    """
    groups: dict = {}
    for k, role in enumerate(model.registry):
        if isinstance(role, SlackBit):
            groups.setdefault(role.constraint, []).append(k)
    sym = Q + Q.T
    owner = -np.ones(model.num_bits, dtype=int)
    names = list(groups)
    for g, name in enumerate(names):
        owner[groups[name]] = g
    pinned = np.zeros(model.num_bits, dtype=bool)
    pinned[list(keep_core)] = True

    accepted = []
    for g, name in enumerate(names):
        bits = np.array(groups[name])
        if bits.size > 16 or pinned[bits].any():
            continue
        touching = owner[np.flatnonzero((sym[bits] != 0).any(axis=0))]
        if np.any((touching >= 0) & (touching != g)):
            continue
        # outside the group this coupling is nonzero only on non-slack bits
        C = sym[np.ix_(np.setdiff1d(np.arange(model.num_bits), bits), bits)]
        if _rank_one(C) is None:
            continue
        accepted.append(bits)

    in_block = np.zeros(model.num_bits, dtype=bool)
    for bits in accepted:
        in_block[bits] = True
    core = np.flatnonzero(~in_block)
    blocks = []
    for bits in accepted:
        u, v = _rank_one(sym[np.ix_(core, bits)])
        Qb = Q[np.ix_(bits, bits)]
        options = _bits_of(np.arange(1 << bits.size), bits.size).astype(float)
        slopes = options @ v
        intercepts = ((options @ Qb) * options).sum(axis=1)
        hull, breaks = _lower_envelope(slopes, intercepts)
        blocks.append(_Block(bits, u, options[hull], slopes[hull], intercepts[hull], breaks))
    return core, blocks


def _rank_one(C: np.ndarray):
    """``(u, v)`` with ``C == outer(u, v)``, or None when C has rank > 1."""
    norms = np.linalg.norm(C, axis=0)
    if norms.max(initial=0.0) == 0.0:
        return np.zeros(C.shape[0]), np.zeros(C.shape[1])
    u = C[:, int(np.argmax(norms))]
    v = C.T @ u / (u @ u)
    if not np.allclose(np.outer(u, v), C, rtol=0, atol=1e-9 * np.abs(C).max()):
        return None
    return u, v


def _select(energies, indices, keys, retention, tol=1e-9):
    """Positions of the retained candidates.

    With ``keys`` the best entry per key is kept; otherwise one entry per
    distinct energy level (levels closer than ``tol`` relative merge), the
    smallest index representing its level.
    """
    order = np.lexsort((indices, energies))
    if keys is not None:
        _, first = np.unique(keys[order], return_index=True)
        picked = order[np.sort(first)]
        return picked[:retention]
    e = energies[order]
    if e.size == 0:
        return order
    new_level = np.r_[True, np.diff(e) > tol * (1.0 + np.abs(e[1:]))]
    starts = np.flatnonzero(new_level)[:retention]
    picked = []
    bounds = np.r_[np.flatnonzero(new_level), e.size]
    for s_idx, s in enumerate(starts):
        members = order[s:bounds[s_idx + 1]]
        picked.append(members[np.argmin(indices[members])])
    return np.array(picked, dtype=int)


def solve_exact(model: QuboModel, retention: int = DEFAULT_RETENTION,
                distinct_on: Optional[Sequence[int]] = None,
                max_bits: int = EXACT_MAX_BITS) -> SampleSet:
    """Exhaustive minimization.

    Retains the lowest ``retention`` distinct energy levels (smallest
    bitstring per level), or, when ``distinct_on`` lists bit indices, the
    best bitstring for each distinct assignment of those bits.

    Slack groups whose coupling to the rest of the model is rank one are
    minimized in closed form (lower envelope of their ``2^t`` completions)
    instead of being enumerated; the retained samples then carry their best
    slack completion. ``max_bits`` caps the remaining enumerated bits.
    """
    if model.num_bits == 0:
        return SampleSet(model, [()])
    Q = model.to_matrix()
    if distinct_on is not None:
        distinct_on = np.asarray(distinct_on, dtype=int)
    core, blocks = _split_blocks(model, Q, () if distinct_on is None else distinct_on)
    if core.size > max_bits:
        raise SizeCapError(
            f"{core.size} bits must be enumerated; exhaustive cap is {max_bits}"
        )
    Qc = Q[np.ix_(core, core)]

    best_E = np.empty(0)
    best_idx = np.empty(0, dtype=np.int64)
    best_bits = np.empty((0, model.num_bits), dtype=np.int8)
    total = 1 << core.size
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        X = _bits_of(idx, core.size)
        Xf = X.astype(float)
        E = model.offset + ((Xf @ Qc) * Xf).sum(axis=1)
        full = np.zeros((idx.size, model.num_bits), dtype=np.int8)
        full[:, core] = X
        for block in blocks:
            f, seg = block.minimize(Xf @ block.u)
            E = E + f
            full[:, block.bits] = block.options[seg].astype(np.int8)
        E = np.concatenate([best_E, E])
        idx = np.concatenate([best_idx, idx])
        full = np.concatenate([best_bits, full])
        keys = None
        if distinct_on is not None:
            keys = (full[:, distinct_on].astype(np.int64) << np.arange(distinct_on.size)).sum(1)
        pos = _select(E, idx, keys, retention)
        best_E, best_idx, best_bits = E[pos], idx[pos], full[pos]
    return SampleSet(model, best_bits.tolist())


# -- simulated annealing ----------------------------------------------------------

@numba.njit(cache=True)
def _anneal(W, lin, x0, temps, uniforms, record_from):
    n = x0.size
    x = x0.copy()
    field = W @ x.astype(np.float64)
    energy = 0.0
    for i in range(n):
        if x[i]:
            energy += lin[i] + 0.5 * field[i]
    best = x.copy()
    best_energy = energy
    sweeps = temps.size
    recorded = np.zeros((max(sweeps - record_from, 0), n), dtype=np.int8)
    for s in range(sweeps):
        T = temps[s]
        for i in range(n):
            delta = (1 - 2 * x[i]) * (lin[i] + field[i])
            if delta <= 0.0 or uniforms[s, i] < np.exp(-delta / T):
                sign = 1.0 - 2.0 * x[i]
                x[i] = 1 - x[i]
                energy += delta
                for j in range(n):
                    field[j] += sign * W[j, i]
                if energy < best_energy:
                    best_energy = energy
                    best[:] = x
        if s >= record_from:
            recorded[s - record_from] = x
    return best, x, recorded


def solve_sa(model: QuboModel, seed: int = 0, sweeps: int = 2000, restarts: int = 8,
             retention: int = DEFAULT_RETENTION) -> SampleSet:
    """Best-of-restarts single-flip Metropolis annealing.

    Temperature decays geometrically from ``max|coefficient|`` to a
    thousandth of it over ``sweeps`` full passes. Restart ``r`` draws from
    ``default_rng(seed + r)``. Besides each restart's best and final states,
    the states at the end of every sweep in the last quarter of the schedule
    are kept as candidates.
    """
    n = model.num_bits
    if n == 0:
        return SampleSet(model, [()])
    Q = model.to_matrix()
    lin = np.diag(Q).copy()
    W = np.triu(Q, 1)
    W = W + W.T
    t0 = float(np.abs(Q).max()) or 1.0
    if sweeps > 1:
        temps = t0 * (1e-3) ** (np.arange(sweeps) / (sweeps - 1))
    else:
        temps = np.full(sweeps, t0)
    record_from = sweeps - sweeps // 4
    candidates = []
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        x0 = rng.integers(0, 2, size=n).astype(np.int8)
        uniforms = rng.random((sweeps, n))
        if sweeps == 0:
            candidates.append(x0)
            continue
        best, final, recorded = _anneal(W, lin, x0, temps, uniforms, record_from)
        candidates.extend([best, final])
        candidates.extend(recorded)
    samples = SampleSet(model, [c.tolist() for c in candidates])
    samples.samples = samples.samples[:max(retention, 1)]
    return samples


# -- backend registry -------------------------------------------------------------

Backend = Callable[..., SampleSet]


def get_backend(name: str, sweeps: int = 2000, restarts: int = 8) -> Backend:
    """Return ``minimize(model, *, seed, retention, distinct_on) -> SampleSet``."""
    if name == "exact":
        def minimize(model, *, seed=0, retention=DEFAULT_RETENTION, distinct_on=None):
            return solve_exact(model, retention=retention, distinct_on=distinct_on)
    elif name == "sa":
        def minimize(model, *, seed=0, retention=DEFAULT_RETENTION, distinct_on=None):
            return solve_sa(model, seed=seed, sweeps=sweeps, restarts=restarts,
                            retention=max(retention, DEFAULT_RETENTION))
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'exact' or 'sa'")
    return minimize
