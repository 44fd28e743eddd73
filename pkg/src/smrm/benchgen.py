"""Random chain generators, reward samplers and a Monte-Carlo trace oracle.

The four chain generators return (A, b, P): P has one row per transient
state and one extra last column holding the probability of jumping straight
into the goal; A = P[:, :-1] and b = P[:, -1].  Rows may sum to less than
one, the remainder being mass that never reaches the goal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NonterminatingModel
from .model import QuadratureGrid, Smrm, absorbing_model, chain_model

MAX_TRACE_STEPS = 10 ** 7


def _check_size(num_states: int) -> None:
    if int(num_states) != num_states or num_states < 1:
        raise InvalidParameter(f"num_states must be a positive integer, got {num_states}")


def _split(P: np.ndarray):
    P = np.asarray(P, dtype=float)
    return P[:, :-1].copy(), P[:, -1].copy(), P


def gen_mc_uniform(num_states: int, rng: np.random.Generator):
    """Dense chain: uniform entries plus 0.01, normalised so each row sums to 1."""
    _check_size(num_states)
    P = rng.random((num_states + 1, num_states))
    P += 0.01
    P = (P / P.sum(0)).T
    return _split(P)


def gen_mc_block(num_states: int, rng: np.random.Generator, num_pass: int = 200, block_scale: int = 5):
    """Chain built from overlapping square blocks of unit increments.

    Each pass adds one to a random square block; rows are then normalised,
    and rows that received nothing stay zero.
    """
    _check_size(num_states)
    P = np.zeros((num_states, num_states + 1))
    full = np.arange(num_states)
    reach = rng.choice(full, int(num_states * rng.random()), replace=False)
    P[reach, -1] = rng.random(len(reach))
    for _ in range(num_pass):
        size = int((rng.random() * num_states) / (2 * block_scale))
        start = np.maximum((rng.random(2) * num_states).astype(int) - size, [0, 0])
        P[start[0]:start[0] + 2 * size, start[1]:start[1] + 2 * size] += 1
    sums = P.sum(1)
    nz = sums.nonzero()[0]
    P[nz, :] /= sums[nz, None]
    return _split(P)


def gen_mc_npass(num_states: int, rng: np.random.Generator, num_pass: int = 1000):
    """Chain filled over many passes; every increment fits in the row's remaining mass."""
    _check_size(num_states)
    P = np.zeros((num_states, num_states + 1))
    full = np.arange(num_states)
    reach = rng.choice(full, np.maximum(1, int(num_states * rng.random())), replace=False)
    P[reach, -1] = rng.random(len(reach))
    for _ in range(num_pass):
        sel = rng.permutation(full)
        choices = rng.choice(reach, num_states, replace=True)
        # rounding can push the remaining mass a hair below zero
        temp = rng.uniform(0, np.maximum(1 - P[sel, :].sum(1), 0.0), len(sel))
        P[sel, choices] += temp
        reach = sel
    return _split(P)


def _sparse_random(shape, density: float, rng: np.random.Generator) -> np.ndarray:
    """Dense array with round(density * size) uniform entries at distinct random positions."""
    size = shape[0] * shape[1]
    nnz = int(round(density * size))
    out = np.zeros(size)
    out[rng.choice(size, nnz, replace=False)] = rng.random(nnz)
    return out.reshape(shape)


def gen_mc_sparse(num_states: int, rng: np.random.Generator, density: float = 0.1):
    """Sparse chain: random fill, goal injection, column normalisation, transpose.

    The goal-reach values are written into the last column of the
    (num_states+1) x num_states fill, i.e. before the transpose, so after it
    they become the outgoing row of the last transient state.
    """
    _check_size(num_states)
    if not 0.0 <= density <= 1.0:
        raise InvalidParameter(f"density must lie in [0,1], got {density}")
    P = _sparse_random((num_states + 1, num_states), density, rng)
    full = np.arange(num_states)
    reach = rng.choice(full, np.maximum(1, int(num_states * rng.random())), replace=False)
    P[reach, -1] = rng.random(len(reach))
    sums = P.sum(0)
    nz = sums.nonzero()[0]
    P[:, nz] /= sums[nz]
    return _split(P.T)


GENERATORS = {
    "uniform": gen_mc_uniform,
    "block": gen_mc_block,
    "npass": gen_mc_npass,
    "sparse": gen_mc_sparse,
}


# --- traces -----------------------------------------------------------------


class TraceEnd(str, enum.Enum):
    REACHED_GOAL = "ReachedGoal"
    REWARD_BOUND = "RewardBound"


@dataclass(frozen=True)
class Trace:
    path: tuple
    cumulated_reward: float
    terminated_by: TraceEnd


def sample_traces(model: Smrm, start, count: int, reward_bound: float, rng: np.random.Generator,
                  max_steps: int = MAX_TRACE_STEPS) -> list[Trace]:
    """Simulate ``count`` runs from ``start``.

    A run stops when it enters the target set or once its accumulated reward
    is at least ``reward_bound``.  The path lists the states visited after
    ``start``.
    """
    chain = absorbing_model(model)
    P = chain.transition_probs
    cum = np.cumsum(P, axis=1)
    states = chain.states
    s0 = chain.index(start)
    targets = set(chain.target_indices)
    traces = []
    for _ in range(int(count)):
        i = s0
        total = 0.0
        path = []
        steps = 0
        end = TraceEnd.REACHED_GOAL
        while i not in targets:
            if total >= reward_bound:
                end = TraceEnd.REWARD_BOUND
                break
            if steps >= max_steps:
                raise NonterminatingModel(f"trace from {start!r} exceeded {max_steps} steps")
            j = min(int(np.searchsorted(cum[i], rng.random() * cum[i, -1], side="right")), len(states) - 1)
            total += float(chain.rewards[(states[i], states[j])].sample(rng))
            path.append(states[j])
            i = j
            steps += 1
        traces.append(Trace(tuple(path), total, end))
    return traces


def empirical_density(traces, k: int | None = None, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Relative frequency of the goal-terminated rewards.

    Runs stopped by the reward bound contribute no mass, so the result sums
    to the fraction of runs that reached the goal.  On a grid the histogram
    is divided by the bin width to give pdf samples.
    """
    if (k is None) == (grid is None):
        raise InvalidParameter("give exactly one of k or grid")
    total = len(traces)
    rewards = np.array([t.cumulated_reward for t in traces if t.terminated_by == TraceEnd.REACHED_GOAL])
    if k is not None:
        out = np.zeros(int(k))
        idx = np.rint(rewards).astype(np.int64) if len(rewards) else np.zeros(0, dtype=np.int64)
        idx = idx[idx < k]
        np.add.at(out, idx, 1.0)
        return out / max(total, 1)
    step = grid.step
    # bins centred on the grid points
    edges = np.concatenate([[0.0], (grid.points[:-1] + grid.points[1:]) / 2, [grid.b + step / 2]])
    counts, _ = np.histogram(rewards, bins=edges)
    widths = np.diff(edges)
    return counts / max(total, 1) / widths


def random_smrm(kind: str, num_states: int, family, param_range: tuple[float, float],
                rng: np.random.Generator, **gen_kwargs) -> Smrm:
    """Random chain of the given kind with per-transition rewards drawn from ``family``.

    ``family`` maps one free parameter to a RewardDist; each transition gets
    its own parameter, uniform on ``param_range``.
    """
    if kind not in GENERATORS:
        raise InvalidParameter(f"unknown chain kind {kind!r}")
    A, b, _ = GENERATORS[kind](num_states, rng, **gen_kwargs)
    lo, hi = param_range
    params = rng.uniform(lo, hi, size=(num_states, num_states + 1))
    return chain_model(A, b, lambda i, j: family(float(params[i, j])))
