"""Independent reference computations used as test oracles."""

from __future__ import annotations

import numpy as np

from smrm.model import Smrm, absorbing_model


def enumerate_paths(model: Smrm, start, max_len: int):
    """Yield (probability, [(src, dst), ...]) for every path that first enters the target within max_len steps."""
    chain = absorbing_model(model)
    P = chain.transition_probs
    states = chain.states
    targets = set(chain.target_indices)

    def walk(i, prob, edges):
        if len(edges) == max_len:
            return
        for j in np.nonzero(P[i] > 0)[0]:
            p = prob * P[i, j]
            e = edges + [(states[i], states[j])]
            if j in targets:
                yield p, e
            else:
                yield from walk(j, p, e)

    yield from walk(chain.index(start), 1.0, [])


def path_density(model: Smrm, start, max_len: int, k: int) -> np.ndarray:
    """Sum over enumerated paths of probability times the convolution of their lattice rewards."""
    chain = absorbing_model(model)
    out = np.zeros(k)
    for prob, edges in enumerate_paths(model, start, max_len):
        acc = np.zeros(k)
        acc[0] = 1.0
        for e in edges:
            acc = np.convolve(acc, chain.rewards[e].pmf(k))[:k]
        out += prob * acc
    return out


def bounded_reach_by_paths(model: Smrm, start, bound: int, rewards: np.ndarray) -> float:
    """Probability of reaching the target with integer accumulated reward <= bound.

    Paths are expanded depth first and pruned once their reward exceeds the
    bound, so every cycle must carry a positive reward for this to terminate.
    """
    chain = absorbing_model(model)
    P = chain.transition_probs
    targets = set(chain.target_indices)

    def walk(i, prob, acc):
        total = 0.0
        for j in np.nonzero(P[i] > 0)[0]:
            r = acc + int(rewards[i, j])
            if r > bound:
                continue
            if j in targets:
                total += prob * P[i, j]
            else:
                total += walk(j, prob * P[i, j], r)
        return total

    return walk(chain.index(start), 1.0, 0)


def unit_step_loop(p_exit: float, p_loop: float) -> Smrm:
    """One transient state with a self-loop; every transition costs exactly 1.

    The first-passage pmf is p_exit * p_loop**(r-1) for r >= 1.
    """
    from smrm.model import chain_model
    from smrm.rewards import ExplicitLattice

    return chain_model([[p_loop]], [p_exit], ExplicitLattice([0.0, 1.0]))


def unit_step_pmf(p_exit: float, p_loop: float, k: int) -> np.ndarray:
    r = np.arange(k)
    out = np.zeros(k)
    out[1:] = p_exit * p_loop ** (r[1:] - 1)
    return out
