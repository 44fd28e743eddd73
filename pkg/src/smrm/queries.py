"""Quantities derived from solved densities or from reward means."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidParameter, QuantileOutOfRange, ReachabilityNotAlmostSure, SingularSystem
from .model import (
    REACH_ONE_TOL,
    ReachabilitySystem,
    Smrm,
    absorbing_model,
    backward_reachable,
    reach_probabilities,
)
from .rewards import DiracZero, ExplicitLattice


def cdf_from_density(density, mode: str = "discrete", step: float = 1.0) -> np.ndarray:
    """Running mass of a density along axis 0.

    ``discrete`` sums the pmf; ``continuous`` integrates pdf samples spaced
    ``step`` apart with the cumulative trapezoid rule.
    """
    d = np.asarray(density, dtype=float)
    if mode == "discrete":
        out = np.cumsum(d, axis=0)
    elif mode == "continuous":
        out = cumulative_trapezoid(d, dx=step, axis=0, initial=0.0)
    else:
        raise InvalidParameter(f"mode must be 'discrete' or 'continuous', got {mode!r}")
    # rounding can make a running sum dip by an ulp; the cdf is monotone by definition
    return np.maximum.accumulate(out, axis=0)


def _abscissae(cdf: np.ndarray, step: float) -> np.ndarray:
    return np.arange(len(cdf)) * step


def _cdf_at(cdf: np.ndarray, x: float, step: float, mode: str) -> float:
    if mode == "discrete":
        return float(cdf[int(np.floor(x + 1e-12))]) if x >= 0 else 0.0
    return float(np.interp(x, _abscissae(cdf, step), cdf))


def interval_probability(cdf, a: float, b: float, mode: str = "discrete", step: float = 1.0) -> float:
    """F(b) - F(a): probability of reaching the target with reward in (a, b]."""
    cdf = np.asarray(cdf, dtype=float)
    upper = (len(cdf) - 1) * step
    if not (0 <= a <= b <= upper + 1e-12):
        raise InvalidParameter(f"need 0 <= a <= b <= {upper}, got a={a}, b={b}")
    return max(_cdf_at(cdf, b, step, mode) - _cdf_at(cdf, a, step, mode), 0.0)


def quantile(cdf, p: float, mode: str = "discrete", step: float = 1.0) -> float:
    """Smallest abscissa r with F(r) > p.

    Lattice cdfs return the exact index.  Sampled cdfs interpolate linearly
    between the two bracketing grid points.
    """
    if not 0.0 <= p < 1.0:
        raise InvalidParameter(f"quantile level must lie in [0, 1), got {p}")
    cdf = np.asarray(cdf, dtype=float)
    if not cdf[-1] > p:
        raise QuantileOutOfRange(
            f"the cdf only reaches {cdf[-1]:.6g} <= {p}; recompute with a larger truncation length k")
    i = int(np.argmax(cdf > p))
    if mode == "discrete" or i == 0:
        return float(i * step)
    lo, hi = cdf[i - 1], cdf[i]
    frac = (p - lo) / (hi - lo) if hi > lo else 1.0
    return float((i - 1 + frac) * step)


def multivariate_cdf(per_dim_cdfs: Sequence, r_vec: Sequence[float], modes=None, steps=None) -> float:
    """Joint cdf of independent reward components: the product of the marginals."""
    if len(per_dim_cdfs) != len(r_vec):
        raise InvalidParameter(f"{len(per_dim_cdfs)} cdfs but {len(r_vec)} bounds")
    modes = modes or ["discrete"] * len(r_vec)
    steps = steps or [1.0] * len(r_vec)
    out = 1.0
    for cdf, r, mode, step in zip(per_dim_cdfs, r_vec, modes, steps):
        cdf = np.asarray(cdf, dtype=float)
        out *= _cdf_at(cdf, min(r, (len(cdf) - 1) * step), step, mode)
    return out


def next_step_density(system: ReachabilitySystem) -> np.ndarray:
    """Density of the reward collected when B is entered on the very next step."""
    return np.array(system.h)


def _retained(model: Smrm):
    P = absorbing_model(model).transition_probs
    targets = model.target_indices
    in_b = np.zeros(len(model.states), dtype=bool)
    in_b[targets] = True
    mask = backward_reachable(P, targets)
    return P, in_b, np.nonzero(mask & ~in_b)[0]


def _require_almost_sure(model: Smrm, unknown) -> None:
    probs = reach_probabilities(model)
    low = [model.states[i] for i in unknown if probs[i] < 1.0 - REACH_ONE_TOL]
    if low:
        raise ReachabilityNotAlmostSure(f"states {low} reach the target with probability < 1")


def expected_reward(model: Smrm, target_set=None) -> dict:
    """Expected reward accumulated until the target is first entered.

    Returns a mapping state -> expectation for every state that reaches the
    target (0 for target states).
    """
    if target_set is not None:
        model = model.with_target(target_set)
    P, in_b, unknown = _retained(model)
    _require_almost_sure(model, unknown)
    absorbing = absorbing_model(model)
    n = len(unknown)
    A = P[np.ix_(unknown, unknown)]
    rhs = np.zeros(n)
    for a, i in enumerate(unknown):
        for j in np.nonzero(P[i] > 0)[0]:
            rhs[a] += P[i, j] * absorbing.rewards[(model.states[i], model.states[j])].mean()
    try:
        r = np.linalg.solve(np.eye(n) - A, rhs) if n else np.zeros(0)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    out = {model.states[i]: 0.0 for i in np.nonzero(in_b)[0]}
    out.update({model.states[i]: float(v) for i, v in zip(unknown, r)})
    return out


def suggest_truncation(density, gamma: float = 10.0) -> int:
    """Heuristic k = mean + gamma * variance of a (possibly truncated) lattice density."""
    d = np.asarray(density, dtype=float)
    mass = d.sum()
    if mass <= 0:
        raise InvalidParameter("density has no mass")
    r = np.arange(len(d))
    mean = float(np.dot(r, d) / mass)
    var = float(np.dot((r - mean) ** 2, d) / mass)
    return int(np.ceil(mean + gamma * var))


def _deterministic_reward(dist) -> int:
    if isinstance(dist, DiracZero):
        return 0
    if isinstance(dist, ExplicitLattice):
        v = np.asarray(dist.values)
        nz = np.nonzero(v)[0]
        if len(nz) == 1 and abs(v[nz[0]] - 1.0) <= 1e-12:
            return int(nz[0])
    raise InvalidParameter(f"reward {dist!r} is not a deterministic integer")


def mrm_bounded_reachability(model: Smrm, bound: int, rewards=None) -> np.ndarray:
    """x[s, p] = Pr(reach B from s with accumulated reward <= p), for p = 0..bound.

    Rewards must be deterministic nonnegative integers: either point-mass
    lattice rewards on the model, or an explicit integer matrix ``rewards``.
    Levels are filled in increasing p; at each level the zero-reward edges
    couple the unknowns, so one linear solve per level is needed.
    """
    bound = int(bound)
    if bound < 0:
        raise InvalidParameter("reward bound must be nonnegative")
    P, in_b, unknown = _retained(model)
    _require_almost_sure(model, unknown)
    n_states = len(model.states)
    if rewards is None:
        absorbing = absorbing_model(model)
        R = np.zeros((n_states, n_states), dtype=np.int64)
        for i, j in zip(*np.nonzero(P > 0)):
            R[i, j] = _deterministic_reward(absorbing.rewards[(model.states[i], model.states[j])])
    else:
        R = np.asarray(rewards)
        if R.shape != (n_states, n_states) or np.any(R < 0) or np.any(R != np.round(R)):
            raise InvalidParameter("reward matrix must be a nonnegative integer n x n matrix")
        R = R.astype(np.int64)

    x = np.zeros((n_states, bound + 1))
    x[in_b, :] = 1.0
    if len(unknown) == 0:
        return x
    sub = P[np.ix_(unknown, unknown)]
    zero_edges = np.where(R[np.ix_(unknown, unknown)] == 0, sub, 0.0)
    lhs = np.eye(len(unknown)) - zero_edges
    for p in range(bound + 1):
        rhs = np.zeros(len(unknown))
        for a, i in enumerate(unknown):
            for j in np.nonzero(P[i] > 0)[0]:
                if in_b[j] and R[i, j] == 0:
                    rhs[a] += P[i, j]
                elif R[i, j] > 0 and p - R[i, j] >= 0:
                    rhs[a] += P[i, j] * x[j, p - R[i, j]]
        try:
            x[unknown, p] = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    return x
