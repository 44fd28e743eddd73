"""sMRM data model, validation, graph preprocessing and system assembly.

A model is a finite Markov chain whose transitions carry random rewards.  The
solvers work on the first-passage system

    f_s = sum_t A[s,t] * (G[s,t] conv f_t) + h_s,     s in S_?

where S_? holds the states that can reach the target set B without being in
it.  ``preprocess`` builds (A, G, h) on either an integer lattice of length k
or on an equidistant quadrature grid.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyTarget,
    InvalidModel,
    InvalidParameter,
    NoReachableState,
    PointMassNotSupported,
    SingularSystem,
)
from .rewards import DiracZero, RewardDist

ROW_SUM_TOL = 1e-9
REACH_ONE_TOL = 1e-9

State = Hashable


@dataclass(frozen=True)
class QuadratureGrid:
    """N equidistant points x_j = j*b/(N-1) on [0, b]."""

    b: float
    N: int

    def __post_init__(self) -> None:
        if not self.b > 0:
            raise InvalidParameter(f"grid bound must be positive, got {self.b}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidParameter(f"grid needs at least 2 points, got {self.N}")

    @property
    def step(self) -> float:
        return self.b / (self.N - 1)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.N) * self.step

    def refined(self, times: int = 1) -> "QuadratureGrid":
        """Grid with 2**times - 1 new points inserted in every cell."""
        return QuadratureGrid(self.b, (self.N - 1) * 2 ** times + 1)


@dataclass(frozen=True, eq=False)
class Smrm:
    states: tuple
    transition_probs: np.ndarray
    rewards: Mapping[tuple, RewardDist]
    target_set: frozenset
    initial_dist: np.ndarray | None = None

    def __init__(self, states: Sequence[State], transition_probs, rewards: Mapping[tuple, RewardDist],
                 target_set, initial_dist=None) -> None:
        P = np.array(transition_probs, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "transition_probs", P)
        object.__setattr__(self, "rewards", dict(rewards))
        object.__setattr__(self, "target_set", frozenset(target_set))
        if initial_dist is not None:
            initial_dist = np.array(initial_dist, dtype=float)
            initial_dist.setflags(write=False)
        object.__setattr__(self, "initial_dist", initial_dist)

    def index(self, state: State) -> int:
        return self.states.index(state)

    @property
    def target_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s in self.target_set]

    def reward(self, src: State, dst: State) -> RewardDist:
        return self.rewards[(src, dst)]

    def with_target(self, target_set) -> "Smrm":
        return Smrm(self.states, self.transition_probs, self.rewards, target_set, self.initial_dist)

    @property
    def is_continuous(self) -> bool:
        return any(d.continuous for d in self.rewards.values())


def validate(model: Smrm) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    out: list[str] = []
    n = len(model.states)
    P = model.transition_probs
    if len(set(model.states)) != n:
        out.append("state identifiers are not unique")
    if P.shape != (n, n):
        out.append(f"transition matrix has shape {P.shape}, expected {(n, n)}")
        return out
    if not np.all(np.isfinite(P)):
        out.append("transition matrix has non-finite entries")
        return out
    for i, j in zip(*np.nonzero((P < 0) | (P > 1))):
        out.append(f"entry ({i},{j}) = {P[i, j]:.6g} lies outside [0,1]")
    for i, s in enumerate(P.sum(axis=1)):
        if abs(s - 1.0) > ROW_SUM_TOL:
            out.append(f"row {i} sums to {s:.6g}")
    for i, j in zip(*np.nonzero(P > 0)):
        key = (model.states[i], model.states[j])
        # outgoing rows of targets are replaced by zero-reward self-loops anyway
        if key not in model.rewards and key[0] not in model.target_set:
            out.append(f"transition {key[0]!r}->{key[1]!r} has positive probability but no reward")
    if not model.target_set:
        out.append("target set is empty")
    missing = [s for s in model.target_set if s not in model.states]
    if missing:
        out.append(f"target states {sorted(map(str, missing))} are not model states")
    if model.initial_dist is not None:
        d = model.initial_dist
        if d.shape != (n,) or np.any(d < 0) or np.any(d > 1):
            out.append("initial distribution must be a length-n vector with entries in [0,1]")
    return out


def _require_valid(model: Smrm) -> None:
    if not model.target_set:
        raise EmptyTarget("target set B has no member")
    problems = validate(model)
    if problems:
        raise InvalidModel(problems)


def absorbing_model(model: Smrm) -> Smrm:
    """Copy of ``model`` where every target state loops to itself with zero reward."""
    P = np.array(model.transition_probs)
    rewards = {k: v for k, v in model.rewards.items() if k[0] not in model.target_set}
    for i in model.target_indices:
        P[i, :] = 0.0
        P[i, i] = 1.0
        s = model.states[i]
        rewards[(s, s)] = DiracZero()
    return Smrm(model.states, P, rewards, model.target_set, model.initial_dist)


def backward_reachable(P: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Boolean mask of states with a positive-probability path into ``targets``."""
    n = P.shape[0]
    seen = np.zeros(n, dtype=bool)
    queue = deque(targets)
    seen[list(targets)] = True
    preds = [np.nonzero(P[:, j] > 0)[0] for j in range(n)]
    while queue:
        j = queue.popleft()
        for i in preds[j]:
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return seen


def reach_probabilities(model: Smrm, target_set=None) -> np.ndarray:
    """Probability of eventually entering the target set, for every state."""
    if target_set is not None:
        model = model.with_target(target_set)
    _require_valid(model)
    P = absorbing_model(model).transition_probs
    targets = model.target_indices
    mask = backward_reachable(P, targets)
    in_b = np.zeros(len(model.states), dtype=bool)
    in_b[targets] = True
    unknown = np.nonzero(mask & ~in_b)[0]
    x = np.zeros(len(model.states))
    x[in_b] = 1.0
    if len(unknown):
        A = P[np.ix_(unknown, unknown)]
        rhs = P[np.ix_(unknown, np.nonzero(in_b)[0])].sum(axis=1)
        try:
            sol = np.linalg.solve(np.eye(len(unknown)) - A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        x[unknown] = np.clip(sol, 0.0, 1.0)
    return x


def density_of(dist: RewardDist, k: int | None = None, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Truncated pmf on 0..k-1, or pdf samples on ``grid``.

    A pdf that is infinite at 0 (Weibull with shape < 1) gets a finite value
    there, chosen so the trapezoid rule on the first cell reproduces the exact
    mass of that cell.
    """
    if (k is None) == (grid is None):
        raise InvalidParameter("give exactly one of k (lattice) or grid (continuous)")
    if k is not None:
        if dist.continuous:
            raise InvalidParameter(f"{type(dist).__name__} is continuous; sample it on a grid")
        return np.asarray(dist.pmf(int(k)), dtype=float)
    if not dist.continuous:
        raise PointMassNotSupported(
            f"{type(dist).__name__} is a lattice/point-mass reward; the continuous path needs densities")
    x = grid.points
    values = np.asarray(dist.pdf(x), dtype=float)
    if not np.isfinite(values[0]):
        h = grid.step
        values[0] = max(2.0 * float(dist.cdf(h)) / h - float(values[1]), 0.0)
    return values


def lost_tail_mass(dist: RewardDist, k: int) -> float:
    """Mass of a lattice reward beyond index k-1 (truncation loss)."""
    return max(dist.total_mass() - float(dist.pmf(k).sum()), 0.0)


@dataclass(frozen=True, eq=False)
class ReachabilitySystem:
    """Assembled first-passage system over S_?.

    ``G`` and ``h`` use the value axis first: G[r, s, t] and h[r, s].
    """

    s_question: tuple
    A: np.ndarray
    G: np.ndarray
    h: np.ndarray
    k: int | None
    grid: QuadratureGrid | None
    reach_prob_one: bool
    reach_probs: np.ndarray
    model: Smrm
    lost_mass: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.s_question)

    @property
    def length(self) -> int:
        return self.G.shape[0]

    @property
    def is_continuous(self) -> bool:
        return self.grid is not None

    @property
    def AG(self) -> np.ndarray:
        return self.A[None, :, :] * self.G

    def index(self, state: State) -> int:
        return self.s_question.index(state)

    def with_grid(self, grid: QuadratureGrid) -> "ReachabilitySystem":
        return preprocess(self.model, grid=grid)


def preprocess(model: Smrm, k: int | None = None, grid: QuadratureGrid | None = None) -> ReachabilitySystem:
    """Make targets absorbing, drop states that cannot reach B, assemble (A, G, h)."""
    _require_valid(model)
    if (k is None) == (grid is None):
        raise InvalidParameter("give exactly one of k (lattice) or grid (continuous)")
    if k is not None and (int(k) != k or k < 1):
        raise InvalidParameter(f"truncation length k must be a positive integer, got {k}")
    absorbing = absorbing_model(model)
    P = absorbing.transition_probs
    targets = model.target_indices
    mask = backward_reachable(P, targets)
    in_b = np.zeros(len(model.states), dtype=bool)
    in_b[targets] = True
    unknown = np.nonzero(mask & ~in_b)[0]
    if len(unknown) == 0:
        raise NoReachableState("no state outside the target set can reach it")

    probs = reach_probabilities(model)[unknown]
    states = tuple(model.states[i] for i in unknown)
    m = len(unknown)
    A = P[np.ix_(unknown, unknown)].copy()
    length = int(k) if k is not None else grid.N
    G = np.zeros((length, m, m))
    h = np.zeros((length, m))
    lost: dict = {}
    cache: dict = {}

    def sampled(dist: RewardDist) -> np.ndarray:
        if dist not in cache:
            cache[dist] = density_of(dist, k=k, grid=grid)
            if k is not None:
                loss = lost_tail_mass(dist, int(k))
                if loss > 0:
                    lost[dist] = loss
        return cache[dist]

    for a, i in enumerate(unknown):
        src = model.states[i]
        for b_, j in enumerate(unknown):
            if A[a, b_] > 0:
                G[:, a, b_] = sampled(absorbing.rewards[(src, model.states[j])])
        for j in targets:
            if P[i, j] > 0:
                h[:, a] += P[i, j] * sampled(absorbing.rewards[(src, model.states[j])])

    for arr in (A, G, h):
        arr.setflags(write=False)
    return ReachabilitySystem(
        s_question=states,
        A=A,
        G=G,
        h=h,
        k=int(k) if k is not None else None,
        grid=grid,
        reach_prob_one=bool(np.all(probs >= 1.0 - REACH_ONE_TOL)),
        reach_probs=probs,
        model=absorbing,
        lost_mass=lost,
    )


class Termination(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"
    DIRECT = "Direct"


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual: float
    wall_time: float
    termination: Termination
    states: tuple = ()
    history: list | None = None
    iterates: list | None = None
    grid: QuadratureGrid | None = None

    @property
    def ok(self) -> bool:
        return self.termination in (Termination.CONVERGED, Termination.DIRECT)

    def density(self, state: State) -> np.ndarray:
        return self.solution[:, self.states.index(state)]


def chain_model(A, b, rewards, names: Sequence[str] | None = None, goal: str = "goal",
                sink: str = "sink") -> Smrm:
    """Build an sMRM from a substochastic block A and goal column b.

    Missing row mass is routed to an absorbing sink that never reaches the
    goal.  ``rewards`` is either a single RewardDist used everywhere or a
    callable (i, j) -> RewardDist where j == len(A) denotes the goal.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    names = list(names) if names is not None else [f"s{i}" for i in range(n)]
    deficit = 1.0 - A.sum(axis=1) - b
    deficit[np.abs(deficit) < 1e-12] = 0.0
    use_sink = bool(np.any(deficit > 0))
    size = n + 1 + int(use_sink)
    P = np.zeros((size, size))
    P[:n, :n] = A
    P[:n, n] = b
    P[n, n] = 1.0
    states = names + [goal]
    if use_sink:
        P[:n, n + 1] = np.maximum(deficit, 0.0)
        P[n + 1, n + 1] = 1.0
        states.append(sink)
    pick = rewards if callable(rewards) else (lambda i, j: rewards)
    rew = {}
    for i in range(n):
        for j in range(n + 1):
            if P[i, j] > 0:
                rew[(states[i], states[j])] = pick(i, j)
        if use_sink and P[i, n + 1] > 0:
            rew[(states[i], sink)] = DiracZero()
    rew[(goal, goal)] = DiracZero()
    if use_sink:
        rew[(sink, sink)] = DiracZero()
    return Smrm(states, P, rew, {goal})
