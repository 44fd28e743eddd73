"""Reward distribution families attached to transitions.

Lattice families describe integer-valued rewards through a pmf on 0, 1, 2, ...
Continuous families describe nonnegative real rewards through a pdf.  Every
family is an immutable, hashable dataclass so it can be used as a cache key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar

import numpy as np
from scipy import stats

from .errors import InvalidParameter

# lattice sampling tables stop once this much mass is covered
_SAMPLING_COVERAGE = 1.0 - 1e-12
_SAMPLING_MAX_LEN = 2_000_000
_MEAN_TAIL_TOL = 1e-14


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParameter(msg)


@dataclass(frozen=True)
class RewardDist:
    """Common interface.  Subclasses set ``continuous`` and implement the hooks."""

    continuous: ClassVar[bool] = False
    name: ClassVar[str] = ""

    def __post_init__(self) -> None:
        self.check()

    def check(self) -> None:
        pass

    def pmf(self, k: int) -> np.ndarray:
        raise InvalidParameter(f"{type(self).__name__} has no lattice pmf")

    def pdf(self, x: np.ndarray) -> np.ndarray:
        raise InvalidParameter(f"{type(self).__name__} has no density on the real line")

    def cdf(self, x: np.ndarray) -> np.ndarray:
        raise InvalidParameter(f"{type(self).__name__} has no continuous cdf")

    def mean(self) -> float:
        raise NotImplementedError

    def total_mass(self) -> float:
        return 1.0

    def sample(self, rng: np.random.Generator, size: int | None = None):
        if self.continuous:
            return self._sample_continuous(rng, size)
        return _sample_lattice(self, rng, size)

    def _sample_continuous(self, rng, size):
        raise NotImplementedError


# --- lattice families -------------------------------------------------------


@dataclass(frozen=True)
class DiracZero(RewardDist):
    """All mass at reward 0.  Used for the self-loops of absorbing targets."""

    name: ClassVar[str] = "dirac"

    def pmf(self, k: int) -> np.ndarray:
        out = np.zeros(k)
        if k:
            out[0] = 1.0
        return out

    def mean(self) -> float:
        return 0.0

    def sample(self, rng, size=None):
        return 0 if size is None else np.zeros(size, dtype=np.int64)


@dataclass(frozen=True)
class ExplicitLattice(RewardDist):
    values: tuple[float, ...]

    name: ClassVar[str] = "lattice"

    def __init__(self, values) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        self.check()

    def check(self) -> None:
        _require(len(self.values) > 0, "lattice vector must be nonempty")
        arr = np.asarray(self.values)
        _require(bool(np.all(np.isfinite(arr))), "lattice entries must be finite")
        _require(bool(np.all(arr >= 0.0)), "lattice entries must be nonnegative")
        _require(arr.sum() <= 1.0 + 1e-9, f"lattice mass {arr.sum():.12g} exceeds 1")

    def pmf(self, k: int) -> np.ndarray:
        out = np.zeros(k)
        n = min(k, len(self.values))
        out[:n] = self.values[:n]
        return out

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.values)), self.values))

    def total_mass(self) -> float:
        return float(sum(self.values))


@dataclass(frozen=True)
class Binomial(RewardDist):
    n: int
    p: float

    name: ClassVar[str] = "binomial"

    def check(self) -> None:
        _require(int(self.n) == self.n and self.n >= 0, f"binomial n must be a natural number, got {self.n}")
        _require(0.0 <= self.p <= 1.0, f"binomial p must lie in [0,1], got {self.p}")

    def pmf(self, k: int) -> np.ndarray:
        return stats.binom.pmf(np.arange(k), int(self.n), self.p)

    def mean(self) -> float:
        return self.n * self.p

    def sample(self, rng, size=None):
        return rng.binomial(int(self.n), self.p, size=size)


@dataclass(frozen=True)
class Geometric(RewardDist):
    """Number of trials up to and including the first success; support 1, 2, ..."""

    p: float

    name: ClassVar[str] = "geometric"

    def check(self) -> None:
        _require(0.0 < self.p <= 1.0, f"geometric p must lie in (0,1], got {self.p}")

    def pmf(self, k: int) -> np.ndarray:
        t = np.arange(k)
        out = np.zeros(k)
        pos = t >= 1
        out[pos] = (1.0 - self.p) ** (t[pos] - 1) * self.p
        return out

    def mean(self) -> float:
        return 1.0 / self.p

    def sample(self, rng, size=None):
        return rng.geometric(self.p, size=size)


@dataclass(frozen=True)
class DiscreteWeibull(RewardDist):
    """Type-I discrete Weibull with pmf q^((t-1)^b) - q^(t^b) for t >= 1."""

    q: float
    b: float

    name: ClassVar[str] = "dweibull"

    def check(self) -> None:
        _require(0.0 < self.q < 1.0, f"discrete Weibull q must lie in (0,1), got {self.q}")
        _require(self.b > 0.0, f"discrete Weibull b must be positive, got {self.b}")

    def pmf(self, k: int) -> np.ndarray:
        t = np.arange(k, dtype=float)
        out = np.zeros(k)
        pos = t >= 1
        out[pos] = self.q ** ((t[pos] - 1.0) ** self.b) - self.q ** (t[pos] ** self.b)
        return out

    def mean(self) -> float:
        # E[T] = sum_{t>=0} P(T > t) = sum_{t>=0} q^(t^b)
        return _series_sum(lambda t: self.q ** (t ** self.b))

    def sample(self, rng, size=None):
        u = rng.random(size)
        t = np.ceil((np.log1p(-u) / math.log(self.q)) ** (1.0 / self.b))
        t = np.maximum(t, 1).astype(np.int64)
        return int(t) if size is None else t


@dataclass(frozen=True)
class DiscreteGumbel(RewardDist):
    """pmf exp(-a p^(t+1)) - exp(-a p^t) on t >= 0.

    The terms telescope to 1 - exp(-a), so the family carries a small mass
    deficit that is treated like any other truncation loss.
    """

    p: float
    a: float = 5.0

    name: ClassVar[str] = "dgumbel"

    def check(self) -> None:
        _require(0.0 < self.p < 1.0, f"discrete Gumbel p must lie in (0,1), got {self.p}")
        _require(self.a > 0.0, f"discrete Gumbel a must be positive, got {self.a}")

    def pmf(self, k: int) -> np.ndarray:
        t = np.arange(k, dtype=float)
        return np.exp(-self.a * self.p ** (t + 1.0)) - np.exp(-self.a * self.p ** t)

    def total_mass(self) -> float:
        return 1.0 - math.exp(-self.a)

    def mean(self) -> float:
        # sum_t t*pmf(t) = sum_{t>=1} (total - F(t-1)) with F(t) = exp(-a p^(t+1)) - exp(-a)
        return _series_sum(lambda t: 1.0 - math.exp(-self.a * self.p ** (t + 1.0)), start=0)


def _series_sum(term, start: int = 0) -> float:
    total = 0.0
    t = start
    while True:
        v = term(float(t))
        total += v
        if v < _MEAN_TAIL_TOL or t > 10_000_000:
            return total
        t += 1


@lru_cache(maxsize=256)
def _lattice_table(dist: RewardDist) -> np.ndarray:
    target = min(_SAMPLING_COVERAGE, dist.total_mass() * _SAMPLING_COVERAGE)
    k = 64
    while True:
        pmf = dist.pmf(k)
        if pmf.sum() >= target or k >= _SAMPLING_MAX_LEN:
            return np.cumsum(pmf)
        k *= 2


def _sample_lattice(dist: RewardDist, rng: np.random.Generator, size):
    cum = _lattice_table(dist)
    n = 1 if size is None else int(size)
    out = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        # draws landing in the tail bucket beyond the table are redrawn
        u = rng.random(n - filled)
        idx = np.searchsorted(cum, u, side="right")
        ok = idx[idx < len(cum)]
        out[filled:filled + len(ok)] = ok
        filled += len(ok)
    return int(out[0]) if size is None else out


# --- continuous families ----------------------------------------------------


@dataclass(frozen=True)
class UniformMixture(RewardDist):
    """Mixture of uniforms on half-open intervals [lo, hi)."""

    components: tuple[tuple[float, float, float], ...]

    continuous: ClassVar[bool] = True
    name: ClassVar[str] = "uniform_mixture"

    def __init__(self, components) -> None:
        comps = tuple((float(w), float(lo), float(hi)) for w, lo, hi in components)
        object.__setattr__(self, "components", comps)
        self.check()

    def check(self) -> None:
        _require(len(self.components) > 0, "mixture needs at least one component")
        for w, lo, hi in self.components:
            _require(w >= 0.0, f"mixture weight {w} is negative")
            _require(0.0 <= lo < hi, f"mixture interval [{lo},{hi}) is empty or negative")
        total = sum(c[0] for c in self.components)
        _require(abs(total - 1.0) <= 1e-9, f"mixture weights sum to {total:.12g}, not 1")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, lo, hi in self.components:
            out += np.where((x >= lo) & (x < hi), w / (hi - lo), 0.0)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, lo, hi in self.components:
            out += w * np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        return out

    def mean(self) -> float:
        return sum(w * 0.5 * (lo + hi) for w, lo, hi in self.components)

    def _sample_continuous(self, rng, size):
        weights = np.array([c[0] for c in self.components])
        n = 1 if size is None else size
        which = rng.choice(len(weights), size=n, p=weights / weights.sum())
        lo = np.array([c[1] for c in self.components])[which]
        hi = np.array([c[2] for c in self.components])[which]
        out = lo + (hi - lo) * rng.random(n)
        return float(out[0]) if size is None else out


@dataclass(frozen=True)
class Exponential(RewardDist):
    rate: float

    continuous: ClassVar[bool] = True
    name: ClassVar[str] = "exponential"

    def check(self) -> None:
        _require(self.rate > 0.0, f"exponential rate must be positive, got {self.rate}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def mean(self) -> float:
        return 1.0 / self.rate

    def _sample_continuous(self, rng, size):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class WeibullCont(RewardDist):
    shape: float
    scale: float

    continuous: ClassVar[bool] = True
    name: ClassVar[str] = "weibull"

    def check(self) -> None:
        _require(self.shape > 0.0, f"Weibull shape must be positive, got {self.shape}")
        _require(self.scale > 0.0, f"Weibull scale must be positive, got {self.scale}")

    @classmethod
    def from_shape_theta(cls, shape: float, theta: float) -> "WeibullCont":
        """Build from the (shape, theta) form with pdf (shape/theta) x^(shape-1) exp(-x^shape/theta)."""
        return cls(shape, theta ** (1.0 / shape))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return stats.weibull_min.pdf(x, self.shape, scale=self.scale)

    def cdf(self, x):
        return stats.weibull_min.cdf(np.asarray(x, dtype=float), self.shape, scale=self.scale)

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def _sample_continuous(self, rng, size):
        return self.scale * rng.weibull(self.shape, size=size)


FAMILIES: dict[str, type[RewardDist]] = {
    cls.name: cls
    for cls in (DiracZero, ExplicitLattice, Binomial, Geometric, DiscreteWeibull,
                DiscreteGumbel, UniformMixture, Exponential, WeibullCont)
}
