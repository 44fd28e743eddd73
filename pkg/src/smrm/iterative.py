"""Power, Jacobi and Gauss-Seidel iterations for the lattice system.

All methods start from the zero hypervector and stop once the largest
absolute change between consecutive iterates is at most ``epsilon``.  That
test can stop early on slowly converging problems; it is kept because it is
cheap and matches how the methods are usually run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .convkernel import conv_k, inverse_divisor, linear_length, spectral_matvec
from .errors import InvalidParameter
from .model import ReachabilitySystem, SolveReport, Termination


@dataclass(frozen=True)
class IterationConfig:
    epsilon: float = 1e-7
    max_iterations: int = 2000
    divergence_threshold: float = 1e2
    record_history: bool = False

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise InvalidParameter("epsilon must be positive")
        if not self.epsilon < self.divergence_threshold:
            raise InvalidParameter("epsilon must be below the divergence threshold")
        if self.max_iterations < 0:
            raise InvalidParameter("max_iterations must be nonnegative")


def _require_lattice(system: ReachabilitySystem) -> None:
    if system.is_continuous:
        raise InvalidParameter("lattice iterations need a lattice system; use the continuous module")


def _iterate(step, start: np.ndarray, cfg: IterationConfig, states, diff_fn=None, finish=None):
    """Drive ``x <- step(x)`` until the stopping rule fires."""
    t0 = time.perf_counter()
    x = start
    history = [] if cfg.record_history else None
    iterates = [x.copy()] if cfg.record_history else None
    termination = Termination.MAX_ITERATIONS
    diff = float("inf")
    n = 0
    while n < cfg.max_iterations:
        nxt = step(x)
        n += 1
        diff = diff_fn(nxt, x) if diff_fn else float(np.max(np.abs(nxt - x)))
        x = nxt
        if history is not None:
            history.append(diff)
            iterates.append(finish(x) if finish else x.copy())
        if not np.isfinite(diff) or diff > cfg.divergence_threshold:
            termination = Termination.DIVERGED
            break
        if diff <= cfg.epsilon:
            termination = Termination.CONVERGED
            break
    solution = finish(x) if finish else x
    return SolveReport(solution, n, diff if n else 0.0, time.perf_counter() - t0, termination,
                       states=states, history=history, iterates=iterates)


class _SpectralOperator:
    """x -> (M conv x)[:k] + c for a (k, m, m) hypermatrix M, using padded FFTs."""

    def __init__(self, M: np.ndarray, c: np.ndarray):
        self.k = M.shape[0]
        self.n = linear_length(self.k)
        self.spec = np.fft.rfft(M, n=self.n, axis=0)
        self.c = c

    def apply(self, x: np.ndarray) -> np.ndarray:
        X = np.fft.rfft(x, n=self.n, axis=0)
        Y = spectral_matvec(self.spec, X)
        # irfft then slicing to k drops (re-zeroes) everything at index >= k
        return np.fft.irfft(Y, n=self.n, axis=0)[:self.k] + self.c

    def apply_row(self, i: int, X: np.ndarray) -> np.ndarray:
        Y = np.einsum("tj,tj->t", self.spec[:, i, :], X)
        return np.fft.irfft(Y, n=self.n)[:self.k] + self.c[:, i]


def solve_power_exact(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig()) -> SolveReport:
    """f <- (A*G) conv f + h with exact truncated convolutions."""
    _require_lattice(system)
    op = _SpectralOperator(system.AG, system.h)
    return _iterate(op.apply, np.zeros_like(system.h), cfg, system.s_question)


def bounded_density(system: ReachabilitySystem, n: int) -> np.ndarray:
    """Density of the reward collected on first reaching B within at most n steps."""
    _require_lattice(system)
    op = _SpectralOperator(system.AG, system.h)
    f = np.zeros_like(system.h)
    for _ in range(int(n)):
        f = op.apply(f)
    return f


def solve_power_approx(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig(),
                       pad_m: int | None = None) -> SolveReport:
    """Power iteration carried out entirely on spectra padded to pad_m + k.

    Convergence needs both the real and the imaginary parts of the spectral
    iterate to move by at most epsilon.  The result is transformed back once.
    """
    _require_lattice(system)
    k = system.length
    pad_m = k - 1 if pad_m is None else int(pad_m)
    if pad_m < 0:
        raise InvalidParameter(f"padding must be nonnegative, got {pad_m}")
    n = pad_m + k
    spec = np.fft.rfft(system.AG, n=n, axis=0)
    eta = np.fft.rfft(system.h, n=n, axis=0)

    def step(x):
        return spectral_matvec(spec, x) + eta

    def diff(new, old):
        d = new - old
        return float(max(np.max(np.abs(d.real)), np.max(np.abs(d.imag))))

    def finish(x):
        return np.fft.irfft(x, n=n, axis=0)[:k]

    return _iterate(step, np.zeros_like(eta), cfg, system.s_question, diff_fn=diff, finish=finish)


def jacobi_terms(system: ReachabilitySystem) -> tuple[np.ndarray, np.ndarray]:
    """(H, kappa) with the self-loop of each state divided out.

    H[s,t] = A[s,t]G[s,t] / (delta - A[s,s]G[s,s]) for t != s, H[s,s] = 0,
    kappa[s] = h[s] / (delta - A[s,s]G[s,s]).  Each row needs one
    deconvolution: the reciprocal of its divisor, reused by convolution.
    """
    k, m = system.length, system.size
    AG = system.AG
    H = np.zeros_like(AG)
    kappa = np.zeros_like(system.h)
    for s in range(m):
        divisor = -AG[:, s, s]
        divisor[0] += 1.0
        inv = inverse_divisor(divisor, k)
        H[:, s, :] = conv_k(AG[:, s, :], inv[:, None], k)
        H[:, s, s] = 0.0
        kappa[:, s] = conv_k(system.h[:, s], inv, k)
    return H, kappa


def solve_jacobi(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig()) -> SolveReport:
    _require_lattice(system)
    H, kappa = jacobi_terms(system)
    op = _SpectralOperator(H, kappa)
    return _iterate(op.apply, np.zeros_like(kappa), cfg, system.s_question)


def solve_gauss_seidel(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig()) -> SolveReport:
    """Jacobi with rows refreshed in ascending order inside each sweep."""
    _require_lattice(system)
    H, kappa = jacobi_terms(system)
    op = _SpectralOperator(H, kappa)
    m = system.size

    def sweep(x):
        x = x.copy()
        X = np.fft.rfft(x, n=op.n, axis=0)
        for i in range(m):
            x[:, i] = op.apply_row(i, X)
            X[:, i] = np.fft.rfft(x[:, i], n=op.n)
        return x

    return _iterate(sweep, np.zeros_like(kappa), cfg, system.s_question)


SOLVERS = {
    "power": solve_power_exact,
    "power-approx": solve_power_approx,
    "jacobi": solve_jacobi,
    "gauss-seidel": solve_gauss_seidel,
}
