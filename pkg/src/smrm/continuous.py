"""Quadrature convolution and solvers for continuous rewards.

Densities are sampled on N equidistant points of [0, b].  A convolution
integral (f * g)(x_i) is approximated by a Riemann or trapezoid sum over the
same points, which is itself a discrete convolution and therefore runs
through the FFT.  Romberg extrapolation combines trapezoid results from
nested grids with N, 2N-1, 4N-3, ... points.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import GridMismatch, InvalidMixture, InvalidParameter
from .convkernel import linear_length, spectral_matvec
from .iterative import IterationConfig, _iterate
from .model import QuadratureGrid, ReachabilitySystem, SolveReport, Termination

MAX_ROMBERG_LEVEL = 6
RULES = ("riemann-r", "riemann-l", "trapezoid")


@dataclass(frozen=True, eq=False)
class SampledDensity:
    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != self.grid.N:
            raise GridMismatch(f"{v.shape[0]} samples do not fit a grid of {self.grid.N} points")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, grid: QuadratureGrid) -> "SampledDensity":
        return cls(grid, np.asarray(fn(grid.points), dtype=float))

    def integral(self) -> float:
        return float(trapezoid(self.values, dx=self.grid.step, axis=0))

    def scaled(self, c: float) -> "SampledDensity":
        return SampledDensity(self.grid, c * self.values)


def parse_rule(rule: str) -> tuple[str, int]:
    """'trapezoid' -> ('trapezoid', 1); 'romberg:3' -> ('trapezoid', 3)."""
    if rule.startswith("romberg"):
        _, _, lvl = rule.partition(":")
        level = int(lvl) if lvl else 2
        check_level(level)
        return "trapezoid", level
    if rule not in RULES:
        raise InvalidParameter(f"unknown quadrature rule {rule!r}; choose from {RULES} or romberg:L")
    return rule, 1


def check_level(level: int) -> None:
    if not 1 <= level <= MAX_ROMBERG_LEVEL:
        raise InvalidParameter(f"Romberg level must lie in 1..{MAX_ROMBERG_LEVEL}, got {level}")


def _zero_first(v: np.ndarray) -> np.ndarray:
    out = np.array(v, dtype=float, copy=True)
    out[0] = 0.0
    return out


def _conv_n(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n_pts = a.shape[0]
    n = linear_length(n_pts)
    return np.fft.irfft(np.fft.rfft(a, n=n, axis=0) * np.fft.rfft(b, n=n, axis=0), n=n, axis=0)[:n_pts]


def quad_convolve(f: np.ndarray, g: np.ndarray, step: float, rule: str) -> np.ndarray:
    """Array form of the quadrature convolution along axis 0."""
    if rule == "riemann-r":
        return step * _conv_n(f, _zero_first(g))
    if rule == "riemann-l":
        return step * _conv_n(_zero_first(f), g)
    if rule == "trapezoid":
        return 0.5 * step * (_conv_n(f, _zero_first(g)) + _conv_n(_zero_first(f), g))
    raise InvalidParameter(f"unknown quadrature rule {rule!r}")


def _same_grid(f: SampledDensity, g: SampledDensity) -> QuadratureGrid:
    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid} vs {g.grid}")
    return f.grid


def conv_riemann_right(f: SampledDensity, g: SampledDensity) -> SampledDensity:
    grid = _same_grid(f, g)
    return SampledDensity(grid, quad_convolve(f.values, g.values, grid.step, "riemann-r"))


def conv_riemann_left(f: SampledDensity, g: SampledDensity) -> SampledDensity:
    grid = _same_grid(f, g)
    return SampledDensity(grid, quad_convolve(f.values, g.values, grid.step, "riemann-l"))


def conv_trapezoid(f: SampledDensity, g: SampledDensity) -> SampledDensity:
    grid = _same_grid(f, g)
    return SampledDensity(grid, quad_convolve(f.values, g.values, grid.step, "trapezoid"))


def richardson(hierarchy, level: int) -> np.ndarray:
    """Combine trapezoid results on nested grids (coarsest first) into a level-l estimate.

    Each array is restricted to the coarse points before combining:
        R[o][i] = (4^o R[o-1][i+1] - R[o-1][i]) / (4^o - 1)
    """
    check_level(level)
    if len(hierarchy) < level:
        raise InvalidParameter(f"level {level} needs {level} nested trapezoid results, got {len(hierarchy)}")
    coarse_n = np.asarray(hierarchy[0]).shape[0]
    table = []
    for i, arr in enumerate(hierarchy[:level]):
        arr = np.asarray(arr, dtype=float)
        stride = 2 ** i
        if arr.shape[0] != (coarse_n - 1) * stride + 1:
            raise GridMismatch(f"hierarchy entry {i} has {arr.shape[0]} points, not nested in {coarse_n}")
        table.append(arr[::stride])
    for o in range(1, level):
        w = 4.0 ** o
        table = [(w * table[i + 1] - table[i]) / (w - 1.0) for i in range(len(table) - 1)]
    return table[0]


def conv_romberg(hierarchy, level: int) -> SampledDensity:
    """Romberg combination of trapezoid convolutions given as SampledDensity objects."""
    check_level(level)
    if len(hierarchy) < level:
        raise InvalidParameter(f"level {level} needs {level} nested trapezoid results, got {len(hierarchy)}")
    base = hierarchy[0].grid
    for i, item in enumerate(hierarchy[:level]):
        if item.grid != base.refined(i):
            raise GridMismatch(f"hierarchy entry {i} is on {item.grid}, expected {base.refined(i)}")
    return SampledDensity(base, richardson([d.values for d in hierarchy], level))


def romberg_convolve(f, g, grid: QuadratureGrid, level: int) -> SampledDensity:
    """Convolve two pdf callables with Romberg's method, sampling each nested grid."""
    check_level(level)
    hierarchy = []
    for i in range(level):
        fine = grid.refined(i)
        x = fine.points
        hierarchy.append(SampledDensity(fine, quad_convolve(np.asarray(f(x)), np.asarray(g(x)), fine.step,
                                                            "trapezoid")))
    return conv_romberg(hierarchy, level)


def _dvc_values(v1: np.ndarray, qfy: np.ndarray, m: int, step: float, rule: str) -> np.ndarray:
    total = np.array(v1, dtype=float, copy=True)
    term = total
    for _ in range(int(m)):
        term = quad_convolve(term, qfy, step, rule)
        total = total + term
    return total


def dvc(numer: SampledDensity, p: float, q: float, f_Y: SampledDensity, m: int,
        rule: str = "trapezoid") -> SampledDensity:
    """p f_X deconvolved by (delta - q f_Y), as the truncated series sum_{n<=m} p f_X * (q f_Y)^{*n}."""
    grid = _same_grid(numer, f_Y)
    if p < 0 or q < 0 or p + q > 1.0 + 1e-9:
        raise InvalidMixture(f"need p, q >= 0 and p + q <= 1, got p={p}, q={q}")
    if q >= 1.0:
        raise InvalidMixture("q = 1 makes the series diverge")
    rule, level = parse_rule(rule)
    if level != 1:
        raise InvalidParameter("dvc supports the Riemann and trapezoid rules")
    if q == 0 or m == 0:
        return numer.scaled(p)
    return SampledDensity(grid, _dvc_values(p * numer.values, q * f_Y.values, m, grid.step, rule))


# --- solvers ----------------------------------------------------------------


class _QuadratureOperator:
    """x -> sum_t rule(M[s,t], x_t) + c for a (N, m, m) hypermatrix M."""

    def __init__(self, M: np.ndarray, c: np.ndarray, step: float, rule: str):
        self.N = M.shape[0]
        self.n = linear_length(self.N)
        self.rule = rule
        self.c = c
        self.step = step
        self.spec = np.fft.rfft(M, n=self.n, axis=0)
        # M with its zeroth sample removed, for the rules that drop it
        self.spec0 = self.spec - M[0][None, :, :]

    def apply(self, x: np.ndarray) -> np.ndarray:
        X = np.fft.rfft(x, n=self.n, axis=0)
        X0 = X - x[0][None, :]
        if self.rule == "riemann-r":
            Y = spectral_matvec(self.spec, X0)
        elif self.rule == "riemann-l":
            Y = spectral_matvec(self.spec0, X)
        else:
            Y = 0.5 * (spectral_matvec(self.spec, X0) + spectral_matvec(self.spec0, X))
        return self.step * np.fft.irfft(Y, n=self.n, axis=0)[:self.N] + self.c


def _require_continuous(system: ReachabilitySystem) -> None:
    if not system.is_continuous:
        raise InvalidParameter("continuous solvers need a system assembled on a QuadratureGrid")


def jacobi_terms_continuous(system: ReachabilitySystem, m: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    """H and kappa with each self-loop divided out by the geometric-series deconvolution."""
    _require_continuous(system)
    AG = system.AG
    step = system.grid.step
    H = np.zeros_like(AG)
    kappa = np.zeros_like(system.h)
    for s in range(system.size):
        loop = AG[:, s, s]
        if not np.any(loop):
            H[:, s, :] = AG[:, s, :]
            kappa[:, s] = system.h[:, s]
        else:
            H[:, s, :] = _dvc_values(AG[:, s, :], loop[:, None], m, step, rule)
            kappa[:, s] = _dvc_values(system.h[:, s], loop, m, step, rule)
        H[:, s, s] = 0.0
    return H, kappa


def _solve_single(system, cfg, rule, method, m):
    if method == "power":
        op = _QuadratureOperator(system.AG, system.h, system.grid.step, rule)
    else:
        H, kappa = jacobi_terms_continuous(system, m, rule)
        op = _QuadratureOperator(H, kappa, system.grid.step, rule)
    report = _iterate(op.apply, np.zeros_like(system.h), cfg, system.s_question)
    report.grid = system.grid
    return report


def _solve(system, cfg, rule, method, m=0):
    _require_continuous(system)
    base_rule, level = parse_rule(rule)
    if level == 1:
        return _solve_single(system, cfg, base_rule, method, m)
    t0 = time.perf_counter()
    runs = []
    for i in range(level):
        sub = system if i == 0 else system.with_grid(system.grid.refined(i))
        runs.append(_solve_single(sub, cfg, "trapezoid", method, m))
    bad = [r.termination for r in runs if r.termination != Termination.CONVERGED]
    return SolveReport(
        solution=richardson([r.solution for r in runs], level),
        iterations=sum(r.iterations for r in runs),
        residual=max(r.residual for r in runs),
        wall_time=time.perf_counter() - t0,
        termination=bad[0] if bad else Termination.CONVERGED,
        states=system.s_question,
        history=[r.history for r in runs] if cfg.record_history else None,
        grid=system.grid,
    )


def solve_power_continuous(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig(),
                           rule: str = "trapezoid", level: int | None = None) -> SolveReport:
    """Power iteration with quadrature convolutions.

    For Romberg (``rule='romberg:L'`` or ``level=L``) the trapezoid iteration
    is run to convergence on each nested grid and the converged results are
    combined afterwards.
    """
    if level is not None and level > 1:
        rule = f"romberg:{level}"
    return _solve(system, cfg, rule, "power")


def solve_jacobi_continuous(system: ReachabilitySystem, cfg: IterationConfig = IterationConfig(),
                            rule: str = "trapezoid", m: int = 40) -> SolveReport:
    return _solve(system, cfg, rule, "jacobi", m)


def cdf_values(density: np.ndarray, step: float) -> np.ndarray:
    """Cumulative trapezoid integral, starting at 0."""
    return cumulative_trapezoid(density, dx=step, axis=0, initial=0.0)
