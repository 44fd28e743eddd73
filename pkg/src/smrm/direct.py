"""Direct solvers for the lattice first-passage system.

``solve_ge`` runs Gaussian elimination where every scalar operation is
replaced by its truncated-convolution analogue: products become ``conv_k``
and divisions become ``deconv_k``.  No pivoting is done; the diagonal of
I*delta - A*G always has a nonzero leading entry for a preprocessed system.

``solve_lu_approx`` instead transforms the system to the frequency domain,
solves one dense m x m system per frequency and transforms back.  It is
exact up to time-aliasing, which shrinks as the padding grows.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from .convkernel import conv_k, deconv_k
from .errors import InvalidParameter, SingularSliceMatrix
from .model import ReachabilitySystem, SolveReport, Termination

RESIDUAL_TOL = 1e-6


class ResidualWarning(UserWarning):
    pass


def _require_lattice(system: ReachabilitySystem) -> None:
    if system.is_continuous:
        raise InvalidParameter("direct solvers work on lattice systems; use the continuous module for pdfs")


def convolution_matrix(system: ReachabilitySystem) -> np.ndarray:
    """I*delta - A*G as a (k, m, m) hypermatrix."""
    m = system.size
    acal = -system.AG
    acal[0] += np.eye(m)
    return acal


def gauss_reduce(acal, h) -> tuple[np.ndarray, np.ndarray]:
    """Reduce the convolution system to upper-triangular form (no pivoting)."""
    U = np.array(acal, dtype=float, copy=True)
    rhs = np.array(h, dtype=float, copy=True)
    k, m, _ = U.shape
    for j in range(m - 1):
        below = U[:, j + 1:, j]
        if not np.any(below):
            continue
        # sigma_i = U[i,j] / U[j,j] for every row below the pivot at once
        sigma = deconv_k(below, U[:, j, j], k)
        U[:, j + 1:, j:] -= conv_k(U[:, None, j, j:], sigma[:, :, None], k)
        rhs[:, j + 1:] -= conv_k(rhs[:, None, j], sigma, k)
        U[:, j + 1:, j] = 0.0
    return U, rhs


def back_substitute(upper, h) -> np.ndarray:
    U = np.asarray(upper, dtype=float)
    rhs = np.asarray(h, dtype=float)
    k, m, _ = U.shape
    f = np.zeros((k, m))
    for i in range(m - 1, -1, -1):
        acc = rhs[:, i].copy()
        if i + 1 < m:
            acc -= conv_k(U[:, i, i + 1:], f[:, i + 1:], k).sum(axis=1)
        f[:, i] = deconv_k(acc, U[:, i, i], k)
    return f


def fixed_point_residual(system: ReachabilitySystem, f: np.ndarray) -> float:
    """max |f - ((A*G) conv f + h)| over all states and values."""
    k = system.length
    image = conv_k(system.AG, f[:, None, :], k).sum(axis=2) + system.h
    return float(np.max(np.abs(f - image)))


def solve_ge(system: ReachabilitySystem, check_residual: bool = True) -> SolveReport:
    _require_lattice(system)
    start = time.perf_counter()
    upper, rhs = gauss_reduce(convolution_matrix(system), system.h)
    f = back_substitute(upper, rhs)
    elapsed = time.perf_counter() - start
    if check_residual:
        res = fixed_point_residual(system, f)
        if not res <= RESIDUAL_TOL:
            warnings.warn(f"Gaussian elimination residual {res:.3g} exceeds {RESIDUAL_TOL:g}", ResidualWarning,
                          stacklevel=2)
    return SolveReport(f, 0, 0.0, elapsed, Termination.DIRECT, states=system.s_question)


def solve_lu_approx(system: ReachabilitySystem, pad_n: int) -> SolveReport:
    """Per-frequency dense solves of (I - A*C(tau)) x(tau) = d(tau), padded to pad_n + k."""
    _require_lattice(system)
    if pad_n < 0:
        raise InvalidParameter(f"padding must be nonnegative, got {pad_n}")
    start = time.perf_counter()
    k, m = system.length, system.size
    n = int(pad_n) + k
    spec_G = np.fft.rfft(system.G, n=n, axis=0)
    spec_h = np.fft.rfft(system.h, n=n, axis=0)
    mats = np.eye(m)[None, :, :] - system.A[None, :, :] * spec_G
    try:
        x = np.linalg.solve(mats, spec_h[:, :, None])[:, :, 0]
        bad = ~np.all(np.isfinite(x), axis=1)
    except np.linalg.LinAlgError:
        x, bad = None, None
    if x is None or bad.any():
        _raise_first_singular(mats, spec_h)
    f = np.fft.irfft(x, n=n, axis=0)[:k]
    return SolveReport(f, 0, 0.0, time.perf_counter() - start, Termination.DIRECT, states=system.s_question)


def _raise_first_singular(mats: np.ndarray, rhs: np.ndarray) -> None:
    for tau in range(mats.shape[0]):
        try:
            sol = np.linalg.solve(mats[tau], rhs[tau])
        except np.linalg.LinAlgError as exc:
            raise SingularSliceMatrix(tau, str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularSliceMatrix(tau, "non-finite solution")
    raise SingularSliceMatrix(-1, "batched solve failed")


__all__ = [
    "back_substitute",
    "convolution_matrix",
    "fixed_point_residual",
    "gauss_reduce",
    "solve_ge",
    "solve_lu_approx",
]
