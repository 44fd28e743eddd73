"""Truncated convolution and deconvolution of lattice vectors.

Vectors have length k and represent masses on 0..k-1.  Convolution is done
with zero padding and FFTs so the first k values equal the exact linear
convolution.  Every function accepts a leading value axis followed by any
number of batch axes, so hypermatrices (k, m, m) and hypervectors (k, m)
go through the same code.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.fft import next_fast_len

from .errors import DegenerateLength, NotFullDeconvolutor

ZERO_PIVOT = 1e-300


def _as_len(v, k: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] >= k:
        return v[:k]
    pad = [(0, k - v.shape[0])] + [(0, 0)] * (v.ndim - 1)
    return np.pad(v, pad)


def pad_widetilde(v) -> np.ndarray:
    """Zero-extend a length-k vector to 2k-1 (enough for exact linear convolution)."""
    v = np.asarray(v)
    k = v.shape[0]
    if k == 0:
        raise DegenerateLength("cannot pad an empty vector")
    return _as_len(v, 2 * k - 1)


def pad_widehat(v, n: int) -> np.ndarray:
    """Zero-extend a length-k vector to n+k."""
    if n < 0:
        raise ValueError(f"padding must be nonnegative, got {n}")
    v = np.asarray(v)
    return _as_len(v, v.shape[0] + int(n))


def dft(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if (n if n is not None else v.shape[0]) == 0:
        raise DegenerateLength("transform of an empty vector")
    return np.fft.fft(v, n=n, axis=0)


def idft(s, n: int | None = None) -> np.ndarray:
    """Inverse transform; returns the real part (inputs are spectra of real data)."""
    s = np.asarray(s)
    if (n if n is not None else s.shape[0]) == 0:
        raise DegenerateLength("transform of an empty vector")
    return np.fft.ifft(s, n=n, axis=0).real


def rspectrum(v, n: int) -> np.ndarray:
    """Half spectrum of a real vector zero-padded to n (what the solvers iterate on)."""
    return np.fft.rfft(v, n=n, axis=0)


def irspectrum(s, n: int, k: int | None = None) -> np.ndarray:
    out = np.fft.irfft(s, n=n, axis=0)
    return out if k is None else out[:k]


def conv_k(v1, v2, k: int) -> np.ndarray:
    """First k values of the linear convolution of v1 and v2 along axis 0."""
    if k <= 0:
        raise DegenerateLength("convolution length must be positive")
    a = _as_len(v1, k)
    b = _as_len(v2, k)
    n = linear_length(k)
    return np.fft.irfft(np.fft.rfft(a, n=n, axis=0) * np.fft.rfft(b, n=n, axis=0), n=n, axis=0)[:k]


def linear_length(k: int) -> int:
    """Transform length for exact truncated convolution: at least 2k-1, FFT friendly."""
    return next_fast_len(2 * k - 1, real=True)


def spectral_matvec(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-frequency product of a (t, m, m) stack with a (t, m) stack."""
    return np.matmul(M, X[:, :, None])[:, :, 0]


def conv_direct(v1, v2, k: int) -> np.ndarray:
    """O(k^2) reference convolution for 1-D vectors."""
    a = _as_len(np.asarray(v1, dtype=float), k)
    b = _as_len(np.asarray(v2, dtype=float), k)
    return np.convolve(a, b)[:k]


def _check_pivot(denom: np.ndarray) -> None:
    lead = np.abs(np.asarray(denom)[0])
    if np.any(lead < ZERO_PIVOT):
        raise NotFullDeconvolutor("leading entry of the divisor is zero; deconvolution at fixed length is undefined")


def deconv_recursive(numer, denom, k: int) -> np.ndarray:
    """Reference quotient q with conv(q, denom)[:k] == numer[:k], for 1-D inputs.

    q[i] = (numer[i] - sum_{x<i} q[x] denom[i-x]) / denom[0]
    """
    if k <= 0:
        raise DegenerateLength("deconvolution length must be positive")
    n = _as_len(np.asarray(numer, dtype=float), k)
    d = _as_len(np.asarray(denom, dtype=float), k)
    _check_pivot(d)
    q = np.zeros(k)
    rev = d[::-1]  # rev[k-1-j] == d[j]
    for i in range(k):
        acc = np.dot(q[:i], rev[k - 1 - i:k - 1]) if i else 0.0
        q[i] = (n[i] - acc) / d[0]
    return q


def deconv_k(numer, denom, k: int, method: str = "triangular") -> np.ndarray:
    """Fixed-length deconvolution along axis 0.

    ``method`` is one of
      - "recursive": the explicit recursion, one entry at a time (1-D only),
      - "triangular": the same recursion run as a lower-triangular Toeplitz
        forward substitution by LAPACK; numer may carry batch columns,
      - "fft": Newton iteration for the reciprocal series followed by one
        FFT convolution, O(k log k).
    """
    if k <= 0:
        raise DegenerateLength("deconvolution length must be positive")
    d = _as_len(np.asarray(denom, dtype=float), k)
    if d.ndim != 1:
        raise ValueError("divisor must be a single vector")
    _check_pivot(d)
    n = _as_len(np.asarray(numer, dtype=float), k)
    if method == "recursive":
        if n.ndim == 1:
            return deconv_recursive(n, d, k)
        flat = n.reshape(k, -1)
        cols = [deconv_recursive(flat[:, c], d, k) for c in range(flat.shape[1])]
        return np.stack(cols, axis=1).reshape(n.shape)
    if method == "triangular":
        T = linalg.toeplitz(d, np.zeros(k))
        flat = n.reshape(k, -1)
        out = linalg.solve_triangular(T, flat, lower=True, check_finite=False)
        return out.reshape(n.shape)
    if method == "fft":
        return conv_k(n, _reciprocal_series(d, k)[(slice(None),) + (None,) * (n.ndim - 1)], k)
    raise ValueError(f"unknown deconvolution method {method!r}")


def _reciprocal_series(d: np.ndarray, k: int) -> np.ndarray:
    """First k coefficients of 1/d(x) by Newton doubling: r <- r (2 - d r)."""
    r = np.array([1.0 / d[0]])
    size = 1
    while size < k:
        size = min(2 * size, k)
        dr = conv_k(d[:size], r, size)
        corr = -dr
        corr[0] += 2.0
        r = conv_k(r, corr, size)
    return r[:k]


def inverse_divisor(denom, k: int) -> np.ndarray:
    """deconv(delta, denom): lets repeated divisions by one vector become convolutions."""
    delta = np.zeros(k)
    delta[0] = 1.0
    return deconv_k(delta, denom, k)


def delta(k: int) -> np.ndarray:
    out = np.zeros(k)
    out[0] = 1.0
    return out
