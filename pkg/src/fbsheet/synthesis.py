"""Exact Gaussian synthesis of fractional Brownian sheets on lattices.

The increment process (a fractional-Gaussian-noise sheet) has a covariance
that factorizes per axis, so it is sampled by separable circulant embedding:
per-axis eigenvalue arrays from an FFT of the embedded autocovariance, one
d-dimensional FFT per draw, then a cumulative sum along every axis turns the
increments into the sheet itself.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import EmbeddingError
from .field import Field

NEG_EIG_TOL = 1e-10


def validate_hurst(hurst) -> tuple[float, ...]:
    """Normalize a Hurst vector, requiring every component in (0, 1)."""
    h = tuple(float(v) for v in np.atleast_1d(hurst))
    if len(h) < 1:
        raise ValueError("hurst vector must have at least one component")
    if any(not 0.0 < v < 1.0 for v in h):
        raise ValueError(f"hurst components must lie strictly in (0, 1), got {h}")
    return h


def fgn_autocovariance(hurst: float, lag) -> float | np.ndarray:
    """Autocovariance of unit-variance fractional Gaussian noise at integer lag.

    gamma(k) = ( |k+1|^2H - 2|k|^2H + |k-1|^2H ) / 2; symmetric in the lag,
    equal to 1 at lag 0, and identically 0 for H = 1/2 at nonzero lags.
    """
    k = np.abs(np.asarray(lag, dtype=np.float64))
    e = 2.0 * hurst
    out = 0.5 * ((k + 1.0) ** e - 2.0 * k**e + np.abs(k - 1.0) ** e)
    return float(out) if np.isscalar(lag) else out


@lru_cache(maxsize=256)
def _cached_eigenvalues(hurst: float, n: int) -> np.ndarray:
    r = fgn_autocovariance(hurst, np.arange(n))
    first_row = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(first_row).real
    top = eig.max()
    low = eig.min()
    if low < -NEG_EIG_TOL * top:
        raise EmbeddingError(
            f"circulant embedding not nonnegative for H={hurst}, n={n}: "
            f"min eigenvalue {low:.3e}"
        )
    eig = np.clip(eig, 0.0, None)
    eig.flags.writeable = False
    return eig


def embedding_eigenvalues(hurst: float, n: int) -> np.ndarray:
    """Eigenvalues of the minimal circulant embedding of the fGn covariance.

    The embedded first row is [r(0), .., r(n-1), r(n-2), .., r(1)] of length
    2(n-1); eigenvalues come from its FFT.  Tiny negatives (within
    ``NEG_EIG_TOL`` of the largest eigenvalue) are clipped to zero, anything
    below that raises ``EmbeddingError``.
    """
    if n < 2:
        raise ValueError(f"embedding needs n >= 2, got {n}")
    hurst = float(hurst)
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    return _cached_eigenvalues(hurst, int(n))


def _complex_fgn(hurst: tuple[float, ...], dims: tuple[int, ...], seed: int) -> np.ndarray:
    """Complex lattice whose real and imaginary parts are independent fGn sheets."""
    eigs = [embedding_eigenvalues(h, n) for h, n in zip(hurst, dims)]
    scale = eigs[0]
    for e in eigs[1:]:
        scale = np.multiply.outer(scale, e)
    torus = scale.shape
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    noise = rng.standard_normal(torus) + 1j * rng.standard_normal(torus)
    noise *= np.sqrt(scale / np.prod(torus))
    spectrum = scipy.fft.fftn(noise, workers=1)
    window = tuple(slice(0, n) for n in dims)
    return spectrum[window]


def synth_fgn_sheet(hurst, dims, seed: int) -> Field:
    """Draw one mean-zero Gaussian lattice with tensor-product fGn covariance.

    Deterministic in ``seed``; per-mode standard deviations are the square
    roots of the tensor-product embedding eigenvalues over the torus size.
    """
    hurst = validate_hurst(hurst)
    dims = tuple(int(n) for n in np.atleast_1d(dims))
    if len(dims) != len(hurst):
        raise ValueError("dims and hurst must have the same length")
    if any(n < 2 for n in dims):
        raise ValueError(f"every axis needs at least 2 samples, got {dims}")
    data = np.ascontiguousarray(_complex_fgn(hurst, dims, seed).real)
    return Field(data, hurst_truth=hurst)


def synth_fgn_pair(hurst, dims, seed: int) -> tuple[Field, Field]:
    """Two independent fGn sheets from a single FFT (real and imaginary parts)."""
    hurst = validate_hurst(hurst)
    dims = tuple(int(n) for n in np.atleast_1d(dims))
    if any(n < 2 for n in dims):
        raise ValueError(f"every axis needs at least 2 samples, got {dims}")
    z = _complex_fgn(hurst, dims, seed)
    return (
        Field(np.ascontiguousarray(z.real), hurst_truth=hurst),
        Field(np.ascontiguousarray(z.imag), hurst_truth=hurst),
    )


def integrate_increments(noise: Field) -> Field:
    """Cumulative sum along every axis, with a zero layer prepended per axis.

    The output vanishes whenever any coordinate index is 0 and has one more
    sample than the input along each axis.
    """
    x = noise.data
    for axis in range(x.ndim):
        x = np.cumsum(x, axis=axis)
        pad = [(0, 0)] * x.ndim
        pad[axis] = (1, 0)
        x = np.pad(x, pad)
    return Field(x, hurst_truth=noise.hurst_truth)


def synth_fbs(hurst, dims, seed: int) -> Field:
    """Fractional Brownian sheet with exactly ``dims`` samples per axis.

    Generates the increment sheet on dims-1 lattice points per axis and
    integrates, so the returned field has the requested shape and is zero on
    every index-0 face.
    """
    dims = tuple(int(n) for n in np.atleast_1d(dims))
    if any(n < 3 for n in dims):
        raise ValueError(f"every axis needs at least 3 samples, got {dims}")
    noise = synth_fgn_sheet(hurst, tuple(n - 1 for n in dims), seed)
    return integrate_increments(noise)


def synth_fbs_pair(hurst, dims, seed: int) -> tuple[Field, Field]:
    """Two independent fractional Brownian sheets from a single FFT."""
    dims = tuple(int(n) for n in np.atleast_1d(dims))
    if any(n < 3 for n in dims):
        raise ValueError(f"every axis needs at least 3 samples, got {dims}")
    a, b = synth_fgn_pair(hurst, tuple(n - 1 for n in dims), seed)
    return integrate_increments(a), integrate_increments(b)
