"""Daubechies filters and the separable interior-only detail transform.

The transform is a standard orthonormal pyramid (filter and decimate),
applied independently along each axis of a lattice field.  Coefficients
whose filter footprint would touch data outside the observed lattice are
discarded rather than synthesized from padding, so every kept coefficient
is identical to what a larger, zero-extended field would produce.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InsufficientDataError, InvalidRangeError, UnsupportedOrderError
from .field import Field

MAX_ORDER = 10
MAX_CASCADE_DEPTH = 16
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class WaveletFilter:
    """Orthonormal compactly supported filter pair.

    ``lowpass`` has 2N taps summing to sqrt(2); ``highpass`` is its
    quadrature mirror g[k] = (-1)^k h[2N-1-k].  ``support_len`` = 2N-1 is
    the one-sided support of the underlying wavelet in lattice units and
    drives the interior-coefficient counting everywhere else.
    """

    n_vanishing: int
    lowpass: tuple[float, ...]
    highpass: tuple[float, ...]

    @property
    def support_len(self) -> int:
        return 2 * self.n_vanishing - 1

    @property
    def lowpass_array(self) -> np.ndarray:
        return np.asarray(self.lowpass)

    @property
    def highpass_array(self) -> np.ndarray:
        return np.asarray(self.highpass)


def _daubechies_lowpass(n: int) -> np.ndarray:
    """Minimal-phase Daubechies lowpass taps, solved in extended precision.

    Spectral factorization of the binomial half-band polynomial: the roots
    are extracted at 60 significant digits so the float64 taps are exact to
    rounding, then normalized to sum to sqrt(2).
    """
    import mpmath as mp

    if n == 1:
        return np.array([1.0, 1.0]) / SQRT2
    with mp.workdps(60):
        poly = [mp.mpf(comb(n - 1 + k, k)) for k in range(n)][::-1]
        yroots = mp.polyroots(poly, maxsteps=200, extraprec=200)
        coeffs = [mp.mpf(1)]
        for y in yroots:
            const = 1 - 2 * y
            disc = mp.sqrt(const**2 - 1)
            z = const + disc
            if abs(z) > 1:
                z = const - disc
            nxt = [mp.mpf(0)] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i] += c
                nxt[i + 1] -= c * z
            coeffs = nxt
        binom = [mp.mpf(comb(n, k)) for k in range(n + 1)]
        full = [mp.mpf(0)] * (len(coeffs) + n)
        for i, c in enumerate(coeffs):
            for j, b in enumerate(binom):
                full[i + j] += c * b
        full = [mp.re(c) for c in full]
        scale = mp.sqrt(2) / sum(full)
        return np.array([float(c * scale) for c in full])


@lru_cache(maxsize=None)
def daubechies_filter(n_vanishing: int) -> WaveletFilter:
    """Build the Daubechies filter with ``n_vanishing`` vanishing moments.

    Filters are computed once and cached; repeated calls are free.
    """
    if not isinstance(n_vanishing, (int, np.integer)) or isinstance(n_vanishing, bool):
        raise UnsupportedOrderError(f"order must be an integer, got {n_vanishing!r}")
    if not 1 <= n_vanishing <= MAX_ORDER:
        raise UnsupportedOrderError(
            f"order must be in [1, {MAX_ORDER}], got {n_vanishing}"
        )
    h = _daubechies_lowpass(int(n_vanishing))
    length = 2 * n_vanishing
    g = np.array([(-1) ** k * h[length - 1 - k] for k in range(length)])
    return WaveletFilter(int(n_vanishing), tuple(h), tuple(g))


def _scaling_at_integers(filt: WaveletFilter) -> np.ndarray:
    """Scaling-function values at integer points of [0, 2N-1].

    Solved as the eigenvalue-1 eigenvector of the two-scale transition
    matrix, normalized to sum to 1.  The Haar case is discontinuous at the
    integers and is pinned to its right-continuous values directly.
    """
    h = filt.lowpass_array
    length = len(h)
    if filt.n_vanishing == 1:
        return np.array([1.0, 0.0])
    mat = np.zeros((length, length))
    for k in range(length):
        for j in range(length):
            m = 2 * k - j
            if 0 <= m < length:
                mat[k, j] = SQRT2 * h[m]
    eigvals, eigvecs = np.linalg.eig(mat)
    vec = np.real(eigvecs[:, np.argmin(np.abs(eigvals - 1.0))])
    return vec / vec.sum()


def _refine(values: np.ndarray, taps: np.ndarray, level: int, support: int) -> np.ndarray:
    """One two-scale refinement step from dyadic level ``level - 1`` to ``level``."""
    size = support * 2**level + 1
    out = np.zeros(size)
    for m, c in enumerate(taps):
        lo = m * 2 ** (level - 1)
        hi = min(size, lo + len(values))
        if hi > lo:
            out[lo:hi] += SQRT2 * c * values[: hi - lo]
    return out


@lru_cache(maxsize=64)
def _cascade_cached(n_vanishing: int, depth: int) -> np.ndarray:
    filt = daubechies_filter(n_vanishing)
    support = filt.support_len
    phi = _scaling_at_integers(filt)
    for r in range(1, depth):
        phi = _refine(phi, filt.lowpass_array, r, support)
    psi = _refine(phi, filt.highpass_array, depth, support)
    psi.flags.writeable = False
    return psi


def cascade_table(filt: WaveletFilter, depth: int) -> np.ndarray:
    """Mother-wavelet samples on the dyadic grid k/2^depth over [0, 2N-1].

    Returns ``(2N-1) * 2^depth + 1`` values, endpoints included (both are
    zero).  The table converges to the continuous wavelet as ``depth``
    grows; its Riemann sum vanishes and its squared Riemann sum tends to 1.
    """
    if not 1 <= depth <= MAX_CASCADE_DEPTH:
        raise InvalidRangeError(f"depth must be in [1, {MAX_CASCADE_DEPTH}], got {depth}")
    return _cascade_cached(filt.n_vanishing, int(depth))


def _decimated_filter(x: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Filter-and-decimate along ``axis`` keeping full-footprint outputs only.

    Output k corresponds to input offset 2k: y[k] = sum_m taps[m] x[2k + m].
    """
    n = x.shape[axis]
    n_taps = len(taps)
    n_out = (n - n_taps) // 2 + 1
    if n_out < 1:
        raise InsufficientDataError(
            f"axis of length {n} too short for {n_taps}-tap decimated filter"
        )
    index = [slice(None)] * x.ndim
    out = None
    for m, c in enumerate(taps):
        index[axis] = slice(m, m + 2 * n_out - 1, 2)
        term = c * x[tuple(index)]
        out = term if out is None else out + term
    return out


def available_count(length: int, level: int, filt: WaveletFilter) -> int:
    """Number of interior detail coefficients at ``level`` for a signal of ``length``."""
    return length // 2**level - filt.support_len


def _details_along_axis(
    x: np.ndarray, filt: WaveletFilter, levels: list[int], axis: int
) -> dict[int, np.ndarray]:
    """Detail coefficients along one axis for several levels, sharing the cascade.

    Each level-j output is truncated to the interior count computed from the
    axis length of ``x`` (processing other axes never changes this axis).
    """
    h = filt.lowpass_array
    g = filt.highpass_array
    n = x.shape[axis]
    out: dict[int, np.ndarray] = {}
    approx = x
    for level in range(1, max(levels) + 1):
        n_keep = available_count(n, level, filt)
        if level in levels and n_keep < 1:
            raise InsufficientDataError(
                f"axis of length {n} has no interior coefficients at level {level}"
            )
        detail = _decimated_filter(approx, g, axis) if level in levels else None
        if detail is not None:
            index = [slice(None)] * x.ndim
            index[axis] = slice(0, n_keep)
            out[level] = detail[tuple(index)]
        if level < max(levels):
            approx = _decimated_filter(approx, h, axis)
    return out


def detail_1d(signal: np.ndarray, filt: WaveletFilter, level: int) -> np.ndarray:
    """Level-``level`` detail coefficients of a 1-d signal.

    ``level - 1`` lowpass-and-decimate stages followed by one highpass stage;
    only coefficients whose footprint lies fully inside the signal are kept,
    so the count is ``len(signal) // 2**level - (2N - 1)``.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("detail_1d expects a 1-d signal")
    if level < 1:
        raise InvalidRangeError(f"level must be >= 1, got {level}")
    return _details_along_axis(signal, filt, [int(level)], 0)[int(level)]


@dataclass(frozen=True)
class CoefficientGrid:
    """Interior tensor-product detail coefficients at one octave vector."""

    octave: tuple[int, ...]
    coeffs: np.ndarray

    @property
    def counts(self) -> tuple[int, ...]:
        return self.coeffs.shape

    @property
    def size(self) -> int:
        return self.coeffs.size


def validate_octave(octave: tuple[int, ...], dims: tuple[int, ...], filt: WaveletFilter) -> None:
    """Check an octave vector against field dimensions.

    Requires every level >= 1 and at least one interior coefficient per axis,
    i.e. 2^j * (support_len + 1) <= T along each axis.
    """
    if len(octave) != len(dims):
        raise InvalidRangeError(
            f"octave {octave} has {len(octave)} axes, field has {len(dims)}"
        )
    for j, n in zip(octave, dims):
        if j < 1:
            raise InvalidRangeError(f"octave levels must be >= 1, got {octave}")
        if 2**j * (filt.support_len + 1) > n:
            raise InsufficientDataError(
                f"level {j} needs at least {2**j * (filt.support_len + 1)} samples, axis has {n}"
            )


def detail_grid(field: Field, filt: WaveletFilter, octave: tuple[int, ...]) -> CoefficientGrid:
    """Separable detail coefficients of ``field`` at one octave vector.

    Applies the 1-d pyramid along each axis in turn at that axis's level;
    the result does not depend on the axis order.
    """
    octave = tuple(int(j) for j in octave)
    validate_octave(octave, field.dims, filt)
    x = field.data
    for axis, level in enumerate(octave):
        x = _details_along_axis(x, filt, [level], axis)[level]
    return CoefficientGrid(octave, x)


def sample_variance(grid: CoefficientGrid) -> float:
    """Mean of squared coefficients over the grid."""
    if grid.size < 1:
        raise InsufficientDataError("empty coefficient grid")
    return float(np.mean(grid.coeffs**2))


def octave_box(j_low: tuple[int, ...], j_high: tuple[int, ...]) -> list[tuple[int, ...]]:
    """All integer octave vectors in the box [j_low, j_high], lexicographic."""
    j_low = tuple(int(j) for j in j_low)
    j_high = tuple(int(j) for j in j_high)
    if len(j_low) != len(j_high):
        raise InvalidRangeError("octave bounds must have equal length")
    if any(hi < lo for lo, hi in zip(j_low, j_high)):
        raise InvalidRangeError(f"empty octave box: low={j_low} high={j_high}")
    box = [()]
    for lo, hi in zip(j_low, j_high):
        box = [j + (level,) for j in box for level in range(lo, hi + 1)]
    return box


def auto_octave_box(
    dims: tuple[int, ...],
    filt: WaveletFilter,
    j_low: int | tuple[int, ...] = 3,
    min_axis_coeffs: int = 2,
) -> list[tuple[int, ...]]:
    """Default octave box for a lattice: low level fixed, high level from the data.

    Per axis the top level is the largest with at least ``min_axis_coeffs``
    interior coefficients; every axis must admit at least two levels so the
    regression slope is identified.
    """
    lows = (j_low,) * len(dims) if isinstance(j_low, (int, np.integer)) else tuple(j_low)
    if len(lows) != len(dims):
        raise InvalidRangeError("j_low length must match field dimension")
    highs = []
    for lo, n in zip(lows, dims):
        if lo < 1:
            raise InvalidRangeError(f"j_low must be >= 1, got {lo}")
        j = lo
        while available_count(n, j + 1, filt) >= min_axis_coeffs:
            j += 1
        if j == lo or available_count(n, lo, filt) < min_axis_coeffs:
            raise InsufficientDataError(
                f"axis of length {n} does not admit two octaves above {lo} "
                f"with {min_axis_coeffs}+ coefficients"
            )
        highs.append(j)
    return octave_box(lows, tuple(highs))
