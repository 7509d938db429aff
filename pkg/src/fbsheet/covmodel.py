"""Model covariance of the log-variance vector, and the two-step refit.

Wavelet coefficients of the sheet have a cross-covariance that factorizes
per axis into double integrals of the wavelet pair against the kernel
-|t-s|^(2H_i)/2.  Each factor depends only on the octave pair and the
translation offset 2^j k - 2^j' k', so one cross-correlation of dyadic
wavelet tables per octave pair yields every offset by quadrature.  Squaring,
summing over the available translations with overlap counts, and normalizing
by the per-octave variances gives the covariance model for the vector of
log2 sample variances; refitting with that model as the weight is the
two-step estimator.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidRangeError, ModelDegenerateError
from .estimator import EstimatorReport, RegressionSystem, fit_system
from .synthesis import validate_hurst
from .wavelet import MAX_CASCADE_DEPTH, WaveletFilter, cascade_table

LOG2E = np.log2(np.e)
HURST_MEMO_DECIMALS = 6
EIG_FLOOR_REL = 1e-12
MAX_CLIPPED_MASS = 0.01


@dataclass(frozen=True)
class CovModelConfig:
    """Quadrature and truncation settings for the covariance model.

    ``cascade_depth`` is the dyadic resolution of the wavelet tables;
    ``lag_cap`` the largest translation offset retained (larger offsets are
    treated as zero, justified by the coefficient decorrelation rate).
    """

    octaves: tuple[tuple[int, ...], ...]
    axis_counts: tuple[tuple[int, ...], ...]
    cascade_depth: int = 10
    lag_cap: int = 128

    def __post_init__(self):
        object.__setattr__(self, "octaves", tuple(tuple(int(v) for v in j) for j in self.octaves))
        object.__setattr__(
            self, "axis_counts", tuple(tuple(int(v) for v in c) for c in self.axis_counts)
        )
        if self.cascade_depth < 6:
            raise InvalidRangeError(f"cascade_depth must be >= 6, got {self.cascade_depth}")
        if len(self.axis_counts) != len(self.octaves):
            raise InvalidRangeError("axis_counts must match octaves")

    def validate_for_filter(self, filt: WaveletFilter) -> None:
        if self.lag_cap < 2 * filt.support_len:
            raise InvalidRangeError(
                f"lag_cap must be >= {2 * filt.support_len} for this filter, got {self.lag_cap}"
            )


def config_for_system(
    system: RegressionSystem, cascade_depth: int = 10, lag_cap: int = 128
) -> CovModelConfig:
    """Covariance-model settings matching a fitted regression system."""
    return CovModelConfig(
        octaves=system.octaves,
        axis_counts=tuple(tuple(int(v) for v in row) for row in system.axis_counts),
        cascade_depth=cascade_depth,
        lag_cap=lag_cap,
    )


_kernel_cache: dict = {}
_psi_cache: dict = {}
_cache_lock = threading.Lock()


def _psi_midpoints(filt: WaveletFilter, depth: int) -> np.ndarray:
    """Wavelet samples at the midpoints (i+1/2)/2^depth of the dyadic cells."""
    key = (filt.lowpass, depth)
    table = _psi_cache.get(key)
    if table is None:
        table = cascade_table(filt, depth + 1)[1::2]
        with _cache_lock:
            _psi_cache[key] = table
    return table


def _axis_kernel(
    hurst: float, j1: int, j2: int, filt: WaveletFilter, depth: int, lag_cap: int
) -> dict[int, float]:
    """Cross-covariance factor of two octaves as a function of the offset.

    Returns {offset: value} for offsets that are multiples of 2^min(j1,j2)
    within +-lag_cap.  Midpoint-rule quadrature on a grid common to both
    octaves; the finer octave's table keeps the configured depth, the
    coarser one is refined so the grids align.
    """
    hurst = round(float(hurst), HURST_MEMO_DECIMALS)
    key = (hurst, j1, j2, filt.lowpass, depth, lag_cap)
    hit = _kernel_cache.get(key)
    if hit is not None:
        return hit
    jmin = min(j1, j2)
    if depth + max(j1, j2) - jmin + 1 > MAX_CASCADE_DEPTH:
        raise InvalidRangeError(
            f"octave spread {abs(j1 - j2)} exceeds the cascade budget at depth {depth}; "
            "reduce cascade_depth or narrow the octave box"
        )
    spacing = 2.0 ** (jmin - depth)
    table1 = 2.0 ** (-j1 / 2.0) * _psi_midpoints(filt, depth + (j1 - jmin))
    table2 = 2.0 ** (-j2 / 2.0) * _psi_midpoints(filt, depth + (j2 - jmin))
    cross = fftconvolve(table1, table2[::-1])
    diffs = (np.arange(len(cross)) - (len(table2) - 1)) * spacing
    step = 2**jmin
    out: dict[int, float] = {}
    for offset in range(-(lag_cap // step) * step, (lag_cap // step) * step + 1, step):
        kernel = -0.5 * np.abs(diffs + offset) ** (2.0 * hurst)
        out[offset] = float(spacing**2 * np.dot(cross, kernel))
    with _cache_lock:
        _kernel_cache[key] = out
    return out


def detail_cross_covariance(
    hurst: float,
    j1: int,
    k1: int,
    j2: int,
    k2: int,
    filt: WaveletFilter,
    config: CovModelConfig,
) -> float:
    """One axis factor of the model covariance between two detail coefficients.

    Depends on (j1, j2) and the translation offset 2^j1 k1 - 2^j2 k2 only;
    offsets beyond ``lag_cap`` are treated as zero.
    """
    offset = 2**j1 * k1 - 2**j2 * k2
    if abs(offset) > config.lag_cap:
        return 0.0
    kernel = _axis_kernel(hurst, j1, j2, filt, config.cascade_depth, config.lag_cap)
    return kernel[offset]


def detail_variance(hurst: float, level: int, filt: WaveletFilter, config: CovModelConfig) -> float:
    """Model variance of a detail coefficient at one octave level (one axis)."""
    return detail_cross_covariance(hurst, level, 0, level, 0, filt, config)


def _overlap_counts(j1: int, j2: int, n1: int, n2: int, lag_cap: int) -> dict[int, int]:
    """How many translation pairs (a, b) in [1,n1]x[1,n2] share each offset.

    Offsets are 2^j1 a - 2^j2 b; since one scale divides the other, the pair
    count per offset reduces to an interval length.
    """
    step = 2 ** min(j1, j2)
    stride1 = 2**j1 // step
    stride2 = 2**j2 // step
    out: dict[int, int] = {}
    for offset in range(-(lag_cap // step) * step, (lag_cap // step) * step + 1, step):
        reduced = offset // step
        if stride1 == 1:
            lo = max(1, -((-(1 - reduced)) // stride2))
            hi = min(n2, (n1 - reduced) // stride2)
        else:
            lo = max(1, -((-(1 + reduced)) // stride1))
            hi = min(n1, (n2 + reduced) // stride1)
        out[offset] = max(0, hi - lo + 1)
    return out


def logvar_covariance_entry(
    hurst: tuple[float, ...],
    octave_a: tuple[int, ...],
    octave_b: tuple[int, ...],
    counts_a: tuple[int, ...],
    counts_b: tuple[int, ...],
    filt: WaveletFilter,
    config: CovModelConfig,
) -> float:
    """Model covariance between log2 sample variances at two octaves.

    Twice the squared coefficient cross-covariance summed over available
    translation pairs, normalized by the octave sample sizes and the model
    variances, times (log2 e)^2.
    """
    numerator = 1.0
    denominator = 1.0
    for axis, h in enumerate(hurst):
        j1, j2 = octave_a[axis], octave_b[axis]
        kernel = _axis_kernel(h, j1, j2, filt, config.cascade_depth, config.lag_cap)
        counts = _overlap_counts(j1, j2, counts_a[axis], counts_b[axis], config.lag_cap)
        numerator *= sum(c * kernel[lag] ** 2 for lag, c in counts.items())
        denominator *= detail_variance(h, j1, filt, config) * detail_variance(
            h, j2, filt, config
        )
    n_a = float(np.prod(counts_a))
    n_b = float(np.prod(counts_b))
    return LOG2E**2 * 2.0 * numerator / (n_a * n_b * denominator)


def model_covariance(hurst, config: CovModelConfig, filt: WaveletFilter) -> np.ndarray:
    """Assemble the full covariance model of the log-variance vector.

    Entries follow ``logvar_covariance_entry``; the result is symmetrized
    and eigenvalue-floored to positive definite.  If more than 1% of the
    eigenvalue mass has to be clipped the model is considered degenerate.
    """
    hurst = validate_hurst(hurst)
    config.validate_for_filter(filt)
    d = len(hurst)
    if any(len(j) != d for j in config.octaves):
        raise InvalidRangeError("octave dimension does not match hurst vector")
    m = len(config.octaves)
    cov = np.empty((m, m))
    for a in range(m):
        for b in range(a, m):
            cov[a, b] = cov[b, a] = logvar_covariance_entry(
                hurst,
                config.octaves[a],
                config.octaves[b],
                config.axis_counts[a],
                config.axis_counts[b],
                filt,
                config,
            )
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = EIG_FLOOR_REL * eigvals.max()
    clipped_mass = float(np.sum(np.maximum(floor - eigvals, 0.0)))
    total_mass = float(np.sum(np.abs(eigvals)))
    if clipped_mass > MAX_CLIPPED_MASS * total_mass:
        raise ModelDegenerateError(
            f"covariance model required clipping {clipped_mass:.3e} of eigenmass "
            f"{total_mass:.3e}"
        )
    if eigvals.min() < floor:
        cov = (eigvecs * np.maximum(eigvals, floor)) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


def two_step_fit(
    system: RegressionSystem,
    config: CovModelConfig | None = None,
    model_fn=None,
) -> EstimatorReport:
    """Ordinary fit, then one reweighted fit with the model covariance.

    The covariance model is evaluated at the pilot estimate (projected into
    [0.01, 0.99] for the evaluation only; the pilot report itself is kept
    unprojected and attached to the result).
    """
    if config is None:
        config = config_for_system(system)
    pilot = fit_system(system)
    projected = tuple(float(v) for v in np.clip(pilot.hurst, 0.01, 0.99))
    weight = (model_fn or model_covariance)(projected, config, system.filter)
    report = fit_system(system, weight=weight, method="two_step")
    return EstimatorReport(
        hurst=report.hurst,
        intercept=report.intercept,
        covariance=report.covariance,
        method="two_step",
        residuals=report.residuals,
        out_of_range=report.out_of_range,
        pilot=pilot,
    )
