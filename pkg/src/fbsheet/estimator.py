"""Log-variance regression over an octave box: OLS and weighted fits.

The mean squared detail coefficient at octave J scales like
2^(j_1(2H_1+1) + ... + j_d(2H_d+1)) times a constant, so regressing
log2 of the per-octave sample variances on the octave vectors (plus an
intercept) recovers the Hurst vector from the slopes: H_i = slope_i/2 - 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    InsufficientDataError,
    RankDeficiencyError,
    SingularSystemError,
    WeightMatrixError,
)
from .field import Field
from .wavelet import WaveletFilter, _details_along_axis, available_count, validate_octave

SYM_TOL = 1e-10


@dataclass(frozen=True)
class RegressionSystem:
    """Design and response of the log-variance regression.

    ``design`` is m x (d+1) with rows [j_1, ..., j_d, 1]; ``logvars`` holds
    log2 of the per-octave sample variances; ``axis_counts`` the per-axis
    interior coefficient counts (their row products are the octave sample
    sizes).  The filter that produced the coefficients is carried along for
    downstream reweighting.
    """

    octaves: tuple[tuple[int, ...], ...]
    design: np.ndarray
    logvars: np.ndarray
    axis_counts: np.ndarray
    filter: WaveletFilter

    @property
    def counts(self) -> np.ndarray:
        """Number of coefficients per octave, n_J."""
        return self.axis_counts.prod(axis=1)

    @property
    def n_octaves(self) -> int:
        return len(self.octaves)

    @property
    def ndim(self) -> int:
        return self.design.shape[1] - 1


@dataclass(frozen=True)
class EstimatorReport:
    """Fitted Hurst vector with its nominal covariance and residuals."""

    hurst: np.ndarray
    intercept: float
    covariance: np.ndarray
    method: str
    residuals: np.ndarray
    out_of_range: bool
    pilot: "EstimatorReport | None" = dataclass_field(default=None, repr=False)

    @property
    def alpha(self) -> np.ndarray:
        """Regression coefficients [2H_1+1, ..., 2H_d+1, intercept]."""
        return np.concatenate([2.0 * self.hurst + 1.0, [self.intercept]])


def _log2_variances(field: Field, filt: WaveletFilter, octaves) -> np.ndarray:
    """log2 sample variance per octave, sharing the lowpass cascade per axis."""
    ndim = field.data.ndim
    out: dict[tuple[int, ...], float] = {}

    def descend(data: np.ndarray, prefix: tuple[int, ...], group) -> None:
        axis = len(prefix)
        if axis == ndim:
            out[prefix] = float(np.mean(data**2))
            return
        levels = sorted({j[axis] for j in group})
        details = _details_along_axis(data, filt, levels, axis)
        for level in levels:
            descend(
                details[level],
                prefix + (level,),
                [j for j in group if j[axis] == level],
            )

    descend(field.data, (), list(octaves))
    variances = np.array([out[j] for j in octaves])
    if np.any(variances <= 0.0):
        raise InsufficientDataError("zero sample variance at an octave; cannot take log")
    return np.log2(variances)


def build_system(field: Field, filt: WaveletFilter, octaves) -> RegressionSystem:
    """Assemble the regression system for a field over a list of octave vectors.

    Validates each octave against the field, requires at least d+1 octaves
    and a full-rank design.
    """
    octaves = tuple(tuple(int(v) for v in j) for j in octaves)
    ndim = field.data.ndim
    for octave in octaves:
        validate_octave(octave, field.dims, filt)
    if len(octaves) < ndim + 1:
        raise RankDeficiencyError(
            f"need at least {ndim + 1} octaves for a {ndim}-d field, got {len(octaves)}"
        )
    design = np.array([list(j) + [1.0] for j in octaves], dtype=np.float64)
    if np.linalg.matrix_rank(design) < ndim + 1:
        raise RankDeficiencyError(f"octave design matrix is rank deficient: {octaves}")
    axis_counts = np.array(
        [[available_count(n, j, filt) for j, n in zip(octave, field.dims)] for octave in octaves],
        dtype=np.int64,
    )
    logvars = _log2_variances(field, filt, octaves)
    return RegressionSystem(octaves, design, logvars, axis_counts, filt)


def _validate_weight(weight: np.ndarray, m: int) -> np.ndarray:
    weight = np.asarray(weight, dtype=np.float64)
    if weight.shape != (m, m):
        raise WeightMatrixError(f"weight must be {m}x{m}, got {weight.shape}")
    scale = max(np.abs(weight).max(), 1.0)
    if np.abs(weight - weight.T).max() > SYM_TOL * scale:
        raise WeightMatrixError("weight matrix is not symmetric")
    return weight


def _whitening_factor(weight: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(weight)
    except np.linalg.LinAlgError as exc:
        raise WeightMatrixError("weight matrix is not positive definite") from exc


def fit_system(
    system: RegressionSystem,
    weight: np.ndarray | None = None,
    method: str | None = None,
) -> EstimatorReport:
    """Solve the weighted log-variance regression.

    With no weight (identity) this is the ordinary least-squares estimate;
    with a covariance-model weight it is the generalized one.  The solve
    whitens the design by the Cholesky factor of the weight and uses an
    orthogonal decomposition, never an explicit inverse.
    """
    m = system.n_octaves
    ndim = system.ndim
    design, logvars = system.design, system.logvars
    if weight is None:
        white_design, white_logvars = design, logvars
        tag = "ols"
    else:
        weight = _validate_weight(weight, m)
        chol = _whitening_factor(weight)
        white_design = np.linalg.solve(chol, design)
        white_logvars = np.linalg.solve(chol, logvars)
        tag = "gls"
    alpha, _, rank, _ = np.linalg.lstsq(white_design, white_logvars, rcond=None)
    if rank < ndim + 1:
        raise SingularSystemError("normal equations are singular")
    hurst = alpha[:ndim] / 2.0 - 0.5
    intercept = float(alpha[ndim])
    residuals = logvars - design @ alpha
    sigma_l = np.eye(m) if weight is None else weight
    covariance = asymptotic_covariance(system, sigma_l, weight)
    return EstimatorReport(
        hurst=hurst,
        intercept=intercept,
        covariance=covariance,
        method=method or tag,
        residuals=residuals,
        out_of_range=bool(np.any((hurst <= 0.0) | (hurst >= 1.0))),
    )


def asymptotic_covariance(
    system: RegressionSystem,
    sigma_l: np.ndarray,
    weight: np.ndarray | None = None,
) -> np.ndarray:
    """Sandwich covariance of the Hurst estimate for a given weight.

    Evaluates (A' W^-1 A)^-1 A' W^-1 S W^-1 A (A' W^-1 A)^-1 / 4 with
    S the covariance of the log-variance vector; when the weight equals S
    this collapses to (A' S^-1 A)^-1 / 4.
    """
    m = system.n_octaves
    design = system.design
    sigma_l = np.asarray(sigma_l, dtype=np.float64)
    if sigma_l.shape != (m, m):
        raise WeightMatrixError(f"sigma_l must be {m}x{m}, got {sigma_l.shape}")
    if np.abs(sigma_l - sigma_l.T).max() > SYM_TOL * max(np.abs(sigma_l).max(), 1.0):
        raise WeightMatrixError("sigma_l must be symmetric")
    if weight is None:
        weight = np.eye(m)
    else:
        weight = _validate_weight(weight, m)
    chol = _whitening_factor(weight)
    white_design = np.linalg.solve(chol, design)
    gram = white_design.T @ white_design
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("design Gram matrix is singular") from exc
    # A' W^-1 = (W^-1 A)' since W is symmetric
    winv_design = np.linalg.solve(chol.T, np.linalg.solve(chol, design))
    bread = gram_inv @ winv_design.T
    cov = 0.25 * bread @ sigma_l @ bread.T
    return 0.5 * (cov + cov.T)
