"""Experiment driver: configuration, Monte Carlo loop, persistence, exports.

A run is fully determined by (config, seed): replicate r consumes one side
of the synthesis pair p = r // 2 whose substream key is seed XOR p, so the
results do not depend on worker count or scheduling.
"""
from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .covmodel import config_for_system, two_step_fit
from .errors import (
    ConfigError,
    DimensionOverflowError,
    ExperimentError,
    FbsheetError,
    FieldFormatError,
    InsufficientReplicatesError,
    MagicMismatchError,
    TruncatedPayloadError,
)
from .estimator import EstimatorReport, RegressionSystem, build_system, fit_system
from .field import Field
from .synthesis import synth_fbs_pair, validate_hurst
from .wavelet import auto_octave_box, daubechies_filter, octave_box

MAGIC = b"FBS1"
MAX_FIELD_DIM = 32
MAX_FIELD_CELLS = 2**40
MAX_FAILURE_FRACTION = 0.05
ESTIMATOR_NAMES = ("ols", "two_step")

VARIANCE_CONVENTION = (
    "std: sample standard deviation (R-1 divisor); "
    "rmse: population root mean square error about the truth"
)

_CONFIG_KEYS = {
    "dimension",
    "hurst",
    "dims",
    "replicates",
    "seed",
    "n_vanishing",
    "j_low",
    "j_high",
    "estimators",
    "min_axis_coeffs",
    "out_summary",
    "out_estimates",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings of one Monte Carlo experiment."""

    hurst: tuple[float, ...]
    dims: tuple[int, ...]
    replicates: int
    seed: int
    n_vanishing: int = 3
    j_low: int | tuple[int, ...] = 3
    j_high: int | tuple[int, ...] | None = None
    estimators: tuple[str, ...] = ("ols", "two_step")
    min_axis_coeffs: int = 2
    out_summary: str | None = None
    out_estimates: str | None = None

    def __post_init__(self):
        try:
            hurst = validate_hurst(self.hurst)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "hurst", hurst)
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != len(hurst):
            raise ConfigError(f"dims {dims} and hurst {hurst} must have equal length")
        if any(n < 3 for n in dims):
            raise ConfigError(f"every lattice axis needs at least 3 samples, got {dims}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.n_vanishing < 2:
            raise ConfigError(
                f"n_vanishing must be >= 2 to cover the whole Hurst range, got {self.n_vanishing}"
            )
        estimators = tuple(self.estimators)
        if not estimators or any(e not in ESTIMATOR_NAMES for e in estimators):
            raise ConfigError(
                f"estimators must be a nonempty subset of {ESTIMATOR_NAMES}, got {estimators}"
            )
        object.__setattr__(self, "estimators", estimators)
        try:
            self.octaves()
        except FbsheetError as exc:
            raise ConfigError(f"dims incompatible with octave box: {exc}") from exc

    def octaves(self) -> list[tuple[int, ...]]:
        filt = daubechies_filter(self.n_vanishing)
        if self.j_high is None:
            return auto_octave_box(self.dims, filt, self.j_low, self.min_axis_coeffs)
        lows = self.j_low if not np.isscalar(self.j_low) else (self.j_low,) * len(self.dims)
        highs = self.j_high if not np.isscalar(self.j_high) else (self.j_high,) * len(self.dims)
        return octave_box(tuple(lows), tuple(highs))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("hurst", "dims", "replicates", "seed"):
            if key not in raw:
                raise ConfigError(f"missing config key: {key}")
        if "dimension" in raw and int(raw["dimension"]) != len(raw["hurst"]):
            raise ConfigError(
                f"dimension {raw['dimension']} does not match hurst length {len(raw['hurst'])}"
            )
        kwargs = {k: v for k, v in raw.items() if k != "dimension"}
        for key in ("hurst", "dims", "j_low", "j_high", "estimators"):
            if key in kwargs and isinstance(kwargs[key], list):
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
        return cls.from_dict(raw)


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    axis: int
    truth: float
    mean: float
    std: float
    rmse: float


@dataclass(frozen=True)
class SummaryTable:
    """Per (estimator, axis) Monte Carlo statistics."""

    rows: tuple[SummaryRow, ...]
    replicates: int
    failures: int = 0

    def row(self, estimator: str, axis: int) -> SummaryRow:
        for r in self.rows:
            if r.estimator == estimator and r.axis == axis:
                return r
        raise KeyError((estimator, axis))


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    summary: SummaryTable
    estimates: dict[str, np.ndarray] = dataclass_field(repr=False, default_factory=dict)
    failures: int = 0


def summarize(estimates: np.ndarray, truth, estimator: str = "") -> SummaryTable:
    """Column statistics of a replicate-by-axis estimate matrix.

    Std uses the unbiased (R-1) divisor; rmse is the root of the mean
    squared error about the truth, so rmse^2 = bias^2 + std^2 (R-1)/R.
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.ndim != 2:
        raise ValueError("estimates must be a replicate-by-axis matrix")
    n_rep = estimates.shape[0]
    if n_rep < 2:
        raise InsufficientReplicatesError(f"need at least 2 replicates, got {n_rep}")
    truth = tuple(float(v) for v in np.atleast_1d(truth))
    if len(truth) != estimates.shape[1]:
        raise ValueError("truth length must match the number of axes")
    rows = []
    for axis in range(estimates.shape[1]):
        col = estimates[:, axis]
        rows.append(
            SummaryRow(
                estimator=estimator,
                axis=axis + 1,
                truth=truth[axis],
                mean=float(col.mean()),
                std=float(col.std(ddof=1)),
                rmse=float(np.sqrt(np.mean((col - truth[axis]) ** 2))),
            )
        )
    return SummaryTable(rows=tuple(rows), replicates=n_rep)


def _estimate_field(field: Field, filt, octaves, config: ExperimentConfig) -> dict[str, np.ndarray]:
    """Run the configured estimators on one field; the two-step pilot doubles as OLS."""
    system = build_system(field, filt, octaves)
    out: dict[str, np.ndarray] = {}
    if "two_step" in config.estimators:
        report = two_step_fit(system, config_for_system(system))
        out["two_step"] = report.hurst
        if "ols" in config.estimators:
            out["ols"] = report.pilot.hurst
    elif "ols" in config.estimators:
        out["ols"] = fit_system(system).hurst
    return out


def _run_pair(config: ExperimentConfig, filt, octaves, pair: int):
    """Estimates for replicates 2*pair and 2*pair+1 (one synthesis FFT)."""
    results = []
    reps = [r for r in (2 * pair, 2 * pair + 1) if r < config.replicates]
    try:
        fields = synth_fbs_pair(config.hurst, config.dims, config.seed ^ pair)
    except FbsheetError as exc:
        return [(r, None, str(exc)) for r in reps]
    for r in reps:
        field = fields[r - 2 * pair]
        try:
            results.append((r, _estimate_field(field, filt, octaves, config), None))
        except (FbsheetError, np.linalg.LinAlgError) as exc:
            results.append((r, None, str(exc)))
    return results


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Synthesize, estimate and summarize ``config.replicates`` fields.

    Results are deterministic for a given config regardless of ``threads``.
    Replicates that fail with a module error are excluded from statistics
    and counted; more than 5% failures aborts the whole experiment.
    """
    filt = daubechies_filter(config.n_vanishing)
    octaves = config.octaves()
    n_rep = config.replicates
    d = len(config.hurst)
    estimates = {name: np.full((n_rep, d), np.nan) for name in config.estimators}
    n_pairs = (n_rep + 1) // 2
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda p: _run_pair(config, filt, octaves, p), range(n_pairs)))
    else:
        chunks = [_run_pair(config, filt, octaves, p) for p in range(n_pairs)]
    failures = 0
    for chunk in chunks:
        for r, values, _error in chunk:
            if values is None:
                failures += 1
            else:
                for name, h in values.items():
                    estimates[name][r] = h
    if failures > MAX_FAILURE_FRACTION * n_rep:
        raise ExperimentError(
            f"{failures}/{n_rep} replicates failed (> {MAX_FAILURE_FRACTION:.0%})"
        )
    rows: list[SummaryRow] = []
    for name in config.estimators:
        ok = estimates[name][~np.isnan(estimates[name]).any(axis=1)]
        rows.extend(summarize(ok, config.hurst, estimator=name).rows)
    summary = SummaryTable(rows=tuple(rows), replicates=n_rep, failures=failures)
    return ExperimentResult(config=config, summary=summary, estimates=estimates, failures=failures)


def write_summary_csv(result: ExperimentResult, path) -> None:
    """Summary statistics as CSV, one row per (estimator, axis)."""
    lines = [f"# {VARIANCE_CONVENTION}"]
    lines.append("estimator,axis,truth,mean,std,rmse,replicates,failures")
    for row in result.summary.rows:
        lines.append(
            f"{row.estimator},{row.axis},{row.truth:.6g},{row.mean:.10g},"
            f"{row.std:.10g},{row.rmse:.10g},{result.summary.replicates},"
            f"{result.failures}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_estimates_csv(result: ExperimentResult, path) -> None:
    """Raw per-replicate estimates as CSV; failed replicates show as nan."""
    d = len(result.config.hurst)
    header = "replicate,estimator," + ",".join(f"h_{i+1}" for i in range(d))
    lines = [header]
    for name in result.config.estimators:
        values = result.estimates[name]
        for r in range(values.shape[0]):
            cells = ",".join(f"{v:.17g}" for v in values[r])
            lines.append(f"{r},{name},{cells}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_field(field: Field, path) -> None:
    """Write a field as magic, u8 dimension, u64 dims, f64 truth, f64 data (LE).

    The Hurst-truth slots hold NaN when the field carries no ground truth.
    """
    d = field.ndim
    if d > MAX_FIELD_DIM:
        raise DimensionOverflowError(f"cannot serialize {d}-dimensional field")
    truth = field.hurst_truth or (float("nan"),) * d
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", d))
        fh.write(np.asarray(field.dims, dtype="<u8").tobytes())
        fh.write(np.asarray(truth, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.data, dtype="<f8").tobytes())


def load_field(path) -> Field:
    """Read a field written by ``save_field``; bit-exact roundtrip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) or blob[: len(MAGIC)] != MAGIC:
        raise MagicMismatchError(f"{path}: bad magic {blob[:4]!r}")
    offset = len(MAGIC)
    if len(blob) < offset + 1:
        raise TruncatedPayloadError(f"{path}: missing dimension byte")
    d = blob[offset]
    offset += 1
    if d < 1 or d > MAX_FIELD_DIM:
        raise DimensionOverflowError(f"{path}: dimension {d} out of range")
    header_len = 8 * d + 8 * d
    if len(blob) < offset + header_len:
        raise TruncatedPayloadError(f"{path}: header cut short")
    dims = np.frombuffer(blob, dtype="<u8", count=d, offset=offset)
    offset += 8 * d
    truth = np.frombuffer(blob, dtype="<f8", count=d, offset=offset)
    offset += 8 * d
    if any(n < 2 for n in dims):
        raise DimensionOverflowError(f"{path}: axis sizes {tuple(dims)} out of range")
    cells = int(np.prod(dims, dtype=np.float64))
    if cells > MAX_FIELD_CELLS:
        raise DimensionOverflowError(f"{path}: {cells} cells exceed the supported size")
    expected = offset + 8 * cells
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(blob) - offset} bytes, expected {8 * cells}"
        )
    if len(blob) > expected:
        raise FieldFormatError(f"{path}: {len(blob) - expected} trailing bytes")
    data = np.frombuffer(blob, dtype="<f8", count=cells, offset=offset)
    data = data.reshape(tuple(int(n) for n in dims)).copy()
    hurst = None if np.isnan(truth).all() else tuple(float(v) for v in truth)
    return Field(data, hurst_truth=hurst)


def logscale_export(system: RegressionSystem, report: EstimatorReport, path) -> None:
    """Per-octave log-variances with fitted values and residuals, as CSV."""
    d = system.ndim
    fitted = system.design @ report.alpha
    header = ",".join(f"j_{i+1}" for i in range(d)) + ",log2_S,fitted,residual,n_J"
    lines = [header]
    counts = system.counts
    for idx, octave in enumerate(system.octaves):
        cells = ",".join(str(j) for j in octave)
        lines.append(
            f"{cells},{system.logvars[idx]:.17g},{fitted[idx]:.17g},"
            f"{report.residuals[idx]:.17g},{counts[idx]}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
