"""Lattice fields: d-dimensional arrays of real samples with optional ground truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Field:
    """A d-dimensional lattice of real samples.

    ``data`` is a C-ordered float array whose shape gives the per-axis
    sample counts.  ``hurst_truth`` optionally carries the Hurst vector a
    synthetic field was generated with, for validation downstream.
    """

    data: np.ndarray
    hurst_truth: tuple[float, ...] | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if data.ndim < 1:
            raise ValueError("field must have at least one axis")
        if any(n < 2 for n in data.shape):
            raise ValueError(f"every axis needs at least 2 samples, got shape {data.shape}")
        if self.hurst_truth is not None:
            truth = tuple(float(h) for h in self.hurst_truth)
            if len(truth) != data.ndim:
                raise ValueError("hurst_truth length must match field dimension")
            object.__setattr__(self, "hurst_truth", truth)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim
