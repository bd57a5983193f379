"""Shared building blocks: sample archives, estimators, reproducible RNG."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class EstimatorKind(enum.Enum):
    """How an individual's objective value is summarized from its archive."""

    LAST = "last"
    MEAN = "mean"
    MEDIAN = "median"


ESTIMATORS = {kind.value: kind for kind in EstimatorKind}


def estimator_value(samples: np.ndarray, kind: EstimatorKind) -> np.ndarray:
    """Collapse a stack of objective samples into one representative point.

    Args:
        samples: Array of shape (t, k), one row per evaluation, oldest first.
        kind: LAST returns the most recent row, MEAN and MEDIAN reduce
            component-wise. The median of an even number of samples is the
            midpoint of the two central order statistics.

    Returns:
        Array of shape (k,).

    Raises:
        ValueError: If the archive is empty ("empty-archive").
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("empty-archive")
    if kind is EstimatorKind.LAST:
        return arr[-1].copy()
    if kind is EstimatorKind.MEAN:
        return arr.mean(axis=0)
    if kind is EstimatorKind.MEDIAN:
        return np.median(arr, axis=0)
    raise ValueError(f"unknown estimator: {kind!r}")


class SampleArchive:
    """Append-only store of objective samples for one individual."""

    __slots__ = ("_rows",)

    def __init__(self, rows=None) -> None:
        self._rows: list[np.ndarray] = []
        if rows is not None:
            for row in rows:
                self.append(row)

    def append(self, point) -> None:
        row = np.asarray(point, dtype=float)
        if row.ndim != 1 or row.size == 0:
            raise ValueError("objective point must be a non-empty 1-d array")
        self._rows.append(row.copy())

    def as_array(self) -> np.ndarray:
        if not self._rows:
            raise ValueError("empty-archive")
        return np.vstack(self._rows)

    def estimate(self, kind: EstimatorKind) -> np.ndarray:
        return estimator_value(self.as_array(), kind)

    def copy(self) -> "SampleArchive":
        dup = SampleArchive()
        dup._rows = [row.copy() for row in self._rows]
        return dup

    def __len__(self) -> int:
        return len(self._rows)

    def __bool__(self) -> bool:
        return bool(self._rows)


@dataclass
class Individual:
    """A decision vector plus its accumulated noisy objective samples.

    ``unchanged`` marks individuals that survived variation untouched (or
    are parents), meaning their archive already holds valid samples of the
    current genome and resampling can reuse it.
    """

    genome: np.ndarray
    archive: SampleArchive = field(default_factory=SampleArchive)
    unchanged: bool = False

    def __post_init__(self) -> None:
        self.genome = np.asarray(self.genome, dtype=float)
        if self.unchanged and not self.archive:
            raise ValueError("unchanged individual requires a non-empty archive")


def make_rng(*keys: int) -> np.random.Generator:
    """Build a PCG64 generator from a hierarchical integer key path.

    Identical key paths always produce identical streams; sibling paths are
    statistically independent. Used throughout so that every stochastic
    component (initialization, noise, variation, bootstrap) draws from its
    own named substream of the run seed.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))
