"""Residual thresholds, three-way verdicts and deterministic sample points."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import qmc

HOLD = 1e-7
FAIL = 1e-4
DEFAULT_POINTS = 32
DEFAULT_BOX = 1.0


class Status(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Thresholds:
    """An identity holds below ``hold``, fails above ``fail``."""

    hold: float = HOLD
    fail: float = FAIL

    def __post_init__(self):
        if not 0.0 < self.hold <= self.fail:
            raise ValueError(f"need 0 < hold <= fail, got {self.hold}, {self.fail}")

    def status(self, residual: float) -> Status:
        if residual < self.hold:
            return Status.HOLDS
        if residual > self.fail:
            return Status.FAILS
        return Status.INDETERMINATE

    def is_zero(self, value: float) -> bool:
        return value < self.hold

    def is_nonzero(self, value: float) -> bool:
        return value > self.fail


DEFAULT = Thresholds()


def normalized_residual(lhs, rhs) -> float:
    """``max|lhs - rhs| / (1 + max(|lhs|, |rhs|))`` over all entries."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max(np.max(np.abs(lhs), initial=0.0), np.max(np.abs(rhs), initial=0.0))
    return float(np.max(np.abs(lhs - rhs), initial=0.0) / (1.0 + scale))


def normalized_size(values, reference=0.0) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values), initial=0.0) / (1.0 + reference))


def halton_points(dim: int, count: int = DEFAULT_POINTS, box: float = DEFAULT_BOX, center=None) -> np.ndarray:
    """Unscrambled Halton points in ``center + [-box, box]^dim``.

    The leading all-zero point of the sequence is skipped so no sample
    sits on a box corner.
    """
    if count < 1:
        raise ValueError("count must be positive")
    unit = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    pts = (2.0 * unit - 1.0) * box
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts
