"""Two tiny built-in instances for exercising the oracles end to end.

Both use the same two observations y = (1, 2) at x = (1, 2) and three
nested regressors: the zero predictor (d=0), the mean (d=1), and the
interpolator (d=2).  ``simple_discrete`` ranks them over the value set
{0, 1, 2}^2; ``simple_continuous`` measures loss volumes inside the box
[0, 2]^2, where all three reference volumes have elementary closed
forms.  These are the instances behind ``lorp oracle --example sd|sc``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import BoxDomain, LossFunction, hat_matrix_loss

DISCRETE = "sd"
CONTINUOUS = "sc"


def _hat_matrices() -> dict[int, np.ndarray]:
    return {
        0: np.zeros((2, 2)),
        1: np.full((2, 2), 0.5),
        2: np.eye(2),
    }


@dataclass(frozen=True)
class DiscreteDemo:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    hat_matrices: dict[int, np.ndarray]
    losses: dict[int, LossFunction]


@dataclass(frozen=True)
class ContinuousDemo:
    x: np.ndarray
    y: np.ndarray
    box: BoxDomain
    hat_matrices: dict[int, np.ndarray]
    losses: dict[int, LossFunction]
    levels: dict[int, float]
    reference_volumes: dict[int, float]


def _losses(mats: dict[int, np.ndarray]) -> dict[int, LossFunction]:
    return {d: hat_matrix_loss(m, name=f"d{d}") for d, m in mats.items()}


def simple_discrete() -> DiscreteDemo:
    """y = (1, 2) ranked over {0, 1, 2}^2 by three nested regressors."""
    mats = _hat_matrices()
    return DiscreteDemo(
        x=np.array([1.0, 2.0]),
        y=np.array([1.0, 2.0]),
        values=np.array([0.0, 1.0, 2.0]),
        hat_matrices=mats,
        losses=_losses(mats),
    )


def _quarter_disk_in_square(level: float) -> float:
    """Area of { y >= 0 : |y|^2 <= L } clipped to the square [0, 2]^2.

    Valid for L <= 8; the disk pokes past an edge once L > 4 and the
    protruding circular segments are removed by the arccos term.
    """
    if level <= 0:
        return 0.0
    return 2.0 * math.sqrt(max(level - 4.0, 0.0)) + level * (
        math.pi / 4.0 - math.acos(min(2.0 / math.sqrt(level), 1.0))
    )


def _band_in_square(level: float) -> float:
    """Area of { y in [0, 2]^2 : (y2 - y1)^2 / 2 <= L }, for sqrt(2L) <= 2."""
    w = math.sqrt(2.0 * level)
    return 4.0 * w - 2.0 * level if w <= 2.0 else 4.0


def simple_continuous() -> ContinuousDemo:
    """Same setup measured by loss volume inside the box [0, 2]^2."""
    mats = _hat_matrices()
    losses = _losses(mats)
    y = np.array([1.0, 2.0])
    levels = {d: losses[d](y) for d in losses}
    return ContinuousDemo(
        x=np.array([1.0, 2.0]),
        y=y,
        box=BoxDomain.cube(0.0, 2.0, 2),
        hat_matrices=mats,
        losses=losses,
        levels=levels,
        reference_volumes={
            0: _quarter_disk_in_square(levels[0]),
            1: _band_in_square(levels[1]),
            2: 4.0,
        },
    )
