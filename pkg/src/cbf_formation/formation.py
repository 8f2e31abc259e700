"""Weighted-consensus formation controller evaluated on delayed neighbour positions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .dynamics import FloatArray


@dataclass(frozen=True)
class NeighborView:
    """What robot i knows about neighbour j: its delayed position and the target distance."""

    z_delayed: FloatArray
    distance: float

    def __post_init__(self) -> None:
        if not self.distance > 0.0:
            raise ValueError(f"desired distance must be > 0, got {self.distance}")
        object.__setattr__(self, "z_delayed", np.asarray(self.z_delayed, dtype=np.float64))


def edge_weight(z_i: ArrayLike, z_j_delayed: ArrayLike, d_ij: float) -> float:
    """``|z_i - z_j|^2 - d_ij^2``: positive pulls the pair together, negative pushes apart."""
    diff = np.asarray(z_i, dtype=np.float64) - np.asarray(z_j_delayed, dtype=np.float64)
    return float(diff @ diff) - d_ij * d_ij


def nominal_input(
    z_i: ArrayLike, neighbors: Sequence[NeighborView], gain: float = 1.0
) -> FloatArray:
    """Nominal acceleration ``gain * sum_j w_ij (z_j - z_i)``.

    An empty neighbour list gives the zero vector.
    """
    z_i = np.asarray(z_i, dtype=np.float64)
    u = np.zeros(2)
    for nb in neighbors:
        diff = nb.z_delayed - z_i
        w = float(diff @ diff) - nb.distance * nb.distance
        u += w * diff
    if gain != 1.0:
        u *= gain
    return u
