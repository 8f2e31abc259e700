"""Energy-ledger control barrier function and the closed-form passivation filter.

Each robot keeps a ledger ``h`` of the energy it has dissipated minus the energy
its filtered input has injected (plus an initial budget ``h0``). Keeping
``h >= 0`` keeps the robot dissipative with respect to the external port. The
filter enforces the barrier condition

    D + sigma |y|^2 - y.u + alpha h >= 0

while staying as close as possible to the nominal input. There is a single
affine constraint, so the QP is solved exactly from its KKT conditions.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike

from .dynamics import FloatArray

log = logging.getLogger(__name__)


class Variant(str, enum.Enum):
    INPUT_ONLY = "input-only"
    INPUT_AND_DAMPING = "input-and-damping"


@dataclass(frozen=True)
class FilterConfig:
    """Filter tuning.

    Attributes:
        alpha: slope of the linear class-K function ``gamma(h) = alpha h`` (1/s).
        kappa: weight on the squared damping coefficient in the cost.
        variant: which decision variables the filter may use.
        h0: initial ledger value (energy budget), nonnegative.
    """

    alpha: float = 1.0
    kappa: float = 1.0
    variant: Variant = Variant.INPUT_AND_DAMPING
    h0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not (np.isfinite(self.h0) and self.h0 >= 0.0):
            raise ValueError(f"h0 must be >= 0, got {self.h0}")


@dataclass(frozen=True)
class FilterSolution:
    u: FloatArray
    sigma: float
    active: bool
    infeasible: bool = False


@dataclass(frozen=True)
class EnergyLedger:
    """Running energy account of one robot.

    ``h`` always equals ``h0 + dissipated - injected``: it is recomputed from
    the two integrals rather than accumulated separately.
    """

    h0: float
    dissipated: float = 0.0
    injected: float = 0.0

    def __post_init__(self) -> None:
        if not self.h0 >= 0.0:
            raise ValueError(f"h0 must be >= 0, got {self.h0}")

    @property
    def h(self) -> float:
        return self.h0 + self.dissipated - self.injected


def gamma(alpha: float, h: float) -> float:
    """Linear extended class-K function ``alpha * h`` (defined for negative ``h`` too)."""
    return alpha * h


def constraint_slack(
    D: float, y: ArrayLike, u: ArrayLike, sigma: float, h: float, alpha: float
) -> float:
    """Left side of the barrier condition ``D + sigma|y|^2 - y.u + alpha h``."""
    y = np.asarray(y, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return float(D + sigma * (y @ y) - y @ u + gamma(alpha, h))


def filter_input(
    config: FilterConfig, u_nom: ArrayLike, y: ArrayLike, D: float, h: float
) -> FilterSolution:
    """Minimally modify ``u_nom`` so the barrier condition holds.

    Solves ``min |u - u_nom|^2 (+ kappa sigma^2)`` subject to
    ``constraint_slack(D, y, u, sigma, h, alpha) >= 0``. If the nominal input
    already satisfies the constraint it is returned unchanged. When ``y = 0``
    the constraint does not depend on the decision variables; if it is then
    violated (only possible for ``h < 0``) the nominal input is passed through
    and the solution is flagged ``infeasible``.
    """
    u_nom = np.array(u_nom, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    b = D + gamma(config.alpha, h)
    yy = float(y @ y)
    slack0 = b - float(y @ u_nom)
    if slack0 >= 0.0:
        return FilterSolution(u_nom, 0.0, active=False)
    if yy == 0.0:
        log.debug("barrier condition unsatisfiable at y = 0 (h = %g)", h)
        return FilterSolution(u_nom, 0.0, active=False, infeasible=True)

    excess = -slack0  # y.u_nom - b > 0
    if config.variant is Variant.INPUT_ONLY:
        mu = 2.0 * excess / yy
        sigma = 0.0
    else:
        mu = 2.0 * excess / (yy + yy * yy / config.kappa)
        sigma = mu * yy / (2.0 * config.kappa)
    u = u_nom - (0.5 * mu) * y
    return FilterSolution(u, sigma, active=True)


def update_ledger(
    ledger: EnergyLedger, D: float, sigma: float, y: ArrayLike, u: ArrayLike, dt: float
) -> EnergyLedger:
    """Forward-Euler ledger step with the power terms frozen over ``dt``."""
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    y = np.asarray(y, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return replace(
        ledger,
        dissipated=ledger.dissipated + dt * (D + sigma * float(y @ y)),
        injected=ledger.injected + dt * float(u @ y),
    )
