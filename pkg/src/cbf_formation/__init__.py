"""Passivity-preserving control barrier function filter for delayed multi-robot formations."""

from .delay_network import DelayLine, Topology, TopologyError, validate
from .dynamics import (
    RobotParams,
    RobotState,
    dissipation_power,
    hamiltonian,
    integrate_step,
    output,
    state_derivative,
)
from .formation import NeighborView, edge_weight, nominal_input
from .passivation import (
    EnergyLedger,
    FilterConfig,
    FilterSolution,
    Variant,
    constraint_slack,
    filter_input,
    gamma,
    update_ledger,
)
from .simulator import Scenario, SimulationError, Trace, metrics, run

__version__ = "0.1.0"

__all__ = [
    "DelayLine", "EnergyLedger", "FilterConfig", "FilterSolution", "NeighborView",
    "RobotParams", "RobotState", "Scenario", "SimulationError", "Topology",
    "TopologyError", "Trace", "Variant", "constraint_slack", "dissipation_power",
    "edge_weight", "filter_input", "gamma", "hamiltonian", "integrate_step",
    "metrics", "nominal_input", "output", "run", "state_derivative",
    "update_ledger", "validate",
]
