"""Fixed-step closed-loop simulation of a robot team over delayed links.

Every control period each robot reads its neighbours' delayed positions,
computes the nominal formation input, optionally passes it through the
passivation filter, and applies ``u = u_filtered - sigma y + v`` under a
zero-order hold. Its position is then broadcast into the delay lines and its
ledger is advanced.

The trace has one row per control instant ``t_k = k * control_period`` for
``k = 0..n``. The last row records what the controller would apply at the
final time; that input is not integrated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .delay_network import DelayLine, Topology, validate
from .dynamics import FloatArray, RobotParams, RobotState, rk4_step
from .formation import NeighborView, nominal_input
from .passivation import (
    EnergyLedger,
    FilterConfig,
    constraint_slack,
    filter_input,
    update_ledger,
)

TRACE_SCHEMA_VERSION = 1

ExternalInput = Callable[[float], ArrayLike]


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


@dataclass
class Scenario:
    """A fully resolved simulation setup (delays and initial states are explicit).

    ``external_input`` may be ``None`` (identically zero), a constant
    ``(n_robots, 2)`` array, or a callable ``v(t) -> (n_robots, 2)``.
    """

    topology: Topology
    robot_params: RobotParams
    initial_states: Sequence[RobotState]
    control_period: float = 0.033
    physics_substeps: int = 1
    duration: float = 60.0
    filter: FilterConfig | None = None
    external_input: ArrayLike | ExternalInput | None = None
    nominal_gain: float = 1.0
    name: str = "scenario"

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.control_period))

    def check(self) -> None:
        """Validate the scenario.

        Raises:
            ValueError: for bad timing parameters or a size mismatch.
            TopologyError: for a malformed graph.
        """
        validate(self.topology)
        if not self.control_period > 0.0:
            raise ValueError(f"control_period must be > 0, got {self.control_period}")
        if int(self.physics_substeps) < 1:
            raise ValueError(f"physics_substeps must be >= 1, got {self.physics_substeps}")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if len(self.initial_states) != self.topology.n_robots:
            raise ValueError(
                f"{len(self.initial_states)} initial states for {self.topology.n_robots} robots"
            )

    def external_at(self, t: float) -> FloatArray:
        n = self.topology.n_robots
        v = self.external_input
        if v is None:
            return np.zeros((n, 2))
        if callable(v):
            v = v(t)
        return np.broadcast_to(np.asarray(v, dtype=np.float64), (n, 2))


@dataclass
class Trace:
    """Per-control-step record of a run. Arrays are indexed ``[step, robot, ...]``."""

    time: FloatArray
    z: FloatArray
    x: FloatArray
    u_nom: FloatArray
    u: FloatArray
    sigma: FloatArray
    h: FloatArray
    slack: FloatArray
    supply: FloatArray
    edges: list[tuple[int, int]]
    edge_distance: FloatArray
    h0: float | None = None
    infeasible_steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def filtered(self) -> bool:
        return self.h0 is not None

    @property
    def n_robots(self) -> int:
        return self.z.shape[1]

    def columns(self) -> list[str]:
        cols = ["time"]
        for i in range(self.n_robots):
            cols += [
                f"z{i}_x", f"z{i}_y", f"x{i}_x", f"x{i}_y",
                f"unom{i}_x", f"unom{i}_y", f"u{i}_x", f"u{i}_y",
                f"sigma{i}", f"h{i}", f"slack{i}", f"supply{i}",
            ]
        cols += [f"dist_{i}_{j}" for i, j in self.edges]
        return cols

    def as_table(self) -> FloatArray:
        blocks = [self.time[:, None]]
        for i in range(self.n_robots):
            blocks += [
                self.z[:, i], self.x[:, i], self.u_nom[:, i], self.u[:, i],
                self.sigma[:, i, None], self.h[:, i, None],
                self.slack[:, i, None], self.supply[:, i, None],
            ]
        blocks.append(self.edge_distance)
        return np.hstack(blocks)

    def write_csv(self, path) -> None:
        """Write the trace as comma-separated text with a header row.

        Values use 17 significant digits, so equal traces give byte-equal files.
        """
        table = self.as_table()
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.columns()) + "\n")
            for row in table:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _initial_arrays(states: Sequence[RobotState]) -> tuple[FloatArray, FloatArray]:
    z = np.array([s.z for s in states], dtype=np.float64).reshape(-1, 2)
    x = np.array([s.x for s in states], dtype=np.float64).reshape(-1, 2)
    return z, x


def run(scenario: Scenario) -> Trace:
    """Simulate ``scenario`` and return its trace.

    Raises:
        SimulationError: if the state becomes non-finite.
    """
    scenario.check()
    top = scenario.topology
    params = scenario.robot_params
    cfg = scenario.filter
    n = top.n_robots
    dt = float(scenario.control_period)
    substeps = int(scenario.physics_substeps)
    h_sub = dt / substeps
    n_steps = scenario.n_steps
    a = params.damping

    z, x = _initial_arrays(scenario.initial_states)
    neighbors = [top.neighbors(i) for i in range(n)]
    # lines[(i, j)] carries robot j's position to robot i
    lines = {(i, j): DelayLine(top.delay(i, j), retention=dt) for i in range(n) for j in neighbors[i]}
    for (i, j), line in lines.items():
        line.push(0.0, z[j])

    ledgers = [EnergyLedger(cfg.h0) for _ in range(n)] if cfg is not None else None
    edges = top.edges
    ei = np.array([e[0] for e in edges], dtype=int)
    ej = np.array([e[1] for e in edges], dtype=int)

    rows = n_steps + 1
    time = np.arange(rows) * dt
    T_z = np.empty((rows, n, 2))
    T_x = np.empty((rows, n, 2))
    T_unom = np.empty((rows, n, 2))
    T_u = np.empty((rows, n, 2))
    T_sigma = np.zeros((rows, n))
    T_h = np.full((rows, n), np.nan)
    T_slack = np.full((rows, n), np.nan)
    T_supply = np.zeros((rows, n))
    supply = np.zeros(n)
    infeasible = 0

    u_nom = np.zeros((n, 2))
    u_f = np.zeros((n, 2))
    sigma = np.zeros(n)
    for k in range(rows):
        t = time[k]
        for i in range(n):
            views = [
                NeighborView(lines[(i, j)].query(t), top.distance(i, j)) for j in neighbors[i]
            ]
            u_nom[i] = nominal_input(z[i], views, scenario.nominal_gain)
        y = x.copy()
        D = a * np.sum(y * y, axis=1)
        if cfg is not None:
            for i in range(n):
                h_i = ledgers[i].h
                sol = filter_input(cfg, u_nom[i], y[i], float(D[i]), h_i)
                u_f[i] = sol.u
                sigma[i] = sol.sigma
                infeasible += sol.infeasible
                T_h[k, i] = h_i
                T_slack[k, i] = constraint_slack(D[i], y[i], sol.u, sol.sigma, h_i, cfg.alpha)
        else:
            u_f[:] = u_nom
        v = scenario.external_at(t)

        T_z[k], T_x[k], T_unom[k], T_u[k] = z, x, u_nom, u_f
        T_sigma[k] = sigma
        T_supply[k] = supply
        if k == n_steps:
            break

        u_total = u_f - sigma[:, None] * y + v
        for _ in range(substeps):
            z, x = rk4_step(params, z, x, u_total, h_sub)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(x))):
            raise SimulationError("non-finite robot state", step=k)

        t_next = time[k + 1]
        for (i, j), line in lines.items():
            line.push(t_next, z[j])
        if cfg is not None:
            for i in range(n):
                ledgers[i] = update_ledger(ledgers[i], float(D[i]), float(sigma[i]), y[i], u_f[i], dt)
        supply = supply + dt * np.sum(v * y, axis=1)

    diff = T_z[:, ei] - T_z[:, ej]
    edge_distance = np.sqrt(np.sum(diff * diff, axis=2))
    return Trace(
        time=time, z=T_z, x=T_x, u_nom=T_unom, u=T_u, sigma=T_sigma, h=T_h,
        slack=T_slack, supply=T_supply, edges=edges, edge_distance=edge_distance,
        h0=None if cfg is None else cfg.h0, infeasible_steps=infeasible,
        meta={"name": scenario.name, "control_period": dt, "schema_version": TRACE_SCHEMA_VERSION},
    )


def metrics(trace: Trace, topology: Topology, final_fraction: float = 0.2) -> dict:
    """Summary numbers for a trace.

    Keys:
        edge_rms: per-edge RMS of ``|z_i - z_j| - d_ij`` over the last
            ``final_fraction`` of the run, keyed ``"i-j"``.
        rms_overall: root mean square of the per-edge values.
        final_relative_error: max over edges of ``||z_i - z_j| - d_ij| / d_ij``
            at the final row.
        max_input_deviation: max over time and robots of ``|u - u_nom|``.
        min_h: smallest ledger value, ``None`` without a filter.
        ledger_violation: ``max(0, -min_h)``, ``None`` without a filter.
        certificate_margin: max of ``H(t) - H(0) - h0 - int v.y``; dissipativity
            holds when this is <= 0. ``None`` without a filter.
        conservation_residual: max of ``|H(t) + h(t) - H(0) - h0 - int v.y|``,
            ``None`` without a filter.
    """
    if len(trace.time) == 0:
        raise ValueError("empty trace")
    d = np.array([topology.distance(i, j) for i, j in trace.edges])
    err = trace.edge_distance - d
    t_end = trace.time[-1]
    window = trace.time >= t_end - final_fraction * (t_end - trace.time[0]) - 1e-12
    edge_rms = np.sqrt(np.mean(err[window] ** 2, axis=0))
    out: dict = {
        "edge_rms": {f"{i}-{j}": float(r) for (i, j), r in zip(trace.edges, edge_rms)},
        "rms_overall": float(np.sqrt(np.mean(edge_rms**2))) if len(edge_rms) else 0.0,
        "final_relative_error": float(np.max(np.abs(err[-1]) / d)) if len(d) else 0.0,
        "max_input_deviation": float(np.max(np.linalg.norm(trace.u - trace.u_nom, axis=2))),
        "min_h": None,
        "ledger_violation": None,
        "certificate_margin": None,
        "conservation_residual": None,
        "infeasible_steps": int(trace.infeasible_steps),
    }
    if trace.filtered:
        H = 0.5 * np.sum(trace.x**2, axis=2)
        budget = H[0] + trace.h0 + trace.supply
        min_h = float(np.min(trace.h))
        out["min_h"] = min_h
        out["ledger_violation"] = max(0.0, -min_h)
        out["certificate_margin"] = float(np.max(H - budget))
        out["conservation_residual"] = float(np.max(np.abs(H + trace.h - budget)))
    return out
