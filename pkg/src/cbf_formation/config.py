"""Scenario files: YAML schema, validation, resolution of random draws, presets.

A scenario file looks like this (optional keys shown with their defaults)::

    schema_version: 1
    name: my-run
    seed: 0                      # drives every random draw below
    robots:
      count: 6
      damping: 1.0
    formation:
      gain: 1.0
      edges: [[0, 1, 0.5], ...]  # undirected [i, j, desired distance]
      shape: [[x, y], ...]       # reference positions, needed for mode "perturbed"
    delays:
      mode: uniform              # uniform | explicit
      min: 0.0
      max: 0.333
      # explicit: values: [[i, j, T_ij], ...] one entry per directed edge
    initial:
      mode: perturbed            # perturbed | explicit
      radius: 0.05               # each robot starts this far from its shape point
      # explicit: positions: [[x, y], ...]; velocities: [[vx, vy], ...] (default rest)
    filter:                      # omit, or null, to run the nominal controller alone
      variant: input-and-damping # input-only | input-and-damping
      alpha: 1.0
      kappa: 1.0
      h0: 1.0
    simulation:
      control_period: 0.033
      physics_substeps: 1
      duration: 60.0
    external_input: null         # or one constant [vx, vy] per robot

Random draws use independent child streams of ``seed``, one for delays and
one for initial positions, so scenarios that differ only in their filter
settings see the same delays and starting poses.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .delay_network import Topology, first_violation
from .dynamics import RobotParams, RobotState
from .passivation import FilterConfig, Variant
from .simulator import Scenario

SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "name": "scenario",
    "seed": 0,
    "robots": {"damping": 1.0},
    "formation": {"gain": 1.0},
    "delays": {"mode": "explicit", "values": []},
    "initial": {"mode": "explicit"},
    "filter": None,
    "simulation": {"control_period": 0.033, "physics_substeps": 1, "duration": 60.0},
    "external_input": None,
}


class ConfigError(ValueError):
    """Bad scenario file. ``field`` is a dotted path, ``line`` is 1-based when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        where = ""
        if field:
            where += f"field '{field}'"
        if line is not None:
            where += f" (line {line})" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.field = field
        self.line = line


def _node_lines(node: yaml.Node | None, prefix: str = "", out: dict | None = None) -> dict[str, int]:
    out = {} if out is None else out
    if node is None:
        return out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _node_lines(value, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = item.start_mark.line + 1
            _node_lines(item, path, out)
    return out


class _Reader:
    """Typed field access on the parsed document, with errors naming field and line."""

    def __init__(self, data: dict, lines: dict[str, int]) -> None:
        self.data = data
        self.lines = lines

    def fail(self, path: str, message: str) -> ConfigError:
        # a missing key has no line of its own; point at the nearest parent
        probe, line = path, self.lines.get(path)
        while line is None and "." in probe:
            probe = probe.rsplit(".", 1)[0]
            line = self.lines.get(probe)
        return ConfigError(message, field=path, line=line)

    def get(self, path: str, default: Any = ...) -> Any:
        node: Any = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is ...:
                    raise self.fail(path, "required field is missing")
                return default
            node = node[part]
        return node

    def number(self, path: str, default: Any = ..., *, positive=False, nonneg=False) -> float:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise self.fail(path, "must be finite")
        if positive and value <= 0.0:
            raise self.fail(path, f"must be > 0, got {value}")
        if nonneg and value < 0.0:
            raise self.fail(path, f"must be >= 0, got {value}")
        return value

    def integer(self, path: str, default: Any = ..., minimum: int | None = None) -> int:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.fail(path, f"must be >= {minimum}, got {value}")
        return value

    def points(self, path: str, count: int) -> np.ndarray:
        value = self.get(path)
        try:
            arr = np.asarray(value, dtype=np.float64)
        except (TypeError, ValueError):
            raise self.fail(path, "expected a list of [x, y] pairs") from None
        if arr.shape != (count, 2):
            raise self.fail(path, f"expected {count} [x, y] pairs, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise self.fail(path, "must be finite")
        return arr


def _merge(defaults: dict, data: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in data.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_scenario(text: str, seed: int | None = None, source: str = "<string>") -> tuple[Scenario, dict]:
    """Parse scenario text; return the scenario and its fully resolved document.

    The resolved document has explicit delays and initial states, so feeding
    it back through this function reproduces the same scenario exactly.

    Raises:
        ConfigError: on YAML syntax errors or schema/invariant violations.
    """
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"cannot parse {source}: {exc.problem}", line=line) from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    r = _Reader(raw, _node_lines(root))
    version = r.integer("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise r.fail("schema_version", f"unsupported schema version {version}")
    doc = _merge(DEFAULTS, raw)
    if seed is not None:
        doc["seed"] = int(seed)
    r = _Reader(doc, r.lines)

    seed_value = r.integer("seed", minimum=0)
    n = r.integer("robots.count", minimum=1)
    damping = r.number("robots.damping", positive=True)
    gain = r.number("formation.gain")
    edges_raw = r.get("formation.edges", [])
    edges = []
    for k, item in enumerate(edges_raw or []):
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise r.fail("formation.edges", f"entry {k} must be [i, j, distance]")
        i, j, d = item
        if not (isinstance(i, int) and isinstance(j, int)):
            raise r.fail("formation.edges", f"entry {k}: vertex ids must be integers")
        edges.append((i, j, float(d)))

    delay_rng, init_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed_value).spawn(2))

    topology = Topology.from_edges(n, edges)
    problem = first_violation(topology)
    if problem is not None:
        raise r.fail("formation.edges", problem)

    mode = r.get("delays.mode")
    if mode == "uniform":
        t_min = r.number("delays.min", 0.0, nonneg=True)
        t_max = r.number("delays.max", 0.333, nonneg=True)
        if t_max < t_min:
            raise r.fail("delays.max", f"max ({t_max}) is below min ({t_min})")
        directed = sorted(topology.distances)
        draws = delay_rng.uniform(t_min, t_max, size=len(directed))
        topology.delays = {e: float(t) for e, t in zip(directed, draws)}
    elif mode == "explicit":
        values = r.get("delays.values", [])
        topology.delays = {}
        for k, item in enumerate(values or []):
            if not (isinstance(item, (list, tuple)) and len(item) == 3):
                raise r.fail("delays.values", f"entry {k} must be [i, j, delay]")
            topology.delays[(int(item[0]), int(item[1]))] = float(item[2])
        missing = set(topology.distances) - set(topology.delays)
        for e in missing:
            topology.delays[e] = 0.0
    else:
        raise r.fail("delays.mode", f"unknown mode {mode!r} (expected uniform or explicit)")
    problem = first_violation(topology)
    if problem is not None:
        raise r.fail("delays", problem)

    init_mode = r.get("initial.mode")
    if init_mode == "perturbed":
        shape = r.points("formation.shape", n)
        radius = r.number("initial.radius", 0.05, nonneg=True)
        theta = init_rng.uniform(0.0, 2.0 * np.pi, size=n)
        positions = shape + radius * np.column_stack([np.cos(theta), np.sin(theta)])
        velocities = np.zeros((n, 2))
    elif init_mode == "explicit":
        positions = r.points("initial.positions", n)
        if r.get("initial.velocities", None) is None:
            velocities = np.zeros((n, 2))
        else:
            velocities = r.points("initial.velocities", n)
    else:
        raise r.fail("initial.mode", f"unknown mode {init_mode!r} (expected perturbed or explicit)")

    filt = None
    if r.get("filter", None) is not None:
        variant = r.get("filter.variant", Variant.INPUT_AND_DAMPING.value)
        try:
            variant = Variant(variant)
        except ValueError:
            raise r.fail("filter.variant", f"unknown variant {variant!r}") from None
        filt = FilterConfig(
            alpha=r.number("filter.alpha", 1.0, positive=True),
            kappa=r.number("filter.kappa", 1.0, positive=True),
            variant=variant,
            h0=r.number("filter.h0", 1.0, nonneg=True),
        )

    control_period = r.number("simulation.control_period", positive=True)
    substeps = r.integer("simulation.physics_substeps", minimum=1)
    duration = r.number("simulation.duration", positive=True)

    external = r.get("external_input", None)
    if external is not None:
        external = r.points("external_input", n)

    scenario = Scenario(
        topology=topology,
        robot_params=RobotParams(damping=damping),
        initial_states=[RobotState(p, v) for p, v in zip(positions, velocities)],
        control_period=control_period,
        physics_substeps=substeps,
        duration=duration,
        filter=filt,
        external_input=external,
        nominal_gain=gain,
        name=str(r.get("name")),
    )

    resolved = {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "seed": seed_value,
        "robots": {"count": n, "damping": damping},
        "formation": {"gain": gain, "edges": [[i, j, d] for i, j, d in edges]},
        "delays": {
            "mode": "explicit",
            "values": [[i, j, t] for (i, j), t in sorted(topology.delays.items())],
        },
        "initial": {
            "mode": "explicit",
            "positions": positions.tolist(),
            "velocities": velocities.tolist(),
        },
        "filter": None
        if filt is None
        else {"variant": filt.variant.value, "alpha": filt.alpha, "kappa": filt.kappa, "h0": filt.h0},
        "simulation": {
            "control_period": control_period,
            "physics_substeps": substeps,
            "duration": duration,
        },
        "external_input": None if external is None else external.tolist(),
    }
    if doc.get("description"):
        resolved = {"description": doc["description"], **resolved}
    if "shape" in doc.get("formation", {}):
        resolved["formation"]["shape"] = doc["formation"]["shape"]
    return scenario, resolved


def dump_document(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# --- presets ------------------------------------------------------------------

def hexagon(side: float = 0.5) -> tuple[list[list[float]], list[list]]:
    """Regular hexagon with a fan triangulation from vertex 0 (9 edges, rigid)."""
    angles = np.arange(6) * np.pi / 3.0
    pts = side * np.column_stack([np.cos(angles), np.sin(angles)])
    pairs = [(i, (i + 1) % 6) for i in range(6)] + [(0, 2), (0, 3), (0, 4)]
    edges = [[min(i, j), max(i, j), float(np.linalg.norm(pts[i] - pts[j]))] for i, j in pairs]
    return pts.tolist(), edges


def _hexagon_preset(name: str, description: str, filt: dict | None, delay_max: float) -> dict:
    shape, edges = hexagon(0.5)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "description": description,
        "seed": 7,
        "robots": {"count": 6, "damping": 0.25},
        "formation": {"gain": 1.0, "edges": edges, "shape": shape},
        "delays": {"mode": "uniform", "min": 0.0, "max": delay_max},
        "initial": {"mode": "perturbed", "radius": 0.05},
        "filter": filt,
        "simulation": {"control_period": 0.033, "physics_substeps": 1, "duration": 60.0},
        "external_input": None,
    }


FILTER_PRESET = {"variant": "input-and-damping", "alpha": 0.1, "kappa": 1.0, "h0": 0.002}

PRESETS: dict[str, dict] = {
    "fig2-nofilter": _hexagon_preset(
        "fig2-nofilter",
        "Six robots, hexagon formation, directed delays uniform in [0, 0.333] s, no filter.",
        None,
        0.333,
    ),
    "fig3-filter": _hexagon_preset(
        "fig3-filter",
        "Same team and delays as fig2-nofilter, with the input-and-damping passivation filter, v = 0.",
        dict(FILTER_PRESET),
        0.333,
    ),
    "nodelay-nofilter": _hexagon_preset(
        "nodelay-nofilter",
        "Same team with all delays zero and no filter (delay-free consensus sanity run).",
        None,
        0.0,
    ),
    "nodelay-filter": _hexagon_preset(
        "nodelay-filter",
        "Zero delays with the filter and a generous budget h0 = 1; the filter should stay idle.",
        {**FILTER_PRESET, "h0": 1.0},
        0.0,
    ),
}


def preset_document(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def read_scenario_text(source: str | Path) -> tuple[str, str]:
    """Return ``(text, label)`` for a file path or a preset name."""
    path = Path(source)
    if path.is_file():
        return path.read_text(), str(path)
    name = str(source)
    if name.startswith("preset:"):
        name = name[len("preset:"):]
    if name in PRESETS:
        return dump_document(preset_document(name)), f"preset:{name}"
    raise ConfigError(f"no such scenario file or preset: {source}")


def load_scenario(
    source: str | Path,
    seed: int | None = None,
    control_period: float | None = None,
    duration: float | None = None,
) -> tuple[Scenario, dict]:
    """Load a scenario from a YAML file or a preset name, applying overrides.

    Returns the scenario and its resolved document (see :func:`parse_scenario`).
    """
    text, label = read_scenario_text(source)
    if control_period is not None or duration is not None:
        doc = yaml.safe_load(text)
        sim = doc.setdefault("simulation", {})
        if control_period is not None:
            sim["control_period"] = float(control_period)
        if duration is not None:
            sim["duration"] = float(duration)
        text = dump_document(doc)
    return parse_scenario(text, seed=seed, source=label)
