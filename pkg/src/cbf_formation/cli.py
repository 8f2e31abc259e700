"""Command line front end: ``cbf-formation {run,compare,presets,validate}``.

Each run writes three files to the output directory:

* ``trace.csv``: one row per control step. Columns are ``time``, then for
  each robot ``i`` the block ``z{i}_x, z{i}_y, x{i}_x, x{i}_y, unom{i}_x,
  unom{i}_y, u{i}_x, u{i}_y, sigma{i}, h{i}, slack{i}, supply{i}``, then
  ``dist_{i}_{j}`` for each edge. ``h`` and ``slack`` are ``nan`` when no
  filter is configured.
* ``metrics.json``: the summary from :func:`cbf_formation.simulator.metrics`
  plus the trace schema version and column list.
* ``scenario.resolved.yaml``: the scenario with every random draw made
  explicit. It is a valid input for ``run``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, dump_document, load_scenario
from .delay_network import Topology
from .simulator import TRACE_SCHEMA_VERSION, SimulationError, Trace, metrics, run

log = logging.getLogger("cbf_formation")


@dataclass(frozen=True)
class RunArtifacts:
    trace_path: Path
    metrics_path: Path
    scenario_path: Path
    svg_path: Path | None = None


def run_command(
    config: str | Path,
    out_dir: str | Path,
    seed: int | None = None,
    dt: float | None = None,
    duration: float | None = None,
    svg: bool = False,
) -> RunArtifacts:
    """Run one scenario and write its trace, metrics and resolved scenario."""
    scenario, resolved = load_scenario(config, seed=seed, control_period=dt, duration=duration)
    trace = run(scenario)
    summary = metrics(trace, scenario.topology)
    return _write_run(Path(out_dir), trace, summary, resolved, svg)


def _write_run(out: Path, trace: Trace, summary: dict, resolved: dict, svg: bool) -> RunArtifacts:
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    metrics_path = out / "metrics.json"
    scenario_path = out / "scenario.resolved.yaml"
    trace.write_csv(trace_path)
    doc = {
        "scenario": resolved["name"],
        "seed": resolved["seed"],
        "trace_schema_version": TRACE_SCHEMA_VERSION,
        "trace_columns": trace.columns(),
        **summary,
    }
    metrics_path.write_text(json.dumps(doc, indent=2) + "\n")
    scenario_path.write_text(dump_document(resolved))
    svg_path = None
    if svg:
        svg_path = out / "edges.svg"
        svg_path.write_text(render_svg(trace, resolved))
    return RunArtifacts(trace_path, metrics_path, scenario_path, svg_path)


def _same_topology(a: Topology, b: Topology) -> bool:
    return a.n_robots == b.n_robots and a.distances == b.distances and a.delays == b.delays


def compare_command(
    config_a: str | Path,
    config_b: str | Path,
    out_dir: str | Path,
    seed: int | None = None,
    dt: float | None = None,
    duration: float | None = None,
) -> dict:
    """Run two scenarios on the same graph and compare final-window edge errors.

    ``ratio`` is ``rms_overall(A) / rms_overall(B)``; ``edge_ratio`` gives the
    same quotient per edge.

    Raises:
        ConfigError: if the two scenarios differ in graph, distances or delays.
    """
    out = Path(out_dir)
    sa, ra = load_scenario(config_a, seed=seed, control_period=dt, duration=duration)
    sb, rb = load_scenario(config_b, seed=seed, control_period=dt, duration=duration)
    if not _same_topology(sa.topology, sb.topology):
        raise ConfigError("topology mismatch: scenarios differ in edges, distances or delays")
    results = {}
    for label, scenario, resolved in (("a", sa, ra), ("b", sb, rb)):
        trace = run(scenario)
        summary = metrics(trace, scenario.topology)
        _write_run(out / label, trace, summary, resolved, svg=False)
        results[label] = summary
    rms_a, rms_b = results["a"]["rms_overall"], results["b"]["rms_overall"]
    comparison = {
        "a": ra["name"],
        "b": rb["name"],
        "seed": ra["seed"],
        "edge_rms_a": results["a"]["edge_rms"],
        "edge_rms_b": results["b"]["edge_rms"],
        "edge_ratio": {
            k: _ratio(results["a"]["edge_rms"][k], results["b"]["edge_rms"][k])
            for k in results["a"]["edge_rms"]
        },
        "rms_a": rms_a,
        "rms_b": rms_b,
        "ratio": _ratio(rms_a, rms_b),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.json").write_text(json.dumps(comparison, indent=2) + "\n")
    return comparison


def _ratio(a: float, b: float) -> float:
    if b == 0.0:
        return 1.0 if a == 0.0 else float("inf")
    return a / b


def render_svg(trace: Trace, resolved: dict, width: int = 720, height: int = 260) -> str:
    """Small two-panel line chart: edge distances, and ledger values if present."""
    panels = [("edge distance [m]", trace.edge_distance)]
    if trace.filtered:
        panels.append(("ledger h", trace.h))
    targets = [e[2] for e in resolved["formation"]["edges"]]
    t = trace.time
    pad = 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height * len(panels)}" font-family="sans-serif" font-size="11">'
    ]
    for p, (title, series) in enumerate(panels):
        y0 = p * height
        lo, hi = float(np.nanmin(series)), float(np.nanmax(series))
        if p == 0:
            lo, hi = min(lo, min(targets)), max(hi, max(targets))
        if hi <= lo:
            hi = lo + 1.0

        def sx(v):
            return pad + (v - t[0]) / max(t[-1] - t[0], 1e-12) * (width - 2 * pad)

        def sy(v):
            return y0 + height - pad + (lo - v) / (hi - lo) * (height - 2 * pad)

        parts.append(f'<text x="{pad}" y="{y0 + 16}">{title}</text>')
        parts.append(
            f'<rect x="{pad}" y="{y0 + pad}" width="{width - 2 * pad}" '
            f'height="{height - 2 * pad}" fill="none" stroke="#999"/>'
        )
        stride = max(1, len(t) // 600)
        for c in range(series.shape[1]):
            pts = " ".join(f"{sx(t[k]):.1f},{sy(series[k, c]):.1f}" for k in range(0, len(t), stride))
            hue = int(360 * c / max(series.shape[1], 1))
            parts.append(f'<polyline fill="none" stroke="hsl({hue},70%,45%)" stroke-width="1" points="{pts}"/>')
        if p == 0:
            for d in sorted(set(targets)):
                parts.append(
                    f'<line x1="{pad}" x2="{width - pad}" y1="{sy(d):.1f}" y2="{sy(d):.1f}" '
                    f'stroke="black" stroke-dasharray="4 3"/>'
                )
        parts.append(f'<text x="{pad}" y="{y0 + height - 10}">t = {t[0]:g} .. {t[-1]:g} s</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbf-formation",
        description="Formation control over delayed links with a passivity-preserving filter.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--dt", type=float, help="override the control period [s]")
        p.add_argument("--duration", type=float, help="override the run length [s]")

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("--config", required=True, help="scenario file or preset name")
    p_run.add_argument("--out-dir", required=True)
    p_run.add_argument("--svg", action="store_true", help="also write edges.svg")
    overrides(p_run)

    p_cmp = sub.add_parser("compare", help="run two scenarios on the same graph and compare")
    p_cmp.add_argument("--config", action="append", required=True, help="give exactly twice: A then B")
    p_cmp.add_argument("--out-dir", required=True)
    overrides(p_cmp)

    p_pre = sub.add_parser("presets", help="list built-in scenarios")
    p_pre.add_argument("--dump", metavar="NAME", help="print the named preset as YAML")

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            art = run_command(args.config, args.out_dir, args.seed, args.dt, args.duration, args.svg)
            summary = json.loads(art.metrics_path.read_text())
            print(f"trace:    {art.trace_path}")
            print(f"metrics:  {art.metrics_path}")
            print(f"scenario: {art.scenario_path}")
            if art.svg_path:
                print(f"svg:      {art.svg_path}")
            print(f"rms edge error (final 20%): {summary['rms_overall']:.6g}")
            if summary["min_h"] is not None:
                print(f"min h: {summary['min_h']:.6g}  certificate margin: {summary['certificate_margin']:.6g}")
        elif args.command == "compare":
            if len(args.config) != 2:
                print("compare needs --config twice", file=sys.stderr)
                return 2
            res = compare_command(args.config[0], args.config[1], args.out_dir, args.seed, args.dt, args.duration)
            print(f"rms {res['a']}: {res['rms_a']:.6g}")
            print(f"rms {res['b']}: {res['rms_b']:.6g}")
            print(f"ratio: {res['ratio']:.6g}")
        elif args.command == "presets":
            if args.dump:
                from .config import preset_document

                print(dump_document(preset_document(args.dump)), end="")
            else:
                for name, doc in PRESETS.items():
                    print(f"{name:18s} {doc.get('description', '')}")
        elif args.command == "validate":
            scenario, _ = load_scenario(args.config)
            scenario.check()
            print(f"ok: {scenario.name} ({scenario.topology.n_robots} robots, "
                  f"{len(scenario.topology.edges)} edges, {scenario.n_steps} steps)")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
