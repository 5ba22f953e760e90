"""Command-line front end: validate | run | assign | sweep.

Outputs are plain CSV files (per_app.csv, global.csv, optional trace.csv)
plus a human-readable summary on stdout. Exit codes: 0 success, 1 I/O or
parse failure, 2 validation or usage error. All randomness flows from the
scenario seed (or --seed); nothing reads the wall clock.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .engine import (
    Metrics,
    aggregate_metrics,
    replication_seed,
    run,
    stream_rng,
)
from .fairshare import (
    SearchSpaceTooLarge,
    assign_exhaustive,
    assign_greedy,
    assign_random,
    jain_index,
    predicted_app_rates,
)
from .model import Policy, Scenario, SimConfig
from .scenario_io import SchemaError, parse_scenario
from .scheduling import ConfigError
from .validate import ValidationError, validate_scenario

OUTPUT_DIR_ENV = "QNETFAIR_OUTPUT_DIR"

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2

PER_APP_COLUMNS = [
    "app_id",
    "policy",
    "seed",
    "slots",
    "grants",
    "delivered",
    "rate_per_slot",
    "weighted_rate",
    "mean_latency_slots",
]
TRACE_COLUMNS = [
    "seed",
    "slot",
    "kind",
    "id",
    "sampled",
    "granted",
    "delivered",
    "residual",
]


class SweepParamError(Exception):
    pass


def _fmt(value: Any) -> str:
    """CSV cell: floats with 6 significant digits (round-half-even), NA for None."""
    if value is None:
        return "NA"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col)) for col in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load(path: str, args: argparse.Namespace) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    graph, apps, config, given = parse_scenario(data)
    config = _apply_overrides(config, args)
    return validate_scenario(graph, apps, config, given)


def _apply_overrides(config: SimConfig, args: argparse.Namespace) -> SimConfig:
    updates: dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "slots", None) is not None:
        updates["slots"] = args.slots
    if getattr(args, "policy", None) is not None:
        updates["policy"] = Policy(args.policy)
    if getattr(args, "limit", None) is not None:
        updates["exhaustive_limit"] = args.limit
    return dataclasses.replace(config, **updates) if updates else config


def _output_dir(args: argparse.Namespace) -> Path:
    if getattr(args, "output_dir", None):
        return Path(args.output_dir)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path(".")


def _per_app_rows(scenario: Scenario, metrics: Metrics) -> list[dict]:
    rows = []
    for app in scenario.apps:
        am = metrics.per_app[app.id]
        rows.append(
            {
                "app_id": app.id,
                "policy": metrics.policy.value,
                "seed": metrics.seed,
                "slots": metrics.slots,
                "grants": am.grants,
                "delivered": am.delivered,
                "rate_per_slot": am.delivered_rate,
                "weighted_rate": am.weighted_rate,
                "mean_latency_slots": am.mean_latency,
            }
        )
    return rows


def _global_columns(scenario: Scenario) -> list[str]:
    cols = ["policy", "seed", "slots", "jain_weighted", "total_delivered"]
    cols += [f"edge_{l.id}_util" for l in sorted(scenario.graph.links, key=lambda l: l.id)]
    return cols


def _global_row(scenario: Scenario, metrics: Metrics) -> dict:
    row = {
        "policy": metrics.policy.value,
        "seed": metrics.seed,
        "slots": metrics.slots,
        "jain_weighted": metrics.jain_weighted,
        "total_delivered": metrics.total_delivered,
    }
    for l in scenario.graph.links:
        row[f"edge_{l.id}_util"] = metrics.per_edge[l.id].utilization
    return row


def _trace_rows(metrics: Metrics) -> list[dict]:
    rows: list[dict] = []
    if not metrics.trace:
        return rows
    for ledger in metrics.trace:
        for edge_id in sorted(ledger.sampled):
            rows.append(
                {
                    "seed": metrics.seed,
                    "slot": ledger.slot,
                    "kind": "edge",
                    "id": edge_id,
                    "sampled": ledger.sampled[edge_id],
                    "granted": ledger.sampled[edge_id] - ledger.residual[edge_id],
                    "delivered": None,
                    "residual": ledger.residual[edge_id],
                }
            )
        for key in sorted(ledger.grants):
            app_id, worker = key
            rows.append(
                {
                    "seed": metrics.seed,
                    "slot": ledger.slot,
                    "kind": "flow",
                    "id": f"{app_id}-{worker}",
                    "sampled": None,
                    "granted": ledger.grants[key],
                    "delivered": ledger.successes.get(key, 0),
                    "residual": None,
                }
            )
    return rows


def _run_all_replications(scenario: Scenario, trace: bool) -> list[Metrics]:
    cfg = scenario.config
    if cfg.replications == 1:
        return [run(scenario, cfg, collect_trace=trace)]
    return [
        run(
            scenario,
            dataclasses.replace(cfg, seed=replication_seed(cfg.seed, i)),
            collect_trace=trace,
        )
        for i in range(cfg.replications)
    ]


def _print_run_summary(scenario: Scenario, runs: list[Metrics]) -> None:
    cfg = scenario.config
    print(
        f"policy={cfg.policy.value} traffic={cfg.traffic.value} "
        f"slots={cfg.slots} warmup={cfg.warmup_slots} seed={cfg.seed} "
        f"replications={len(runs)}"
    )
    if len(runs) == 1:
        m = runs[0]
        print("app  weight  grants  delivered  rate/slot  weighted  latency")
        for app in scenario.apps:
            am = m.per_app[app.id]
            print(
                f"{app.id:<4} {app.weight:<7g} {am.grants:<7} {am.delivered:<10} "
                f"{_fmt(am.delivered_rate):<10} {_fmt(am.weighted_rate):<9} "
                f"{_fmt(am.mean_latency)}"
            )
        print(
            f"jain(weighted)={_fmt(m.jain_weighted)} total_delivered={m.total_delivered}"
        )
        util = " ".join(
            f"edge{eid}={_fmt(em.utilization)}" for eid, em in sorted(m.per_edge.items())
        )
        print(f"utilization: {util}")
    else:
        summary = aggregate_metrics(runs)
        print(f"aggregate over {summary.n} replications (mean +/- sample stddev):")
        for key in sorted(summary.stats):
            st = summary.stats[key]
            print(f"  {key}: {_fmt(st.mean)} +/- {_fmt(st.stddev)}")


def cmd_validate(args: argparse.Namespace) -> int:
    _load(args.config, args)
    print("OK")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.config, args)
    runs = _run_all_replications(scenario, trace=args.trace)
    out_dir = _output_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        per_app_path = out_dir / "per_app.csv"
        rows = [row for m in runs for row in _per_app_rows(scenario, m)]
        written.append(per_app_path)
        _write_csv(per_app_path, PER_APP_COLUMNS, rows)

        global_path = out_dir / "global.csv"
        written.append(global_path)
        _write_csv(
            global_path,
            _global_columns(scenario),
            [_global_row(scenario, m) for m in runs],
        )

        if args.trace:
            trace_path = out_dir / "trace.csv"
            written.append(trace_path)
            _write_csv(
                trace_path, TRACE_COLUMNS, [r for m in runs for r in _trace_rows(m)]
            )
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    _print_run_summary(scenario, runs)
    print(f"wrote {', '.join(str(p) for p in written)}")
    return EXIT_OK


def cmd_assign(args: argparse.Namespace) -> int:
    scenario = _load(args.config, args)
    cfg = scenario.config
    if args.solver == "greedy":
        assignment = assign_greedy(scenario.graph, scenario.apps)
    elif args.solver == "random":
        assignment = assign_random(
            scenario.graph, scenario.apps, stream_rng(cfg.seed, "assignment")
        )
    else:
        assignment = assign_exhaustive(
            scenario.graph, scenario.apps, cfg.exhaustive_limit
        )
    pred = predicted_app_rates(scenario.graph, scenario.apps, assignment)
    weighted = [pred[a.id].weighted for a in scenario.apps]
    min_weighted = min(weighted)
    jain = jain_index(weighted) if any(v > 0 for v in weighted) else None

    if args.format == "csv":
        print("app_id,workers,rate,weighted_rate,min_weighted_rate,jain_weighted")
        for app in scenario.apps:
            workers = ";".join(str(w) for w in sorted(assignment[app.id]))
            print(
                f"{app.id},{workers},{_fmt(pred[app.id].delivered)},"
                f"{_fmt(pred[app.id].weighted)},{_fmt(min_weighted)},{_fmt(jain)}"
            )
    else:
        print(f"solver={args.solver}")
        for app in scenario.apps:
            workers = sorted(assignment[app.id])
            print(
                f"app {app.id}: workers {workers}  "
                f"rate={_fmt(pred[app.id].delivered)}  "
                f"weighted={_fmt(pred[app.id].weighted)}"
            )
        print(f"min_weighted_rate={_fmt(min_weighted)} jain_weighted={_fmt(jain)}")
    return EXIT_OK


def _set_sweep_value(data: dict, param: str, raw: str) -> Any:
    """Apply one sweep value to the raw scenario document; returns the
    parsed value used for row tagging."""
    shorthand = {"policy": "sim.policy", "seed": "sim.seed", "quantum_base": "sim.quantum_base"}
    dotted = shorthand.get(param, param)
    parts = dotted.split(".")
    target: Any = data
    for part in parts[:-1]:
        if isinstance(target, list):
            if not part.isdigit() or int(part) >= len(target):
                raise SweepParamError(f"unknown parameter path: {dotted}")
            target = target[int(part)]
        elif isinstance(target, dict) and part in target:
            target = target[part]
        else:
            raise SweepParamError(f"unknown parameter path: {dotted}")
    leaf = parts[-1]
    if isinstance(target, list):
        raise SweepParamError(f"unknown parameter path: {dotted}")
    if not isinstance(target, dict) or leaf not in target:
        # allow setting optional sim keys that the file omitted
        if not (isinstance(target, dict) and parts[0] == "sim" and len(parts) == 2):
            raise SweepParamError(f"unknown parameter path: {dotted}")
    current = target.get(leaf)
    if dotted == "sim.policy":
        value: Any = raw
    elif isinstance(current, bool):
        raise SweepParamError(f"{dotted}: cannot sweep a boolean field")
    elif isinstance(current, int) or leaf in ("seed", "quantum_base", "slots", "warmup"):
        try:
            value = int(raw)
        except ValueError as exc:
            raise SweepParamError(f"{dotted}: expected integer value, got {raw!r}") from exc
    elif isinstance(current, float):
        try:
            value = float(raw)
        except ValueError as exc:
            raise SweepParamError(f"{dotted}: expected numeric value, got {raw!r}") from exc
    else:
        raise SweepParamError(f"{dotted}: not a sweepable numeric field")
    target[leaf] = value
    return value


def cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        base_data = json.load(fh)
    values = [v.strip() for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise SweepParamError("no sweep values given")

    per_app_rows: list[dict] = []
    global_rows: list[dict] = []
    global_cols: list[str] | None = None
    for raw_value in values:
        data = json.loads(json.dumps(base_data))  # fresh copy per point
        value = _set_sweep_value(data, args.param, raw_value)
        graph, apps, config, given = parse_scenario(data)
        config = _apply_overrides(config, args)
        scenario = validate_scenario(graph, apps, config, given)
        runs = _run_all_replications(scenario, trace=False)
        if global_cols is None:
            global_cols = ["sweep_value"] + _global_columns(scenario)
        for m in runs:
            for row in _per_app_rows(scenario, m):
                per_app_rows.append({"sweep_value": value, **row})
            global_rows.append({"sweep_value": value, **_global_row(scenario, m)})

    out_dir = _output_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        pa = out_dir / "sweep_per_app.csv"
        written.append(pa)
        _write_csv(pa, ["sweep_value"] + PER_APP_COLUMNS, per_app_rows)
        gl = out_dir / "sweep_global.csv"
        written.append(gl)
        assert global_cols is not None
        _write_csv(gl, global_cols, global_rows)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    print(f"swept {args.param} over {len(values)} values")
    print(f"wrote {', '.join(str(p) for p in written)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetfair",
        description="Slot-based entanglement sharing simulator and assignment solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override sim.seed")

    p_validate = sub.add_parser("validate", help="check a scenario file")
    add_common(p_validate)
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="simulate and write CSV outputs")
    add_common(p_run)
    p_run.add_argument("--slots", type=int, help="override sim.slots")
    p_run.add_argument("--policy", choices=[p.value for p in Policy])
    p_run.add_argument("--limit", type=int, help="override sim.exhaustive_limit")
    p_run.add_argument("--trace", action="store_true", help="also write trace.csv")
    p_run.add_argument("--output-dir", help=f"default: ${OUTPUT_DIR_ENV} or .")
    p_run.set_defaults(func=cmd_run)

    p_assign = sub.add_parser("assign", help="solve the worker assignment and report")
    add_common(p_assign)
    p_assign.add_argument(
        "--solver", choices=["greedy", "random", "exhaustive"], default="greedy"
    )
    p_assign.add_argument("--limit", type=int, help="override sim.exhaustive_limit")
    p_assign.add_argument("--format", choices=["text", "csv"], default="text")
    p_assign.set_defaults(func=cmd_assign)

    p_sweep = sub.add_parser("sweep", help="run once per parameter value")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--param",
        required=True,
        help="policy | seed | quantum_base | dotted path (e.g. apps.0.weight)",
    )
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--slots", type=int, help="override sim.slots")
    p_sweep.add_argument("--policy", choices=[p.value for p in Policy])
    p_sweep.add_argument("--output-dir", help=f"default: ${OUTPUT_DIR_ENV} or .")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as err:
        print(
            f"parse error: line {err.lineno} column {err.colno}: {err.msg}",
            file=sys.stderr,
        )
        return EXIT_IO
    except (SchemaError, ValidationError) as err:
        for diag in err.diagnostics:
            print(diag)
        return EXIT_INVALID
    except SearchSpaceTooLarge as err:
        print(
            f"error: {err} (raise --limit or use --solver greedy/random)",
            file=sys.stderr,
        )
        return EXIT_INVALID
    except (ConfigError, SweepParamError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
