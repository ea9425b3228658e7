"""Command-line interface.

Subcommands:

* ``calibrate-fire``  fit distance factors from a heating table
* ``simulate``        run one observation window from a run config
* ``sweep``           run the factorial study and export the table
* ``train-rules``     mine trip rules from a sweep table
* ``print-defaults``  emit a complete default config document
* ``benchmark``       time the kernel backends against each other

Files are written next to ``--out`` when given, else into the directory
named by the ``EMBERLINE_OUT`` environment variable (if set); stdout carries
a human-readable summary either way.  Exit codes: 0 on success, 1 on
operational errors (bad config, infeasible load, missing file), 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .configio import default_run_yaml, default_sweep_yaml, load_run_spec, load_sweep_config
from .dtree import extract_rules, fit_tree
from .exceptions import EmberlineError
from .kernel import ACTIVE_BACKEND, compiled_available
from .montecarlo import COLUMNS, run_sweep, summarize
from .simrunner import benchmark_backends, run
from .svgplot import line_plot
from .thermal import calibrate_from_table, load_fire_table

OUT_ENV_VAR = "EMBERLINE_OUT"

_DEFAULT_RULE_FEATURES = (
    "delta_ta",
    "t_a",
    "v_w",
    "t_s",
    "length_km",
    "current_a",
    "pf_correction",
    "v_err",
    "i_err",
    "loading",
    "fire_present",
)


def _resolve_out(explicit: str | None, default_name: str) -> Path | None:
    if explicit:
        return Path(explicit)
    env_dir = os.environ.get(OUT_ENV_VAR, "").strip()
    if env_dir:
        return Path(env_dir) / default_name
    return None


def _cmd_calibrate_fire(args: argparse.Namespace) -> int:
    rows = load_fire_table(args.table)
    cal = calibrate_from_table(rows, rel_tol=args.tolerance)
    spread = 0.0
    for d, t_f, dta in rows:
        implied = dta / math.sqrt(t_f)
        mean = cal.factor_at(d)
        spread = max(spread, abs(implied / mean - 1.0))
    print("distance_m  factor_c_per_sqrt_s")
    for d, f in zip(cal.distances, cal.factors):
        print(f"{d:<10.6g}  {f:.6g}")
    print(f"rows: {len(rows)}; max relative spread: {spread:.3g} (tolerance {args.tolerance:g})")

    out = _resolve_out(args.out, "fire_calibration." + args.format)
    if out is not None:
        if args.format == "csv":
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write("# emberline/fire-calibration v1\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["distance_m", "factor_c_per_sqrt_s"])
                for d, f in zip(cal.distances, cal.factors):
                    writer.writerow([repr(float(d)), repr(float(f))])
        else:
            doc = {
                "schema": "emberline/fire-calibration v1",
                "distances_m": list(cal.distances),
                "factors_c_per_sqrt_s": list(cal.factors),
            }
            with open(out, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
                fh.write("\n")
        print(f"wrote {out}")
    return 0


def _write_trace(result, out: Path, fmt: str) -> None:
    trace = result.trace
    names = list(trace)
    if fmt == "csv":
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write("# emberline/trace v1\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for i in range(len(trace["t"])):
                writer.writerow([repr(float(trace[name][i])) for name in names])
    else:
        doc = {
            "schema": "emberline/trace v1",
            "columns": names,
            "rows": [[float(trace[name][i]) for name in names] for i in range(len(trace["t"]))],
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_run_spec(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    want_trace = bool(args.out or args.plot or os.environ.get(OUT_ENV_VAR, "").strip())
    result = run(spec, want_trace=want_trace)

    print(f"backend: {result.backend}")
    print(f"samples: {result.n_samples} ({spec.duration_s:g} s @ {spec.detector.sample_rate:g} Hz)")
    origin = "equilibrium" if result.initial_temp_from_equilibrium else "explicit"
    print(f"initial conductor temp: {result.t_c_start:.4f} C ({origin})")
    print(
        f"final conductor temp: {result.t_c_end:.4f} C (delta {result.delta_t_c:+.4f} C)"
    )
    print(f"tan delta true: {result.tan_true_start:.6f} -> {result.tan_true_end:.6f}")
    for control in (1, 2):
        t = result.trip_time(control)
        if t is None:
            print(f"control {control} trip: none")
        else:
            idx = result.control1_trip_index if control == 1 else result.control2_trip_index
            print(f"control {control} trip: {t:.4f} s (sample {idx})")
    print(f"restarts: {result.restart_count}; invalid samples: {result.invalid_samples}")
    if result.infeasible_at is not None:
        print(f"run stopped: no steady-state solution at sample {result.infeasible_at}")

    out = _resolve_out(args.out, "trace." + args.format)
    if out is not None and result.trace is not None:
        _write_trace(result, out, args.format)
        print(f"wrote {out}")
    if args.plot and result.trace is not None:
        tr = result.trace
        line_plot(
            [
                ("tan delta (held)", tr["t"], tr["tan_held"]),
                ("moving average", tr["t"], tr["ma"]),
            ],
            args.plot,
            title="impedance-angle series",
            x_label="time, s",
            y_label="tan delta",
        )
        print(f"wrote {args.plot}")
    return 0


def _parse_subsample(text: str) -> tuple[str, int]:
    if text == "full":
        return "full", 0
    for prefix in ("stratified", "lhs"):
        if text.startswith(prefix + ":"):
            count = text[len(prefix) + 1 :]
            try:
                n = int(count)
            except ValueError:
                raise EmberlineError(f"bad subsample count in {text!r}") from None
            return prefix, n
    raise EmberlineError(f"subsample must be 'full', 'stratified:N' or 'lhs:N', got {text!r}")


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_sweep_config(args.config) if args.config else None
    if cfg is None:
        from .montecarlo import SweepConfig

        cfg = SweepConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.subsample is not None:
        strategy, n = _parse_subsample(args.subsample)
        cfg = replace(cfg, strategy=strategy, subsample=n)

    result = run_sweep(cfg)
    print(f"rows: {result.n_rows} (strategy {cfg.strategy}, seed {cfg.seed}, backend {ACTIVE_BACKEND})")

    out = _resolve_out(args.out, "sweep." + args.format)
    if out is not None:
        if args.format == "csv":
            result.to_csv(out)
        else:
            result.to_json(out)
        print(f"wrote {out}")

    if not args.no_summary:
        summary = summarize(result, cfg)
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _read_table(path: Path) -> dict[str, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cols = doc["columns"]
        rows = doc["rows"]
        data = np.array(rows, dtype=float)
    else:
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        reader = csv.reader(lines)
        cols = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(cols):
        raise EmberlineError(f"{path}: malformed table")
    return {name: data[:, i] for i, name in enumerate(cols)}


def _cmd_train_rules(args: argparse.Namespace) -> int:
    table = _read_table(args.data)
    label_col = args.label
    if label_col not in table:
        raise EmberlineError(f"{args.data}: no column {label_col!r}")
    feature_names = (
        tuple(s.strip() for s in args.features.split(",") if s.strip())
        if args.features
        else _DEFAULT_RULE_FEATURES
    )
    missing = [f for f in feature_names if f not in table]
    if missing:
        raise EmberlineError(f"{args.data}: missing feature column {missing[0]!r}")

    keep = np.ones(len(table[label_col]), dtype=bool)
    if "infeasible" in table:
        keep &= table["infeasible"] < 0.5
    for name in feature_names:
        keep &= ~np.isnan(table[name])
    dropped = int((~keep).sum())
    features = {name: table[name][keep] for name in feature_names}
    labels = table[label_col][keep]

    tree = fit_tree(
        features,
        labels,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        purity_stop=0.99,
    )
    pred = tree.predict(features)
    acc = float((pred == labels.astype(np.int64)).mean()) if len(labels) else math.nan
    rules = extract_rules(tree, min_purity=args.min_purity)

    print(f"rows: {len(labels)} (dropped {dropped}); label: {label_col}")
    print(f"tree: {tree.n_nodes} nodes, depth {tree.depth}, training accuracy {acc:.4f}")
    print(f"rules with purity >= {args.min_purity:g}:")
    body = [r.render(tree.boolean_features) for r in rules]
    for line in body:
        print("  " + line)
    if not rules:
        print("  (none)")

    out = _resolve_out(args.out, "rules.txt")
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(f"label: {label_col}\n")
            for line in body:
                fh.write(line + "\n")
            fh.write("\ntree:\n")
            fh.write(tree.to_text())
            fh.write("\n")
        print(f"wrote {out}")
    return 0


def _cmd_print_defaults(args: argparse.Namespace) -> int:
    if args.kind == "run":
        sys.stdout.write(default_run_yaml())
    else:
        sys.stdout.write(default_sweep_yaml())
    return 0


def _cmd_benchmark(args: argparse.Namespace) -> int:
    spec = load_run_spec(args.config) if args.config else None
    report = benchmark_backends(spec, repeats=args.repeats)
    print(f"n_samples: {report['n_samples']}")
    for name, timing in report["backends"].items():
        print(f"{name}: {timing['ns_per_sample']:.1f} ns/sample ({timing['run_ms']:.3f} ms/run)")
    if report["speedup"] is not None:
        print(f"speedup: {report['speedup']:.1f}x")
        print(f"outputs identical: {'yes' if report['identical'] else 'NO'}")
    else:
        print("compiled backend not available; timed pure python only")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emberline",
        description="Simulate PMU-observed overhead lines heated by nearby fires "
        "and exercise the impedance-angle slope detector.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate-fire", help="fit distance factors from a heating table")
    p.add_argument("--table", help="heating table CSV (default: packaged reference table)")
    p.add_argument("--tolerance", type=float, default=0.01, help="sqrt-time law tolerance")
    p.add_argument("--out", help="output file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_calibrate_fire)

    p = sub.add_parser("simulate", help="run one observation window")
    p.add_argument("--config", required=True, help="run config (YAML or JSON)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="trace output file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", help="write an SVG of the tan-delta series")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run the factorial study")
    p.add_argument("--config", help="sweep config (YAML or JSON); default: shipped defaults")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="process count")
    p.add_argument(
        "--subsample",
        help="'full', 'stratified:N' (N random cells) or 'lhs:N' (N hypercube points)",
    )
    p.add_argument("--out", help="table output file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-summary", action="store_true", help="skip the condition summary")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("train-rules", help="mine trip rules from a sweep table")
    p.add_argument("--data", required=True, help="sweep table (CSV or JSON)")
    p.add_argument("--label", default="trip1", help="label column (default trip1)")
    p.add_argument("--features", help="comma-separated feature columns")
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--min-leaf", type=int, default=25)
    p.add_argument("--min-purity", type=float, default=0.90)
    p.add_argument("--out", help="rules output file")
    p.set_defaults(func=_cmd_train_rules)

    p = sub.add_parser("print-defaults", help="emit a default config document")
    p.add_argument("kind", choices=("run", "sweep"))
    p.set_defaults(func=_cmd_print_defaults)

    p = sub.add_parser("benchmark", help="compare kernel backends")
    p.add_argument("--config", help="run config to benchmark (default: built-in example)")
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EmberlineError, OSError) as exc:
        print(f"emberline: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
