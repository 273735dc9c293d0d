"""Command-line interface.

Subcommands: fit (data -> results), scan (bandwidth diagnostics only),
synth (generate synthetic datasets + truth), eval (metrics vs truth),
summarize (tables from a results file). Exit codes: 0 success, 2
input/schema error, 3 numerical or degeneracy error, 4 configuration
error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .cca import CCASolution
from .config import (
    fit_config_from_config,
    read_config,
    run_options_from_config,
    schema_from_config,
)
from .errors import GwccaError, InputError, SchemaError, exit_code_for
from .evaluation import compare_models
from .pipeline import (
    export as export_result,
    fit as fit_model,
    load_csv,
    preprocess,
    summarize,
    summarize_from_csv,
)
from .selection import scan_records_rows
from .synth import (
    SynthParams1,
    SynthParams2,
    SyntheticTruth,
    generate_dataset1,
    generate_dataset2,
)

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="configuration file (INI)")
    parser.add_argument("--seed", type=int, help="random seed / manifest seed")
    parser.add_argument("--kernel", help="kernel family name")
    parser.add_argument("--k", type=int, help="adaptive bandwidth: neighbor count")
    parser.add_argument("--bandwidth", type=float, help="fixed bandwidth distance")
    parser.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    parser.add_argument("--out", required=True, help="output path prefix")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwcca",
        description="Geographically weighted canonical correlation analysis",
    )
    parser.add_argument("--version", action="version", version=f"gwcca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the local model on a CSV dataset")
    p_fit.add_argument("--data", required=True, type=Path, help="input CSV")
    _add_common(p_fit)

    p_scan = sub.add_parser("scan", help="bandwidth scan diagnostics only")
    p_scan.add_argument("--data", required=True, type=Path, help="input CSV")
    _add_common(p_scan)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset + truth")
    p_synth.add_argument("--dataset", type=int, choices=(1, 2), default=None)
    p_synth.add_argument("--n", type=int, help="locations (dataset 1)")
    p_synth.add_argument("--grid-size", type=int, help="grid side (dataset 2)")
    p_synth.add_argument("--p", type=int, help="X-set width")
    p_synth.add_argument("--q", type=int, help="Y-set width")
    p_synth.add_argument("--config", type=Path)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output path prefix")
    p_synth.add_argument("-v", "--verbose", action="store_true")

    p_eval = sub.add_parser("eval", help="accuracy vs synthetic ground truth")
    p_eval.add_argument("--fit", required=True, type=Path, help="locations CSV")
    p_eval.add_argument("--truth", required=True, type=Path, help="truth CSV")
    p_eval.add_argument("--baseline", required=True, type=Path, help="global CSV")
    p_eval.add_argument("--out", required=True, type=Path, help="output CSV")
    p_eval.add_argument("--label", default="dataset", help="dataset column value")
    p_eval.add_argument("-v", "--verbose", action="store_true")

    p_sum = sub.add_parser("summarize", help="summary tables from a results file")
    p_sum.add_argument("--fit", required=True, type=Path, help="locations CSV")
    p_sum.add_argument("--out", required=True, help="output path prefix")
    p_sum.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args) -> dict:
    return {
        "kernel": getattr(args, "kernel", None),
        "k": getattr(args, "k", None),
        "bandwidth": getattr(args, "bandwidth", None),
        "threads": getattr(args, "threads", None),
        "seed": getattr(args, "seed", None),
    }


def _load_and_prepare(args):
    parser = read_config(args.config) if args.config else None
    schema = schema_from_config(parser)
    config = fit_config_from_config(parser, _overrides(args))
    options = run_options_from_config(parser)
    dataset = load_csv(args.data, schema)
    dataset, info = preprocess(
        dataset,
        collinearity_threshold=options["collinearity_threshold"],
        standardize=options["standardize"],
    )
    return dataset, config, info


def _write_rows(path: Path, header, rows) -> None:
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            cells = [
                FLOAT_FMT % v if isinstance(v, (float, np.floating)) else str(v)
                for v in row
            ]
            handle.write(",".join(cells) + "\n")


def cmd_fit(args) -> int:
    dataset, config, info = _load_and_prepare(args)
    result = fit_model(dataset, config, preprocess_info=info)
    paths = export_result(result, summarize(result), args.out)
    print(
        f"fit complete: n={dataset.n} p={dataset.p} q={dataset.q} "
        f"k={result.chosen_k} reported="
        f"{[c + 1 for c in result.reported]}"
    )
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0


def cmd_scan(args) -> int:
    dataset, config, _ = _load_and_prepare(args)
    config = replace(config, adaptive_k=None, fixed_bandwidth=None)
    result = fit_model(dataset, config)
    rows = scan_records_rows(result.records)
    out = Path(str(args.out) + "_scan.csv")
    if rows:
        _write_rows(out, list(rows[0].keys()), ([r[h] for h in rows[0]] for r in rows))
    print(f"scan chose k={result.chosen_k} ({result.stop_reason}); wrote {out}")
    return 0


def _synth_params(args, parser):
    def cfg(key, cast, default):
        if parser is not None and parser.has_option("synth", key):
            return cast(parser.get("synth", key))
        return default

    def pick(cli_value, key, default):
        if cli_value is not None:
            return cli_value
        return cfg(key, int, default)

    dataset_id = pick(args.dataset, "dataset", 1)
    if dataset_id == 1:
        return SynthParams1(
            n=pick(args.n, "n", 2000),
            p=pick(args.p, "p", 5),
            q=pick(args.q, "q", 5),
            seed=args.seed,
        )
    return SynthParams2(
        grid_size=pick(args.grid_size, "grid_size", 60),
        p=pick(args.p, "p", 5),
        q=pick(args.q, "q", 5),
        seed=args.seed,
    )


def cmd_synth(args) -> int:
    parser = read_config(args.config) if args.config else None
    params = _synth_params(args, parser)
    if isinstance(params, SynthParams1):
        dataset, truth = generate_dataset1(params)
    else:
        dataset, truth = generate_dataset2(params)
    prefix = Path(args.out)
    data_path = prefix.with_name(prefix.name + "_data.csv")
    truth_path = prefix.with_name(prefix.name + "_truth.csv")
    header = ["id", "x", "y", *dataset.x_names, *dataset.y_names]
    _write_rows(
        data_path,
        header,
        (
            [dataset.ids[i], dataset.coords[i, 0], dataset.coords[i, 1]]
            + list(dataset.X[i])
            + list(dataset.Y[i])
            for i in range(dataset.n)
        ),
    )
    _write_rows(
        truth_path,
        ["id", "x", "y", "rho1_true", "rho2_true"],
        (
            [
                dataset.ids[i],
                dataset.coords[i, 0],
                dataset.coords[i, 1],
                truth.rho1_field[i],
                truth.rho2_field[i],
            ]
            for i in range(dataset.n)
        ),
    )
    print(f"wrote {data_path} and {truth_path} (n={dataset.n})")
    return 0


def cmd_eval(args) -> int:
    fit_frame = pd.read_csv(args.fit)
    truth_frame = pd.read_csv(args.truth)
    baseline_frame = pd.read_csv(args.baseline)
    rho_cols = sorted(
        (c for c in fit_frame.columns if c.startswith("rho_")),
        key=lambda c: int(c.split("_")[1]),
    )
    if len(rho_cols) < 2:
        raise InputError("the fit file must carry at least two rho_<j> columns")
    for col in ("rho1_true", "rho2_true"):
        if col not in truth_frame.columns:
            raise SchemaError(f"truth file is missing column {col}")
    if len(fit_frame) != len(truth_frame):
        raise InputError("fit and truth files cover different location counts")
    if "rho" not in baseline_frame.columns:
        raise SchemaError("baseline file is missing a 'rho' column")
    local = fit_frame[rho_cols].to_numpy(dtype=float)
    truth = SyntheticTruth(
        rho1_field=truth_frame["rho1_true"].to_numpy(dtype=float),
        rho2_field=truth_frame["rho2_true"].to_numpy(dtype=float),
        a0=np.empty((0, 2)),
        b0=np.empty((0, 2)),
    )
    global_rho = baseline_frame["rho"].to_numpy(dtype=float)
    baseline = CCASolution(
        rho=global_rho,
        a_weights=np.empty((0, len(global_rho))),
        b_weights=np.empty((0, len(global_rho))),
        psi=len(global_rho),
    )
    bandwidth = None
    if "bandwidth" in fit_frame.columns:
        bandwidth = float(fit_frame["bandwidth"].iloc[0])
    report = compare_models(local, baseline, truth, chosen_bandwidth=bandwidth)
    rows = report.rows(args.label)
    _write_rows(
        Path(args.out),
        ["dataset", "variate", "metric", "gwcca", "cca"],
        ([r["dataset"], r["variate"], r["metric"], r["gwcca"], r["cca"]] for r in rows),
    )
    for r in rows:
        print(
            f"{r['dataset']} variate {r['variate']} {r['metric']}: "
            f"gwcca={r['gwcca']:.4f} cca={r['cca']:.4f}"
        )
    return 0


def cmd_summarize(args) -> int:
    summary = summarize_from_csv(args.fit)
    prefix = Path(args.out)
    rho_path = prefix.with_name(prefix.name + "_rho_summary.csv")
    header = ["variate", "min", "p25", "p50", "p75", "max", "mean"]
    _write_rows(rho_path, header, ([r[h] for h in header] for r in summary.rho_rows))
    load_path = prefix.with_name(prefix.name + "_loading_summary.csv")
    load_header = [
        "variate",
        "set",
        "variable",
        "min",
        "p25",
        "p50",
        "p75",
        "max",
        "abs_mean",
    ]
    _write_rows(
        load_path,
        load_header,
        ([r[h] for h in load_header] for r in summary.loading_rows),
    )
    print(f"wrote {rho_path} and {load_path}")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "scan": cmd_scan,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "summarize": cmd_summarize,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except GwccaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
