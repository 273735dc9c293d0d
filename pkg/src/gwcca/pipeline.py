"""End-to-end orchestration: ingestion, preprocessing, fitting, summaries
and deterministic exports.

Preprocessing order is collinearity filtering (within the X set and the
Y set separately), then global z-score standardization. All exports are
byte-deterministic for a given input, configuration and seed: floats
are written with 17 significant digits, merges are index-ordered, and
the run manifest carries no timestamps.
"""

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .cca import (
    CCASolution,
    LocalCCAResult,
    align_signs_to_neighbors,
    fit_all_locations,
    global_cca,
)
from .dataset import SpatialDataset
from .errors import (
    ConfigurationError,
    DegenerateVarianceError,
    InputError,
    ParameterError,
    SchemaError,
)
from .kernels import FAMILIES, KernelSpec, pairwise_distances
from .selection import (
    ScanRecord,
    ScreeningResult,
    SelectionConfig,
    early_stop_scan,
    scan_records_rows,
    screen_fit,
    stack_results,
)

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for the standard input CSV."""

    x_col: str
    y_col: str
    x_cols: tuple[str, ...]
    y_cols: tuple[str, ...]
    id_col: str | None = None


@dataclass
class PreprocessInfo:
    rows_dropped: int = 0
    x_dropped: list[str] = field(default_factory=list)
    y_dropped: list[str] = field(default_factory=list)
    x_means: dict = field(default_factory=dict)
    x_stds: dict = field(default_factory=dict)
    y_means: dict = field(default_factory=dict)
    y_stds: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GridSpec:
    """Candidate neighbor counts for the bandwidth scan.

    Zero ``k_min``/``k_max`` resolve to max(p+q+2, 20) and n. Spacing is
    either a fixed candidate count (geometric or linear) or, when
    ``k_step`` is set, an arithmetic walk with that step.
    """

    k_min: int = 0
    k_max: int = 0
    size: int = 30
    spacing: str = "geometric"
    k_step: int = 0

    def __post_init__(self):
        if self.spacing not in ("geometric", "linear"):
            raise ParameterError("spacing must be 'geometric' or 'linear'")
        if self.size < 2:
            raise ParameterError("grid size must be at least 2")
        if self.k_step < 0 or self.k_min < 0 or self.k_max < 0:
            raise ParameterError("grid bounds and step must be nonnegative")

    def candidates(self, n: int, p: int, q: int) -> list[int]:
        lo = self.k_min if self.k_min else max(p + q + 2, 20)
        hi = self.k_max if self.k_max else n
        hi = min(hi, n)
        if lo > hi:
            raise ConfigurationError(f"empty bandwidth grid: k_min={lo} > k_max={hi}")
        if self.k_step:
            ks = list(range(lo, hi + 1, self.k_step))
        elif self.spacing == "linear":
            ks = np.unique(np.linspace(lo, hi, self.size).round().astype(int)).tolist()
        else:
            ks = (
                np.unique(
                    np.round(np.geomspace(lo, hi, self.size)).astype(int)
                ).tolist()
            )
        return [int(k) for k in ks]


@dataclass
class FitConfig:
    """Everything a fit run depends on besides the data itself."""

    kernel_family: str = "gaussian"
    adaptive_k: int | None = None
    fixed_bandwidth: float | None = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    ridge: float = 0.0
    threads: int = 0
    seed: int = 0
    # Flip each location's loading signs to match its nearest neighbor
    # (smoother maps); the per-location canonical sign rule otherwise.
    align_signs: bool = False

    def __post_init__(self):
        if self.kernel_family not in FAMILIES:
            raise ParameterError(
                f"unknown kernel family {self.kernel_family!r}; "
                f"choose one of {FAMILIES}"
            )
        if self.adaptive_k is not None and self.fixed_bandwidth is not None:
            raise ParameterError("set at most one of adaptive_k and fixed_bandwidth")
        if self.ridge < 0:
            raise ParameterError("ridge must be nonnegative")
        if self.threads < 0:
            raise ParameterError("threads must be nonnegative")

    def resolved_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


@dataclass
class FitResult:
    """Local solutions at every location plus the selection outcome."""

    dataset: SpatialDataset
    rhos: np.ndarray
    a: np.ndarray
    b: np.ndarray
    bandwidths: np.ndarray
    chosen_k: int | None
    fixed_bandwidth: float | None
    screening: ScreeningResult
    global_solution: CCASolution
    config: FitConfig
    records: list[ScanRecord] = field(default_factory=list)
    stop_reason: str = "fixed"
    preprocess: PreprocessInfo | None = None
    regularized_locations: int = 0

    @property
    def retained(self) -> tuple[int, ...]:
        return self.screening.retained

    @property
    def reported(self) -> tuple[int, ...]:
        return self.screening.reported

    def local_result(self, i: int) -> LocalCCAResult:
        sol = CCASolution(
            rho=self.rhos[i],
            a_weights=self.a[i],
            b_weights=self.b[i],
            psi=self.rhos.shape[1],
        )
        return LocalCCAResult(
            target_index=i, bandwidth_used=float(self.bandwidths[i]), solution=sol
        )


@dataclass
class SummaryTable:
    """Quantile tables: local correlations per variate, local loadings
    per variable per reported variate (with the mean absolute loading)."""

    rho_rows: list[dict]
    loading_rows: list[dict]


def load_csv(path, schema: CsvSchema) -> SpatialDataset:
    """Assemble a dataset from a CSV file.

    Rows with a missing or unparseable value in any declared column are
    dropped (and counted in the log); a missing declared column is a
    schema error.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise SchemaError(f"cannot parse CSV {path}: {exc}") from exc
    declared = [schema.x_col, schema.y_col, *schema.x_cols, *schema.y_cols]
    if schema.id_col is not None:
        declared.insert(0, schema.id_col)
    missing = [c for c in declared if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing declared column(s) in {path}: {missing}")
    numeric_cols = [schema.x_col, schema.y_col, *schema.x_cols, *schema.y_cols]
    numeric = frame[numeric_cols].apply(pd.to_numeric, errors="coerce")
    keep = numeric.notna().all(axis=1)
    if schema.id_col is not None:
        keep &= frame[schema.id_col].notna()
    dropped = int((~keep).sum())
    if dropped:
        logger.info("dropped %d row(s) with missing values", dropped)
    numeric = numeric[keep]
    if numeric.shape[0] == 0:
        raise InputError(f"no usable rows in {path}")
    if schema.id_col is not None:
        ids = frame.loc[keep, schema.id_col].astype(str).tolist()
    else:
        ids = [str(i) for i in range(numeric.shape[0])]
    coords = numeric[[schema.x_col, schema.y_col]].to_numpy()
    X = numeric[list(schema.x_cols)].to_numpy()
    Y = numeric[list(schema.y_cols)].to_numpy()
    dataset = SpatialDataset(
        ids=ids,
        coords=coords,
        X=X,
        Y=Y,
        x_names=list(schema.x_cols),
        y_names=list(schema.y_cols),
    )
    dataset.rows_dropped = dropped  # type: ignore[attr-defined]
    return dataset


def zscore(block, names=None):
    """Standardize columns to mean 0, standard deviation 1 (population
    convention). Returns (standardized, means, stds)."""
    arr = np.asarray(block, dtype=float)
    if arr.ndim != 2:
        raise InputError("block must be 2-d")
    means = arr.mean(axis=0)
    stds = arr.std(axis=0)
    bad = np.nonzero(stds == 0)[0]
    if bad.size:
        label = names[bad[0]] if names else f"column {bad[0]}"
        raise DegenerateVarianceError(f"{label} is constant; cannot standardize")
    return (arr - means) / stds, means, stds


def collinearity_filter(block, names, threshold: float = 0.7):
    """Iteratively drop one member of the worst-correlated pair until no
    absolute pairwise correlation exceeds the threshold.

    The dropped member is the one with the larger mean absolute
    correlation to the other remaining variables; ties drop the
    later column. Deterministic.
    """
    arr = np.asarray(block, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(names):
        raise InputError("block and names are inconsistent")
    keep = list(range(arr.shape[1]))
    dropped: list[str] = []
    while len(keep) > 1:
        sub = arr[:, keep]
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(sub, rowvar=False)
        # A constant column has no defined correlation; it cannot be the
        # offender here and is left for standardization to reject.
        corr = np.nan_to_num(corr, nan=0.0)
        np.fill_diagonal(corr, 0.0)
        abs_corr = np.abs(corr)
        worst = np.unravel_index(np.argmax(abs_corr), abs_corr.shape)
        if abs_corr[worst] <= threshold:
            break
        i, j = sorted(worst)
        mean_i = abs_corr[i].sum() / (len(keep) - 1)
        mean_j = abs_corr[j].sum() / (len(keep) - 1)
        victim = j if mean_j >= mean_i else i
        dropped.append(names[keep[victim]])
        del keep[victim]
    kept_names = [names[i] for i in keep]
    return arr[:, keep], kept_names, dropped


def preprocess(
    dataset: SpatialDataset,
    collinearity_threshold: float = 0.7,
    standardize: bool = True,
):
    """Collinearity-filter X and Y separately, then z-score globally.

    Returns the reduced dataset and a log of what was dropped plus the
    standardization constants (for mapping loadings back if needed).
    """
    info = PreprocessInfo(rows_dropped=getattr(dataset, "rows_dropped", 0))
    X, x_names, info.x_dropped = collinearity_filter(
        dataset.X, dataset.x_names, collinearity_threshold
    )
    Y, y_names, info.y_dropped = collinearity_filter(
        dataset.Y, dataset.y_names, collinearity_threshold
    )
    if info.x_dropped or info.y_dropped:
        logger.info(
            "collinearity filter dropped X=%s Y=%s", info.x_dropped, info.y_dropped
        )
    if standardize:
        X, mx, sx = zscore(X, x_names)
        Y, my, sy = zscore(Y, y_names)
        info.x_means = {k: float(v) for k, v in zip(x_names, mx)}
        info.x_stds = {k: float(v) for k, v in zip(x_names, sx)}
        info.y_means = {k: float(v) for k, v in zip(y_names, my)}
        info.y_stds = {k: float(v) for k, v in zip(y_names, sy)}
    reduced = SpatialDataset(
        ids=list(dataset.ids),
        coords=dataset.coords,
        X=X,
        Y=Y,
        x_names=x_names,
        y_names=y_names,
    )
    return reduced, info


def fit(
    dataset: SpatialDataset,
    config: FitConfig | None = None,
    preprocess_info: PreprocessInfo | None = None,
) -> FitResult:
    """Full model fit: bandwidth scan (unless fixed), per-location solve
    at the chosen bandwidth, variate screening and reporting selection.

    Deterministic given (dataset, config, seed) regardless of the worker
    count.
    """
    config = config or FitConfig()
    threads = config.resolved_threads()
    distances = pairwise_distances(dataset.coords)

    records: list[ScanRecord] = []
    stop_reason = "fixed"
    chosen_k = config.adaptive_k
    if config.fixed_bandwidth is not None:
        spec = KernelSpec(
            family=config.kernel_family, fixed_bandwidth=config.fixed_bandwidth
        )
        chosen_k = None
    else:
        if chosen_k is None:
            template = KernelSpec(family=config.kernel_family, adaptive_k=1)
            candidates = config.grid.candidates(dataset.n, dataset.p, dataset.q)
            chosen_k, records, stop_reason = early_stop_scan(
                dataset,
                template,
                candidates,
                config.selection,
                ridge=config.ridge,
                threads=threads,
                distances=distances,
            )
            logger.info(
                "bandwidth scan chose k=%d (%s) after %d candidate(s)",
                chosen_k,
                stop_reason,
                len(records),
            )
        spec = KernelSpec(family=config.kernel_family, adaptive_k=chosen_k)

    results = fit_all_locations(
        dataset, spec, ridge=config.ridge, threads=threads, distances=distances
    )
    rhos, a, b, bandwidths = stack_results(results)
    if config.align_signs:
        a, b = align_signs_to_neighbors(a, b, dataset.coords, distances)
    screening = screen_fit(rhos, a, b, config.selection)
    baseline = global_cca(dataset.X, dataset.Y, config.ridge)
    regularized = sum(1 for r in results if r.solution.regularized)
    if regularized:
        logger.info("ridge regularization applied at %d location(s)", regularized)
    return FitResult(
        dataset=dataset,
        rhos=rhos,
        a=a,
        b=b,
        bandwidths=bandwidths,
        chosen_k=chosen_k,
        fixed_bandwidth=config.fixed_bandwidth,
        screening=screening,
        global_solution=baseline,
        config=config,
        records=records,
        stop_reason=stop_reason,
        preprocess=preprocess_info,
        regularized_locations=regularized,
    )


def _quantile_row(values: np.ndarray) -> dict:
    return {
        "min": float(values.min()),
        "p25": float(np.quantile(values, 0.25)),
        "p50": float(np.quantile(values, 0.50)),
        "p75": float(np.quantile(values, 0.75)),
        "max": float(values.max()),
    }


def summarize(result: FitResult) -> SummaryTable:
    """Quantile tables over locations: correlations for every variate,
    loadings per variable for the reported variates."""
    rho_rows = []
    for c in range(result.rhos.shape[1]):
        row = {"variate": c + 1}
        row.update(_quantile_row(result.rhos[:, c]))
        row["mean"] = float(result.rhos[:, c].mean())
        rho_rows.append(row)

    loading_rows = []
    for c in result.reported:
        for set_label, names, block in (
            ("X", result.dataset.x_names, result.a),
            ("Y", result.dataset.y_names, result.b),
        ):
            for v, name in enumerate(names):
                values = block[:, v, c]
                row = {"variate": c + 1, "set": set_label, "variable": name}
                row.update(_quantile_row(values))
                row["abs_mean"] = float(np.abs(values).mean())
                loading_rows.append(row)
    return SummaryTable(rho_rows=rho_rows, loading_rows=loading_rows)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def export(result: FitResult, summary: SummaryTable, out_prefix) -> dict[str, Path]:
    """Write the result files under a common path prefix.

    Files: per-location results, correlation and loading summary tables,
    a long-format table for external plotting, the global baseline, the
    scan diagnostics (when a scan ran) and a JSON run manifest. Exports
    are byte-identical across reruns of the same fit.
    """
    prefix = Path(out_prefix)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True, exist_ok=True)
    ds = result.dataset
    reported = list(result.reported)
    paths: dict[str, Path] = {}

    loc_path = prefix.with_name(prefix.name + "_locations.csv")
    header = ["id", "x", "y", "bandwidth"]
    header += [f"rho_{c + 1}" for c in reported]
    header += [f"a{c + 1}_{name}" for c in reported for name in ds.x_names]
    header += [f"b{c + 1}_{name}" for c in reported for name in ds.y_names]

    def location_rows():
        for i in range(ds.n):
            row = [ds.ids[i], ds.coords[i, 0], ds.coords[i, 1], result.bandwidths[i]]
            row += [result.rhos[i, c] for c in reported]
            row += [result.a[i, v, c] for c in reported for v in range(ds.p)]
            row += [result.b[i, v, c] for c in reported for v in range(ds.q)]
            yield row

    _write_csv(loc_path, header, location_rows())
    paths["locations"] = loc_path

    rho_path = prefix.with_name(prefix.name + "_rho_summary.csv")
    rho_header = ["variate", "min", "p25", "p50", "p75", "max", "mean"]
    _write_csv(
        rho_path, rho_header, ([row[h] for h in rho_header] for row in summary.rho_rows)
    )
    paths["rho_summary"] = rho_path

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
    _write_csv(
        load_path,
        load_header,
        ([row[h] for h in load_header] for row in summary.loading_rows),
    )
    paths["loading_summary"] = load_path

    long_path = prefix.with_name(prefix.name + "_long.csv")

    def long_rows():
        for i in range(ds.n):
            base = [ds.ids[i], ds.coords[i, 0], ds.coords[i, 1]]
            for c in reported:
                yield base + ["rho", c + 1, result.rhos[i, c]]
                for v, name in enumerate(ds.x_names):
                    yield base + [f"a:{name}", c + 1, result.a[i, v, c]]
                for v, name in enumerate(ds.y_names):
                    yield base + [f"b:{name}", c + 1, result.b[i, v, c]]

    _write_csv(long_path, ["id", "x", "y", "quantity", "variate", "value"], long_rows())
    paths["long"] = long_path

    global_path = prefix.with_name(prefix.name + "_global.csv")
    _write_csv(
        global_path,
        ["variate", "rho"],
        ([c + 1, float(r)] for c, r in enumerate(result.global_solution.rho)),
    )
    paths["global"] = global_path

    if result.records:
        scan_path = prefix.with_name(prefix.name + "_scan.csv")
        rows = scan_records_rows(result.records)
        scan_header = list(rows[0].keys())
        _write_csv(scan_path, scan_header, ([row[h] for h in scan_header] for row in rows))
        paths["scan"] = scan_path

    config_dump = asdict(result.config)
    # Worker count is a scheduling knob; outputs are independent of it and
    # exports must stay byte-identical across thread counts.
    config_dump.pop("threads", None)
    manifest = {
        "package": "gwcca",
        "version": __version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "n": ds.n,
        "p": ds.p,
        "q": ds.q,
        "x_names": ds.x_names,
        "y_names": ds.y_names,
        "config": config_dump,
        "chosen_k": result.chosen_k,
        "fixed_bandwidth": result.fixed_bandwidth,
        "stop_reason": result.stop_reason,
        "tau": result.screening.tau,
        "supports": [float(s) for s in result.screening.supports],
        "retained": [c + 1 for c in result.retained],
        "reported": [c + 1 for c in result.reported],
        "mean_rho": [float(v) for v in result.screening.mean_rho],
        "global_rho": [float(v) for v in result.global_solution.rho],
        "regularized_locations": result.regularized_locations,
        "preprocess": asdict(result.preprocess) if result.preprocess else None,
    }
    manifest_path = prefix.with_name(prefix.name + "_manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    paths["manifest"] = manifest_path
    return paths


def summarize_from_csv(path) -> SummaryTable:
    """Rebuild the summary tables from a previously exported
    per-location results file."""
    frame = pd.read_csv(path)
    rho_cols = sorted(
        (c for c in frame.columns if c.startswith("rho_")),
        key=lambda c: int(c.split("_")[1]),
    )
    if not rho_cols:
        raise SchemaError(f"{path} has no rho_<j> columns")
    rho_rows = []
    for col in rho_cols:
        values = frame[col].to_numpy(dtype=float)
        row = {"variate": int(col.split("_")[1])}
        row.update(_quantile_row(values))
        row["mean"] = float(values.mean())
        rho_rows.append(row)
    loading_rows = []
    for col in frame.columns:
        if len(col) < 2 or col[0] not in ("a", "b") or "_" not in col:
            continue
        head, name = col.split("_", 1)
        if not head[1:].isdigit():
            continue
        values = frame[col].to_numpy(dtype=float)
        row = {
            "variate": int(head[1:]),
            "set": "X" if col[0] == "a" else "Y",
            "variable": name,
        }
        row.update(_quantile_row(values))
        row["abs_mean"] = float(np.abs(values).mean())
        loading_rows.append(row)
    loading_rows.sort(key=lambda r: (r["variate"], r["set"]))
    return SummaryTable(rho_rows=rho_rows, loading_rows=loading_rows)
