"""Plain-text configuration files.

INI grammar with four sections, all optional, every key mirrored by a
CLI flag (the CLI wins on conflict):

    [data]                          # input CSV schema
    id = <id column>                # optional; row numbers otherwise
    x = <x coordinate column>
    y = <y coordinate column>
    x_vars = v1, v2, ...            # X-set columns
    y_vars = w1, w2, ...            # Y-set columns

    [kernel]
    family = gaussian | exponential | boxcar | bisquare | tricube
    k = <adaptive neighbor count>   # omit k and bandwidth to scan
    bandwidth = <fixed distance>
    ridge = 0.0

    [selection]
    phi = 0.95
    alpha = 0.5
    beta = 0.8
    report_threshold = 0.40
    patience = 2
    improvement_tol = 0.01
    k_min = 0                       # 0 resolves to max(p+q+2, 20)
    k_max = 0                       # 0 resolves to n
    grid_size = 30
    grid_spacing = geometric | linear
    k_step = 0                      # arithmetic step; overrides grid_size

    [run]
    seed = 0
    threads = 0                     # 0 = machine parallelism
    collinearity_threshold = 0.7
    standardize = true
    align_signs = false             # align loading signs to neighbors

    [synth]                         # defaults for the synth command
    dataset = 1 | 2
    n = 2000
    grid_size = 60
    p = 5
    q = 5
"""

import configparser
from pathlib import Path

from .errors import ConfigurationError
from .pipeline import CsvSchema, FitConfig, GridSpec
from .selection import SelectionConfig

_KNOWN_KEYS = {
    "data": {"id", "x", "y", "x_vars", "y_vars"},
    "kernel": {"family", "k", "bandwidth", "ridge"},
    "selection": {
        "phi",
        "alpha",
        "beta",
        "report_threshold",
        "patience",
        "improvement_tol",
        "k_min",
        "k_max",
        "grid_size",
        "grid_spacing",
        "k_step",
    },
    "run": {
        "seed",
        "threads",
        "collinearity_threshold",
        "standardize",
        "align_signs",
    },
    "synth": {"dataset", "n", "grid_size", "p", "q"},
}


def read_config(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"no such config file: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigurationError(f"unknown config section [{section}]")
        unknown = set(parser[section]) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigurationError(
                f"unknown key(s) in [{section}]: {sorted(unknown)}"
            )
    return parser


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _get(parser, section, key, cast, default):
    if parser is None or not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigurationError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def schema_from_config(parser) -> CsvSchema:
    if parser is None or not parser.has_section("data"):
        raise ConfigurationError(
            "a [data] section (x, y, x_vars, y_vars) is required to read a CSV"
        )
    section = parser["data"]
    for key in ("x", "y", "x_vars", "y_vars"):
        if key not in section:
            raise ConfigurationError(f"[data] section is missing '{key}'")
    return CsvSchema(
        x_col=section["x"].strip(),
        y_col=section["y"].strip(),
        x_cols=_split_list(section["x_vars"]),
        y_cols=_split_list(section["y_vars"]),
        id_col=section["id"].strip() if "id" in section else None,
    )


def fit_config_from_config(parser, overrides: dict | None = None) -> FitConfig:
    """Build a fit configuration from a parsed file plus CLI overrides."""
    overrides = overrides or {}

    def pick(name, section, key, cast, default):
        value = overrides.get(name)
        return value if value is not None else _get(parser, section, key, cast, default)

    selection = SelectionConfig(
        phi=_get(parser, "selection", "phi", float, 0.95),
        alpha=_get(parser, "selection", "alpha", float, 0.5),
        beta=_get(parser, "selection", "beta", float, 0.8),
        report_threshold=_get(parser, "selection", "report_threshold", float, 0.40),
        patience=_get(parser, "selection", "patience", int, 2),
        improvement_tol=_get(parser, "selection", "improvement_tol", float, 0.01),
    )
    grid = GridSpec(
        k_min=_get(parser, "selection", "k_min", int, 0),
        k_max=_get(parser, "selection", "k_max", int, 0),
        size=_get(parser, "selection", "grid_size", int, 30),
        spacing=_get(parser, "selection", "grid_spacing", str, "geometric"),
        k_step=_get(parser, "selection", "k_step", int, 0),
    )
    return FitConfig(
        kernel_family=pick("kernel", "kernel", "family", str, "gaussian"),
        adaptive_k=pick("k", "kernel", "k", int, None),
        fixed_bandwidth=pick("bandwidth", "kernel", "bandwidth", float, None),
        selection=selection,
        grid=grid,
        ridge=pick("ridge", "kernel", "ridge", float, 0.0),
        threads=pick("threads", "run", "threads", int, 0),
        seed=pick("seed", "run", "seed", int, 0),
        align_signs=_get(parser, "run", "align_signs", bool, False),
    )


def run_options_from_config(parser) -> dict:
    return {
        "collinearity_threshold": _get(
            parser, "run", "collinearity_threshold", float, 0.7
        ),
        "standardize": _get(parser, "run", "standardize", bool, True),
    }
