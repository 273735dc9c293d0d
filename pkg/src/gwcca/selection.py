"""Bandwidth selection and retained-variate determination.

Bandwidth: candidate neighbor counts are scanned in ascending order; at
each candidate the residual goodness-of-fit (share of total squared
local canonical correlation NOT captured by the leading variates) is
evaluated at that candidate's screened dimension, and the scan stops
early once the relative improvement stays below a tolerance for a run
of ``patience`` consecutive steps. The stopping rule itself is a pure
function of the RGOF trace so it can be tested without any fitting.

Variates: a two-step rule. Step one screens out spatially unstable
variates via the support ratio of their loadings against a pooled
quantile threshold; step two keeps, for reporting, only variates whose
mean local correlation clears a fixed threshold.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .cca import LocalCCAResult, fit_all_locations
from .dataset import SpatialDataset
from .errors import (
    ConfigurationError,
    DegenerateFitError,
    InputError,
    NumericalError,
    ParameterError,
)
from .kernels import KernelSpec, pairwise_distances

logger = logging.getLogger(__name__)

STOP_EARLY = "early_stop"
STOP_EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for bandwidth scanning and variate selection.

    phi: quantile level for the pooled loading-magnitude threshold.
    alpha: fraction of a variate's coefficients that must clear the
        threshold for one location to count as supporting it.
    beta: relative support cut; variates below beta * mean support drop.
    report_threshold: minimum mean local correlation for reporting.
    patience / improvement_tol: early-stop rule of the bandwidth scan.
    """

    phi: float = 0.95
    alpha: float = 0.5
    beta: float = 0.8
    report_threshold: float = 0.40
    patience: int = 2
    improvement_tol: float = 0.01

    def __post_init__(self):
        for name in ("phi", "alpha", "beta"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ParameterError(f"{name} must lie in (0, 1], got {value}")
        if not 0 <= self.report_threshold <= 1:
            raise ParameterError("report_threshold must lie in [0, 1]")
        if int(self.patience) != self.patience or self.patience < 1:
            raise ParameterError("patience must be an integer >= 1")
        if not 0 < self.improvement_tol < 1:
            raise ParameterError("improvement_tol must lie in (0, 1)")


@dataclass
class ScanRecord:
    """Diagnostics for one candidate bandwidth."""

    candidate_k: int
    rgof_by_c: np.ndarray
    retained_after_screening: tuple[int, ...]
    mean_rho_by_variate: np.ndarray
    scan_dimension: int
    rgof_at_dimension: float


@dataclass
class ScreeningResult:
    tau: float
    supports: np.ndarray
    retained: tuple[int, ...]
    mean_rho: np.ndarray
    reported: tuple[int, ...]
    scan_dimension: int


def rgof(local_rhos, c: int) -> float:
    """Share of total squared local canonical correlation not explained
    by the first ``c`` variates. Exactly 0 at the full rank."""
    rhos = np.asarray(local_rhos, dtype=float)
    if rhos.ndim != 2:
        raise InputError("local_rhos must be an (n, psi) array")
    psi = rhos.shape[1]
    if int(c) != c or not 1 <= c <= psi:
        raise ParameterError(f"c must be an integer in [1, {psi}], got {c}")
    sq = rhos * rhos
    denom = float(sq.sum())
    if not denom > 0:
        raise DegenerateFitError("all local canonical correlations are zero")
    return 1.0 - float(sq[:, : int(c)].sum()) / denom


def loading_threshold(all_loadings, phi: float) -> float:
    """Empirical phi-quantile (linear interpolation between order
    statistics) of a pool of absolute loading values."""
    pool = np.abs(np.asarray(all_loadings, dtype=float)).ravel()
    if pool.size == 0:
        raise InputError("loading pool is empty")
    if not 0 < phi <= 1:
        raise ParameterError(f"phi must lie in (0, 1], got {phi}")
    return float(np.quantile(pool, phi))


def support_ratio(loadings_for_variate, tau: float, alpha: float) -> float:
    """Fraction of locations where at least an ``alpha`` share of a
    variate's p+q coefficients exceeds ``tau`` in magnitude."""
    coefs = np.asarray(loadings_for_variate, dtype=float)
    if coefs.ndim != 2:
        raise InputError("loadings must be an (n, p+q) array")
    k = coefs.shape[1]
    fractions = np.count_nonzero(np.abs(coefs) > tau, axis=1) / k
    return float(np.mean(fractions >= alpha))


def screen_variates(support, beta: float) -> tuple[int, ...]:
    """Retain variates whose support reaches ``beta`` times the mean
    support. The first variate is always retained so downstream fit
    measures keep at least one dimension."""
    s = np.asarray(support, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise InputError("support must be a nonempty 1-d sequence")
    cut = beta * float(s.mean())
    retained = set(np.nonzero(s >= cut)[0].tolist())
    retained.add(0)
    return tuple(sorted(retained))


def select_reportable(mean_rho_by_variate, report_threshold: float) -> tuple[int, ...]:
    """Variates whose mean local correlation clears the reporting cut,
    in descending-correlation (ascending-index) order."""
    means = np.asarray(mean_rho_by_variate, dtype=float)
    picked = tuple(int(i) for i in np.nonzero(means >= report_threshold)[0])
    if not picked:
        logger.warning(
            "no variate reaches the reporting threshold %.3f (best mean %.3f)",
            report_threshold,
            float(means.max()) if means.size else float("nan"),
        )
    return picked


def stack_results(results: list[LocalCCAResult]):
    """Stack per-location solutions into (rhos, A, B, bandwidths) arrays."""
    rhos = np.stack([r.solution.rho for r in results])
    a = np.stack([r.solution.a_weights for r in results])
    b = np.stack([r.solution.b_weights for r in results])
    bandwidths = np.array([r.bandwidth_used for r in results])
    return rhos, a, b, bandwidths


def screen_fit(rhos, a, b, config: SelectionConfig) -> ScreeningResult:
    """Run the two-step variate selection on stacked local solutions.

    The scan dimension is the largest variate index that survives both
    the stability screen and the mean-correlation cut (at least 1), so
    the residual measure during the bandwidth scan covers exactly the
    variates the model would keep.
    """
    psi = rhos.shape[1]
    pool = np.concatenate([np.abs(a).ravel(), np.abs(b).ravel()])
    tau = loading_threshold(pool, config.phi)
    supports = np.array(
        [
            support_ratio(
                np.concatenate([a[:, :, c], b[:, :, c]], axis=1), tau, config.alpha
            )
            for c in range(psi)
        ]
    )
    retained = screen_variates(supports, config.beta)
    mean_rho = rhos.mean(axis=0)
    reportable = select_reportable(mean_rho, config.report_threshold)
    reported = tuple(sorted(set(retained) & set(reportable)))
    scan_dimension = (max(reported) + 1) if reported else 1
    return ScreeningResult(
        tau=tau,
        supports=supports,
        retained=retained,
        mean_rho=mean_rho,
        reported=reported,
        scan_dimension=scan_dimension,
    )


def early_stop_trace(values, patience: int, improvement_tol: float):
    """Apply the early-stop rule to a full RGOF trace.

    Returns (chosen_index, stop_index, reason). Relative improvement at
    step t is (v[t-1] - v[t]) / v[t-1] (0 when the previous value is not
    positive). After ``patience`` consecutive sub-tolerance steps the
    scan stops and the candidate immediately preceding the stale run is
    chosen; an exhausted trace yields its minimizer.
    """
    if int(patience) != patience or patience < 1:
        raise ParameterError("patience must be an integer >= 1")
    vals = [float(v) for v in values]
    if not vals:
        raise InputError("trace is empty")
    stale = 0
    for t in range(1, len(vals)):
        prev = vals[t - 1]
        improvement = (prev - vals[t]) / prev if prev > 0 else 0.0
        if improvement < improvement_tol:
            stale += 1
            if stale >= patience:
                return t - patience, t, STOP_EARLY
        else:
            stale = 0
    return int(np.argmin(vals)), len(vals) - 1, STOP_EXHAUSTED


def early_stop_scan(
    dataset: SpatialDataset,
    spec_template: KernelSpec,
    candidate_ks,
    config: SelectionConfig,
    ridge: float = 0.0,
    threads: int = 1,
    distances: np.ndarray | None = None,
):
    """Scan ascending neighbor counts with the early-stop rule.

    Candidates that fail with a degenerate neighborhood are skipped (and
    excluded from the improvement trace); if every candidate fails the
    scan raises a configuration error. Returns
    (chosen_k, records, stop_reason).
    """
    ks = [int(k) for k in candidate_ks]
    if not ks:
        raise ConfigurationError("candidate_ks must be nonempty")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigurationError("candidate_ks must be strictly ascending")
    if distances is None:
        distances = pairwise_distances(dataset.coords)

    psi = min(dataset.p, dataset.q)
    records: list[ScanRecord] = []
    trace: list[float] = []
    trace_ks: list[int] = []
    stale = 0
    chosen_k: int | None = None
    stop_reason = STOP_EXHAUSTED

    for k in ks:
        spec = KernelSpec(
            family=spec_template.family,
            adaptive_k=k,
            fixed_bandwidth=None,
        )
        try:
            results = fit_all_locations(
                dataset, spec, ridge=ridge, threads=threads, distances=distances
            )
        except NumericalError as exc:
            logger.warning("candidate k=%d skipped: %s", k, exc)
            continue
        rhos, a, b, _ = stack_results(results)
        screening = screen_fit(rhos, a, b, config)
        rgof_by_c = np.array([rgof(rhos, c) for c in range(1, psi + 1)])
        value = float(rgof_by_c[screening.scan_dimension - 1])
        records.append(
            ScanRecord(
                candidate_k=k,
                rgof_by_c=rgof_by_c,
                retained_after_screening=screening.retained,
                mean_rho_by_variate=screening.mean_rho,
                scan_dimension=screening.scan_dimension,
                rgof_at_dimension=value,
            )
        )
        trace.append(value)
        trace_ks.append(k)

        if len(trace) >= 2:
            prev = trace[-2]
            improvement = (prev - trace[-1]) / prev if prev > 0 else 0.0
            if improvement < config.improvement_tol:
                stale += 1
                if stale >= config.patience:
                    chosen_k = trace_ks[len(trace) - 1 - config.patience]
                    stop_reason = STOP_EARLY
                    break
            else:
                stale = 0

    if not records:
        raise ConfigurationError("every candidate bandwidth was degenerate")
    if chosen_k is None:
        chosen_k = trace_ks[int(np.argmin(trace))]
        stop_reason = STOP_EXHAUSTED
    return chosen_k, records, stop_reason


def scan_records_rows(records: list[ScanRecord]) -> list[dict]:
    """Flatten scan records for CSV export."""
    rows = []
    for rec in records:
        row: dict = {"k": rec.candidate_k}
        for c, value in enumerate(rec.rgof_by_c, start=1):
            row[f"rgof_c{c}"] = float(value)
        row["scan_dimension"] = rec.scan_dimension
        row["rgof_at_dimension"] = rec.rgof_at_dimension
        row["retained"] = "|".join(str(c + 1) for c in rec.retained_after_screening)
        for c, value in enumerate(rec.mean_rho_by_variate, start=1):
            row[f"mean_rho_{c}"] = float(value)
        rows.append(row)
    return rows
