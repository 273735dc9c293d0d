"""Accuracy metrics against synthetic ground truth.

The local model is compared with the stationary (global) baseline on
the first two canonical correlation fields. The local estimate at each
location is matched to the truth by descending-correlation rank (both
sides sorted per location, so rank crossings in the truth are handled),
and the baseline's single global value is compared pointwise against
the same true field.
"""

from dataclasses import dataclass

import numpy as np

from .cca import CCASolution, LocalCCAResult
from .errors import InputError
from .synth import SyntheticTruth


@dataclass
class EvalReport:
    """Per-variate errors for the local model and the global baseline."""

    mae_gwcca: np.ndarray
    rmse_gwcca: np.ndarray
    mae_cca: np.ndarray
    rmse_cca: np.ndarray
    n: int
    chosen_bandwidth: float | None = None

    @property
    def variates(self) -> int:
        return len(self.mae_gwcca)

    def rows(self, dataset_label: str = "dataset") -> list[dict]:
        out = []
        for j in range(self.variates):
            for metric, local, baseline in (
                ("MAE", self.mae_gwcca[j], self.mae_cca[j]),
                ("RMSE", self.rmse_gwcca[j], self.rmse_cca[j]),
            ):
                out.append(
                    {
                        "dataset": dataset_label,
                        "variate": j + 1,
                        "metric": metric,
                        "gwcca": float(local),
                        "cca": float(baseline),
                    }
                )
        return out


def _paired(estimates, truth):
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise InputError(
            f"length mismatch: estimates {est.shape} vs truth {tru.shape}"
        )
    if not (np.all(np.isfinite(est)) and np.all(np.isfinite(tru))):
        raise InputError("estimates and truth must be finite")
    return est, tru


def mae(estimates, truth) -> float:
    """Mean absolute error."""
    est, tru = _paired(estimates, truth)
    return float(np.mean(np.abs(est - tru)))


def rmse(estimates, truth) -> float:
    """Root mean square error."""
    est, tru = _paired(estimates, truth)
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def _local_rhos(fit) -> np.ndarray:
    if isinstance(fit, np.ndarray):
        return fit
    if isinstance(fit, (list, tuple)) and fit and isinstance(fit[0], LocalCCAResult):
        return np.stack([r.solution.rho for r in fit])
    rhos = getattr(fit, "rhos", None)
    if rhos is not None:
        return np.asarray(rhos, dtype=float)
    raise InputError("fit must be local results, a fit result, or an (n, psi) array")


def compare_models(
    fit,
    baseline: CCASolution,
    truth: SyntheticTruth,
    chosen_bandwidth: float | None = None,
) -> EvalReport:
    """Errors of the local estimates and of the constant global baseline
    against the two true correlation fields."""
    local = _local_rhos(fit)
    fields = np.column_stack(
        [np.asarray(truth.rho1_field, float), np.asarray(truth.rho2_field, float)]
    )
    n = fields.shape[0]
    if local.shape[0] != n:
        raise InputError(f"fit covers {local.shape[0]} locations, truth has {n}")
    if local.shape[1] < 2 or len(baseline.rho) < 2:
        raise InputError("need at least two estimated variates to compare")
    # Rank-match per location: both estimated and true correlations in
    # descending order before pairing.
    truth_sorted = np.sort(fields, axis=1)[:, ::-1]
    est_sorted = np.sort(local[:, :], axis=1)[:, ::-1][:, :2]

    mae_local = np.empty(2)
    rmse_local = np.empty(2)
    mae_global = np.empty(2)
    rmse_global = np.empty(2)
    for j in range(2):
        mae_local[j] = mae(est_sorted[:, j], truth_sorted[:, j])
        rmse_local[j] = rmse(est_sorted[:, j], truth_sorted[:, j])
        constant = np.full(n, float(baseline.rho[j]))
        mae_global[j] = mae(constant, truth_sorted[:, j])
        rmse_global[j] = rmse(constant, truth_sorted[:, j])
    return EvalReport(
        mae_gwcca=mae_local,
        rmse_gwcca=rmse_local,
        mae_cca=mae_global,
        rmse_cca=rmse_global,
        n=n,
        chosen_bandwidth=chosen_bandwidth,
    )
