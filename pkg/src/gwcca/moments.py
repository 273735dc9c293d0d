"""Geographically weighted moments.

Weighted means, standard deviations, covariances and correlations for a
single target location, plus the three local covariance blocks used by
the local canonical correlation solve. All statistics normalize by the
total weight mass (no degrees-of-freedom correction) and center at the
weighted mean, so every output is invariant to a common positive
rescaling of the weights.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNeighborhoodError,
    DegenerateVarianceError,
    InputError,
)
from .kernels import WeightVector

# Below this total mass a neighborhood is treated as empty rather than
# letting the normalization produce NaN.
WEIGHT_MASS_FLOOR = 1e-12


@dataclass
class LocalCovariances:
    """Local covariance blocks at one target: X-X (p x p), Y-Y (q x q)
    and X-Y (p x q), all centered at the local weighted means."""

    sigma_xx: np.ndarray
    sigma_yy: np.ndarray
    sigma_xy: np.ndarray
    weight_mass: float
    target_index: int = -1


def _weights(w) -> np.ndarray:
    arr = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if np.any(arr < 0):
        raise InputError("weights must be nonnegative")
    return np.asarray(arr, dtype=float)


def _mass(w: np.ndarray) -> float:
    mass = float(w.sum())
    if not mass > WEIGHT_MASS_FLOOR:
        raise DegenerateNeighborhoodError(
            f"total weight mass {mass:g} is effectively zero"
        )
    return mass


def gw_mean(x, w) -> float:
    """Weighted mean sum(w_j x_j) / sum(w_j)."""
    x = np.asarray(x, dtype=float)
    wa = _weights(w)
    if x.shape != wa.shape:
        raise InputError("x and weights must have the same length")
    return float(wa @ x) / _mass(wa)


def gw_std(x, w) -> float:
    """Weighted standard deviation about the weighted mean (mass-normalized)."""
    x = np.asarray(x, dtype=float)
    wa = _weights(w)
    if x.shape != wa.shape:
        raise InputError("x and weights must have the same length")
    mass = _mass(wa)
    dev = x - (wa @ x) / mass
    var = float(wa @ (dev * dev)) / mass
    return float(np.sqrt(max(var, 0.0)))


def gw_cov(x, y, w) -> float:
    """Weighted covariance of x and y, each centered at its own weighted mean."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    wa = _weights(w)
    if x.shape != wa.shape or y.shape != wa.shape:
        raise InputError("x, y and weights must have the same length")
    mass = _mass(wa)
    dx = x - (wa @ x) / mass
    dy = y - (wa @ y) / mass
    return float(wa @ (dx * dy)) / mass


def gw_corr(x, y, w) -> float:
    """Weighted correlation, clamped to [-1, 1] against round-off."""
    sx = gw_std(x, w)
    sy = gw_std(y, w)
    if not sx > 0:
        raise DegenerateVarianceError("variable 'x' has zero local variance")
    if not sy > 0:
        raise DegenerateVarianceError("variable 'y' has zero local variance")
    r = gw_cov(x, y, w) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


def gw_cov_matrices(X, Y, w) -> LocalCovariances:
    """Local covariance blocks of X (n x p) and Y (n x q) under weights w.

    Columns are centered at their weighted means and the blocks are
    normalized by the weight mass; the diagonal blocks are symmetrized
    so the positive-semidefinite structure survives round-off. Requires
    at least p + q + 2 strictly positive weights.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    wa = _weights(w)
    if X.ndim != 2 or Y.ndim != 2:
        raise InputError("X and Y must be 2-d arrays")
    n, p = X.shape
    q = Y.shape[1]
    if Y.shape[0] != n or wa.shape[0] != n:
        raise InputError("X, Y and weights must have the same row count")
    target = w.target_index if isinstance(w, WeightVector) else -1
    n_pos = int(np.count_nonzero(wa > 0))
    if n_pos < p + q + 2:
        raise DegenerateNeighborhoodError(
            f"only {n_pos} strictly positive weights; need at least {p + q + 2}"
            + (f" (target {target})" if target >= 0 else "")
        )
    mass = _mass(wa)
    mx = (wa @ X) / mass
    my = (wa @ Y) / mass
    Xc = X - mx
    Yc = Y - my
    Xw = Xc * wa[:, None]
    sxx = (Xw.T @ Xc) / mass
    syy = ((Yc * wa[:, None]).T @ Yc) / mass
    sxy = (Xw.T @ Yc) / mass
    sxx = 0.5 * (sxx + sxx.T)
    syy = 0.5 * (syy + syy.T)
    return LocalCovariances(
        sigma_xx=sxx,
        sigma_yy=syy,
        sigma_xy=sxy,
        weight_mass=mass,
        target_index=target,
    )
