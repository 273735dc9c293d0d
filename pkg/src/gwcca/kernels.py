"""Spatial kernel weighting: pairwise distances, bandwidths, weight vectors.

All distances are planar Euclidean; coordinates must be projected.
Five kernel families are supported. The compact-support families
(boxcar, bisquare, tricube) are exactly zero beyond the bandwidth;
gaussian and exponential are positive everywhere. Every family equals 1
at distance zero and is nonincreasing in distance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError

FAMILIES = ("gaussian", "exponential", "boxcar", "bisquare", "tricube")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth rule.

    Exactly one of ``adaptive_k`` (the bandwidth is the distance to the
    k-th nearest neighbor, counting the target itself as the first) and
    ``fixed_bandwidth`` (a distance in coordinate units) must be set.
    """

    family: str = "gaussian"
    adaptive_k: int | None = None
    fixed_bandwidth: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(
                f"unknown kernel family {self.family!r}; choose one of {FAMILIES}"
            )
        if (self.adaptive_k is None) == (self.fixed_bandwidth is None):
            raise ParameterError("set exactly one of adaptive_k and fixed_bandwidth")
        if self.adaptive_k is not None and (
            int(self.adaptive_k) != self.adaptive_k or self.adaptive_k < 1
        ):
            raise ParameterError("adaptive_k must be a positive integer")
        if self.fixed_bandwidth is not None and not self.fixed_bandwidth > 0:
            raise ParameterError("fixed_bandwidth must be > 0")

    @property
    def adaptive(self) -> bool:
        return self.adaptive_k is not None


@dataclass
class WeightVector:
    """Per-target kernel weights over all n observations.

    ``weights[target_index]`` is the kernel value at distance zero (1 for
    every family); compact-support families are exactly 0 beyond
    ``bandwidth_used``.
    """

    target_index: int
    weights: np.ndarray
    bandwidth_used: float


def pairwise_distances(coords) -> np.ndarray:
    """Full symmetric Euclidean distance matrix with an exactly-zero diagonal.

    Parameters
    ----------
    coords : (n, 2) array of finite planar coordinates, n >= 2.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise InputError("coords must be an (n, 2) array")
    if coords.shape[0] < 2:
        raise InputError("need at least two locations")
    if not np.all(np.isfinite(coords)):
        raise InputError("coords contain non-finite values")
    dx = coords[:, 0][:, None] - coords[:, 0][None, :]
    dy = coords[:, 1][:, None] - coords[:, 1][None, :]
    d = np.sqrt(dx * dx + dy * dy)
    np.fill_diagonal(d, 0.0)
    return d


def adaptive_bandwidth(distances_from_target, k: int) -> float:
    """Distance to the k-th nearest neighbor, the target itself counting
    as the first (distance 0).

    Invariant under permutation of the input sequence. ``k = 1`` returns
    0 for the self-distance; downstream weighting rejects a zero
    bandwidth.
    """
    d = np.asarray(distances_from_target, dtype=float)
    if d.ndim != 1:
        raise InputError("distances_from_target must be one-dimensional")
    if int(k) != k or not 1 <= k <= d.shape[0]:
        raise ParameterError(f"k must be an integer in [1, {d.shape[0]}], got {k}")
    k = int(k)
    return float(np.partition(d, k - 1)[k - 1])


def kernel_weight(spec: KernelSpec, d, r: float):
    """Evaluate the kernel of ``spec.family`` at distance(s) ``d`` with
    bandwidth ``r``.

    Accepts scalar or array distances and returns the matching shape.
    Values lie in [0, 1] and are nonincreasing in ``d``.
    """
    if not r > 0:
        raise ParameterError(f"bandwidth must be > 0, got {r}")
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise InputError("distances must be nonnegative")
    u = d_arr / r
    family = spec.family
    if family == "gaussian":
        w = np.exp(-0.5 * u * u)
    elif family == "exponential":
        w = np.exp(-u)
    elif family == "boxcar":
        w = (u <= 1.0).astype(float)
    elif family == "bisquare":
        w = np.where(u <= 1.0, (1.0 - u * u) ** 2, 0.0)
    else:  # tricube
        w = np.where(u <= 1.0, (1.0 - u**3) ** 3, 0.0)
    if np.isscalar(d) or d_arr.ndim == 0:
        return float(w)
    return w


def weight_vector(
    coords, target_index: int, spec: KernelSpec, distances_from_target=None
) -> WeightVector:
    """Resolve the bandwidth at one target and weight every observation,
    the target itself included.

    ``distances_from_target`` may pass a precomputed row of the distance
    matrix; otherwise distances are computed from ``coords``.
    """
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    if not 0 <= target_index < n:
        raise InputError(f"target_index {target_index} out of range for n={n}")
    if distances_from_target is None:
        delta = coords - coords[target_index]
        distances_from_target = np.hypot(delta[:, 0], delta[:, 1])
    d = np.asarray(distances_from_target, dtype=float)
    if spec.adaptive:
        if spec.adaptive_k > n:
            raise ParameterError(f"adaptive_k={spec.adaptive_k} exceeds n={n}")
        r = adaptive_bandwidth(d, spec.adaptive_k)
    else:
        r = float(spec.fixed_bandwidth)
    w = kernel_weight(spec, d, r)
    return WeightVector(target_index=int(target_index), weights=w, bandwidth_used=r)
