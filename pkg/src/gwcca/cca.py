"""Canonical correlation solves from covariance blocks.

The canonical problem is solved by whitening rather than by the
nonsymmetric generalized eigenproblem: factor the two diagonal blocks
via symmetric eigendecomposition, form K = Sxx^{-1/2} Sxy Syy^{-1/2},
and read the canonical correlations off its singular values. This keeps
every correlation real and inside [0, 1], treats the two blocks
symmetrically, and stays stable near collinearity.

Rank-deficient neighborhoods are handled in two layers: eigenvalues of
a whitened block are floored at a small fraction of the largest one
(a pseudo-inverse square root), and when a block's smallest eigenvalue
is negative beyond round-off scale, a ridge is escalated through a
fixed ladder and recorded on the solution.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import SpatialDataset
from .errors import (
    DegenerateNeighborhoodError,
    DegenerateVarianceError,
    InputError,
    NumericalError,
    ParameterError,
)
from .kernels import KernelSpec, pairwise_distances, weight_vector
from .moments import WEIGHT_MASS_FLOOR, LocalCovariances, gw_cov_matrices

# Whitening floor, relative to the largest (ridged) eigenvalue of a block.
EIG_FLOOR_REL = 1e-12
# A block counts as positive definite when its smallest eigenvalue is at
# least this fraction of trace/dimension; otherwise the ridge ladder runs.
PD_TOL_REL = 1e-10
RIDGE_LADDER = (1e-10, 1e-8, 1e-6)


@dataclass
class CCASolution:
    """Canonical correlations and weight vectors.

    ``rho`` is descending in [0, 1]; the weight columns are normalized to
    unit variance against the covariance blocks they were solved from,
    and signed so that the largest-magnitude entry of each concatenated
    (a_j, b_j) pair is positive.
    """

    rho: np.ndarray
    a_weights: np.ndarray
    b_weights: np.ndarray
    psi: int
    regularized: bool = False
    ridge_used: float = 0.0


@dataclass
class LocalCCAResult:
    target_index: int
    bandwidth_used: float
    solution: CCASolution


def _needed_ridge(eigvals: np.ndarray, requested: float, dim: int) -> float:
    """Smallest ladder ridge that lifts the minimum eigenvalue to the
    positive-definiteness tolerance."""
    scale = float(eigvals.sum()) / dim
    if not scale > 0:
        raise NumericalError("covariance block has nonpositive trace")
    tol = PD_TOL_REL * scale
    min_eig = float(eigvals[0])
    if min_eig + requested >= tol:
        return requested
    for level in RIDGE_LADDER:
        ridge = max(requested, level * scale)
        if min_eig + ridge >= tol:
            return ridge
    raise NumericalError(
        f"covariance block indefinite beyond ridge tolerance "
        f"(min eigenvalue {min_eig:g}, scale {scale:g})"
    )


def _inv_sqrt(eigvals: np.ndarray, eigvecs: np.ndarray, ridge: float) -> np.ndarray:
    lam = eigvals + ridge
    floor = EIG_FLOOR_REL * float(lam[-1])
    lam = np.maximum(lam, floor)
    return (eigvecs / np.sqrt(lam)) @ eigvecs.T


def solve_cca(cov: LocalCovariances, ridge: float = 0.0) -> CCASolution:
    """Solve the canonical problem for one set of covariance blocks.

    ``ridge`` is added to both diagonal blocks before whitening; it may
    be escalated automatically (see module docstring) and the final
    value is reported in the solution.
    """
    if ridge < 0:
        raise ParameterError("ridge must be nonnegative")
    sxx = np.asarray(cov.sigma_xx, dtype=float)
    syy = np.asarray(cov.sigma_yy, dtype=float)
    sxy = np.asarray(cov.sigma_xy, dtype=float)
    p = sxx.shape[0]
    q = syy.shape[0]
    if sxx.shape != (p, p) or syy.shape != (q, q) or sxy.shape != (p, q):
        raise InputError("covariance blocks have inconsistent shapes")
    sxx = 0.5 * (sxx + sxx.T)
    syy = 0.5 * (syy + syy.T)

    lam_x, vec_x = np.linalg.eigh(sxx)
    lam_y, vec_y = np.linalg.eigh(syy)
    ridge_used = max(_needed_ridge(lam_x, ridge, p), _needed_ridge(lam_y, ridge, q))
    wx = _inv_sqrt(lam_x, vec_x, ridge_used)
    wy = _inv_sqrt(lam_y, vec_y, ridge_used)

    k = wx @ sxy @ wy
    u, s, vt = np.linalg.svd(k)
    psi = min(p, q)
    rho = np.clip(s[:psi], 0.0, 1.0)
    a = wx @ u[:, :psi]
    b = wy @ vt[:psi].T

    # Unit local variance per weight column, against the unridged blocks.
    na = np.einsum("ij,ij->j", a, sxx @ a)
    nb = np.einsum("ij,ij->j", b, syy @ b)
    with np.errstate(invalid="ignore"):
        a = np.where(na > 0, a / np.sqrt(np.where(na > 0, na, 1.0)), a)
        b = np.where(nb > 0, b / np.sqrt(np.where(nb > 0, nb, 1.0)), b)

    # Deterministic sign: largest-|entry| of each concatenated (a_j, b_j)
    # is positive; ties resolve to the lowest index via argmax.
    stacked = np.vstack([a, b])
    top = np.argmax(np.abs(stacked), axis=0)
    flip = stacked[top, np.arange(psi)] < 0
    a[:, flip] *= -1.0
    b[:, flip] *= -1.0

    return CCASolution(
        rho=rho,
        a_weights=a,
        b_weights=b,
        psi=psi,
        regularized=ridge_used > 0,
        ridge_used=ridge_used,
    )


def global_cca(X, Y, ridge: float = 0.0) -> CCASolution:
    """Ordinary (unweighted) canonical correlation of two blocks.

    Equivalent to the local solve under uniform weights; this is the
    stationary baseline the local model is compared against.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise InputError("X and Y must be 2-d with matching row counts")
    n, p = X.shape
    q = Y.shape[1]
    if n <= p + q:
        raise InputError(f"need n > p + q, got n={n}, p+q={p + q}")
    for label, block in (("X", X), ("Y", Y)):
        stds = block.std(axis=0)
        bad = np.nonzero(stds == 0)[0]
        if bad.size:
            raise DegenerateVarianceError(
                f"{label} column {bad[0]} is constant; cannot run global CCA"
            )
    cov = gw_cov_matrices(X, Y, np.ones(n))
    return solve_cca(cov, ridge)


def local_cca(
    dataset: SpatialDataset,
    target_index: int,
    spec: KernelSpec,
    ridge: float = 0.0,
    distances_from_target=None,
) -> LocalCCAResult:
    """Weight, estimate local covariances and solve at one target location."""
    wv = weight_vector(dataset.coords, target_index, spec, distances_from_target)
    try:
        cov = gw_cov_matrices(dataset.X, dataset.Y, wv)
        solution = solve_cca(cov, ridge)
    except NumericalError as exc:
        raise type(exc)(f"location {target_index}: {exc}") from exc
    return LocalCCAResult(
        target_index=int(target_index),
        bandwidth_used=wv.bandwidth_used,
        solution=solution,
    )


def canonical_scores(X, Y, solution: CCASolution):
    """Canonical variate scores U = Xc a, V = Yc b on column-centered data."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2:
        raise InputError("X and Y must be 2-d arrays")
    if X.shape[1] != solution.a_weights.shape[0]:
        raise InputError(
            f"X has {X.shape[1]} columns but a_weights expects "
            f"{solution.a_weights.shape[0]}"
        )
    if Y.shape[1] != solution.b_weights.shape[0]:
        raise InputError(
            f"Y has {Y.shape[1]} columns but b_weights expects "
            f"{solution.b_weights.shape[0]}"
        )
    u = (X - X.mean(axis=0)) @ solution.a_weights
    v = (Y - Y.mean(axis=0)) @ solution.b_weights
    return u, v


def align_signs_to_neighbors(a, b, coords, distances: np.ndarray | None = None):
    """Optional map-smoothing post-process for stacked local loadings.

    Walks locations in index order and flips each variate's (a_j, b_j)
    pair to agree in direction with the nearest already-aligned
    neighbor; the first location keeps its canonical signs. Flipping
    both vectors of a pair leaves the canonical correlation unchanged.
    Returns new (a, b) stacks.
    """
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    coords = np.asarray(coords, dtype=float)
    n = a.shape[0]
    if distances is None:
        distances = pairwise_distances(coords)
    for i in range(1, n):
        nn = int(np.argmin(distances[i, :i]))
        agree = np.einsum("vc,vc->c", a[i], a[nn]) + np.einsum(
            "vc,vc->c", b[i], b[nn]
        )
        flip = agree < 0
        a[i][:, flip] *= -1.0
        b[i][:, flip] *= -1.0
    return a, b


def _resolve_bandwidths(distances: np.ndarray, spec: KernelSpec) -> np.ndarray:
    n = distances.shape[0]
    if spec.adaptive:
        k = int(spec.adaptive_k)
        if k > n:
            raise ParameterError(f"adaptive_k={k} exceeds n={n}")
        return np.partition(distances, k - 1, axis=1)[:, k - 1]
    return np.full(n, float(spec.fixed_bandwidth))


def _batch_local_covariances(X, Y, weights, masses):
    """All-locations covariance blocks in a handful of matrix products.

    Works on globally centered copies of X and Y (local covariances are
    translation invariant) so the raw-moment identity E[xy] - E[x]E[y]
    stays well conditioned.
    """
    n, p = X.shape
    q = Y.shape[1]
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    mx = (weights @ Xc) / masses[:, None]
    my = (weights @ Yc) / masses[:, None]

    iu = np.triu_indices(p)
    sxx_flat = (weights @ (Xc[:, iu[0]] * Xc[:, iu[1]])) / masses[:, None]
    sxx_flat -= mx[:, iu[0]] * mx[:, iu[1]]
    sxx = np.empty((n, p, p))
    sxx[:, iu[0], iu[1]] = sxx_flat
    sxx[:, iu[1], iu[0]] = sxx_flat

    iv = np.triu_indices(q)
    syy_flat = (weights @ (Yc[:, iv[0]] * Yc[:, iv[1]])) / masses[:, None]
    syy_flat -= my[:, iv[0]] * my[:, iv[1]]
    syy = np.empty((n, q, q))
    syy[:, iv[0], iv[1]] = syy_flat
    syy[:, iv[1], iv[0]] = syy_flat

    cross = (Xc[:, :, None] * Yc[:, None, :]).reshape(n, p * q)
    sxy = (weights @ cross) / masses[:, None]
    sxy = sxy.reshape(n, p, q) - mx[:, :, None] * my[:, None, :]
    return sxx, syy, sxy


def fit_all_locations(
    dataset: SpatialDataset,
    spec: KernelSpec,
    ridge: float = 0.0,
    threads: int = 1,
    distances: np.ndarray | None = None,
) -> list[LocalCCAResult]:
    """Local canonical solve at every observation location.

    Local covariance blocks for all targets are assembled with batched
    matrix products; the per-target eigen solves are then dispatched to
    a thread pool. Results are written into index-ordered slots, so the
    output does not depend on the worker count.
    """
    if distances is None:
        distances = pairwise_distances(dataset.coords)
    n, p, q = dataset.n, dataset.p, dataset.q
    bandwidths = _resolve_bandwidths(distances, spec)
    if np.any(bandwidths <= 0):
        raise ParameterError(
            "resolved bandwidth is zero at some target (adaptive_k=1 or "
            "coincident points); increase the neighbor count"
        )
    # Kernel evaluation for the whole weight matrix at once; each row i
    # uses its own resolved bandwidth.
    u = distances / bandwidths[:, None]
    family = spec.family
    if family == "gaussian":
        weights = np.exp(-0.5 * u * u)
    elif family == "exponential":
        weights = np.exp(-u)
    elif family == "boxcar":
        weights = (u <= 1.0).astype(float)
    elif family == "bisquare":
        weights = np.where(u <= 1.0, (1.0 - u * u) ** 2, 0.0)
    else:
        weights = np.where(u <= 1.0, (1.0 - u**3) ** 3, 0.0)

    pos_counts = np.count_nonzero(weights > 0, axis=1)
    short = np.nonzero(pos_counts < p + q + 2)[0]
    if short.size:
        raise DegenerateNeighborhoodError(
            f"location {short[0]}: only {pos_counts[short[0]]} strictly positive "
            f"weights; need at least {p + q + 2}"
        )
    masses = weights.sum(axis=1)
    if np.any(masses <= WEIGHT_MASS_FLOOR):
        bad = int(np.argmin(masses))
        raise DegenerateNeighborhoodError(
            f"location {bad}: total weight mass {masses[bad]:g} is effectively zero"
        )

    sxx, syy, sxy = _batch_local_covariances(dataset.X, dataset.Y, weights, masses)

    results: list[LocalCCAResult | None] = [None] * n

    def solve_one(i: int) -> None:
        cov = LocalCovariances(
            sigma_xx=sxx[i],
            sigma_yy=syy[i],
            sigma_xy=sxy[i],
            weight_mass=float(masses[i]),
            target_index=i,
        )
        try:
            solution = solve_cca(cov, ridge)
        except NumericalError as exc:
            raise type(exc)(f"location {i}: {exc}") from exc
        results[i] = LocalCCAResult(
            target_index=i,
            bandwidth_used=float(bandwidths[i]),
            solution=solution,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(solve_one, range(n), chunksize=max(1, n // (4 * threads))))
    else:
        for i in range(n):
            solve_one(i)
    return results  # type: ignore[return-value]
