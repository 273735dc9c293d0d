"""Synthetic ground-truth generators.

Two datasets with known spatially varying canonical structure. Both
draw, at each location, a single zero-mean Gaussian vector whose joint
covariance has identity diagonal blocks and a rank-2 cross block built
from fixed orthonormal direction matrices and two prescribed local
correlation fields:

* dataset 1: n random locations on the unit square; the first
  correlation rises linearly along the first coordinate, the second is
  a localized Gaussian bump.
* dataset 2: an s x s regular grid; the first correlation is a bounded
  tanh transform of a standardized Gaussian random field (squared
  exponential covariance), the second a diagonal linear gradient.

Because the direction matrices are orthonormal, the singular values of
the cross block are exactly the two prescribed correlations, so the
exact (unsampled) covariance provides a sampling-free oracle for the
whole estimation pipeline.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import SpatialDataset
from .errors import CapacityError, ParameterError, ValidityError

GRF_JITTER = 1e-8
GRF_MAX_POINTS = 10_000


@dataclass(frozen=True)
class SynthParams1:
    n: int = 2000
    p: int = 5
    q: int = 5
    rho1_slope: float = 0.65
    rho1_intercept: float = 0.30
    bump_base: float = 0.20
    bump_amp: float = 0.60
    bump_center: tuple[float, float] = (0.5, 0.5)
    bump_sigma: float = 0.22
    jitter: float = 1e-6
    rho_cap: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.p < 2 or self.q < 2:
            raise ParameterError("p and q must be at least 2")
        if self.n <= self.p + self.q:
            raise ParameterError("n must exceed p + q")
        if not 0 < self.bump_base:
            raise ParameterError("bump_base must be positive")
        if not self.bump_base + self.bump_amp < 1:
            raise ParameterError("bump_base + bump_amp must stay below 1")
        if not 0 < self.rho_cap < 1:
            raise ParameterError("rho_cap must lie in (0, 1)")
        if not self.bump_sigma > 0:
            raise ParameterError("bump_sigma must be positive")
        if self.jitter < 0:
            raise ParameterError("jitter must be nonnegative")


@dataclass(frozen=True)
class SynthParams2:
    grid_size: int = 60
    p: int = 5
    q: int = 5
    length_scale: float = 0.2
    marginal_sigma: float = 1.0
    tanh_alpha: float = 1.0
    rho_base: float = 0.20
    rho_amp: float = 0.45
    jitter: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.p < 2 or self.q < 2:
            raise ParameterError("p and q must be at least 2")
        if self.grid_size < 2:
            raise ParameterError("grid_size must be at least 2")
        if not self.length_scale > 0:
            raise ParameterError("length_scale must be positive")
        if not self.marginal_sigma > 0:
            raise ParameterError("marginal_sigma must be positive")
        if not 0 < self.rho_base:
            raise ParameterError("rho_base must be positive")
        if not self.rho_base + self.rho_amp < 1:
            raise ParameterError("rho_base + rho_amp must stay below 1")
        if self.jitter < 0:
            raise ParameterError("jitter must be nonnegative")


@dataclass
class SyntheticTruth:
    """Prescribed per-location correlation fields and the fixed global
    direction matrices (orthonormal columns)."""

    rho1_field: np.ndarray
    rho2_field: np.ndarray
    a0: np.ndarray
    b0: np.ndarray


def make_directions(p: int, q: int, seed, components: int = 2):
    """Fixed orthonormal direction matrices (p x components, q x components),
    deterministic per seed."""
    if p < components or q < components:
        raise ParameterError(
            f"p and q must be at least {components} to host {components} directions"
        )
    rng = np.random.default_rng(seed)
    out = []
    for dim in (p, q):
        g = rng.standard_normal((dim, components))
        qmat, rmat = np.linalg.qr(g)
        signs = np.sign(np.diag(rmat))
        signs[signs == 0] = 1.0
        out.append(qmat * signs)
    return out[0], out[1]


def cross_cov(a0, b0, rho1: float, rho2: float) -> np.ndarray:
    """Rank-2 cross-covariance with singular values exactly (rho1, rho2)."""
    for value in (rho1, rho2):
        if not 0 <= value < 1:
            raise ValidityError(f"correlations must lie in [0, 1), got {value}")
    a0 = np.asarray(a0, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    return (a0 * np.array([rho1, rho2])) @ b0.T


def joint_covariance(a0, b0, rho1: float, rho2: float, jitter: float = 0.0):
    """Joint (p+q) covariance: identity diagonal blocks, rank-2 cross
    block, plus ``jitter`` times the identity."""
    cross = cross_cov(a0, b0, rho1, rho2)
    p, q = cross.shape
    cov = np.eye(p + q) * (1.0 + jitter)
    cov[:p, p:] = cross
    cov[p:, :p] = cross.T
    return cov


def sample_location(joint_cov, p: int, rng):
    """One zero-mean draw from the joint covariance, split into the
    p-vector x and the remaining y part. Uses a Cholesky factor."""
    cov = np.asarray(joint_cov, dtype=float)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValidityError(
            "joint covariance is not positive definite even after jitter"
        ) from exc
    z = rng.standard_normal(cov.shape[0])
    v = chol @ z
    return v[:p], v[p:]


def sample_grf(coords, length_scale: float, sigma: float, seed) -> np.ndarray:
    """Zero-mean Gaussian random field with squared exponential
    covariance sigma^2 exp(-||d||^2 / (2 l^2)), realized by a dense
    Cholesky factorization of the full covariance (small fixed diagonal
    jitter added)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise ParameterError("coords must be a nonempty (m, d) array")
    if not length_scale > 0:
        raise ParameterError("length_scale must be positive")
    m = coords.shape[0]
    if m > GRF_MAX_POINTS:
        raise CapacityError(
            f"{m} grid points exceed the dense-factorization limit "
            f"({GRF_MAX_POINTS}); use a coarser grid"
        )
    sq = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    cov = sigma * sigma * np.exp(-sq / (2.0 * length_scale * length_scale))
    cov[np.diag_indices_from(cov)] += GRF_JITTER
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    return chol @ rng.standard_normal(m)


def _sample_block(a0, b0, rho_fields, jitter, rng):
    """Vectorized per-location draws for a whole dataset.

    ``rho_fields`` holds one per-location correlation field per
    direction column. Builds the (n, p+q, p+q) covariance stack, factors
    it with the batched Cholesky, and applies one factor per location to
    a single stream of standard normals (deterministic per rng state).
    """
    p = a0.shape[0]
    q = b0.shape[0]
    n = rho_fields[0].shape[0]
    cross = np.zeros((n, p, q))
    for col, field in enumerate(rho_fields):
        cross += field[:, None, None] * np.outer(a0[:, col], b0[:, col])
    cov = np.zeros((n, p + q, p + q))
    idx = np.arange(p + q)
    cov[:, idx, idx] = 1.0 + jitter
    cov[:, :p, p:] = cross
    cov[:, p:, :p] = np.swapaxes(cross, 1, 2)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValidityError(
            "per-location joint covariance is not positive definite; "
            "check the correlation fields and jitter"
        ) from exc
    z = rng.standard_normal((n, p + q))
    draws = np.einsum("nij,nj->ni", chol, z)
    return draws[:, :p], draws[:, p:]


def _validate_fields(rho1, rho2):
    for name, field in (("rho1", rho1), ("rho2", rho2)):
        if np.any(field <= 0) or np.any(field >= 1):
            raise ValidityError(
                f"{name} field leaves (0, 1); the joint covariance would "
                "lose positive definiteness"
            )


def generate_dataset1(params: SynthParams1):
    """Random locations on the unit square; linear-trend first
    correlation (capped), Gaussian-bump second. Returns the dataset and
    its ground truth."""
    ss = np.random.SeedSequence(params.seed)
    dir_seed, coord_seed, noise_seed = ss.spawn(3)
    a0, b0 = make_directions(params.p, params.q, dir_seed)
    rng_coords = np.random.default_rng(coord_seed)
    coords = rng_coords.random((params.n, 2))
    i, j = coords[:, 0], coords[:, 1]
    rho1 = np.minimum(
        params.rho1_slope * i + params.rho1_intercept, params.rho_cap
    )
    c1, c2 = params.bump_center
    rho2 = params.bump_base + params.bump_amp * np.exp(
        -((i - c1) ** 2 + (j - c2) ** 2) / (2.0 * params.bump_sigma**2)
    )
    rho2 = np.minimum(rho2, params.rho_cap)
    _validate_fields(rho1, rho2)
    x, y = _sample_block(
        a0, b0, (rho1, rho2), params.jitter, np.random.default_rng(noise_seed)
    )
    dataset = SpatialDataset(
        ids=[str(k) for k in range(params.n)], coords=coords, X=x, Y=y
    )
    truth = SyntheticTruth(rho1_field=rho1, rho2_field=rho2, a0=a0, b0=b0)
    return dataset, truth


def generate_dataset2(params: SynthParams2):
    """Regular grid on the unit square; tanh-transformed random-field
    first correlation, diagonal-gradient second."""
    ss = np.random.SeedSequence(params.seed)
    dir_seed, grf_seed, noise_seed = ss.spawn(3)
    a0, b0 = make_directions(params.p, params.q, dir_seed)
    s = params.grid_size
    axis = np.linspace(0.0, 1.0, s)
    gi, gj = np.meshgrid(axis, axis, indexing="ij")
    coords = np.column_stack([gi.ravel(), gj.ravel()])
    z = sample_grf(coords, params.length_scale, params.marginal_sigma, grf_seed)
    z_std = (z - z.mean()) / z.std()
    rho1 = 0.5 + 0.4 * np.tanh(params.tanh_alpha * z_std)
    rho2 = params.rho_base + params.rho_amp * (coords[:, 0] + coords[:, 1]) / 2.0
    _validate_fields(rho1, rho2)
    x, y = _sample_block(
        a0, b0, (rho1, rho2), params.jitter, np.random.default_rng(noise_seed)
    )
    dataset = SpatialDataset(
        ids=[str(k) for k in range(s * s)], coords=coords, X=x, Y=y
    )
    truth = SyntheticTruth(rho1_field=rho1, rho2_field=rho2, a0=a0, b0=b0)
    return dataset, truth
