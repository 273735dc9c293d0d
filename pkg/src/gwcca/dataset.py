"""Spatial dataset container: planar coordinates plus two variable blocks."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass
class SpatialDataset:
    """Aligned observations: ``coords`` (n x 2, projected planar units),
    an X block (n x p) and a Y block (n x q).

    Rows must be complete; ingestion drops incomplete rows before this
    container is built. Requires n > p + q so that covariance blocks can
    be estimated at all.
    """

    ids: list[str]
    coords: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    x_names: list[str] = field(default_factory=list)
    y_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise InputError("X and Y must be 2-d arrays")
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise InputError("coords must be an (n, 2) array")
        n = self.coords.shape[0]
        if not (len(self.ids) == self.X.shape[0] == self.Y.shape[0] == n):
            raise InputError("ids, coords, X and Y must have the same row count")
        if self.p < 1 or self.q < 1:
            raise InputError("X and Y must each have at least one column")
        if n <= self.p + self.q:
            raise InputError(
                f"need more observations than variables: n={n}, p+q={self.p + self.q}"
            )
        for name, block in (("coords", self.coords), ("X", self.X), ("Y", self.Y)):
            if not np.all(np.isfinite(block)):
                raise InputError(f"{name} contains non-finite values")
        if not self.x_names:
            self.x_names = [f"X{j + 1}" for j in range(self.p)]
        if not self.y_names:
            self.y_names = [f"Y{j + 1}" for j in range(self.q)]
        if len(self.x_names) != self.p or len(self.y_names) != self.q:
            raise InputError("variable name lists must match block widths")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]
