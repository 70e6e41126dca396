from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyData


@dataclass
class Dataset:
    """Response ``y`` (n,) and covariates ``x`` (n, d)."""

    y: np.ndarray
    x: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        self.x = x
        if self.y.size == 0:
            raise EmptyData("dataset has no observations")
        if x.shape[0] != self.y.size or x.shape[1] < 1:
            raise ValueError(f"x has shape {x.shape}, expected ({self.y.size}, d>=1)")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(x))):
            raise ValueError("dataset contains missing or non-finite values")
        if not self.names:
            self.names = [f"x{j + 1}" for j in range(x.shape[1])]

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def take(self, idx) -> Dataset:
        return Dataset(self.y[idx], self.x[idx], list(self.names))
