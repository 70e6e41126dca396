"""Scalar smoothing kernels and the one-dimensional local-constant smoother."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyData

_SQRT_2PI = np.sqrt(2.0 * np.pi)


class KernelKind(str, enum.Enum):
    QUARTIC = "quartic"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric probability-density kernel.

    The quartic (biweight) kernel ``15/16 (1 - u^2)^2`` on ``|u| <= 1`` is the
    default; the Gaussian is provided for comparison.
    """

    kind: KernelKind = KernelKind.QUARTIC

    @classmethod
    def from_token(cls, token) -> KernelSpec:
        if isinstance(token, KernelSpec):
            return token
        if isinstance(token, KernelKind):
            return cls(token)
        try:
            return cls(KernelKind(str(token).strip().lower()))
        except ValueError:
            raise ValueError(f"unknown kernel {token!r}") from None

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def compact(self) -> bool:
        return self.kind is KernelKind.QUARTIC

    @property
    def support(self) -> float:
        """Half-width of the support (inf for the Gaussian)."""
        return 1.0 if self.compact else np.inf

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind is KernelKind.QUARTIC:
            w = 1.0 - u * u
            return np.where(np.abs(u) < 1.0, (15.0 / 16.0) * w * w, 0.0)
        return np.exp(-0.5 * u * u) / _SQRT_2PI


QUARTIC = KernelSpec(KernelKind.QUARTIC)
GAUSSIAN = KernelSpec(KernelKind.GAUSSIAN)


def nw_1d(xs, zs, h: float, x0: float, kernel: KernelSpec = QUARTIC) -> float:
    """Nadaraya-Watson estimate of E[z | x = x0].

    Falls back to the ``zs`` value of the nearest ``xs`` point when no
    observation has positive kernel weight at ``x0``.
    """
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if xs.size == 0:
        raise EmptyData("nw_1d needs at least one observation")
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    w = kernel((x0 - xs) / h)
    den = w.sum()
    if den <= 0:
        return float(zs[np.argmin(np.abs(xs - x0))])
    return float(w @ zs / den)
