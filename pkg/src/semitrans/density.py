"""Residuals of the transformed model and their kernel density estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backfit import AdditiveFit
from .dataset import Dataset
from .errors import DegenerateData
from .kernels import QUARTIC, KernelSpec
from .transforms import TransformFamily

#: floor applied to density values before taking logs
DENSITY_FLOOR = 1e-10


@dataclass
class ResidualSet:
    eps: np.ndarray
    theta: float
    g: float | None = None

    def __len__(self):
        return self.eps.size


def residuals(data: Dataset, family, theta: float, fit: AdditiveFit) -> ResidualSet:
    """``Lambda_theta(Y_i) - m(X_i)``, with ``m`` read off the fitted grid tables."""
    fam = TransformFamily.from_token(family)
    z = fam.forward(theta, data.y)
    return ResidualSet(np.asarray(z - fit.predict(data.x), dtype=float), float(theta))


def _spread(eps: np.ndarray) -> tuple[float, float]:
    sd = float(np.std(eps, ddof=1))
    q75, q25 = np.percentile(eps, [75, 25])
    return sd, float(q75 - q25)


def is_degenerate(eps) -> bool:
    """True when the residuals have no usable spread (all equal up to round-off)."""
    eps = np.asarray(eps, dtype=float)
    if eps.size < 2:
        return True
    sd = float(np.std(eps, ddof=1))
    return not sd > 1e-12 * max(1.0, float(np.max(np.abs(eps))))


def silverman_g(eps) -> float:
    """Rule-of-thumb bandwidth ``1.06 min(sd, IQR/1.34) n^(-1/5)``.

    Falls back to the standard deviation when the interquartile range is
    zero (heavily tied residuals).
    """
    eps = np.asarray(eps, dtype=float)
    n = eps.size
    if n < 2:
        raise DegenerateData("need at least two residuals")
    if is_degenerate(eps):
        raise DegenerateData("residuals have zero spread")
    sd, iqr = _spread(eps)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 1.06 * spread * n ** (-0.2)


def kde(eps, g: float, e, kernel: KernelSpec = QUARTIC, floor_for_log: bool = False,
        leave_one_out: bool = False):
    """Kernel density ``(1/(n g)) sum_i K((e - eps_i)/g)`` at the point(s) ``e``.

    With ``leave_one_out`` the points ``e`` must be the residuals themselves
    and each one's own term is dropped (divisor ``n - 1``).
    """
    eps = np.asarray(eps, dtype=float)
    if g <= 0:
        raise ValueError("density bandwidth must be positive")
    e_arr = np.asarray(e, dtype=float)
    n = eps.size
    u = (np.atleast_1d(e_arr)[:, None] - eps[None, :]) / g
    K = kernel(u)
    if leave_one_out:
        if e_arr.shape != eps.shape:
            raise ValueError("leave_one_out evaluates at the residuals themselves")
        np.fill_diagonal(K, 0.0)
        f = K.sum(axis=1) / ((n - 1) * g)
    else:
        f = K.sum(axis=1) / (n * g)
    if floor_for_log:
        f = np.maximum(f, DENSITY_FLOOR)
    return float(f[0]) if e_arr.ndim == 0 else f.reshape(e_arr.shape)
