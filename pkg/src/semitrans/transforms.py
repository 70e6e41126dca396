"""Parametric response transformations Lambda_theta(y).

Three families are supported, each strictly increasing in ``y`` on its
admissible domain:

* Box-Cox           ``(y**theta - 1) / theta``, ``log(y)`` at ``theta = 0``, ``y > 0``
* Zellner-Revankar  ``log(y) + theta * y**2``, ``y > 0`` (and ``y < 1/sqrt(-2 theta)``
  when ``theta < 0``, beyond which the map stops increasing)
* arcsinh           ``asinh(theta * y) / theta``, ``y`` at ``theta = 0``, any real ``y``

All functions accept scalars or arrays for ``y``/``z`` and a scalar ``theta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError, RangeError

#: below this |theta| the closed forms are replaced by their theta -> 0 limits
SERIES_SWITCH = 1e-6
#: Box-Cox theta-derivative uses a power series in u = theta*log(y) below this |u|
_BC_SERIES_U = 0.05
#: arcsinh theta-derivative uses a power series in u = theta*y below this |u|
_AS_SERIES_U = 1e-2

DEFAULT_BOUNDS = (-0.5, 1.5)


class Family(str, enum.Enum):
    BOXCOX = "boxcox"
    ZELLNER = "zellner"
    ARCSINH = "arcsinh"


_ALIASES = {
    "boxcox": Family.BOXCOX,
    "box-cox": Family.BOXCOX,
    "zellner": Family.ZELLNER,
    "zellnerrevankar": Family.ZELLNER,
    "zellner-revankar": Family.ZELLNER,
    "arcsinh": Family.ARCSINH,
    "asinh": Family.ARCSINH,
}


@dataclass(frozen=True)
class Theta:
    """Scalar transformation parameter constrained to a closed interval."""

    value: float
    bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        lo, hi = self.bounds
        if not (lo <= self.value <= hi):
            raise ParameterError(f"theta={self.value} outside [{lo}, {hi}]")


def _out(a):
    a = np.asarray(a, dtype=float)
    return a[()] if a.ndim == 0 else a


@dataclass(frozen=True)
class TransformFamily:
    """A transformation family, optionally with bounds on theta.

    ``bounds=None`` accepts any finite theta.
    """

    kind: Family = Family.BOXCOX
    bounds: tuple[float, float] | None = None

    @classmethod
    def from_token(cls, token: str | Family | TransformFamily, bounds=None) -> TransformFamily:
        if isinstance(token, TransformFamily):
            return token
        if isinstance(token, Family):
            return cls(token, bounds)
        key = str(token).strip().lower().replace("_", "")
        try:
            return cls(_ALIASES[key], bounds)
        except KeyError:
            raise ValueError(f"unknown transformation family {token!r}") from None

    @property
    def name(self) -> str:
        return self.kind.value

    # -- validation ---------------------------------------------------------
    def _check_theta(self, theta: float) -> float:
        theta = float(theta)
        if not math.isfinite(theta):
            raise ParameterError(f"theta must be finite, got {theta}")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not (lo <= theta <= hi):
                raise ParameterError(f"theta={theta} outside [{lo}, {hi}]")
        return theta

    @property
    def requires_positive(self) -> bool:
        return self.kind is not Family.ARCSINH

    def upper_domain(self, theta: float) -> float:
        """Supremum of the admissible y values at ``theta``."""
        if self.kind is Family.ZELLNER and theta < 0:
            return 1.0 / math.sqrt(-2.0 * theta)
        return math.inf

    def in_domain(self, theta: float, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind is Family.ARCSINH:
            return np.isfinite(y)
        ok = np.isfinite(y) & (y > 0)
        if self.kind is Family.ZELLNER and theta < 0:
            ok &= y < self.upper_domain(theta)
        return ok

    def _check(self, theta, y):
        theta = self._check_theta(theta)
        y = np.asarray(y, dtype=float)
        ok = self.in_domain(theta, y)
        if not np.all(ok):
            bad = y[~ok] if y.ndim else y
            raise DomainError(
                f"{self.name}: y outside admissible domain at theta={theta} "
                f"(e.g. y={np.ravel(bad)[0]!r})"
            )
        return theta, y

    # -- maps ---------------------------------------------------------------
    def forward(self, theta: float, y):
        """Lambda_theta(y)."""
        theta, y = self._check(theta, y)
        if self.kind is Family.BOXCOX:
            ly = np.log(y)
            if abs(theta) < SERIES_SWITCH:
                # (e^u - 1)/theta with u = theta log y; exact to O(u^3)
                u = theta * ly
                return _out(ly * (1.0 + u / 2.0 + u * u / 6.0))
            # expm1 keeps full precision as theta -> 0
            return _out(np.expm1(theta * ly) / theta)
        if self.kind is Family.ZELLNER:
            return _out(np.log(y) + theta * y * y)
        if abs(theta) < SERIES_SWITCH:
            return _out(y - theta * theta * y**3 / 6.0)
        return _out(np.arcsinh(theta * y) / theta)

    def dy(self, theta: float, y):
        """Derivative of Lambda_theta(y) with respect to y."""
        theta, y = self._check(theta, y)
        if self.kind is Family.BOXCOX:
            return _out(np.exp((theta - 1.0) * np.log(y)))
        if self.kind is Family.ZELLNER:
            return _out(1.0 / y + 2.0 * theta * y)
        return _out(1.0 / np.hypot(1.0, theta * y))

    def log_dy(self, theta: float, y):
        """log of ``dy``, computed without overflow for Box-Cox."""
        theta, y = self._check(theta, y)
        if self.kind is Family.BOXCOX:
            return _out((theta - 1.0) * np.log(y))
        if self.kind is Family.ZELLNER:
            return _out(np.log(1.0 / y + 2.0 * theta * y))
        return _out(-np.log(np.hypot(1.0, theta * y)))

    def dtheta(self, theta: float, y):
        """Derivative of Lambda_theta(y) with respect to theta."""
        theta, y = self._check(theta, y)
        if self.kind is Family.BOXCOX:
            ly = np.log(y)
            u = theta * ly
            return _out(ly * ly * _bc_phi(u))
        if self.kind is Family.ZELLNER:
            return _out(y * y)
        u = theta * y
        return _out(y * y * _as_psi(u))

    def inverse(self, theta: float, z):
        """Solve Lambda_theta(y) = z for y."""
        theta = self._check_theta(theta)
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise RangeError(f"{self.name}: non-finite z")
        if self.kind is Family.BOXCOX:
            if abs(theta) < SERIES_SWITCH:
                # log1p(theta z)/theta to O((theta z)^3)
                return _out(np.exp(z * (1.0 - theta * z / 2.0 + (theta * z) ** 2 / 3.0)))
            arg = theta * z
            if np.any(arg <= -1.0):
                raise RangeError(f"boxcox: 1 + theta*z must be > 0 (theta={theta})")
            return _out(np.exp(np.log1p(arg) / theta))
        if self.kind is Family.ARCSINH:
            if abs(theta) < SERIES_SWITCH:
                # invert y - theta^2 y^3 / 6 to the same order
                return _out(z + theta * theta * z**3 / 6.0)
            return _out(np.sinh(theta * z) / theta)
        return _out(_zellner_inverse(theta, z))


def _bc_phi(u):
    """(u e^u - expm1(u)) / u^2 with its power series near u = 0."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _BC_SERIES_U
    out = np.empty_like(u)
    us = u[small]
    # sum_{k>=2} (k-1)/k! u^(k-2)
    acc = np.zeros_like(us)
    for k in range(12, 1, -1):
        acc = acc * us + (k - 1) / math.factorial(k)
    out[small] = acc
    ub = u[~small]
    out[~small] = (ub * np.exp(ub) - np.expm1(ub)) / (ub * ub)
    return out


def _as_psi(u):
    """(u / sqrt(1 + u^2) - asinh(u)) / u^2 with its power series near u = 0."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _AS_SERIES_U
    out = np.empty_like(u)
    us = u[small]
    u2 = us * us
    out[small] = us * (-1.0 / 3.0 + u2 * (3.0 / 10.0 - u2 * 15.0 / 56.0))
    ub = u[~small]
    out[~small] = (ub / np.hypot(1.0, ub) - np.arcsinh(ub)) / (ub * ub)
    return out


def _zellner_inverse(theta: float, z: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Bracketed Newton in t = log(y) for log(y) + theta*y^2 = z."""
    if theta == 0.0:
        return np.exp(z)
    shape = np.shape(z)
    z = np.atleast_1d(z).astype(float).ravel()

    def h(t, zz):
        return t + theta * np.exp(2.0 * t) - zz

    if theta > 0:
        # h(z) = theta e^{2z} > 0, and y >= 1 forces theta y^2 <= z
        cap = np.where(z > 0, 0.5 * (np.log(np.maximum(z, 1e-300)) - math.log(theta)), 0.0)
        hi = np.minimum(z, np.maximum(cap, 0.0))
    else:
        t_max = -0.5 * math.log(-2.0 * theta)
        z_max = t_max - 0.5
        if np.any(z >= z_max):
            raise RangeError(f"zellner: z must be < {z_max} at theta={theta}")
        hi = np.full_like(z, t_max)
    # grow the lower bracket geometrically until h(lo) < 0
    step = np.ones_like(z)
    lo = np.minimum(z, hi) - step
    for _ in range(max_iter):
        neg = h(lo, z) < 0
        if neg.all():
            break
        step[~neg] *= 2.0
        lo[~neg] = np.minimum(z[~neg], hi[~neg]) - step[~neg]
    else:
        raise ConvergenceError("zellner inverse: could not bracket root")

    t = 0.5 * (lo + hi)
    if theta < 0:
        t = lo.copy()  # concave branch: Newton from the left stays inside
    active = np.ones_like(z, dtype=bool)
    for _ in range(max_iter):
        ta, za = t[active], z[active]
        val = h(ta, za)
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(val < 0, ta, lo_a)
        hi_a = np.where(val > 0, ta, hi_a)
        deriv = 1.0 + 2.0 * theta * np.exp(2.0 * ta)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = ta - val / deriv
        bad = ~np.isfinite(tn) | (tn <= lo_a) | (tn >= hi_a)
        tn = np.where(bad, 0.5 * (lo_a + hi_a), tn)
        y_old, y_new = np.exp(ta), np.exp(tn)
        done = (np.abs(y_new - y_old) <= 1e-12 + 1e-15 * np.abs(y_new)) | (val == 0)
        t[active], lo[active], hi[active] = np.where(val == 0, ta, tn), lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    else:
        raise ConvergenceError("zellner inverse: exceeded max iterations")
    return np.exp(t).reshape(shape)


def _family(family) -> TransformFamily:
    return TransformFamily.from_token(family)


def forward(family, theta, y):
    return _family(family).forward(theta, y)


def inverse(family, theta, z):
    return _family(family).inverse(theta, z)


def dy(family, theta, y):
    return _family(family).dy(theta, y)


def dtheta(family, theta, y):
    return _family(family).dtheta(theta, y)
