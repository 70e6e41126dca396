"""Profile-likelihood (PL) and independence-distance (MD) estimators of theta.

Both estimators profile out the additive regression: for every theta on a
grid the transformed response ``Lambda_theta(Y)`` is smooth-backfitted on
``X`` and the residuals are scored.

* PL maximizes ``sum_i log f_eps(eps_i) + log Lambda'_theta(Y_i)`` with a
  kernel density ``f_eps`` of the residuals (Silverman bandwidth recomputed
  at every theta).
* MD minimizes ``Q_n = mean_i [F_{X,eps}(X_i, eps_i) - F_X(X_i) F_eps(eps_i)]^2``,
  the squared distance between the joint empirical CDF of covariates and
  residuals and the product of its marginals, averaged over the sample.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backfit import (
    MAX_ITER,
    TOL,
    AdditiveFit,
    Bandwidths,
    backfit_arrays,
    fits_from_arrays,
    make_design,
)
from .cv import candidate_grid, cv_scores, pick
from .dataset import Dataset
from .density import DENSITY_FLOOR, ResidualSet, is_degenerate, kde, residuals, silverman_g
from .errors import AllCellsFailed, DegenerateData, DomainError, ParameterError, RangeError
from .kernels import QUARTIC, KernelSpec
from .transforms import TransformFamily

# cell-level failures that skip a grid point instead of aborting the search
CELL_ERRORS = (DomainError, RangeError, ParameterError, DegenerateData, FloatingPointError)


class Method(str, enum.Enum):
    PL = "pl"
    MD = "md"

    @classmethod
    def from_token(cls, token) -> Method:
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).strip().lower())
        except ValueError:
            raise ValueError(f"unknown method {token!r}") from None

    @property
    def sense(self) -> str:
        return "max" if self is Method.PL else "min"


@dataclass(frozen=True)
class ThetaGrid:
    lo: float = -0.5
    hi: float = 1.5
    step: float = 0.0625

    def __post_init__(self):
        if not (self.lo < self.hi) or not (self.step > 0):
            raise ValueError(f"invalid grid lo={self.lo}, hi={self.hi}, step={self.step}")

    def values(self) -> np.ndarray:
        k = math.floor((self.hi - self.lo) / self.step + 1e-9)
        return np.round(self.lo + self.step * np.arange(k + 1), 12)

    def __len__(self):
        return self.values().size


@dataclass(frozen=True)
class BandwidthPolicy:
    """How smoothing bandwidths are chosen at each theta.

    ``fixed``: ``h_a = h0_a n^(-1/5)`` with ``h0_a`` from ``h_per_coord`` if
    given, else ``h0`` for every coordinate. ``cv``: leave-one-out CV over
    the product grid of ``cv_grid`` h0 values, redone at every theta.
    """

    kind: str = "fixed"
    h0: float = 0.5
    h_per_coord: tuple[float, ...] | None = None
    cv_grid: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5)
    per_coordinate: bool = True

    def __post_init__(self):
        if self.kind not in ("fixed", "cv"):
            raise ValueError(f"unknown bandwidth policy {self.kind!r}")

    @classmethod
    def fixed(cls, h0) -> BandwidthPolicy:
        if np.ndim(h0):
            return cls("fixed", h_per_coord=tuple(float(v) for v in h0))
        return cls("fixed", h0=float(h0))

    @classmethod
    def cv(cls, grid=(0.2, 0.3, 0.4, 0.5), per_coordinate: bool = True) -> BandwidthPolicy:
        return cls("cv", cv_grid=tuple(float(v) for v in grid), per_coordinate=per_coordinate)

    @property
    def label(self) -> str:
        if self.kind == "cv":
            return "cv"
        if self.h_per_coord is not None:
            return "/".join(f"{v:g}" for v in self.h_per_coord)
        return f"{self.h0:g}"

    def bandwidths(self, n: int, d: int) -> Bandwidths:
        if self.kind != "fixed":
            raise ValueError("cv policy has no fixed bandwidth")
        h0 = self.h_per_coord if self.h_per_coord is not None else self.h0
        if self.h_per_coord is not None and len(self.h_per_coord) != d:
            raise ValueError(f"h_per_coord has {len(self.h_per_coord)} entries for {d} covariates")
        return Bandwidths.from_h0(h0, n, d)

    def candidates(self, n: int, d: int) -> list[Bandwidths]:
        return candidate_grid(self.cv_grid, n, d, self.per_coordinate)


@dataclass
class EstimationResult:
    theta_hat: float
    method: Method
    curve: list[tuple[float, float]]
    fit_at_theta_hat: AdditiveFit
    residuals: ResidualSet
    diagnostics: dict = field(default_factory=dict)

    def curve_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.curve:
            return np.empty(0), np.empty(0)
        t, v = zip(*self.curve)
        return np.array(t), np.array(v)

    def to_dict(self) -> dict:
        fit = self.fit_at_theta_hat
        return {
            "theta_hat": float(self.theta_hat),
            "method": self.method.value,
            "curve": [[float(t), float(v)] for t, v in self.curve],
            "fit": {
                "c0": fit.c0,
                "bandwidths": list(fit.bandwidths.h) if fit.bandwidths else None,
                "grids": fit.grids.tolist(),
                "components": fit.values.tolist(),
            },
            "residuals": self.residuals.eps.tolist(),
            "g": self.residuals.g,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# MD criterion
# ---------------------------------------------------------------------------

def _below(points: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """(m, n) indicators obs_j <= points_i componentwise."""
    points = np.asarray(points, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if obs.ndim == 1:
        obs = obs[:, None]
    return np.all(obs[None, :, :] <= points[:, None, :], axis=2)


def md_process_at(x_obs, eps_obs, x_eval, e_eval) -> np.ndarray:
    """Independence process ``F_{X,eps} - F_X F_eps`` of the sample (x_obs, eps_obs),
    evaluated at each point ``(x_eval_i, e_eval_i)``."""
    A = _below(x_eval, x_obs)
    B = np.asarray(e_eval, dtype=float)[:, None] >= np.asarray(eps_obs, dtype=float)[None, :]
    n = A.shape[1]
    joint = np.count_nonzero(A & B, axis=1) / n
    return joint - (np.count_nonzero(A, axis=1) / n) * (np.count_nonzero(B, axis=1) / n)


def md_process(data: Dataset, eps, x, e) -> float:
    """Independence process of (X, eps) at a single point ``(x, e)``."""
    eps = eps.eps if isinstance(eps, ResidualSet) else np.asarray(eps, dtype=float)
    if eps.size != data.n:
        raise ValueError("residual vector length does not match the data")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(md_process_at(data.x, eps, x[None, :], np.array([e]))[0])


def md_criterion(x, eps) -> np.ndarray | float:
    """``Q_n`` for one residual vector (n,) or a batch of columns (n, k)."""
    eps = np.asarray(eps, dtype=float)
    A = _below(x, x).astype(float)  # (i, j): X_j <= X_i
    fx = A.mean(axis=1)
    single = eps.ndim == 1
    E = eps[:, None] if single else eps
    n, k = E.shape
    out = np.empty(k)
    for c in range(k):
        B = (E[None, :, c] <= E[:, None, c]).astype(float)  # (i, j): eps_j <= eps_i
        joint = np.einsum("ij,ij->i", A, B) / n
        G = joint - fx * B.mean(axis=1)
        out[c] = np.mean(G * G)
    return float(out[0]) if single else out


def md_objective(data: Dataset, family, theta: float, fit: AdditiveFit) -> float:
    r = residuals(data, family, theta, fit)
    return md_criterion(data.x, r.eps)


# ---------------------------------------------------------------------------
# PL criterion
# ---------------------------------------------------------------------------

def pl_criterion(eps, log_jacobian, kernel: KernelSpec = QUARTIC, g: float | None = None):
    """Profile log-likelihood and bookkeeping: ``(value, g, n_floored)``."""
    eps = np.asarray(eps, dtype=float)
    if g is None:
        g = silverman_g(eps)
    f = kde(eps, g, eps, kernel)
    floored = int(np.count_nonzero(f < DENSITY_FLOOR))
    ll = np.log(np.maximum(f, DENSITY_FLOOR)).sum() + float(np.sum(log_jacobian))
    return float(ll), float(g), floored


def pl_objective(data: Dataset, family, theta: float, fit: AdditiveFit,
                 kernel: KernelSpec = QUARTIC, g: float | None = None) -> float:
    fam = TransformFamily.from_token(family)
    r = residuals(data, fam, theta, fit)
    return pl_criterion(r.eps, fam.log_dy(theta, data.y), kernel, g)[0]


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

def select(thetas, values, sense: str) -> int:
    """Index of the optimum among finite values; ties go to the smallest theta."""
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    if not ok.any():
        raise AllCellsFailed("no grid cell evaluated to a finite value")
    v = np.where(ok, values, np.inf if sense == "min" else -np.inf)
    best = v.min() if sense == "min" else v.max()
    cand = np.flatnonzero(v == best)
    return int(cand[np.argmin(thetas[cand])])


def grid_search(objective: Callable[[float], float], grid: ThetaGrid, sense: str = "min"):
    """Optimize ``objective`` over the grid; returns ``(theta_hat, curve)``.

    Cells raising a domain-type error are left out of the curve.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    curve = []
    for t in grid.values():
        try:
            v = float(objective(float(t)))
        except CELL_ERRORS:
            continue
        if np.isfinite(v):
            curve.append((float(t), v))
    if not curve:
        raise AllCellsFailed("every grid cell failed")
    ts, vs = zip(*curve)
    return ts[select(ts, vs, sense)], curve


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

@dataclass
class ProfileFits:
    """Backfits of ``Lambda_theta(Y)`` on ``X`` for every feasible grid theta."""

    thetas: np.ndarray  # feasible thetas
    Z: np.ndarray  # (n, k) transformed responses
    fitted: np.ndarray  # (n, k) fitted values at the sample points
    bandwidths: list[Bandwidths]
    iterations: list[int]
    skipped: dict[float, str]
    batches: list = field(default_factory=list, repr=False)  # (design, cols, c0, m, it, norm)
    cv: np.ndarray | None = None

    @property
    def eps(self) -> np.ndarray:
        return self.Z - self.fitted

    def fit_at(self, j: int, tol: float = TOL) -> AdditiveFit:
        for design, cols, c0, m, it, norm in self.batches:
            if j in cols:
                pos = cols.index(j)
                return fits_from_arrays(design, c0[pos:pos + 1], m[:, :, pos:pos + 1], it, norm, tol)[0]
        raise KeyError(j)


def transformed_responses(data: Dataset, family: TransformFamily, thetas):
    cols, ok, skipped = [], [], {}
    for t in thetas:
        try:
            z = np.asarray(family.forward(float(t), data.y), dtype=float)
            if not np.all(np.isfinite(z)):
                raise DomainError("non-finite transformed response")
        except CELL_ERRORS as exc:
            skipped[float(t)] = f"{type(exc).__name__}: {exc}"
            continue
        cols.append(z)
        ok.append(float(t))
    Z = np.column_stack(cols) if cols else np.empty((data.n, 0))
    return np.array(ok), Z, skipped


def profile_fits(data: Dataset, family, thetas, policy: BandwidthPolicy,
                 kernel: KernelSpec = QUARTIC, tol: float = TOL, max_iter: int = MAX_ITER) -> ProfileFits:
    fam = TransformFamily.from_token(family)
    ok, Z, skipped = transformed_responses(data, fam, thetas)
    k = Z.shape[1]
    n, d = data.n, data.d
    if k == 0:
        return ProfileFits(ok, Z, Z.copy(), [], [], skipped)

    cv = None
    if policy.kind == "fixed":
        h = policy.bandwidths(n, d)
        groups = {h: list(range(k))}
        chosen = [h] * k
    else:
        cands = policy.candidates(n, d)
        cv = cv_scores(data.x, Z, cands, kernel)
        chosen = []
        for j in range(k):
            chosen.append(cands[pick(cv[:, j], cands, float(np.mean(Z[:, j] ** 2)))])
        groups = {}
        for j, h in enumerate(chosen):
            groups.setdefault(h, []).append(j)

    fitted = np.empty_like(Z)
    iters = [0] * k
    batches = []
    for h, cols in groups.items():
        design = make_design(data.x, h, kernel)
        c0, m, it, norm = backfit_arrays(design, Z[:, cols], tol, max_iter)
        fitted[:, cols] = c0[None, :] + design.at_samples(m)
        for j in cols:
            iters[j] = it
        batches.append((design, cols, c0, m, it, norm))
    return ProfileFits(ok, Z, fitted, chosen, iters, skipped, batches, cv)


def fit(
    data: Dataset,
    family="boxcox",
    method="md",
    grid: ThetaGrid | None = None,
    policy: BandwidthPolicy | None = None,
    kernel: KernelSpec = QUARTIC,
    g: float | None = None,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
) -> EstimationResult:
    """Estimate theta by grid search of the PL or MD criterion."""
    fam = TransformFamily.from_token(family)
    method = Method.from_token(method)
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()
    kernel = KernelSpec.from_token(kernel)
    if fam.requires_positive and not np.all(data.y > 0):
        raise DomainError(f"{fam.name} needs y > 0")

    pf = profile_fits(data, fam, grid.values(), policy, kernel, tol, max_iter)
    eps = pf.eps
    k = pf.thetas.size
    values = np.full(k, np.nan)
    gs = [None] * k
    floored = [0] * k
    skipped = dict(pf.skipped)

    if method is Method.MD and k:
        values = md_criterion(data.x, eps)
    else:
        for j, t in enumerate(pf.thetas):
            try:
                ljac = fam.log_dy(t, data.y)
                values[j], gs[j], floored[j] = pl_criterion(eps[:, j], ljac, kernel, g)
            except CELL_ERRORS as exc:
                skipped[float(t)] = f"{type(exc).__name__}: {exc}"

    finite = np.isfinite(values)
    degenerate = False
    if finite.any():
        j_hat = select(pf.thetas, values, method.sense)
    elif k and all(v.startswith("DegenerateData") for t, v in skipped.items() if t in set(pf.thetas)):
        # residuals without spread at every theta: the data are fitted exactly
        j_hat = 0
        degenerate = True
    else:
        raise AllCellsFailed(f"all {len(grid)} grid cells failed for {method.value}")

    theta_hat = float(pf.thetas[j_hat])
    fit_hat = pf.fit_at(j_hat, tol)
    res = ResidualSet(eps[:, j_hat].copy(), theta_hat, gs[j_hat])
    curve = [(float(t), float(v)) for t, v in zip(pf.thetas, values) if np.isfinite(v)]
    diagnostics = {
        "family": fam.name,
        "kernel": kernel.name,
        "policy": policy.kind,
        "n": data.n,
        "grid": [grid.lo, grid.hi, grid.step],
        "skipped": {repr(t): reason for t, reason in sorted(skipped.items())},
        "backfit_iterations": {repr(float(t)): it for t, it in zip(pf.thetas, pf.iterations)},
        "bandwidths": {repr(float(t)): list(h.h) for t, h in zip(pf.thetas, pf.bandwidths)},
        "bandwidth_at_theta_hat": list(pf.bandwidths[j_hat].h),
        "backfit_converged": fit_hat.converged,
        "degenerate": bool(degenerate or is_degenerate(res.eps)),
    }
    if method is Method.PL:
        diagnostics["density_floor"] = DENSITY_FLOOR
        diagnostics["floored_points"] = int(floored[j_hat])
        diagnostics["floored_points_total"] = int(sum(floored))
        diagnostics["g_at_theta_hat"] = gs[j_hat]
    return EstimationResult(theta_hat, method, curve, fit_hat, res, diagnostics)
