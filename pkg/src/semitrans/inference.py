"""Pairs bootstrap for the transformation parameter.

For MD the bootstrap criterion is recentered at the original estimate: on
each resample, theta*_b minimizes over the grid

    mean_i [G*(theta)(P_i) - G(theta_hat)(P_i)]^2

where ``G*`` is the independence process of the resample with residuals
from a refit at ``theta``, ``G(theta_hat)`` the process of the original
sample at the original estimate, and ``P_i`` the evaluation points. By
default these are the resample's own points ``(X*_i, eps*_i(theta))``;
``recenter="original"`` uses the original ``(X_i, eps_i(theta_hat))`` instead.

Replicate ``b`` draws its indices from the ``b``-th child of
``SeedSequence(seed)``, so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import AllCellsFailed, BootstrapDegenerate, EmptyData
from .estimators import (
    BandwidthPolicy,
    EstimationResult,
    Method,
    ThetaGrid,
    _below,
    fit,
    profile_fits,
    select,
)
from .kernels import QUARTIC, KernelSpec
from .transforms import TransformFamily


@dataclass
class BootstrapResult:
    replicates: np.ndarray
    se: float | None
    ci: tuple[float, float] | None
    failures: int
    B: int
    level: float
    method: str
    theta_hat: float
    experimental: bool = False
    recenter: str | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "theta_hat": self.theta_hat,
            "B": self.B,
            "level": self.level,
            "se": self.se,
            "ci": list(self.ci) if self.ci is not None else None,
            "failures": self.failures,
            "experimental": self.experimental,
            "recenter": self.recenter,
            "seed": self.seed,
            "replicates": [float(v) for v in self.replicates],
        }


def _seed_sequence(rng) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator.seed_seq
    return np.random.SeedSequence(rng)


def replicate_streams(rng, B: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in _seed_sequence(rng).spawn(B)]


def resample_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise EmptyData("cannot resample an empty dataset")
    return rng.integers(0, n, size=n)


def resample(data: Dataset, rng) -> Dataset:
    """Draw ``n`` pairs uniformly with replacement."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return data.take(resample_indices(data.n, rng))


def _process(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[1]
    return (np.count_nonzero(A & B, axis=1) / n
            - (np.count_nonzero(A, axis=1) / n) * (np.count_nonzero(B, axis=1) / n))


def md_bootstrap_curve(data: Dataset, idx, original: EstimationResult, family="boxcox",
                       grid: ThetaGrid | None = None, policy: BandwidthPolicy | None = None,
                       kernel: KernelSpec = QUARTIC, recenter: str = "bootstrap"):
    """Recentered bootstrap criterion over the grid for the resample ``data[idx]``.

    Returns ``(thetas, values)`` for the feasible grid points.
    """
    if recenter not in ("bootstrap", "original"):
        raise ValueError("recenter must be 'bootstrap' or 'original'")
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()
    fam = TransformFamily.from_token(family)
    boot = data.take(idx)
    pf = profile_fits(boot, fam, grid.values(), policy, kernel)
    eps_b = pf.eps
    eps_o = original.residuals.eps
    X, Xb = data.x, boot.x

    if recenter == "bootstrap":
        A_b = _below(Xb, Xb)
        A_o = _below(Xb, X)
    else:
        A_b = _below(X, Xb)
        A_o = _below(X, X)
        G_o = _process(A_o, eps_o[None, :] <= eps_o[:, None])

    vals = np.empty(pf.thetas.size)
    for j in range(pf.thetas.size):
        e = eps_b[:, j]
        if recenter == "bootstrap":
            G_b = _process(A_b, e[None, :] <= e[:, None])
            G_o = _process(A_o, eps_o[None, :] <= e[:, None])
        else:
            G_b = _process(A_b, e[None, :] <= eps_o[:, None])
        diff = G_b - G_o
        vals[j] = np.mean(diff * diff)
    return pf.thetas, vals


def _summarize(reps, failures, B, level, **kw) -> BootstrapResult:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if failures == B:
        raise BootstrapDegenerate(f"all {B} bootstrap replicates failed")
    reps = np.asarray(reps, dtype=float)
    se = float(np.std(reps, ddof=1)) if reps.size > 1 else None
    a = 1.0 - level
    lo, hi = np.quantile(reps, [a / 2, 1 - a / 2])
    return BootstrapResult(reps, se, (float(lo), float(hi)), failures, B, level, **kw)


def bootstrap_md(data: Dataset, family="boxcox", grid: ThetaGrid | None = None,
                 policy: BandwidthPolicy | None = None, B: int = 200, level: float = 0.95,
                 rng=0, kernel: KernelSpec = QUARTIC, original: EstimationResult | None = None,
                 recenter: str = "bootstrap") -> BootstrapResult:
    """Recentered pairs bootstrap of the MD estimator."""
    if B < 1:
        raise ValueError("B must be >= 1")
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()
    fam = TransformFamily.from_token(family)
    if original is None:
        original = fit(data, fam, Method.MD, grid, policy, kernel)
    elif original.method is not Method.MD:
        raise ValueError("recentering needs an MD fit")
    reps, failures = [], 0
    for stream in replicate_streams(rng, B):
        idx = resample_indices(data.n, stream)
        try:
            thetas, vals = md_bootstrap_curve(data, idx, original, fam, grid, policy, kernel, recenter)
            reps.append(float(thetas[select(thetas, vals, "min")]))
        except AllCellsFailed:
            failures += 1
    return _summarize(reps, failures, B, level, method="md", theta_hat=original.theta_hat,
                      recenter=recenter, seed=rng if isinstance(rng, int) else None)


def bootstrap_pl_naive(data: Dataset, family="boxcox", grid: ThetaGrid | None = None,
                       policy: BandwidthPolicy | None = None, B: int = 100, level: float = 0.95,
                       rng=0, kernel: KernelSpec = QUARTIC) -> BootstrapResult:
    """Uncentered pairs bootstrap of the PL estimator (experimental)."""
    if B < 1:
        raise ValueError("B must be >= 1")
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()
    fam = TransformFamily.from_token(family)
    original = fit(data, fam, Method.PL, grid, policy, kernel)
    reps, failures = [], 0
    for stream in replicate_streams(rng, B):
        boot = data.take(resample_indices(data.n, stream))
        try:
            reps.append(fit(boot, fam, Method.PL, grid, policy, kernel).theta_hat)
        except AllCellsFailed:
            failures += 1
    return _summarize(reps, failures, B, level, method="pl", theta_hat=original.theta_hat,
                      experimental=True, seed=rng if isinstance(rng, int) else None)
