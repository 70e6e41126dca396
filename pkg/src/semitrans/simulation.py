"""Simulation design, Monte Carlo harness and least-squares-type baselines.

Data follow a Box-Cox model with an additive quadratic and sine signal::

    Lambda_theta_o(Y) = b0 + b1 X1^2 + b2 sin(pi X2) + sigma * e

with ``X ~ U[-0.5, 0.5]^2``, ``e`` standard normal truncated to [-3, 3]
and ``b0 = 3 sigma + b2``, which keeps the right-hand side nonnegative.

Seeding: replicate ``r`` of model ``m`` at ``theta_o`` and sample size
``n`` uses ``SeedSequence(seed, spawn_key=(m, round(1e4 * (theta_o + 10)), n, r))``.
Every method and bandwidth policy therefore sees the same datasets.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import AllCellsFailed
from .estimators import (
    CELL_ERRORS,
    BandwidthPolicy,
    Method,
    ThetaGrid,
    fit,
    profile_fits,
    select,
)
from .kernels import QUARTIC, KernelSpec
from .transforms import Family, TransformFamily

log = logging.getLogger(__name__)

# (b1, b2, sigma)
MODELS = {
    1: (5.0, 2.0, 1.5),
    2: (3.5, 1.5, 1.0),
    3: (2.5, 1.0, 0.5),
}

BOXCOX = TransformFamily(Family.BOXCOX)


@dataclass(frozen=True)
class DgpSpec:
    model: int = 1
    theta_o: float = 0.5
    n: int = 100
    seed: int = 0
    sigma: float | None = None  # overrides the model's error scale (e.g. 0 for noiseless data)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model}")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        """(b0, b1, b2, sigma)."""
        b1, b2, sigma = MODELS[self.model]
        # b0 keeps its model value even when sigma is overridden
        b0 = 3.0 * sigma + b2
        if self.sigma is not None:
            sigma = self.sigma
        return b0, b1, b2, sigma


def truncated_normal(rng: np.random.Generator, n: int, bound: float = 3.0) -> np.ndarray:
    """Standard normal draws restricted to [-bound, bound] by rejection."""
    out = np.empty(0)
    while out.size < n:
        draw = rng.standard_normal(int((n - out.size) * 1.01) + 8)
        out = np.concatenate([out, draw[np.abs(draw) <= bound]])
    return out[:n]


def generate(spec: DgpSpec, rng: np.random.Generator | None = None, return_parts: bool = False):
    """Draw one dataset; ``rng`` defaults to ``default_rng(spec.seed)``."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    b0, b1, b2, sigma = spec.coefficients
    n = spec.n
    X = rng.uniform(-0.5, 0.5, size=(n, 2))
    e = truncated_normal(rng, n)
    Z = b0 + b1 * X[:, 0] ** 2 + b2 * np.sin(np.pi * X[:, 1]) + sigma * e
    # Z >= 0 by construction, so the inverse exists for theta_o >= 0
    Y = BOXCOX.inverse(spec.theta_o, Z)
    data = Dataset(Y, X, ["x1", "x2"])
    if return_parts:
        return data, Z, e
    return data


def replicate_rng(seed: int, model: int, theta_o: float, n: int, rep: int) -> np.random.Generator:
    key = (int(model), int(round(1e4 * (theta_o + 10.0))), int(n), int(rep))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class CellStats:
    mean: float | None
    sd: float | None
    mse: float | None
    reps: int
    failures: int = 0
    estimates: list[float] = field(default_factory=list)

    @classmethod
    def from_estimates(cls, estimates, theta_o: float, failures: int = 0) -> CellStats:
        est = np.asarray(estimates, dtype=float)
        if est.size == 0:
            return cls(None, None, None, 0, failures, [])
        mean = float(est.mean())
        sd = float(est.std(ddof=1)) if est.size > 1 else None
        mse = float(np.mean((est - theta_o) ** 2))
        return cls(mean, sd, mse, int(est.size), failures, est.tolist())


CellKey = tuple  # (model, theta_o, bandwidth label, method, n)


@dataclass
class McReport:
    cells: dict = field(default_factory=dict)  # CellKey -> CellStats
    reps: int = 0
    elapsed: float = 0.0
    seed: int = 0

    def cell(self, model, theta_o, bandwidth, method, n) -> CellStats:
        return self.cells[(int(model), float(theta_o), str(bandwidth), str(method), int(n))]

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "elapsed": self.elapsed,
            "seed": self.seed,
            "cells": [
                {
                    "model": k[0], "theta_o": k[1], "bandwidth": k[2], "method": k[3], "n": k[4],
                    "mean": c.mean, "sd": c.sd, "mse": c.mse, "reps_ok": c.reps,
                    "failures": c.failures, "estimates": c.estimates,
                }
                for k, c in self.cells.items()
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> McReport:
        cells = {}
        for c in doc["cells"]:
            key = (int(c["model"]), float(c["theta_o"]), str(c["bandwidth"]), str(c["method"]), int(c["n"]))
            cells[key] = CellStats(c["mean"], c["sd"], c["mse"], int(c["reps_ok"]),
                                   int(c.get("failures", 0)), list(c.get("estimates", [])))
        return cls(cells, int(doc["reps"]), float(doc["elapsed"]), int(doc.get("seed", 0)))

    def summary(self) -> str:
        lines = [f"{'model':>5} {'method':>6} {'h0':>6} {'n':>5} {'theta_o':>8} "
                 f"{'mean':>10} {'sd':>10} {'mse':>10} {'ok':>5}"]
        fmt = lambda v: f"{v:10.6g}" if v is not None else f"{'-':>10}"
        for k in sorted(self.cells, key=lambda k: (k[0], k[3], k[2], k[4], k[1])):
            c = self.cells[k]
            lines.append(f"{k[0]:>5} {k[3]:>6} {k[2]:>6} {k[4]:>5} {k[1]:>8.3g} "
                         f"{fmt(c.mean)} {fmt(c.sd)} {fmt(c.mse)} {c.reps:>5}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# harness
# ---------------------------------------------------------------------------

def _one_replicate(model, theta_o, n, rep, seed, methods, policies, grid, kernel):
    data = generate(DgpSpec(model, theta_o, n, seed), replicate_rng(seed, model, theta_o, n, rep))
    out = {}
    for policy in policies:
        for method in methods:
            try:
                res = fit(data, BOXCOX, method, grid, policy, kernel)
                out[(policy.label, method.value)] = res.theta_hat
            except AllCellsFailed:
                out[(policy.label, method.value)] = None
    return out


def run_mc(
    models=(1,),
    theta_os=(0.0, 0.5, 1.0),
    methods=("md",),
    policies=(BandwidthPolicy.fixed(0.3),),
    n: int = 100,
    reps: int = 500,
    seed: int = 0,
    grid: ThetaGrid | None = None,
    kernel: KernelSpec = QUARTIC,
    n_jobs: int = 1,
    progress: bool = False,
) -> McReport:
    """Monte Carlo over models x theta_o x policies x methods at sample size ``n``."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    grid = grid or ThetaGrid()
    methods = [Method.from_token(m) for m in methods]
    policies = list(policies)
    t0 = time.perf_counter()
    jobs = [(m, t, r) for m in models for t in theta_os for r in range(reps)]

    if n_jobs == 1:
        results = []
        for i, (m, t, r) in enumerate(jobs):
            results.append(_one_replicate(m, t, n, r, seed, methods, policies, grid, kernel))
            if progress and (i + 1) % max(1, reps // 5) == 0:
                log.info("model %s theta_o %s: %d/%d", m, t, r + 1, reps)
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_one_replicate)(m, t, n, r, seed, methods, policies, grid, kernel)
            for m, t, r in jobs
        )

    cells = {}
    for m in models:
        for t in theta_os:
            for policy in policies:
                for method in methods:
                    est = [res[(policy.label, method.value)]
                           for (mm, tt, _), res in zip(jobs, results) if mm == m and tt == t]
                    good = [e for e in est if e is not None]
                    key = (int(m), float(t), policy.label, method.value, int(n))
                    cells[key] = CellStats.from_estimates(good, t, len(est) - len(good))
    return McReport(cells, reps, time.perf_counter() - t0, seed)


def merge_reports(*reports: McReport) -> McReport:
    out = McReport(reps=max(r.reps for r in reports), seed=reports[0].seed)
    for r in reports:
        out.cells.update(r.cells)
        out.elapsed += r.elapsed
    return out


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def _baseline_curve(data, family, grid, policy, kernel, score):
    fam = TransformFamily.from_token(family)
    pf = profile_fits(data, fam, grid.values(), policy, kernel)
    if pf.thetas.size == 0:
        raise AllCellsFailed("every grid cell failed")
    vals = np.full(pf.thetas.size, np.nan)
    for j, t in enumerate(pf.thetas):
        try:
            vals[j] = score(t, pf.Z[:, j], pf.eps[:, j], fam)
        except CELL_ERRORS:
            pass
    return pf.thetas, vals


def baseline_q3(data: Dataset, family="boxcox", grid: ThetaGrid | None = None, instruments=None,
                weight=None, policy: BandwidthPolicy | None = None, kernel: KernelSpec = QUARTIC,
                normalize: bool = False) -> float:
    """Minimizer of the instrumental criterion ``eps' Z W Z' eps``.

    Default instruments are ``[1, X]`` with ``W = I``. With ``normalize`` the
    criterion is divided by the sample variance of the transformed response.
    """
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()
    Zi = np.column_stack([np.ones(data.n), data.x]) if instruments is None else np.asarray(instruments, float)
    if Zi.shape[0] != data.n:
        raise ValueError("instrument matrix must have n rows")
    W = np.eye(Zi.shape[1]) if weight is None else np.asarray(weight, float)

    def score(t, z, eps, fam):
        v = Zi.T @ eps
        q = float(v @ W @ v)
        if normalize:
            q /= float(np.var(z, ddof=1))
        return q

    thetas, vals = _baseline_curve(data, family, grid, policy, kernel, score)
    return float(thetas[select(thetas, vals, "min")])


def baseline_q4(data: Dataset, family="boxcox", grid: ThetaGrid | None = None,
                policy: BandwidthPolicy | None = None, kernel: KernelSpec = QUARTIC) -> float:
    """Maximizer of ``mean log Lambda'_theta(Y) - log(mean eps^2)``."""
    grid = grid or ThetaGrid()
    policy = policy or BandwidthPolicy()

    def score(t, z, eps, fam):
        rss = float(np.mean(eps * eps))
        if not rss > 0:
            return math.nan
        return float(np.mean(fam.log_dy(t, data.y))) - math.log(rss)

    thetas, vals = _baseline_curve(data, family, grid, policy, kernel, score)
    return float(thetas[select(thetas, vals, "max")])
