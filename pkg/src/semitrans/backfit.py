"""Smooth backfitting of additive local-constant regressions.

The estimator works on a fixed grid of ``G`` points per covariate. With
kernel weights ``W_a[g, i] = K_h((x_ag - X_ai))``, marginal densities
``p_a = W_a 1 / n`` and pairwise densities ``p_ab = W_a W_b' / n``, each
sweep updates (Gauss-Seidel over coordinates)::

    m_a(g) <- mNW_a(g) - c0 - sum_{b != a} int m_b(u) p_ab(g, u) / p_a(g) du

with the integral taken by the trapezoid rule on the grid of ``b``. After
each update the component is shifted so that its average over the sample
points (read off by linear interpolation) is zero.

The update is linear in the response, so several responses can be fitted
at once by passing a two-dimensional ``z`` of shape ``(n, k)``; all of
them share the kernel weights and are iterated together.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceWarning, EmptyData, SingularDensity
from .kernels import QUARTIC, KernelSpec

GRID_SIZE = 50
TOL = 1e-6
MAX_ITER = 50
# densities at or below this fraction of their maximum count as zero
_DENSITY_EPS = 1e-12


@dataclass(frozen=True)
class Bandwidths:
    """Per-coordinate bandwidths ``h``; ``h0`` records the base constant(s)."""

    h: tuple[float, ...]
    h0: tuple[float, ...] | None = None

    def __post_init__(self):
        h = tuple(float(v) for v in np.atleast_1d(self.h))
        if not h or not all(np.isfinite(v) and v > 0 for v in h):
            raise ValueError(f"bandwidths must be positive and finite, got {h}")
        object.__setattr__(self, "h", h)
        if self.h0 is not None:
            object.__setattr__(self, "h0", tuple(float(v) for v in np.atleast_1d(self.h0)))

    @classmethod
    def from_h0(cls, h0, n: int, d: int) -> Bandwidths:
        """``h_a = h0_a * n**(-1/5)``; a scalar ``h0`` is shared by all coordinates."""
        h0 = np.broadcast_to(np.asarray(h0, dtype=float), (d,))
        return cls(tuple(h0 * n ** (-0.2)), tuple(h0))

    @property
    def d(self) -> int:
        return len(self.h)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.h)


@dataclass
class AdditiveFit:
    """Constant plus one tabulated component per covariate."""

    c0: float
    grids: np.ndarray  # (d, G)
    values: np.ndarray  # (d, G)
    bandwidths: Bandwidths | None = None
    iterations: int = 0
    update_norm: float = 0.0
    converged: bool = True
    singular_points: int = 0

    @property
    def d(self) -> int:
        return self.grids.shape[0]

    @property
    def components(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.grids[a], self.values[a]) for a in range(self.d)]

    def component(self, a: int, x) -> np.ndarray:
        """Linearly interpolated component ``a`` (clamped to its grid)."""
        return np.interp(x, self.grids[a], self.values[a])

    def predict(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.d:
            raise ValueError(f"expected {self.d} covariates, got {x.shape[1]}")
        out = np.full(x.shape[0], float(self.c0))
        for a in range(self.d):
            out += self.component(a, x[:, a])
        return float(out[0]) if single else out

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "update_norm": self.update_norm,
            "converged": self.converged,
            "singular_points": self.singular_points,
        }


def predict(fit: AdditiveFit, x):
    return fit.predict(x)


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    dx = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def _interp_weights(grid: np.ndarray, x: np.ndarray):
    """Left index and right fraction of ``x`` on ``grid`` (clamped)."""
    G = grid.size
    x = np.clip(x, grid[0], grid[-1])
    idx = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, G - 2)
    frac = (x - grid[idx]) / (grid[idx + 1] - grid[idx])
    return idx, frac


def _nearest_valid(valid: np.ndarray) -> np.ndarray:
    """Index of the nearest valid point along the last axis (lower index on ties)."""
    G = valid.shape[-1]
    pos = np.arange(G)
    dist = np.abs(pos[:, None] - pos[None, :]).astype(float)  # (g, k)
    dist = np.where(valid[..., None, :], dist, np.inf)
    return np.argmin(dist, axis=-1)


@dataclass
class BackfitDesign:
    """Kernel quantities that depend only on the covariates and bandwidths."""

    X: np.ndarray
    bandwidths: Bandwidths
    kernel: KernelSpec
    grids: np.ndarray  # (d, G)
    tw: np.ndarray  # trapezoid weights (d, G)
    W: np.ndarray  # scaled kernel weights (d, G, n)
    dens: np.ndarray  # marginal densities (d, G)
    joint: np.ndarray  # pairwise densities (d, d, G, G); diagonal blocks unused
    valid: np.ndarray  # (d, G)
    nearest: np.ndarray  # (d, G)
    idx: np.ndarray  # interpolation left indices of the sample points (d, n)
    frac: np.ndarray  # (d, n)
    center: np.ndarray  # empirical centering weights (d, G)
    proj: np.ndarray = field(repr=False, default=None)  # (d, d, G, G)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def G(self) -> int:
        return self.grids.shape[1]

    def interp_matrix(self, a: int) -> np.ndarray:
        """(n, G) matrix mapping grid values of component ``a`` to the sample points."""
        n, G = self.n, self.G
        M = np.zeros((n, G))
        rows = np.arange(n)
        M[rows, self.idx[a]] = 1.0 - self.frac[a]
        M[rows, self.idx[a] + 1] += self.frac[a]
        return M

    def at_samples(self, values: np.ndarray) -> np.ndarray:
        """Sum of interpolated components at the sample points.

        ``values`` has shape (d, G) or (d, G, k); the result (n,) or (n, k).
        """
        out = 0.0
        for a in range(self.d):
            i, f = self.idx[a], self.frac[a]
            va = values[a]
            if va.ndim == 2:
                f = f[:, None]
            out = out + va[i] * (1.0 - f) + va[i + 1] * f
        return out


def make_design(
    X,
    bandwidths: Bandwidths,
    kernel: KernelSpec = QUARTIC,
    grid_size: int = GRID_SIZE,
    grids: np.ndarray | None = None,
) -> BackfitDesign:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n == 0:
        raise EmptyData("no observations")
    if bandwidths.d != d:
        raise ValueError(f"{bandwidths.d} bandwidths for {d} covariates")
    if grids is None:
        lo, hi = X.min(axis=0), X.max(axis=0)
        if np.any(hi <= lo):
            raise EmptyData("a covariate has no spread; cannot build its grid")
        grids = np.linspace(lo, hi, grid_size).T
    grids = np.asarray(grids, dtype=float)
    G = grids.shape[1]
    h = bandwidths.as_array()

    tw = np.stack([trapezoid_weights(g) for g in grids])
    W = kernel((grids[:, :, None] - X.T[:, None, :]) / h[:, None, None]) / h[:, None, None]
    dens = W.sum(axis=2) / n
    valid = dens > _DENSITY_EPS * dens.max(axis=1, keepdims=True)
    if not valid.any(axis=1).all():
        raise EmptyData("bandwidth too small: a covariate grid carries no kernel mass")
    nearest = _nearest_valid(valid)
    joint = np.einsum("agi,bki->abgk", W, W) / n

    idx = np.empty((d, n), dtype=int)
    frac = np.empty((d, n))
    center = np.zeros((d, G))
    for a in range(d):
        idx[a], frac[a] = _interp_weights(grids[a], X[:, a])
        np.add.at(center[a], idx[a], 1.0 - frac[a])
        np.add.at(center[a], idx[a] + 1, frac[a])
    center /= n

    safe = np.where(valid, dens, 1.0)
    proj = joint * tw[None, :, None, :] / safe[:, None, :, None]
    return BackfitDesign(X, bandwidths, kernel, grids, tw, W, dens, joint, valid,
                         nearest, idx, frac, center, proj)


def _nw_grid(design: BackfitDesign, Z: np.ndarray) -> np.ndarray:
    """Nadaraya-Watson smooths of every column of Z on every grid: (d, G, k)."""
    num = np.einsum("agi,ik->agk", design.W, Z)
    den = np.where(design.valid, design.dens * design.n, 1.0)
    return num / den[:, :, None]


def backfit_arrays(design: BackfitDesign, Z, tol: float = TOL, max_iter: int = MAX_ITER):
    """Run the smooth-backfitting iteration for the columns of ``Z``.

    Returns ``(c0, values, iterations, update_norm)`` with ``c0`` of shape
    (k,) and ``values`` of shape (d, G, k).
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != design.n:
        raise ValueError("response length does not match covariates")
    d = design.d
    c0 = Z.mean(axis=0)
    target = _nw_grid(design, Z) - c0[None, None, :]
    m = np.zeros_like(target)
    rows = np.arange(design.G)
    norm = np.inf
    it = 0
    while it < max_iter:
        it += 1
        norm = 0.0
        for a in range(d):
            t = target[a].copy()
            for b in range(d):
                if b != a:
                    t -= design.proj[a, b] @ m[b]
            bad = ~design.valid[a]
            if bad.any():
                t[rows[bad]] = t[design.nearest[a, bad]]
            t -= design.center[a] @ t
            norm = max(norm, float(np.max(np.abs(t - m[a]))) if t.size else 0.0)
            m[a] = t
        if not np.isfinite(norm):
            break
        if norm < tol:
            break
    return c0, m, it, norm


def smooth_backfit(
    X,
    z,
    h: Bandwidths,
    kernel: KernelSpec = QUARTIC,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    grid_size: int = GRID_SIZE,
    grids: np.ndarray | None = None,
) -> AdditiveFit:
    """Fit ``z ~ c0 + sum_a m_a(X_a)`` by smooth backfitting."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    design = make_design(X, h, kernel, grid_size, grids)
    return fit_from_design(design, z, tol, max_iter)


def fit_from_design(design: BackfitDesign, z, tol: float = TOL, max_iter: int = MAX_ITER) -> AdditiveFit:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be one-dimensional; use backfit_arrays for several responses")
    c0, m, it, norm = backfit_arrays(design, z, tol, max_iter)
    return _wrap(design, c0[0], m[:, :, 0], it, norm, tol)


def _wrap(design, c0, values, it, norm, tol) -> AdditiveFit:
    converged = bool(norm < tol)
    n_singular = int((~design.valid).sum())
    if not converged:
        warnings.warn(
            f"smooth backfitting stopped after {it} sweeps (update norm {norm:.3g})",
            ConvergenceWarning,
            stacklevel=3,
        )
    if n_singular:
        warnings.warn(
            f"{n_singular} grid points with zero density took nearest valid values",
            SingularDensity,
            stacklevel=3,
        )
    return AdditiveFit(
        c0=float(c0),
        grids=design.grids.copy(),
        values=np.array(values, dtype=float),
        bandwidths=design.bandwidths,
        iterations=it,
        update_norm=float(norm),
        converged=converged,
        singular_points=n_singular,
    )


def fits_from_arrays(design: BackfitDesign, c0, values, it, norm, tol=TOL) -> list[AdditiveFit]:
    """Split a batched result into one quiet AdditiveFit per column."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for j in range(values.shape[2]):
            out.append(_wrap(design, c0[j], values[:, :, j], it, norm, tol))
    return out


# ---------------------------------------------------------------------------
# Direct solution of the fixed point (used by leave-one-out CV and as an
# independent check of the iteration)
# ---------------------------------------------------------------------------

def bordered_system(dens, joint, center, tw):
    """Linear system whose solution is the centered backfitting fixed point.

    Arguments carry a leading batch axis: ``dens`` (B, d, G), ``joint``
    (B, d, d, G, G), ``center`` (B, d, G); ``tw`` is (d, G). Unknowns are
    the d*G grid values followed by d centering constants. Returns the
    matrices (B, D, D) and the validity mask (B, d, G).
    """
    B, d, G = dens.shape
    D0 = d * G
    D = D0 + d
    valid = dens > _DENSITY_EPS * dens.max(axis=2, keepdims=True)
    nearest = np.broadcast_to(np.arange(G), (B, d, G)).copy()
    holes = ~valid.all(axis=(1, 2))
    if holes.any():
        nearest[holes] = _nearest_valid(valid[holes])
    safe = np.where(valid, dens, 1.0)
    A = np.zeros((B, D, D))
    eye = np.eye(G)
    for a in range(d):
        ra = slice(a * G, (a + 1) * G)
        va = valid[:, a, :, None]
        A[:, ra, ra] = eye
        if holes.any():
            # invalid rows: m_a(g) - m_a(nearest(g)) = 0
            inval = eye[None] - eye[nearest[holes, a]]
            A[holes, ra, ra] = np.where(va[holes], eye[None], inval)
        for b in range(d):
            if b == a:
                continue
            rb = slice(b * G, (b + 1) * G)
            P = joint[:, a, b] * tw[b][None, None, :] / safe[:, a, :, None]
            A[:, ra, rb] = np.where(va, P, 0.0)
        A[:, ra, D0 + a] = np.where(valid[:, a], 1.0, 0.0)
        A[:, D0 + a, ra] = center[:, a]
    return A, valid


def backfit_direct(design: BackfitDesign, Z):
    """Exact fixed point of the backfitting iteration for the columns of Z."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    d, G = design.d, design.G
    A, valid = bordered_system(design.dens[None], design.joint[None], design.center[None], design.tw)
    c0 = Z.mean(axis=0)
    rhs = (_nw_grid(design, Z) - c0) * valid[0][:, :, None]
    rhs = np.concatenate([rhs.reshape(d * G, -1), np.zeros((d, Z.shape[1]))])
    sol = np.linalg.solve(A[0], rhs)
    return c0, sol[: d * G].reshape(d, G, -1)
