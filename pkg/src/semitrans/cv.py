"""Leave-one-out cross-validation of smooth-backfitting bandwidths.

Deleting observation ``i`` means removing its kernel weight from every
marginal and pairwise density sum, from the Nadaraya-Watson numerators and
from the centering average, while keeping the full-sample grids. The
resulting fixed point is linear in the response, so for each candidate
bandwidth we build the ``n x n`` matrix ``L`` with ``(L z)_i`` equal to the
deleted-``i`` prediction at ``X_i``. Row ``i`` comes from one adjoint
solve of the deleted-``i`` bordered system, which avoids ``n`` refits.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .backfit import Bandwidths, BackfitDesign, bordered_system, make_design
from .errors import EmptyGrid
from .kernels import QUARTIC, KernelSpec


def loo_matrix(design: BackfitDesign) -> np.ndarray:
    """Matrix of deleted-one predictions: row ``i`` has a zero diagonal entry."""
    n, d, G = design.n, design.d, design.G
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 observations")
    D0 = d * G
    Wt = design.W.transpose(2, 0, 1)  # (n, d, G)
    q = np.zeros((n, d, G))
    rows = np.arange(n)
    for a in range(d):
        q[rows, a, design.idx[a]] = 1.0 - design.frac[a]
        q[rows, a, design.idx[a] + 1] += design.frac[a]

    m = n - 1
    dens = (n * design.dens[None] - Wt) / m
    joint = np.zeros((n, d, d, G, G))
    for a in range(d):
        for b in range(d):
            if a != b:
                joint[:, a, b] = (n * design.joint[a, b][None]
                                  - Wt[:, a, :, None] * Wt[:, b, None, :]) / m
    center = (n * design.center[None] - q) / m
    # guard against tiny negative round-off left by the subtraction
    np.maximum(dens, 0.0, out=dens)

    A, valid = bordered_system(dens, joint, center, design.tw)
    rhs = np.concatenate([q.reshape(n, D0), np.zeros((n, d))], axis=1)
    y = np.linalg.solve(A.transpose(0, 2, 1), rhs[:, :, None])[:, :, 0]

    yv = y[:, :D0].reshape(n, d, G) * valid
    safe = np.where(valid, dens, 1.0) * m
    coef = yv / safe
    L = sum(coef[:, a] @ design.W[a] for a in range(d))
    L += (1.0 - yv.sum(axis=(1, 2)))[:, None] / m
    L[rows, rows] = 0.0
    return L


def cv_scores(X, Z, candidates: Sequence[Bandwidths], kernel: KernelSpec = QUARTIC,
              grid_size: int | None = None) -> np.ndarray:
    """Leave-one-out mean squared prediction error, shape (len(candidates), k)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    out = np.empty((len(candidates), Z.shape[1]))
    kw = {} if grid_size is None else {"grid_size": grid_size}
    for c, h in enumerate(candidates):
        L = loo_matrix(make_design(X, h, kernel, **kw))
        R = Z - L @ Z
        out[c] = np.mean(R * R, axis=0)
    return out


def _lex_key(h: Bandwidths):
    return h.h


def pick(scores: np.ndarray, candidates: Sequence[Bandwidths], scale: float = 0.0) -> int:
    """Index of the minimizing candidate; near-ties go to the lexicographically smallest h."""
    best = np.min(scores)
    tie = scores <= best * (1 + 1e-9) + 1e-20 * scale
    idx = [i for i in range(len(candidates)) if tie[i]]
    return min(idx, key=lambda i: _lex_key(candidates[i]))


def cv_select_bandwidths(X, z, candidate_grid: Iterable[Bandwidths],
                         kernel: KernelSpec = QUARTIC) -> Bandwidths:
    """Bandwidth from ``candidate_grid`` minimizing the leave-one-out criterion."""
    cands = list(candidate_grid)
    if not cands:
        raise EmptyGrid("empty bandwidth candidate grid")
    if len(cands) == 1:
        return cands[0]
    z = np.asarray(z, dtype=float)
    scores = cv_scores(X, z, cands, kernel)[:, 0]
    return cands[pick(scores, cands, float(np.mean(z * z)))]


def candidate_grid(h0_values, n: int, d: int, per_coordinate: bool = True) -> list[Bandwidths]:
    """Candidates ``h0 * n**(-1/5)``: the full product over coordinates, or a shared h0."""
    h0_values = sorted(float(v) for v in h0_values)
    if not h0_values:
        raise EmptyGrid("empty bandwidth candidate grid")
    if per_coordinate:
        combos = itertools.product(h0_values, repeat=d)
    else:
        combos = ((v,) * d for v in h0_values)
    return [Bandwidths.from_h0(np.array(c), n, d) for c in combos]
