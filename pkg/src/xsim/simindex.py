"""Similarity indexes on pairs of row-aligned representation matrices.

cca / svcca / pwcca return full diagnostics (correlations, weights,
effective ranks); cka and the cosine aggregates return a scalar. All
computation is in f64 regardless of input dtype; whitening for the CCA
family goes through a thin SVD with relative rank truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

INDEX_KINDS = ("cca", "svcca", "pwcca", "cka", "cosine")


@dataclass
class IndexSpec:
    """Configuration of a similarity index."""

    kind: str = "cka"
    svcca_components: int = 20
    pwcca_reference: str = "first_argument"  # or "symmetric_mean"
    rank_tolerance: float = 1e-10
    regularization: float = 0.0

    def __post_init__(self):
        if self.kind not in INDEX_KINDS:
            raise ValidationError(f"unknown index {self.kind!r}")
        if self.svcca_components < 1:
            raise ValidationError("svcca_components must be >= 1")
        if self.pwcca_reference not in ("first_argument", "symmetric_mean"):
            raise ValidationError(f"unknown pwcca reference {self.pwcca_reference!r}")
        if self.rank_tolerance <= 0:
            raise ValidationError("rank_tolerance must be > 0")
        if self.regularization < 0:
            raise ValidationError("regularization must be >= 0")


@dataclass
class CcaResult:
    """Canonical correlations with the weighting that produced the score."""

    correlations: np.ndarray     # rho_i, nonincreasing, in [0, 1]
    weights: np.ndarray          # alpha_i >= 0, sum to 1
    score: float
    effective_rank: tuple[int, int]


def _as_array(x) -> np.ndarray:
    values = getattr(x, "values", x)
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def _check_pair(x: np.ndarray, y: np.ndarray, min_rows: int = 2) -> None:
    if x.shape[0] != y.shape[0]:
        raise ValidationError(
            f"row-count mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < min_rows:
        raise ValidationError(f"need at least {min_rows} rows, got {x.shape[0]}")


def _center(m: np.ndarray) -> np.ndarray:
    return m - m.mean(axis=0)


def _whiten(m: np.ndarray, rank_tolerance: float, regularization: float) -> np.ndarray:
    """Orthonormal (or ridge-damped) basis of a centered view's column space."""
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValidationError("view has zero variance in all columns (rank 0)")
    keep = s > rank_tolerance * s[0]
    u, s = u[:, keep], s[keep]
    if regularization > 0.0:
        u = u * (s / np.sqrt(s * s + regularization))
    return u


def _canonical(x: np.ndarray, y: np.ndarray, spec: IndexSpec):
    """Shared CCA core: whitened bases, correlations, rotation of the x-basis."""
    if x.shape[0] < max(x.shape[1], y.shape[1]):
        warnings.warn(
            f"fewer samples ({x.shape[0]}) than dimensions "
            f"({max(x.shape[1], y.shape[1])}); CCA scores are unreliable",
            stacklevel=3)
    xc, yc = _center(x), _center(y)
    ux = _whiten(xc, spec.rank_tolerance, spec.regularization)
    uy = _whiten(yc, spec.rank_tolerance, spec.regularization)
    a, rho, bt = np.linalg.svd(ux.T @ uy)
    k = min(ux.shape[1], uy.shape[1])
    rho = np.clip(rho[:k], 0.0, 1.0)
    return xc, yc, ux, uy, a[:, :k], bt[:k].T, rho


def cca(x, y, spec: IndexSpec | None = None) -> CcaResult:
    """Mean canonical correlation between two views."""
    spec = spec or IndexSpec(kind="cca")
    x, y = _as_array(x), _as_array(y)
    _check_pair(x, y)
    _, _, ux, uy, _, _, rho = _canonical(x, y, spec)
    weights = np.full(len(rho), 1.0 / len(rho))
    return CcaResult(correlations=rho, weights=weights,
                     score=float(rho.mean()),
                     effective_rank=(ux.shape[1], uy.shape[1]))


def _svd_reduce(m: np.ndarray, k: int, rank_tolerance: float) -> np.ndarray:
    mc = _center(m)
    u, s, _ = np.linalg.svd(mc, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValidationError("view has zero variance in all columns (rank 0)")
    rank = int(np.count_nonzero(s > rank_tolerance * s[0]))
    if k > rank:
        warnings.warn(f"svcca_components {k} exceeds effective rank {rank}; clamping",
                      stacklevel=3)
        k = rank
    return u[:, :k] * s[:k]


def svcca(x, y, spec: IndexSpec | None = None) -> CcaResult:
    """CCA on the top-k singular directions of each view."""
    spec = spec or IndexSpec(kind="svcca")
    x, y = _as_array(x), _as_array(y)
    _check_pair(x, y)
    k = spec.svcca_components
    xr = _svd_reduce(x, k, spec.rank_tolerance)
    yr = _svd_reduce(y, k, spec.rank_tolerance)
    return cca(xr, yr, spec)


def pwcca(x, y, spec: IndexSpec | None = None) -> CcaResult:
    """CCA score with correlations weighted by how much each canonical
    direction accounts for the reference view's data."""
    spec = spec or IndexSpec(kind="pwcca")
    x, y = _as_array(x), _as_array(y)
    _check_pair(x, y)
    xc, yc, ux, uy, a, b, rho = _canonical(x, y, spec)

    def side_weights(basis, rot, centered):
        h = basis @ rot                       # canonical directions, unit columns
        raw = np.abs(h.T @ centered).sum(axis=1)
        total = raw.sum()
        if total <= 0.0:
            return np.full(len(rho), 1.0 / len(rho))
        return raw / total

    wx = side_weights(ux, a, xc)
    if spec.pwcca_reference == "first_argument":
        weights = wx
        score = float(weights @ rho)
    else:
        wy = side_weights(uy, b, yc)
        score = float(0.5 * (wx @ rho + wy @ rho))
        weights = 0.5 * (wx + wy)
    return CcaResult(correlations=rho, weights=weights, score=score,
                     effective_rank=(ux.shape[1], uy.shape[1]))


def cka(x, y) -> float:
    """Linear centered kernel alignment between two views."""
    x, y = _as_array(x), _as_array(y)
    _check_pair(x, y)
    xc, yc = _center(x), _center(y)
    xx = np.linalg.norm(xc.T @ xc)
    yy = np.linalg.norm(yc.T @ yc)
    if xx <= 0.0 or yy <= 0.0:
        raise ValidationError("view has zero variance in all columns (denominator 0)")
    xy = np.linalg.norm(yc.T @ xc)
    return float(xy * xy / (xx * yy))


def _row_normalize(m: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if len(bad):
        raise ValidationError(f"zero-norm row {int(bad[0])} in {name}")
    return m / norms[:, None]


def cosine_parallel(x, y) -> float:
    """Mean cosine between aligned rows."""
    x, y = _as_array(x), _as_array(y)
    _check_pair(x, y, min_rows=1)
    if x.shape[1] != y.shape[1]:
        raise ValidationError(
            f"column mismatch: {x.shape[1]} vs {y.shape[1]}")
    xn = _row_normalize(x, "x")
    yn = _row_normalize(y, "y")
    return float(np.einsum("ij,ij->i", xn, yn).mean())


def derangement(n: int, seed: int) -> np.ndarray:
    """Seeded uniform permutation of range(n) with fixed points removed by
    cycling them among themselves (single leftover fixed point swaps with
    its successor)."""
    if n < 2:
        raise ValidationError("need at least 2 rows to permute off-diagonal")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fixed = np.nonzero(perm == np.arange(n))[0]
    if len(fixed) >= 2:
        perm[fixed] = perm[np.roll(fixed, 1)]
    elif len(fixed) == 1:
        i = int(fixed[0])
        j = (i + 1) % n
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def cosine_permuted(x, y, seed: int = 0) -> float:
    """Mean cosine between rows of x and seeded-permuted rows of y."""
    y = _as_array(y)
    perm = derangement(y.shape[0], seed)
    return cosine_parallel(x, y[perm])


def score(x, y, spec: IndexSpec, seed: int = 0):
    """Dispatch on spec.kind; returns (scalar, CcaResult | None)."""
    if spec.kind == "cca":
        r = cca(x, y, spec)
        return r.score, r
    if spec.kind == "svcca":
        r = svcca(x, y, spec)
        return r.score, r
    if spec.kind == "pwcca":
        r = pwcca(x, y, spec)
        return r.score, r
    if spec.kind == "cka":
        return cka(x, y), None
    return cosine_parallel(x, y), None
