from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def orthonormal_basis(a: np.ndarray, width: int | None = None) -> tuple[np.ndarray, int]:
    """Orthonormal basis of ``range(a)``, zero-padded to ``width`` columns.

    The rank is decided from the singular values with the usual
    ``max(shape) * eps * s_max`` cutoff.
    """
    n = a.shape[0]
    width = a.shape[1] if width is None else width
    out = np.zeros((n, width))
    if a.shape[1] == 0:
        return out, 0
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    tol = max(a.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    out[:, :rank] = u[:, :rank]
    return out, rank


@dataclass
class ProjectorCache:
    """Bases ``Q_j`` for the span of every column of X but the j-th.

    ``Z^j v = v - Q_j Q_j^T v`` projects onto the orthogonal complement.  When
    the cache is built with an intercept the constant vector ``u_n`` is part
    of each span.  ``full`` is the analogous basis for the whole design.
    """

    bases: np.ndarray
    ranks: list[int]
    full: np.ndarray
    full_rank: int
    fit_intercept: bool

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    @property
    def p(self) -> int:
        return self.bases.shape[0]

    @property
    def degenerate(self) -> bool:
        expected = self.p - 1 + int(self.fit_intercept)
        return any(r < expected for r in self.ranks)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Column j of the result is ``Z^j v[:, j]``."""
        coef = np.einsum("jnk,nj->jk", self.bases, v)
        return v - np.einsum("jnk,jk->nj", self.bases, coef)

    def apply_column(self, j: int, v: np.ndarray) -> np.ndarray:
        q = self.bases[j]
        return v - q @ (q.T @ v)

    def matrix(self, j: int) -> np.ndarray:
        q = self.bases[j]
        return np.eye(self.n) - q @ q.T

    def apply_full(self, v: np.ndarray) -> np.ndarray:
        return v - self.full @ (self.full.T @ v)


def build_projectors(xn: np.ndarray, fit_intercept: bool = False) -> ProjectorCache:
    """Per-column complement projectors of a scaled design ``xn``.

    Rank-deficient spans are handled by keeping a basis of the actual column
    space; ``ProjectorCache.degenerate`` reports it.
    """
    xn = np.asarray(xn, dtype=float)
    n, p = xn.shape
    if n <= p:
        raise ValueError(f"projectors need n > p, got n={n}, p={p}; use high-dimensional mode")
    u = np.full((n, 1), 1.0 / math.sqrt(n))
    width = p - 1 + int(fit_intercept)
    bases = np.empty((p, n, width))
    ranks = []
    for j in range(p):
        cols = np.delete(xn, j, axis=1)
        if fit_intercept:
            cols = np.hstack([cols, u])
        bases[j], r = orthonormal_basis(cols, width)
        ranks.append(r)
    design = np.hstack([xn, u]) if fit_intercept else xn
    full, full_rank = orthonormal_basis(design)
    return ProjectorCache(bases, ranks, full, full_rank, fit_intercept)
