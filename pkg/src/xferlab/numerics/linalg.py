"""Singular value decomposition with the contract the diagnostics rely on."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD of M: u @ diag(s) @ v.T == M, s sorted descending, s >= 0."""
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruction(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def svd(m: np.ndarray) -> SvdResult:
    """Thin SVD of a 2-D matrix.  Deterministic for a fixed input.

    Raises NumericError on non-finite input (LAPACK would otherwise return
    garbage silently).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise NumericError(f"svd expects a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericError("svd input contains non-finite values")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SvdResult(u=u, s=s, v=vh.T)


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values only, sorted descending."""
    return svd(m).s
