"""Projection-weighted canonical correlation analysis between representations.

SVD-based CCA on column-centered, variance-truncated views; canonical
correlations are weighted by how much of the first view its canonical
directions account for.  The value lives in [0, 1]: canonical correlations
are nonnegative by construction and the weights are a convex combination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DegeneracyError
from .representations import ReprMatrix


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, ReprMatrix):
        x = x.matrix
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ContractError("representation views must be 2-D (points x features)")
    return m


def _truncated_basis(xc: np.ndarray, keep_variance: float):
    """Orthonormal sample-space basis of the centered view, energy-truncated."""
    u, s, _ = np.linalg.svd(xc, full_matrices=False)
    energy = s * s
    total = energy.sum()
    if total == 0.0:
        raise DegeneracyError("representation view is identically zero")
    k = int(np.searchsorted(np.cumsum(energy) / total, keep_variance) + 1)
    k = min(k, len(s))
    if k == 0:
        raise DegeneracyError("variance truncation retained no dimensions")
    return u[:, :k]


def cca_correlations(x, y, keep_variance: float = 0.99):
    """Canonical correlations and the first view's canonical directions.

    Returns (rho, h, xc): rho descending in [0, 1]; h (n x r) orthonormal
    canonical directions of the first view in sample space; xc the centered
    first view.
    """
    x = _as_matrix(x)
    y = _as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ContractError(
            f"views must share datapoints: {x.shape[0]} vs {y.shape[0]} rows")
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    ux = _truncated_basis(xc, keep_variance)
    uy = _truncated_basis(yc, keep_variance)
    p, rho, _ = np.linalg.svd(ux.T @ uy, full_matrices=False)
    rho = np.clip(rho, 0.0, 1.0)
    h = ux @ p[:, :len(rho)]
    return rho, h, xc


def pwcca(x, y, keep_variance: float = 0.99) -> float:
    """Projection-weighted CCA similarity, weighted from the first argument.

    Weight i is sum_j |<h_i, x_j>| over the centered first view's columns,
    normalized to sum 1; the result is sum_i w_i * rho_i in [0, 1].
    """
    rho, h, xc = cca_correlations(x, y, keep_variance)
    alpha = np.abs(h.T @ xc).sum(axis=1)
    total = alpha.sum()
    if total == 0.0:
        raise DegeneracyError("all projection weights vanished")
    return float(np.dot(alpha / total, rho))


@dataclass(frozen=True)
class PwccaReport:
    """Both weighting directions and their mean; xy weights from the first view."""
    xy: float
    yx: float

    @property
    def mean(self) -> float:
        return 0.5 * (self.xy + self.yx)


def pwcca_report(x, y, keep_variance: float = 0.99) -> PwccaReport:
    return PwccaReport(xy=pwcca(x, y, keep_variance), yx=pwcca(y, x, keep_variance))
