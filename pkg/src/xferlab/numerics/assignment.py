"""Minimum-cost perfect matching on a square cost matrix.

Potential-based shortest augmenting path formulation of the Hungarian
algorithm, O(n^3).  Exact for real-valued costs; the matrices matched here
(attention heads) are tiny, so clarity beats vectorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError


@dataclass(frozen=True)
class Assignment:
    """perm[i] = column assigned to row i; total_cost = sum of chosen entries."""
    perm: tuple
    total_cost: float


def hungarian(cost) -> Assignment:
    """Globally minimal assignment over all row->column permutations."""
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeError(f"hungarian requires a square matrix, got {c.shape}")
    if c.shape[0] == 0:
        raise ShapeError("hungarian requires n >= 1")
    if not np.all(np.isfinite(c)):
        raise NumericError("hungarian cost matrix contains non-finite values")

    n = c.shape[0]
    inf = np.inf
    u = [0.0] * (n + 1)          # row potentials
    v = [0.0] * (n + 1)          # column potentials
    match = [0] * (n + 1)        # match[j] = row matched to column j (1-based)
    way = [0] * (n + 1)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta, j1 = inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    perm = [0] * n
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    total = float(sum(c[i, perm[i]] for i in range(n)))
    return Assignment(perm=tuple(perm), total_cost=total)
