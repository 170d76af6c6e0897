"""Multi-indices for the monomial bases of the truncated spaces."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import gammaln


@lru_cache(maxsize=64)
def multi_indices(n: int, N: int) -> np.ndarray:
    """All a in N^n with |a| <= N, graded lexicographic order.

    Within one total degree, indices are sorted lexicographically from the
    largest first coordinate down, so for n=1 this is simply 0..N.
    """
    if n < 1 or N < 0:
        raise ValueError("need n >= 1 and N >= 0")
    rows = []
    for d in range(N + 1):
        block = [a for a in product(range(d, -1, -1), repeat=n) if sum(a) == d]
        block.sort(reverse=True)
        rows.extend(block)
    out = np.array(rows, dtype=np.int64).reshape(-1, n)
    out.setflags(write=False)
    return out


def basis_size(n: int, N: int) -> int:
    return multi_indices(n, N).shape[0]


def degrees(n: int, N: int) -> np.ndarray:
    return multi_indices(n, N).sum(axis=1)


def log_factorial(a: np.ndarray) -> np.ndarray:
    """log(a!) summed over the last axis for multi-indices."""
    return gammaln(np.asarray(a) + 1.0).sum(axis=-1)


def monomial_table(z: np.ndarray, N: int, scale: np.ndarray | float = 1.0) -> np.ndarray:
    """Powers (z_j/scale)^k / sqrt(k!) for k = 0..N, without overflow.

    z has shape (..., n); the result has shape (..., n, N+1).
    """
    z = np.asarray(z, dtype=complex)
    k = np.arange(1, N + 1)
    steps = (z[..., None] / scale) / np.sqrt(k)
    table = np.ones(z.shape + (N + 1,), dtype=complex)
    table[..., 1:] = np.cumprod(steps, axis=-1)
    return table


def evaluate_monomials(table: np.ndarray, n: int, N: int) -> np.ndarray:
    """Combine a per-coordinate table into products over the multi-index set."""
    idx = multi_indices(n, N)
    out = table[..., 0, idx[:, 0]]
    for j in range(1, n):
        out = out * table[..., j, idx[:, j]]
    return out
