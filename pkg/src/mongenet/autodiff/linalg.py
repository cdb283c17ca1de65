"""Batched determinants and cofactors for small matrices.

Matrices are stacked along the leading axis, shape ``(P, n, n)``. Symmetric
matrices are stored as their upper triangle in ``np.triu_indices(n)`` order,
shape ``(n(n+1)/2, P)``.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def pair_indices(n):
    """Row/column indices of the stored upper-triangle entries."""
    i, j = np.triu_indices(n)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


@lru_cache(maxsize=None)
def pair_lookup(n):
    """``(n, n)`` array mapping a matrix position to its storage slot."""
    i, j = pair_indices(n)
    table = np.empty((n, n), dtype=np.intp)
    table[i, j] = np.arange(len(i))
    table[j, i] = np.arange(len(i))
    table.setflags(write=False)
    return table


def symmetric_from_upper(upper, n):
    upper = np.asarray(upper)
    full = upper[pair_lookup(n)]  # (n, n, P)
    return np.moveaxis(full, -1, 0)


def _lu_det(a):
    """Determinant by LU factorization with partial pivoting, per batch entry."""
    a = np.array(a, dtype=np.float64, copy=True)
    p, n, _ = a.shape
    rows = np.arange(p)
    sign = np.ones(p)
    det = np.ones(p)
    for k in range(n):
        piv = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = piv != k
        if np.any(swap):
            r = rows[swap]
            tmp = a[r, k, :].copy()
            a[r, k, :] = a[r, piv[swap], :]
            a[r, piv[swap], :] = tmp
            sign[swap] = -sign[swap]
        pivot = a[:, k, k]
        det *= pivot
        if k + 1 < n:
            safe = np.where(pivot == 0.0, 1.0, pivot)
            factors = a[:, k + 1:, k] / safe[:, None]
            factors[pivot == 0.0] = 0.0
            a[:, k + 1:, k:] -= factors[:, :, None] * a[:, None, k, k:]
    return sign * det


def det(a):
    """Determinant of a stack of square matrices.

    Closed-form expansions for ``n <= 3``; LU with partial pivoting above.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[-1]
    if n == 1:
        return a[:, 0, 0].copy()
    if n == 2:
        return a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    if n == 3:
        return (a[:, 0, 0] * (a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1])
                - a[:, 0, 1] * (a[:, 1, 0] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 0])
                + a[:, 0, 2] * (a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0]))
    return _lu_det(a)


def cofactors(a):
    """Cofactor matrices ``C[p, i, j] = (-1)**(i+j) det(minor_ij(a[p]))``.

    Computed from minors rather than ``det(a) * inv(a).T`` so singular
    matrices are handled exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    p, n, _ = a.shape
    if n == 1:
        return np.ones_like(a)
    if n == 2:
        c = np.empty_like(a)
        c[:, 0, 0] = a[:, 1, 1]
        c[:, 0, 1] = -a[:, 1, 0]
        c[:, 1, 0] = -a[:, 0, 1]
        c[:, 1, 1] = a[:, 0, 0]
        return c
    c = np.empty_like(a)
    idx = np.arange(n)
    for i in range(n):
        ri = idx[idx != i]
        for j in range(n):
            rj = idx[idx != j]
            minor = a[:, ri[:, None], rj[None, :]]
            c[:, i, j] = (-1.0) ** (i + j) * det(minor)
    return c


def det_upper(upper, n):
    """Determinant of symmetric matrices held in upper-triangle storage."""
    return det(symmetric_from_upper(upper, n))


def det_upper_grad(upper, n):
    """Derivative of ``det_upper`` with respect to each stored slot, ``(npairs, P)``."""
    c = cofactors(symmetric_from_upper(upper, n))
    i, j = pair_indices(n)
    # an off-diagonal slot feeds both (i, j) and (j, i)
    return (c[:, i, j] + np.where(i == j, 0.0, 1.0)[None, :] * c[:, j, i]).T
