"""Pointwise exterior algebra for matrix-valued differential forms.

A k-form on a ``dim``-dimensional chart is stored as an array whose leading
axis enumerates the increasing index tuples ``combinations(range(dim), k)``
in lexicographic order. Remaining axes are arbitrary site axes followed by
the trailing ``(n, n)`` matrix axes, so every routine here is vectorized over
sites and is shared by the lattice code and the curvilinear knot-patch code.

Metrics are diagonal (orthogonal coordinates); ``metric`` is a sequence of
``dim`` arrays (or scalars) broadcastable against the site axes, holding
``g_ii``. ``None`` means the flat unit metric.
"""
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def basis(k, dim=4):
    """Increasing index tuples labelling the components of a k-form."""
    return tuple(combinations(range(dim), k))


@lru_cache(maxsize=None)
def position(k, dim=4):
    return {idx: i for i, idx in enumerate(basis(k, dim))}


def ncomp(k, dim=4):
    return comb(dim, k)


def perm_sign(seq):
    """Sign of the permutation sorting ``seq`` (entries distinct)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(p, q, dim):
    pos = position(p + q, dim)
    table = []
    for i, I in enumerate(basis(p, dim)):
        for j, J in enumerate(basis(q, dim)):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            table.append((pos[K], i, j, perm_sign(I + J)))
    return tuple(table)


def wedge(a, p, b, q, dim=4):
    """Matrix-valued wedge product ``a ∧ b`` (matrix product, no commutator)."""
    if p + q > dim:
        return np.zeros((0,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=complex)
    shape = np.broadcast_shapes(a.shape[1:-2], b.shape[1:-2]) + (a.shape[-2], b.shape[-1])
    out = np.zeros((ncomp(p + q, dim),) + shape, dtype=np.result_type(a, b, complex))
    for K, i, j, s in _wedge_table(p, q, dim):
        if s > 0:
            out[K] += a[i] @ b[j]
        else:
            out[K] -= a[i] @ b[j]
    return out


def bracket_wedge(a, p, b, q, dim=4):
    """Graded commutator ``[a ∧ b] = a∧b − (−1)^{pq} b∧a``."""
    if (p * q) % 2:
        return wedge(a, p, b, q, dim) + wedge(b, q, a, p, dim)
    return wedge(a, p, b, q, dim) - wedge(b, q, a, p, dim)


def _metric_factor(metric, idx):
    f = 1.0
    if metric is None:
        return f
    for i in idx:
        f = f * metric[i]
    return f


def star(a, k, metric=None, axes=None, orientation=1, dim=4):
    """Hodge star of a k-form on the sub-chart spanned by ``axes``.

    ``axes`` defaults to all ``dim`` axes. Components of ``a`` outside the
    sub-chart must vanish; they are ignored. The result is a
    ``(len(axes) - k)``-form stored in the ambient ``dim`` layout. The
    positive orientation is the increasing order of ``axes`` times
    ``orientation``.
    """
    axes = tuple(range(dim)) if axes is None else tuple(axes)
    m = len(axes)
    pos_out = position(m - k, dim)
    pos_in = position(k, dim)
    vol = np.sqrt(np.abs(_metric_factor(metric, axes))) if metric is not None else 1.0
    out = np.zeros((ncomp(m - k, dim),) + a.shape[1:], dtype=np.result_type(a, complex))
    for I in combinations(axes, k):
        J = tuple(x for x in axes if x not in I)
        s = orientation * perm_sign([axes.index(x) for x in I + J])
        coef = s * vol / _metric_factor(metric, I) if metric is not None else float(s)
        coef = np.asarray(coef)
        if coef.ndim:
            coef = coef[..., None, None]
        out[pos_out[J]] += coef * a[pos_in[I]]
    return out


def d_from_partials(partials, k, dim=4):
    """Exterior derivative given first partials.

    ``partials[mu]`` is the array of ∂_mu of every component of a k-form.
    """
    pos_in = position(k, dim)
    out = np.zeros((ncomp(k + 1, dim),) + partials.shape[2:], dtype=np.result_type(partials, complex))
    for K_i, K in enumerate(basis(k + 1, dim)):
        for r, mu in enumerate(K):
            I = K[:r] + K[r + 1:]
            if r % 2:
                out[K_i] -= partials[mu, pos_in[I]]
            else:
                out[K_i] += partials[mu, pos_in[I]]
    return out


def pointwise_norm2(a, k, metric=None, dim=4):
    """|a|² summed over components with Frobenius matrix norm."""
    sq = np.sum(np.abs(a) ** 2, axis=(-2, -1))
    if metric is None:
        return np.sum(sq, axis=0)
    total = 0.0
    for i, I in enumerate(basis(k, dim)):
        total = total + sq[i] / _metric_factor(metric, I)
    return total


def select(a, k, axes, dim=4):
    """Zero every component of ``a`` that is not supported on ``axes``."""
    axes = set(axes)
    out = a.copy()
    for i, I in enumerate(basis(k, dim)):
        if not set(I) <= axes:
            out[i] = 0
    return out
