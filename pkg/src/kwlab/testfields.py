"""Seeded smooth random fields built from separable products.

Each adjoint coordinate of each form component is a short sum of products
``X1(x1) X2(x2) X3(x3) Y(y)`` with ``X_i`` a random trigonometric
polynomial of period 1 and ``Y`` a random cubic times a bump. Separability
lets the audit kernels evaluate grid values and finite differences from 1d
tables without ever storing a full 4d field.
"""
from dataclasses import dataclass

import numpy as np

from . import lie
from .lattice import Grid4, LatticeField, fd_table


def bump(y, lo, hi, power=6):
    """``(1 − u²)^power`` on ``[lo, hi]`` (u the centered coordinate), else 0."""
    u = (2 * y - (lo + hi)) / (hi - lo)
    return np.where(np.abs(u) < 1, (1 - np.minimum(u * u, 1)) ** power, 0.0)


@dataclass(frozen=True)
class SeparableField:
    """Random (A, Φ) pair on a slab.

    ``a_terms``/``p_terms`` are structured arrays of per-term data:
    form index ``mu``, adjoint index ``a``, amplitude, trig coefficients
    ``trig[3, 2k+1]`` and y coefficients ``ypoly[4]``.
    ``support`` is ``(lo, hi)`` for compact support in y, or None for a
    smooth profile that does not vanish at the slab ends.
    """

    n: int
    mu: np.ndarray
    kind: np.ndarray   # 0 for A, 1 for Φ
    adj: np.ndarray
    trig: np.ndarray   # (terms, 3, 2*kmax+1)
    ypoly: np.ndarray  # (terms, 4)
    support: tuple
    y_scale: tuple

    @property
    def terms(self):
        return len(self.mu)

    def x_table(self, axis, N):
        """Values of the x-factors on ``N`` periodic nodes, shape (terms, N)."""
        x = np.arange(N) / N
        kmax = (self.trig.shape[2] - 1) // 2
        c = self.trig[:, axis]
        out = np.repeat(c[:, :1], N, axis=1)
        for k in range(1, kmax + 1):
            out = out + c[:, 2 * k - 1, None] * np.cos(2 * np.pi * k * x) + c[:, 2 * k, None] * np.sin(2 * np.pi * k * x)
        return out

    def y_profile(self, y):
        lo, hi = self.y_scale
        u = (2 * y - (lo + hi)) / (hi - lo)
        poly = sum(self.ypoly[:, j, None] * u ** j for j in range(4))
        if self.support is None:
            env = np.exp(-0.5 * u ** 2)
        else:
            env = bump(y, *self.support)
        return poly * env

    def tables(self, grid):
        """1d value and difference tables for every term on ``grid``.

        Returns ``(X, DX, Y, DY)`` with ``X``/``DX`` of shape (3, terms, N_i)
        as lists and ``Y``/``DY`` of shape (terms, Ny).
        """
        X, DX = [], []
        for i in range(3):
            t = self.x_table(i, grid.shape[i])
            X.append(t)
            DX.append(fd_table(t, grid.spacings[i], periodic=True))
        Y = self.y_profile(grid.axis(3))
        DY = fd_table(Y, grid.spacings[3], periodic=False)
        return X, DX, Y, DY

    def sample(self, grid):
        """Full-grid ``(A, Φ)`` as lattice fields (for moderate grids)."""
        X, _, Y, _ = self.tables(grid)
        dim = self.n * self.n - 1
        coords = np.zeros((2, 4) + grid.shape + (dim,))
        for t in range(self.terms):
            val = np.einsum("i,j,k,l->ijkl", X[0][t], X[1][t], X[2][t], Y[t])
            coords[self.kind[t], self.mu[t], ..., self.adj[t]] += val
        mats = lie.from_adjoint(coords, self.n)
        return (LatticeField(grid, 1, mats[0]), LatticeField(grid, 1, mats[1]))


def random_field(seed, n=2, slab=(0.5, 2.0), support="inner", modes=1, kmax=1,
                 amplitude=1.0, gauge="full", phi_y=False):
    """Draw a seeded random field.

    ``support`` is "inner" (compact support strictly inside the slab), None
    (non-vanishing at both slab ends) or an explicit ``(lo, hi)`` pair.
    ``gauge="temporal"`` sets ``A_y = 0``. The Higgs field has no dy
    component unless ``phi_y`` is true.
    """
    rng = np.random.default_rng(seed)
    y0, y1 = slab
    if support == "inner":
        pad = 0.1 * (y1 - y0)
        support = (y0 + pad, y1 - pad)
    dim = n * n - 1
    a_mus = (0, 1, 2) if gauge == "temporal" else (0, 1, 2, 3)
    p_mus = (0, 1, 2, 3) if phi_y else (0, 1, 2)
    rows = [(0, mu, a) for mu in a_mus for a in range(dim)] + [(1, mu, a) for mu in p_mus for a in range(dim)]
    rows = [r for r in rows for _ in range(modes)]
    T = len(rows)
    trig = rng.standard_normal((T, 3, 2 * kmax + 1))
    trig[:, :, 0] *= 0.5
    ypoly = rng.standard_normal((T, 4)) * amplitude
    scale = support if support is not None else slab
    return SeparableField(
        n=n,
        kind=np.array([r[0] for r in rows]),
        mu=np.array([r[1] for r in rows]),
        adj=np.array([r[2] for r in rows]),
        trig=trig, ypoly=ypoly, support=support, y_scale=tuple(scale),
    )


def grid_for(shape, slab=(0.5, 2.0), label="S1xT2"):
    return Grid4(tuple(shape), tuple(slab), label=label)


def _smooth_sigma(rng, grid, n, y_lo, y_hi):
    # low Fourier modes in (x2, x3) times a smooth y profile; no x1 dependence
    _, x2, x3, y = grid.mesh()
    dim = n * n - 1
    u = (2 * y - (y_lo + y_hi)) / (y_hi - y_lo)
    out = np.zeros(grid.shape + (dim,))
    for a in range(dim):
        c = rng.standard_normal(5)
        p = rng.standard_normal(3)
        out[..., a] = ((c[0] + c[1] * np.cos(2 * np.pi * x2) + c[2] * np.sin(2 * np.pi * x3)
                        + c[3] * np.sin(2 * np.pi * (x2 + x3)) + c[4] * np.cos(2 * np.pi * (x2 - x3)))
                       * (p[0] + p[1] * u + p[2] * u * u) * np.exp(-u * u))
    return lie.from_adjoint(out, n)


def random_ebe_triple(seed, grid, n=2):
    """Seeded x1-independent ``(A, φ, φ₁)`` with Σ-only A and φ."""
    rng = np.random.default_rng(seed)
    y_lo, y_hi = grid.y_range
    A = LatticeField.zeros(grid, 1, n)
    phi = LatticeField.zeros(grid, 1, n)
    for f in (A, phi):
        for mu in (1, 2):
            f.components[mu] = _smooth_sigma(rng, grid, n, y_lo, y_hi)
    phi1 = LatticeField(grid, 0, _smooth_sigma(rng, grid, n, y_lo, y_hi)[None])
    return A, phi, phi1
