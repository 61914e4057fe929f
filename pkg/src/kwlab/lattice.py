"""Discretized product manifolds and finite-difference exterior calculus.

Axes are ordered ``(x1, x2, x3, y)``. The first three are periodic with
period 1, so every closed 3d slice has unit volume; ``y`` runs over the
closed interval ``[y0, y1]`` sampled at ``Ny`` nodes including both ends.

Three Hodge stars are available, all for the flat product metric:

``"M"``       the 4d star with orientation dx1∧dx2∧dx3∧dy
``"sigma_y"`` the 3d star on Σ×ℝ⁺ (axes x2, x3, y), orientation dx2∧dx3∧dy
``"slice"``   the 3d star on S¹×Σ or T³ (axes x1, x2, x3), orientation dx1∧dx2∧dx3
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import forms

STAR_AXES = {
    "M": (0, 1, 2, 3),
    "sigma_y": (1, 2, 3),
    "slice": (0, 1, 2),
}

AXIS_NAMES = ("x1", "x2", "x3", "y")


@dataclass(frozen=True)
class Grid4:
    shape: tuple
    y_range: tuple
    lengths: tuple = (1.0, 1.0, 1.0)
    label: str = "S1xT2"

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) != 4 or min(shape) < 4:
            raise ValueError(f"grid needs 4 axes with at least 4 points each, got {self.shape}")
        y0, y1 = (float(v) for v in self.y_range)
        if not 0 < y0 < y1:
            raise ValueError(f"need 0 < y0 < y1, got {self.y_range}")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("periodic lengths must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "y_range", (y0, y1))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))

    @property
    def spacings(self):
        N1, N2, N3, Ny = self.shape
        L1, L2, L3 = self.lengths
        y0, y1 = self.y_range
        return (L1 / N1, L2 / N2, L3 / N3, (y1 - y0) / (Ny - 1))

    @property
    def h(self):
        return max(self.spacings)

    def axis(self, i):
        if i < 3:
            return np.arange(self.shape[i]) * self.spacings[i]
        return np.linspace(*self.y_range, self.shape[3])

    def mesh(self):
        return np.meshgrid(*(self.axis(i) for i in range(4)), indexing="ij")

    @property
    def slice_volume(self):
        return float(np.prod(self.lengths))

    def y_weights(self):
        """Trapezoid weights along y."""
        w = np.full(self.shape[3], self.spacings[3])
        w[0] = w[-1] = self.spacings[3] / 2
        return w

    def integrate(self, density):
        """Quadrature of a scalar density sampled on the grid.

        Riemann sum over the periodic cells, trapezoid rule in y.
        """
        density = np.asarray(density)
        h1, h2, h3, _ = self.spacings
        per_y = np.sum(density.reshape(-1, self.shape[3]), axis=0) * (h1 * h2 * h3)
        return float(np.sum(per_y * self.y_weights()))

    def refined(self, factor=2):
        N1, N2, N3, Ny = self.shape
        return replace(self, shape=(N1 * factor, N2 * factor, N3 * factor, Ny * factor))

    def derivative(self, arr, axis, offset=1):
        """Second-order finite difference of ``arr`` along a grid axis.

        ``offset`` is the position of the first site axis in ``arr``.
        Centered with periodic wrap on x1, x2, x3; centered in the interior
        and second-order one-sided at the y ends.
        """
        h = self.spacings[axis]
        ax = axis + offset
        if axis < 3:
            return (np.roll(arr, -1, axis=ax) - np.roll(arr, 1, axis=ax)) / (2 * h)
        return np.gradient(arr, h, axis=ax, edge_order=2)


def fd_table(values, h, periodic):
    """The same difference operator as :meth:`Grid4.derivative` on 1d data."""
    values = np.asarray(values)
    if periodic:
        return (np.roll(values, -1, axis=-1) - np.roll(values, 1, axis=-1)) / (2 * h)
    return np.gradient(values, h, axis=-1, edge_order=2)


@dataclass(frozen=True, eq=False)
class LatticeField:
    """Lie-algebra-valued k-form sampled on a :class:`Grid4`.

    ``components`` has shape ``(C(4,k), N1, N2, N3, Ny, n, n)``. ``partials``
    optionally carries exact first derivatives (shape ``(4,) + components
    .shape``); when present :func:`exterior_d` uses them instead of finite
    differences.
    """

    grid: Grid4
    degree: int
    components: np.ndarray
    algebra_tag: str = "su_n"
    partials: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= self.degree <= 4:
            raise ValueError(f"form degree must be 0..4, got {self.degree}")
        c = np.asarray(self.components)
        want = (forms.ncomp(self.degree),) + self.grid.shape
        if c.shape[:5] != want or c.ndim != 7 or c.shape[-1] != c.shape[-2]:
            raise ValueError(f"components have shape {c.shape}, expected {want} + (n, n)")
        if self.algebra_tag not in ("su_n", "sl_n_c", "scalar"):
            raise ValueError(f"unknown algebra tag {self.algebra_tag!r}")
        if self.partials is not None and self.partials.shape != (4,) + c.shape:
            raise ValueError("partials must have shape (4,) + components.shape")
        object.__setattr__(self, "components", c)

    @property
    def n(self):
        return self.components.shape[-1]

    @classmethod
    def zeros(cls, grid, degree, n, algebra_tag="su_n", with_partials=False):
        c = np.zeros((forms.ncomp(degree),) + grid.shape + (n, n), dtype=complex)
        p = np.zeros((4,) + c.shape, dtype=complex) if with_partials else None
        return cls(grid, degree, c, algebra_tag, p)

    @classmethod
    def from_components(cls, grid, degree, comps, n, algebra_tag="su_n", partials=None):
        """Build from a dict ``{index tuple: array (N1,N2,N3,Ny,n,n) or (n,n)}``.

        ``partials`` is an optional dict of the same keys holding arrays of
        shape ``(4, N1, N2, N3, Ny, n, n)``.
        """
        out = cls.zeros(grid, degree, n, algebra_tag, with_partials=partials is not None)
        pos = forms.position(degree)
        for idx, val in comps.items():
            out.components[pos[tuple(idx)]] = val
        for idx, val in (partials or {}).items():
            out.partials[:, pos[tuple(idx)]] = val
        return out

    def component(self, *idx):
        return self.components[forms.position(self.degree)[tuple(idx)]]

    def check_algebra(self):
        """Largest violation of tracelessness / anti-Hermiticity, scaled."""
        c = self.components
        scale = 1.0 + np.max(np.abs(c), initial=0.0)
        tr = np.max(np.abs(np.trace(c, axis1=-2, axis2=-1)), initial=0.0)
        worst = tr if self.algebra_tag != "scalar" else 0.0
        if self.algebra_tag == "su_n":
            worst = max(worst, np.max(np.abs(c + np.swapaxes(c, -1, -2).conj()), initial=0.0))
        return worst / scale

    def _like(self, comps, tag=None, partials=None):
        return LatticeField(self.grid, self.degree, comps, tag or self.algebra_tag, partials)

    def __add__(self, other):
        _same_grid(self, other)
        p = None
        if self.partials is not None and other.partials is not None:
            p = self.partials + other.partials
        return self._like(self.components + other.components, _tag(self, other), p)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        p = None if self.partials is None else c * self.partials
        tag = self.algebra_tag if np.isreal(c) else "sl_n_c"
        return self._like(c * self.components, tag, p)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def conjugate_by(self, g):
        """Pointwise ``g⁻¹ f g`` for a constant matrix ``g``."""
        gi = np.linalg.inv(g)
        p = None if self.partials is None else gi @ self.partials @ g
        return self._like(gi @ self.components @ g, None, p)

    def select(self, axes):
        """Drop every component not supported on ``axes``."""
        keep = forms.select(self.components, self.degree, axes)
        p = None if self.partials is None else np.stack(
            [forms.select(q, self.degree, axes) for q in self.partials])
        return self._like(keep, None, p)

    def pointwise_norm2(self):
        return forms.pointwise_norm2(self.components, self.degree)


def _tag(*fs):
    tags = {f.algebra_tag for f in fs}
    return tags.pop() if len(tags) == 1 else "sl_n_c"


def _same_grid(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise ValueError("fields live on different grids")
        if f.n != fs[0].n:
            raise ValueError("fields have different matrix sizes")


def fd_partials(f):
    """Finite-difference partials of every component, shape ``(4,) + comps``."""
    return np.stack([f.grid.derivative(f.components, mu) for mu in range(4)])


def partials_of(f):
    return f.partials if f.partials is not None else fd_partials(f)


def exterior_d(f):
    """Exterior derivative (exact partials if attached, else 2nd-order FD)."""
    if f.degree >= 4:
        raise ValueError("exterior derivative of a 4-form is not defined here")
    comps = forms.d_from_partials(partials_of(f), f.degree)
    return LatticeField(f.grid, f.degree + 1, comps, f.algebra_tag)


def hodge_star(f, space="M"):
    """Hodge star for the flat product metric; see the module docstring.

    Exact partials are carried through (the flat star has constant
    coefficients).
    """
    axes = STAR_AXES[space]
    deg = len(axes) - f.degree
    if deg < 0:
        raise ValueError(f"{f.degree}-form has no star on the {space!r} factor")
    comps = forms.star(f.components, f.degree, axes=axes)
    p = None
    if f.partials is not None:
        p = np.stack([forms.star(q, f.degree, axes=axes) for q in f.partials])
    return LatticeField(f.grid, deg, comps, f.algebra_tag, p)


def wedge_bracket(a, b):
    """Graded commutator ``[a ∧ b]`` of two Lie-algebra-valued forms."""
    _same_grid(a, b)
    comps = forms.bracket_wedge(a.components, a.degree, b.components, b.degree)
    return LatticeField(a.grid, a.degree + b.degree, comps, _tag(a, b))


def wedge(a, b):
    """Matrix wedge product ``a ∧ b`` (so ``Φ∧Φ = ½[Φ∧Φ]`` for 1-forms)."""
    _same_grid(a, b)
    comps = forms.wedge(a.components, a.degree, b.components, b.degree)
    tag = "sl_n_c" if a.algebra_tag != "scalar" else "scalar"
    return LatticeField(a.grid, a.degree + b.degree, comps, tag)


def covariant_d(A, f):
    """``d_A f = df + [A ∧ f]``."""
    if A.degree != 1:
        raise ValueError("connection must be a 1-form")
    _same_grid(A, f)
    d = exterior_d(f)
    br = forms.bracket_wedge(A.components, 1, f.components, f.degree)
    return LatticeField(f.grid, f.degree + 1, d.components + br, _tag(A, f))


def covariant_partial(A, f, mu):
    """Component-wise covariant derivative ``∇_mu f = ∂_mu f + [A_mu, f]``."""
    Amu = A.components[mu]
    p = partials_of(f)[mu]
    return p + Amu[None] @ f.components - f.components @ Amu[None]


@dataclass(frozen=True)
class Curvature:
    total: LatticeField
    slice: LatticeField
    B: LatticeField

    def __iter__(self):
        return iter((self.total, self.slice, self.B))


def curvature(A):
    """``F = dA + A∧A`` split as ``F_slice + B_A ∧ dx1``.

    ``F_slice`` keeps every component without dx1 (including dy parts);
    ``B_A`` is the 1-form with ``B_j = F_{j1}``.
    """
    F = exterior_d(A)
    F = LatticeField(A.grid, 2, F.components + forms.wedge(A.components, 1, A.components, 1), A.algebra_tag)
    Fs = F.select((1, 2, 3))
    pos2 = forms.position(2)
    B = LatticeField.zeros(A.grid, 1, A.n, A.algebra_tag)
    for j in (1, 2, 3):
        B.components[j] = -F.components[pos2[(0, j)]]
    return Curvature(F, Fs, B)


def l2_norm(f):
    """``(∫ |f|²)^{1/2}`` with Frobenius matrix norms over the whole slab."""
    return float(np.sqrt(f.grid.integrate(f.pointwise_norm2())))


def boundary_integral(f, iy):
    """``∫_{y = y[iy]} Tr f`` for a 3-form ``f``: integral of the real part of
    the trace of its dx1∧dx2∧dx3 component over the unit-volume slice."""
    if f.degree != 3:
        raise ValueError("boundary_integral expects a 3-form")
    Ny = f.grid.shape[3]
    if not -Ny <= iy < Ny:
        raise IndexError(f"slice index {iy} outside 0..{Ny - 1}")
    c = f.component(0, 1, 2)[:, :, :, iy]
    h1, h2, h3, _ = f.grid.spacings
    return float(np.sum(np.real(np.trace(c, axis1=-2, axis2=-1))) * h1 * h2 * h3)


def slice_trace_integral(values, grid):
    """Riemann sum of a scalar sampled on an ``(N1, N2, N3)`` slice."""
    h1, h2, h3, _ = grid.spacings
    return float(np.sum(values) * h1 * h2 * h3)


@dataclass(frozen=True)
class SphericalPatch:
    """Region around a knot: ``R∈[R0,R1]``, ``s∈[s0,s1]``, θ and x1 full circles.

    ``y = R sin s``, ``|z| = R cos s``, ``z = x2 + i x3 = |z| e^{iθ}``.
    """

    R_range: tuple = (0.1, 2.0)
    s_range: tuple = (0.1, np.pi / 2)
    samples: int = 10_000

    def __post_init__(self):
        R0, R1 = self.R_range
        s0, s1 = self.s_range
        if not 0 < R0 < R1:
            raise ValueError("need 0 < R0 < R1")
        if not 0 < s0 < s1 <= np.pi / 2 + 1e-15:
            raise ValueError("need 0 < s0 < s1 <= pi/2")
        if self.samples < 1:
            raise ValueError("need at least one sample")

    def sample(self, seed=0):
        """Scrambled Halton points ``(R, s, θ, x1)``."""
        from scipy.stats import qmc

        u = qmc.Halton(d=4, scramble=True, seed=seed).random(self.samples)
        R0, R1 = self.R_range
        s0, s1 = self.s_range
        R = R0 + (R1 - R0) * u[:, 0]
        s = s0 + (s1 - s0) * u[:, 1]
        return R, s, 2 * np.pi * u[:, 2], 2 * np.pi * u[:, 3]
