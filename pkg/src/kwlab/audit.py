"""Integral identities for KW fields on S¹×Σ×[ε, 1/ε] and T³×[ε, 1/ε].

Both identities rewrite ``∫|KW|²`` as a sum of squares plus boundary
terms. The general routines here work on :class:`LatticeField` data of any
rank; :mod:`kwlab._fastaudit` evaluates the same discrete quantities for
separable random fields on large grids without storing them.
"""
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .lattice import (
    LatticeField, covariant_d, covariant_partial, curvature, hodge_star,
    wedge, wedge_bracket,
)
from .residuals import kw_fields, richardson_order

N_AXES = (1, 2, 3)
S1_BULK = ("ebe_curvature", "nabla1_phi", "B_A", "ebe_bracket", "ebe_divergence", "nabla1_phi1")
T3_BULK = ("F", "nabla_perp_phi", "nahm", "ricci")


@dataclass
class AuditReport:
    lhs: float
    rhs_bulk: float
    rhs_boundary: float
    h: float
    terms: dict = field(default_factory=dict)
    note: str = ""

    @property
    def signed_gap(self):
        return self.lhs - self.rhs_bulk - self.rhs_boundary

    @property
    def gap(self):
        return abs(self.signed_gap)

    @property
    def relative_gap(self):
        return self.gap / abs(self.lhs) if self.lhs else float("inf") if self.gap else 0.0

    def row(self):
        return (self.h, self.lhs, self.rhs_bulk, self.rhs_boundary, self.gap)


def _real_tr(X):
    return np.real(np.trace(X, axis1=-2, axis2=-1))


def _split(Phi, tol=1e-12):
    if np.max(np.abs(Phi.components[3]), initial=0.0) > tol * (1 + np.max(np.abs(Phi.components))):
        raise ValueError("the identities assume φ_y = 0")
    phi1 = LatticeField(Phi.grid, 0, Phi.components[0:1].copy(), Phi.algebra_tag,
                        None if Phi.partials is None else Phi.partials[:, 0:1].copy())
    return Phi.select(N_AXES), phi1


def kw_density(A, Phi):
    K = kw_fields(A, Phi)
    return K["kw_curvature"].pointwise_norm2() + K["kw_divergence"].pointwise_norm2()


def s1_densities(A, Phi):
    """Pointwise ``|KW|²`` and the six squared terms of the S¹ identity."""
    phi, phi1 = _split(Phi)
    Fc = curvature(A)
    T1 = Fc.slice - wedge(phi, phi) - hodge_star(covariant_d(A, phi1).select(N_AXES), "sigma_y")
    T4 = wedge_bracket(phi, phi1) + hodge_star(covariant_d(A, phi).select(N_AXES), "sigma_y")
    T5 = -1.0 * hodge_star(covariant_d(A, hodge_star(phi, "sigma_y")).select(N_AXES), "sigma_y")
    n2 = lambda X: np.sum(np.abs(X) ** 2, axis=(0, -2, -1))
    return {
        "lhs": kw_density(A, Phi),
        "ebe_curvature": T1.pointwise_norm2(),
        "nabla1_phi": n2(covariant_partial(A, phi, 0)),
        "B_A": Fc.B.pointwise_norm2(),
        "ebe_bracket": T4.pointwise_norm2(),
        "ebe_divergence": T5.pointwise_norm2(),
        "nabla1_phi1": n2(covariant_partial(A, phi1, 0)),
    }


def boundary_form(A, phi):
    """``Tr(B_A ∧ φ)`` restricted to constant-y slices: its dx2∧dx3 coefficient."""
    B = curvature(A).B
    w = forms.wedge(B.components, 1, phi.components, 1)
    return _real_tr(w[forms.position(2)[(1, 2)]])


def slab_boundary(grid, density2d):
    """``∫_{top} − ∫_{bottom}`` of a per-site scalar over the two y-faces."""
    h1, h2, h3, _ = grid.spacings
    top = np.sum(density2d[..., -1]) * h1 * h2 * h3
    bot = np.sum(density2d[..., 0]) * h1 * h2 * h3
    return float(top - bot)


def chi_integral(A, phi, phi1):
    """The two pieces of ``∫χ``: the periodic ∇₁ total derivative and the
    boundary term ``−2 (∫_{y=1/ε} − ∫_{y=ε}) Tr(B_A ∧ φ)``.

    Returns ``(nabla1_part, boundary_part)``.
    """
    grid = A.grid
    F = curvature(A).slice
    d1 = covariant_d(A, phi1).select(N_AXES)
    dstar = covariant_d(A, hodge_star(phi, "sigma_y")).select(N_AXES)
    pp = wedge(phi, phi)
    dens = (2 * forms.wedge(F.components, 2, phi.components, 1)
            - (2 / 3) * forms.wedge(pp.components, 2, phi.components, 1)
            - 2 * forms.wedge(phi.components, 1, hodge_star(d1, "sigma_y").components, 2)
            + forms.wedge(phi1.components, 0, dstar.components, 3))
    T = _real_tr(dens[forms.position(3)[(1, 2, 3)]])
    nabla1 = grid.integrate(grid.derivative(T, 0, 0))
    bdry = -2 * slab_boundary(grid, boundary_form(A, phi))
    return nabla1, bdry


def weitzenbock_gap(A, Phi):
    """Audit ``∫|KW|² = Σ(six squares) + ∫χ`` on an S¹×Σ×[ε,1/ε] grid."""
    grid = A.grid
    phi, phi1 = _split(Phi)
    dens = s1_densities(A, Phi)
    terms = {k: grid.integrate(v) for k, v in dens.items()}
    nab, bd = chi_integral(A, phi, phi1)
    terms["chi_nabla1"], terms["chi_boundary"] = nab, bd
    lhs = terms["lhs"]
    bulk = sum(terms[k] for k in S1_BULK)
    return AuditReport(lhs, bulk, nab + bd, grid.h, terms, note="stars: M for KW, sigma_y for bulk")


def t3_densities(A, Phi):
    """Pointwise ``|KW|²`` and the bulk squares of the T³ energy identity."""
    if np.max(np.abs(Phi.components[3]), initial=0.0) > 0:
        raise ValueError("the T3 identity assumes φ_y = 0")
    phi = Phi.select((0, 1, 2))
    F = curvature(A).total
    nab = sum(np.sum(np.abs(covariant_partial(A, phi, i)[:3]) ** 2, axis=(0, -2, -1)) for i in range(3))
    U = LatticeField(phi.grid, 1, covariant_partial(A, phi, 3), "su_n") + hodge_star(wedge(phi, phi).select((0, 1, 2)), "slice")
    U = U.select((0, 1, 2))
    return {
        "lhs": kw_density(A, Phi),
        "F": F.pointwise_norm2(),
        "nabla_perp_phi": nab,
        "nahm": U.pointwise_norm2(),
        "ricci": np.zeros(A.grid.shape),
    }


def t3_boundary_form(A, phi):
    """``Tr(φ ∧ F_A)`` on constant-y slices (its dx1∧dx2∧dx3 coefficient)."""
    F = curvature(A).total
    w = forms.wedge(phi.components, 1, F.components, 2)
    return _real_tr(w[forms.position(3)[(0, 1, 2)]])


def t3_energy_gap(A, Phi):
    """Audit the T³×[ε,1/ε] energy identity (flat T³, so the Ricci term is 0).

    The ``|∇_A^⊥ Φ|²`` term is read as ``Σ_{i,j ∈ T³} |∇_i φ_j|²``.
    """
    grid = A.grid
    dens = t3_densities(A, Phi)
    terms = {k: grid.integrate(v) for k, v in dens.items()}
    phi = Phi.select((0, 1, 2))
    bd = 2 * slab_boundary(grid, t3_boundary_form(A, phi))
    terms["boundary"] = bd
    bulk = sum(terms[k] for k in T3_BULK)
    return AuditReport(terms["lhs"], bulk, bd, grid.h, terms,
                       note="|grad_perp|^2 read as sum_ij |nabla_i phi_j|^2; Ric = 0 on flat T3")


def boundary_decay(A, phi, y_indices):
    """``∫_{y} Tr(B_A ∧ φ)`` over the given y-slices of the grid."""
    grid = A.grid
    w = boundary_form(A, phi)
    h1, h2, h3, _ = grid.spacings
    ys = grid.axis(3)
    return [(float(ys[j]), float(np.sum(w[..., j]) * h1 * h2 * h3)) for j in y_indices]


def refinement_orders(reports):
    """Richardson orders of the signed gap (and each term) over h, h/2, h/4."""
    if len(reports) < 3:
        raise ValueError("need at least three resolutions")
    a, b, c = reports[-3:]
    return richardson_order(a.signed_gap, b.signed_gap, c.signed_gap)


ACCEPT_SHAPES = ((16, 16, 16, 32), (32, 32, 32, 64), (64, 64, 64, 128))


def random_field_study(seed, shapes=ACCEPT_SHAPES, slab=(0.5, 2.0), **field_kw):
    """Both identities for one seeded random field over several grids.

    Uses the streaming kernels in :mod:`kwlab._fastaudit`. Returns
    ``{"s1": [AuditReport, ...], "t3": [...]}`` ordered like ``shapes``.
    """
    from . import _fastaudit
    from .testfields import grid_for, random_field

    field_kw.setdefault("support", "inner")
    fld = random_field(seed, slab=slab, **field_kw)
    out = {"s1": [], "t3": []}
    for shape in shapes:
        s1, t3 = _fastaudit.audit_reports(fld, grid_for(shape, slab))
        out["s1"].append(s1)
        out["t3"].append(t3)
    return out


def term_orders(reports):
    """Richardson order of every integrated term over the last three grids."""
    a, b, c = reports[-3:]
    return {k: richardson_order(a.terms[k], b.terms[k], c.terms[k]) for k in a.terms}
