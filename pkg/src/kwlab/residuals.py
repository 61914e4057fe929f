"""Residuals of the gauge-theoretic equation systems.

Every ``*_fields`` function returns the residual as lattice fields; the
matching ``*_residual`` wraps them in a :class:`ResidualReport` with the
L² norm over the slab and the pointwise sup (Frobenius matrix norms).
"""
from dataclasses import dataclass, field

import numpy as np

from . import forms, lie
from .lattice import (
    LatticeField, covariant_d, covariant_partial, curvature, exterior_d,
    hodge_star, l2_norm, partials_of, wedge, wedge_bracket,
)


@dataclass
class ResidualReport:
    entries: dict
    h: float = None
    orders: dict = field(default_factory=dict)
    star: str = ""
    note: str = ""

    def l2(self, name):
        return self.entries[name][0]

    def sup(self, name):
        return self.entries[name][1]

    @property
    def names(self):
        return list(self.entries)

    @property
    def max_sup(self):
        return max((v[1] for v in self.entries.values()), default=0.0)

    @property
    def total_l2(self):
        return float(np.sqrt(sum(v[0] ** 2 for v in self.entries.values())))

    def rows(self):
        """``(equation, grid_h, l2, sup, order_estimate)`` tuples."""
        return [(k, self.h, l2, sup, self.orders.get(k)) for k, (l2, sup) in self.entries.items()]


def _sup(f):
    return float(np.sqrt(np.max(f.pointwise_norm2(), initial=0.0)))


def report(fields, star="", note=""):
    grid = next(iter(fields.values())).grid
    entries = {k: (l2_norm(f), _sup(f)) for k, f in fields.items()}
    return ResidualReport(entries, h=grid.h, star=star, note=note)


def richardson_order(q_h, q_h2, q_h4):
    """Observed order from three values on grids h, h/2, h/4."""
    num, den = q_h - q_h2, q_h2 - q_h4
    if den == 0 or num == 0:
        return float("nan")
    return float(np.log2(abs(num / den)))


def _check(A, *fs):
    for f in fs:
        if f.grid != A.grid:
            raise ValueError("fields live on different grids")
        if f.n != A.n:
            raise ValueError("fields have different matrix sizes")


def kw_fields(A, Phi):
    """``F_A − Φ∧Φ + ⋆d_AΦ`` (2-form) and ``d_A^⋆Φ = −⋆d_A⋆Φ`` (0-form)."""
    if A.degree != 1 or Phi.degree != 1:
        raise ValueError("A and Phi must be 1-forms")
    _check(A, Phi)
    F = curvature(A).total
    dAPhi = covariant_d(A, Phi)
    eq1 = F - wedge(Phi, Phi) + hodge_star(dAPhi, "M")
    div = -1.0 * hodge_star(covariant_d(A, hodge_star(Phi, "M")), "M")
    return {"kw_curvature": eq1, "kw_divergence": div}


def kw_residual(A, Phi):
    return report(kw_fields(A, Phi), star="M")


def flatness_fields(A, Phi):
    _check(A, Phi)
    F = curvature(A).total
    dAPhi = covariant_d(A, Phi)
    out = {
        "flat_curvature": F - wedge(Phi, Phi),
        "flat_dA_phi": dAPhi,
        "flat_dA_star_phi": covariant_d(A, hodge_star(Phi, "M")),
    }
    # complexified connection A + iΦ
    cA = A + 1j * Phi
    dcA = exterior_d(cA)
    out["complex_curvature"] = LatticeField(
        A.grid, 2, dcA.components + forms.wedge(cA.components, 1, cA.components, 1), "sl_n_c")
    return out


def flatness_residual(A, Phi):
    """Norms of ``F_A − Φ∧Φ``, ``d_AΦ``, ``d_A⋆Φ`` and ``F_{A+iΦ}``."""
    return report(flatness_fields(A, Phi), star="M")


def ebe_fields(A, phi, phi1):
    """Extended Bogomolny residuals on Σ×ℝ⁺ with the 3d star ``"sigma_y"``."""
    _check(A, phi, phi1)
    F = curvature(A).slice
    eq1 = F - wedge(phi, phi) - hodge_star(covariant_d(A, phi1), "sigma_y")
    eq2 = covariant_d(A, phi) + hodge_star(wedge_bracket(phi, phi1), "sigma_y")
    eq3 = -1.0 * hodge_star(covariant_d(A, hodge_star(phi, "sigma_y")), "sigma_y")
    return {"ebe_curvature": eq1, "ebe_bracket": eq2, "ebe_divergence": eq3}


def ebe_residual(A, phi, phi1):
    return report(ebe_fields(A, phi, phi1), star="sigma_y")


def flow_rhs(A, phi, phi_y):
    """Right-hand sides ``(∂_yA, ∂_yφ, ∂_yφ_y)`` of the temporal-gauge flow.

    ``∂_yA = ⋆d_Aφ + [φ_y, φ]``, ``∂_yφ = d_Aφ_y + ⋆(F_A − φ∧φ)``,
    ``∂_yφ_y = d_A^⋆φ``, with the 3d star on the ``"slice"`` factor.
    """
    _check(A, phi, phi_y)
    sl = (0, 1, 2)
    if np.max(np.abs(A.components[3]), initial=0.0) > 0:
        raise ValueError("flow equations assume temporal gauge A_y = 0")
    F = curvature(A).total.select(sl)
    dA = hodge_star(covariant_d(A, phi).select(sl), "slice") + wedge_bracket(phi_y, phi)
    dphi = covariant_d(A, phi_y).select(sl) + hodge_star(F - wedge(phi, phi), "slice")
    dphi_y = -1.0 * hodge_star(covariant_d(A, hodge_star(phi.select(sl), "slice")).select(sl), "slice")
    return dA.select(sl), dphi.select(sl), dphi_y


# ----------------------------------------------------------------------------
# Hermitian metrics, Hitchin equations and the complex operators


@dataclass(frozen=True, eq=False)
class HermitianMetricField:
    """Positive Hermitian ``H`` with ``det H = 1`` at every grid site."""

    values: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.values, dtype=complex)
        if np.max(np.abs(H - np.swapaxes(H, -1, -2).conj()), initial=0.0) > 1e-10:
            raise ValueError("metric must be Hermitian")
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise ValueError("metric is not positive definite") from exc
        if np.max(np.abs(np.linalg.det(H) - 1), initial=0.0) > 1e-10:
            raise ValueError("metric must have unit determinant")
        object.__setattr__(self, "values", H)
        object.__setattr__(self, "_frame", np.swapaxes(L, -1, -2).conj())

    @classmethod
    def identity(cls, grid, n):
        return cls(np.broadcast_to(np.eye(n, dtype=complex), grid.shape + (n, n)).copy())

    @property
    def frame(self):
        """``h`` with ``H = h^† h`` (upper-triangular Cholesky factor)."""
        return self._frame

    def is_identity(self):
        n = self.values.shape[-1]
        return np.max(np.abs(self.values - np.eye(n)), initial=0.0) < 1e-14

    def adjoint(self, X):
        """``X^{†_H} = H⁻¹ X^† H``."""
        H = self.values
        return np.linalg.solve(H, np.swapaxes(X, -1, -2).conj() @ H)


def _dag(X):
    return np.swapaxes(X, -1, -2).conj()


def _comm(X, Y):
    return X @ Y - Y @ X


def _zbar(grid, X):
    return 0.5 * (grid.derivative(X, 1, 0) + 1j * grid.derivative(X, 2, 0))


def _z(grid, X):
    return 0.5 * (grid.derivative(X, 1, 0) - 1j * grid.derivative(X, 2, 0))


def hitchin_fields(A, phi_z, H=None):
    """Hitchin residuals on the Σ directions (x2, x3).

    ``phi_z`` is the dz coefficient of the Higgs field (0-form, sl(n,C)).
    The holomorphic structure is ``∂̄ + α dz̄`` with ``α = ½(A₂ + iA₃)``; the
    curvature of the Chern connection of ``(∂̄_α, H)`` plus ``[φ, φ^{⋆_H}]``
    is reported as its dx2∧dx3 coefficient ``−2i(F_{zz̄} + [φ_z, φ_z^{⋆_H}])``.
    At ``H = 1`` and ``φ_z = (φ₂ − iφ₃)/2`` this equals ``F₂₃ − [φ₂, φ₃]``.
    The second residual is ``∂̄φ_z + [α, φ_z]``.
    """
    grid = A.grid
    n = A.n
    H = HermitianMetricField.identity(grid, n) if H is None else H
    alpha = 0.5 * (A.components[1] + 1j * A.components[2])
    ph = phi_z.components[0]
    hol = _zbar(grid, ph) + _comm(alpha, ph)
    if H.is_identity():
        h = hi = None
        a_u, ph_u = alpha, ph
    else:
        h = H.frame
        hi = np.linalg.inv(h)
        a_u = h @ alpha @ hi - _zbar(grid, h) @ hi
        ph_u = h @ ph @ hi
    # unitary frame: A_z = −α^†
    az = -_dag(a_u)
    Fzz = _z(grid, a_u) - _zbar(grid, az) + _comm(az, a_u)
    res = -2j * (Fzz + _comm(ph_u, _dag(ph_u)))
    if h is not None:
        res = hi @ res @ h
    eq1 = LatticeField.zeros(grid, 2, n, "sl_n_c")
    eq1.components[forms.position(2)[(1, 2)]] = res
    eq2 = LatticeField(grid, 0, hol[None], "sl_n_c")
    return {"hitchin_curvature": eq1, "hitchin_holomorphic": eq2}


def hitchin_residual(A, phi_z, H=None):
    return report(hitchin_fields(A, phi_z, H), star="flat T2",
                  note="F_H + [phi, phi^*H] as dx2^dx3 coefficient")


def lambda_contract(two_form):
    """``(i/2)Λ`` of a 2-form on Σ, with ``Λ((i/2)dz∧dz̄) = 1``."""
    return 0.5j * two_form.component(1, 2)


def _ebe_unitary(A, phi, phi1, H):
    """Complex-gauge transform EBE data by the Cholesky frame of ``H``.

    Returns unitary-frame arrays ``(A₂, A₃, A_y, φ₂, φ₃, φ₁)`` and the frame.
    """
    grid = A.grid
    alpha = 0.5 * (A.components[1] + 1j * A.components[2])
    vphi = phi.components[1] - 1j * phi.components[2]
    beta = A.components[3] - 1j * phi1.components[0]
    h = H.frame
    hi = np.linalg.inv(h)
    alpha = h @ alpha @ hi - _zbar(grid, h) @ hi
    vphi = h @ vphi @ hi
    beta = h @ beta @ hi - grid.derivative(h, 3, 0) @ hi
    A2, A3 = alpha - _dag(alpha), -1j * (alpha + _dag(alpha))
    Ay = 0.5 * (beta - _dag(beta))
    p1 = 0.5j * (beta + _dag(beta))
    p2, p3 = 0.5 * (vphi - _dag(vphi)), 0.5j * (vphi + _dag(vphi))
    return (A2, A3, Ay, p2, p3, p1), h, hi


def moment_map_fields(A, phi, phi1, H=None):
    """``(i/2)Λ([𝒟₁,𝒟₁^†] + [𝒟₂,𝒟₂^†]) + [𝒟₃,𝒟₃^†]`` as a 0-form.

    With ``𝒟₁ = ∇₂ + i∇₃``, ``𝒟₂ = ad(φ₂ − iφ₃)``, ``𝒟₃ = ∇_y − iφ₁`` and
    adjoints taken in the unitary frame of ``H`` this equals
    ``2i (F₂₃ − [φ₂, φ₃] − ∇_yφ₁)`` there, conjugated back by the frame.
    """
    _check(A, phi, phi1)
    grid, n = A.grid, A.n
    H = HermitianMetricField.identity(grid, n) if H is None else H
    if H.is_identity():
        F23 = curvature(A).total.component(1, 2)
        mu = 2j * (F23 - _comm(phi.components[1], phi.components[2])
                   - covariant_partial(A, phi1, 3)[0])
    else:
        (A2, A3, Ay, p2, p3, p1), h, hi = _ebe_unitary(A, phi, phi1, H)
        d = grid.derivative
        F23 = d(A3, 1, 0) - d(A2, 2, 0) + _comm(A2, A3)
        Dy_p1 = d(p1, 3, 0) + _comm(Ay, p1)
        mu = hi @ (2j * (F23 - _comm(p2, p3) - Dy_p1)) @ h
    return {"moment_map": LatticeField(grid, 0, mu[None], "sl_n_c")}


def moment_map_residual(A, phi, phi1, H=None):
    return report(moment_map_fields(A, phi, phi1, H), star="sigma_y",
                  note="Lambda normalized by (i/2)dz^dzbar = dx2^dx3")


class DOperators:
    """The operators ``𝒟₁ = ∇₂ + i∇₃``, ``𝒟₂ = ad(φ₂ − iφ₃)``,
    ``𝒟₃ = ∇_y − i ad φ₁`` acting on End(E)-valued sections (0-forms)."""

    def __init__(self, A, phi, phi1, H=None):
        _check(A, phi, phi1)
        self.A, self.phi, self.phi1, self.H = A, phi, phi1, H
        self.grid = A.grid
        self.vphi = phi.components[1] - 1j * phi.components[2]

    def _nabla(self, f, mu):
        g = self.grid
        A = self.A.components[mu]
        return g.derivative(f, mu, 0) + _comm(A, f)

    def apply(self, i, f):
        f = f.components[0] if isinstance(f, LatticeField) else f
        if i == 1:
            return self._nabla(f, 1) + 1j * self._nabla(f, 2)
        if i == 2:
            return _comm(self.vphi, f)
        if i == 3:
            return self._nabla(f, 3) - 1j * _comm(self.phi1.components[0], f)
        raise ValueError(f"operator index must be 1, 2 or 3, got {i}")

    def commutator(self, i, j, f):
        return self.apply(i, self.apply(j, f)) - self.apply(j, self.apply(i, f))


def d_operators(A, phi, phi1, H=None):
    return DOperators(A, phi, phi1, H)


def commutator_residual(ops, i, j, sections):
    """Sup and L² (max over sections) of ``[𝒟_i, 𝒟_j] f``."""
    if i == j or {i, j} - {1, 2, 3}:
        raise ValueError("need distinct operator indices in {1, 2, 3}")
    l2, sup = 0.0, 0.0
    for f in sections:
        c = LatticeField(ops.grid, 0, ops.commutator(i, j, f)[None], "sl_n_c")
        l2 = max(l2, l2_norm(c))
        sup = max(sup, _sup(c))
    return ResidualReport({f"commutator_{i}{j}": (l2, sup)}, h=ops.grid.h)


def random_sections(grid, n, count, rng=None):
    """Smooth sl(n,C)-valued test sections built from low Fourier modes."""
    rng = np.random.default_rng(rng)
    x1, x2, x3, y = grid.mesh()
    out = []
    for _ in range(count):
        M = rng.standard_normal((4, n, n)) + 1j * rng.standard_normal((4, n, n))
        M -= np.trace(M, axis1=-2, axis2=-1)[:, None, None] * np.eye(n) / n
        k = rng.integers(0, 2, size=(3,))
        ph = rng.uniform(0, 2 * np.pi, size=4)
        basis = (np.cos(2 * np.pi * (k[0] * x1 + k[1] * x2) + ph[0]),
                 np.sin(2 * np.pi * (x2 + k[2] * x3) + ph[1]),
                 np.cos(2 * np.pi * x3 + ph[2]) * np.exp(-(y - y.mean()) ** 2),
                 np.cos(y + ph[3]))
        f = sum(b[..., None, None] * M[i] for i, b in enumerate(basis))
        out.append(LatticeField(grid, 0, f[None], "sl_n_c"))
    return out


# ----------------------------------------------------------------------------
# knot model on the spherical patch

_C6 = ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60))


def _chart_metric(R, s):
    one = np.ones_like(R)
    return [one, one, R ** 2, (R * np.cos(s)) ** 2]


def _c6_partials(fn, pts, h, real):
    """Order-6 central differences of every array ``fn`` returns, along each
    of the three point coordinates (stored at partial indices 1..3)."""
    base = fn(*pts)
    parts = [np.zeros((4,) + b.shape, dtype=b.dtype) for b in base]
    for mu in (1, 2, 3):
        for j, c in _C6:
            for sgn in (1, -1):
                args = list(pts)
                args[mu - 1] = args[mu - 1] + sgn * j * h
                w = real.type(sgn * c) / h
                for p, v in zip(parts, fn(*args)):
                    p[mu] += w * v
    return base, parts


def _kw_from_partials(A, Phi, pA, pP, pS, g, orientation):
    F = forms.d_from_partials(pA, 1) + forms.wedge(A, 1, A, 1)
    dAPhi = forms.d_from_partials(pP, 1) + forms.bracket_wedge(A, 1, Phi, 1)
    eq1 = F - forms.wedge(Phi, 1, Phi, 1) + forms.star(dAPhi, 2, g, orientation=orientation)
    starPhi = forms.star(Phi, 1, g, orientation=orientation)
    dS = forms.d_from_partials(pS, 3) + forms.bracket_wedge(A, 1, starPhi, 3)
    eq2 = -forms.star(dS, 4, g, orientation=orientation)
    n1 = np.sqrt(forms.pointwise_norm2(eq1, 2, g)).astype(float)
    n2 = np.sqrt(forms.pointwise_norm2(eq2, 0, g)).astype(float)
    return n1, n2


def _knot_chart(k, R, s, theta, h, dtype, real):
    from .models import su2_knot_model

    def fn(R_, s_, t_):
        A, Phi = su2_knot_model(k, R_, s_, t_, dtype).chart_forms()
        return A, Phi, forms.star(Phi, 1, _chart_metric(R_, s_), orientation=-1)

    (A, Phi, _), (pA, pP, pS) = _c6_partials(fn, [R, s, theta], h, real)
    return _kw_from_partials(A, Phi, pA, pP, pS, _chart_metric(R, s), -1)


def _knot_cartesian(k, R, s, theta, h, dtype, real):
    from .models import su2_knot_model

    r = R * np.cos(s)
    pts = [r * np.cos(theta), r * np.sin(theta), R * np.sin(s)]

    def fn(x2, x3, y):
        rr = np.hypot(x2, x3)
        A, Phi = su2_knot_model(k, np.hypot(rr, y), np.arctan2(y, rr), np.arctan2(x3, x2), dtype).cartesian_forms()
        return A, Phi, forms.star(Phi, 1)

    (A, Phi, _), (pA, pP, pS) = _c6_partials(fn, pts, h, real)
    return _kw_from_partials(A, Phi, pA, pP, pS, None, 1)


def knot_kw_pointwise(k, R, s, theta, step=1e-4, dtype=np.clongdouble, axis_cut=0.1):
    """Pointwise KW residual norms of the weight-k knot model.

    Away from the y-axis the model is differentiated in the chart
    ``(x1, R, s, θ)`` (metric ``diag(1, 1, R², R²cos²s)``, orientation
    dx1∧dx2∧dx3∧dy = −R²cos s dx1∧dR∧ds∧dθ). The chart degenerates at
    ``s = π/2``, so points with ``cos s < axis_cut`` are differentiated in
    Cartesian ``(x2, x3, y)`` instead, where the fields are smooth. Both use
    6th-order central differences of the given step, evaluated in ``dtype``
    (extended precision by default, so the differencing round-off stays far
    below the truncation error). Returns ``(|eq1|, |eq2|)`` as float64
    arrays in an orthonormal frame.
    """
    real = np.real(np.zeros((), dtype=dtype)).dtype
    R, s, theta = (np.atleast_1d(np.asarray(v, dtype=real)) for v in (R, s, theta))
    h = real.type(step)
    near = np.cos(s) < axis_cut
    n1 = np.zeros(R.shape)
    n2 = np.zeros(R.shape)
    for mask, fn in ((~near, _knot_chart), (near, _knot_cartesian)):
        if np.any(mask):
            n1[mask], n2[mask] = fn(k, R[mask], s[mask], theta[mask], h, dtype, real)
    return n1, n2


def knot_kw_residual(k, R, s, theta, step=1e-4, dtype=np.clongdouble):
    """Knot-model KW residual over sample points; ``l2`` is the RMS over samples."""
    n1, n2 = knot_kw_pointwise(k, R, s, theta, step, dtype)
    entries = {
        "kw_curvature": (float(np.sqrt(np.mean(n1 ** 2))), float(np.max(n1))),
        "kw_divergence": (float(np.sqrt(np.mean(n2 ** 2))), float(np.max(n2))),
    }
    return ResidualReport(entries, h=step, star="M (spherical chart)",
                          note=f"order-6 differences, {np.dtype(dtype).name}")
