"""Closed-form field configurations: Nahm pole, SU(2) knot model, Hitchin
section, and the lift of extended Bogomolny data to S¹×Σ×ℝ⁺.

Conventions for the knot model
------------------------------
Points are given in spherical coordinates around the knot,
``y = R sin s``, ``z = x2 + i x3 = R cos s e^{iθ}``. The model of weight k is

    A   = a(s) dθ · D,             a = −(k+1) cos²s (P^k − M^k)/(P^{k+1} − M^{k+1})
    φ_z = 2(k+1) e^{ikθ} cos^k s / (R (P^{k+1} − M^{k+1})) · e₊
    φ₁  = (k+1)/R · (P^{k+1} + M^{k+1})/(P^{k+1} − M^{k+1}) · D

with ``P = 1 + sin s``, ``M = 1 − sin s``, ``D = diag(i/2, −i/2)`` and
``e₊`` the raising matrix. The Σ part of the Higgs field is
``½(φ_z dz − φ_z^† dz̄)``, i.e. real components
``φ₂ = (φ_z − φ_z^†)/2`` and ``φ₃ = (i/2)(φ_z + φ_z^†)``. At k = 0 this is
exactly a Nahm pole ``Σ τ_a dx_a / y`` for the triple ``τ = (−t₃, −t₂, −t₁)``.
"""
from dataclasses import dataclass

import numpy as np

from . import lie
from .lattice import LatticeField

E_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
D_DIAG = np.diag([0.5j, -0.5j])


@dataclass(frozen=True)
class Weight:
    k: tuple

    def __post_init__(self):
        k = (self.k,) if np.isscalar(self.k) else tuple(self.k)
        if any(int(v) != v or v < 0 for v in k):
            raise ValueError(f"weights must be nonnegative integers, got {k}")
        object.__setattr__(self, "k", tuple(int(v) for v in k))

    @property
    def n(self):
        return len(self.k) + 1

    @property
    def total(self):
        return sum(self.k)

    @property
    def is_knot(self):
        return any(self.k)


def nahm_pole_field(t, grid):
    """``A = 0``, ``Φ = Σ_a t_a dx_a / y`` with exact partials (∂_y = −t_a/y²)."""
    T = t.array() if isinstance(t, lie.PrincipalTriple) else np.asarray(t)
    n = T.shape[-1]
    y = grid.axis(3)
    inv = np.broadcast_to(1 / y, grid.shape)[..., None, None]
    comps, parts = {}, {}
    for a in range(3):
        comps[(a,)] = inv * T[a]
        p = np.zeros((4,) + grid.shape + (n, n), dtype=complex)
        p[3] = -(inv ** 2) * T[a]
        parts[(a,)] = p
    Phi = LatticeField.from_components(grid, 1, comps, n, partials=parts)
    A = LatticeField.zeros(grid, 1, n, with_partials=True)
    return A, Phi


def nahm_ebe_triple(t, grid):
    """The Nahm pole as extended Bogomolny data: ``(0, (t₂dx₂+t₃dx₃)/y, t₁/y)``."""
    A, Phi = nahm_pole_field(t, grid)
    phi = Phi.select((1, 2))
    phi1 = LatticeField(grid, 0, Phi.components[0:1].copy(), "su_n", Phi.partials[:, 0:1].copy())
    return A, phi, phi1


def knot_frame_gauge():
    """Constant g with ``g⁻¹ τ_a g = t_a`` for the weight-0 knot-model triple.

    ``g = exp(π (t₁ − t₃)/√2)``, a rotation by π about ``(1, 0, −1)/√2``.
    """
    t = lie.principal_triple(2)
    return lie.exp_su(np.pi * (t.t1.entries - t.t3.entries) / np.sqrt(2))


@dataclass(frozen=True)
class KnotModelField:
    """Values of the weight-k SU(2) knot model at sample points."""

    k: int
    R: np.ndarray
    s: np.ndarray
    theta: np.ndarray
    A_theta: np.ndarray
    phi_z: np.ndarray
    phi1: np.ndarray

    @property
    def phi_y(self):
        return np.zeros_like(self.phi1)

    def phi_real(self):
        """Real components ``(φ₂, φ₃)`` of the Σ part of the Higgs field."""
        pd = np.conj(np.swapaxes(self.phi_z, -1, -2))
        return (self.phi_z - pd) / 2, 0.5j * (self.phi_z + pd)

    def chart_forms(self):
        """``(A, Φ)`` as 1-forms in the chart ``(x1, R, s, θ)``.

        Arrays of shape ``(4, npts, 2, 2)``; the chart metric is
        ``diag(1, 1, R², R² cos²s)`` and its orientation is opposite to the
        increasing coordinate order.
        """
        R, s, th = self.R, self.s, self.theta
        e = np.exp(1j * th)
        dz = (np.zeros_like(e), e * np.cos(s), -e * R * np.sin(s), 1j * e * R * np.cos(s))
        pd = np.conj(np.swapaxes(self.phi_z, -1, -2))
        Phi = np.stack([self.phi1] + [
            0.5 * (dz[mu][..., None, None] * self.phi_z - np.conj(dz[mu])[..., None, None] * pd)
            for mu in (1, 2, 3)])
        A = np.zeros_like(Phi)
        A[3] = self.A_theta
        return A, Phi

    def cartesian_forms(self):
        """``(A, Φ)`` as 1-forms in ``(x1, x2, x3, y)``, shape ``(4, npts, 2, 2)``."""
        r = self.R * np.cos(self.s)
        x2, x3 = r * np.cos(self.theta), r * np.sin(self.theta)
        phi2, phi3 = self.phi_real()
        Phi = np.stack([self.phi1, phi2, phi3, np.zeros_like(phi2)])
        A = np.zeros_like(Phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            w2 = np.where(r > 0, -x3 / r ** 2, 0.0)[..., None, None]
            w3 = np.where(r > 0, x2 / r ** 2, 0.0)[..., None, None]
        A[1] = w2 * self.A_theta
        A[2] = w3 * self.A_theta
        return A, Phi

    def norms(self):
        """Pointwise metric norms ``(|A|, |Φ|)`` with Frobenius matrix norms."""
        A, Phi = self.cartesian_forms()
        a = np.sqrt(np.sum(np.abs(A) ** 2, axis=(0, -2, -1)))
        p = np.sqrt(np.sum(np.abs(Phi) ** 2, axis=(0, -2, -1)))
        return a, p


def su2_knot_model(k, R, s, theta, dtype=complex):
    """Evaluate the weight-k SU(2) knot model at spherical points.

    ``dtype`` may be ``np.clongdouble`` for extended-precision evaluation.
    """
    if int(k) != k or k < 0:
        raise ValueError(f"weight must be a nonnegative integer, got {k}")
    k = int(k)
    real = np.real(np.zeros((), dtype=dtype)).dtype
    R, s, theta = (np.asarray(v, dtype=real) for v in (R, s, theta))
    if np.any(R <= 0):
        raise ValueError("R must be positive (stay off the knot)")
    if np.any(s <= 0):
        raise ValueError("s must be positive (stay off the boundary)")
    half = real.type(0.5)
    Dm = np.array([[1j * half, 0], [0, -1j * half]], dtype=dtype)
    Ep = E_PLUS.astype(dtype)
    sn, cs = np.sin(s), np.cos(s)
    P, M = 1 + sn, 1 - sn
    den = P ** (k + 1) - M ** (k + 1)
    a = -(k + 1) * cs ** 2 * (P ** k - M ** k) / den
    f = 2 * (k + 1) * np.exp(1j * k * theta.astype(dtype)) * cs ** k / (R * den)
    g = (k + 1) / R * (P ** (k + 1) + M ** (k + 1)) / den
    return KnotModelField(
        k, R, s, theta,
        A_theta=a[..., None, None] * Dm,
        phi_z=f[..., None, None] * Ep,
        phi1=g[..., None, None] * Dm,
    )


def hitchin_section_higgs(n, q):
    """Hitchin-section Higgs field with ``√(i(n−i))`` on the superdiagonal.

    ``q = [q₂, …, q_n]`` (scalars or equally shaped sample arrays); the last
    row reads ``(q_n, q_{n−1}, …, q₂, 0)``. Returns shape ``(..., n, n)``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if len(q) != n - 1:
        raise ValueError(f"need {n - 1} differentials q_2..q_n, got {len(q)}")
    q = [np.asarray(v, dtype=complex) for v in q]
    shape = np.broadcast_shapes(*(v.shape for v in q))
    out = np.zeros(shape + (n, n), dtype=complex)
    for i in range(1, n):
        out[..., i - 1, i] = np.sqrt(i * (n - i))
    for col in range(n - 1):
        # column col holds q_{n-col}
        out[..., n - 1, col] = q[n - 2 - col]
    return out


def _x1_variation(f):
    c = f.components
    return float(np.max(np.abs(c - np.roll(c, 1, axis=1)), initial=0.0))


def pullback_to_kw(A, phi, phi1, tol=1e-12):
    """Lift EBE data to ``(Â, Φ̂) = (A, φ + φ₁ dx1)`` on S¹×Σ×ℝ⁺."""
    if A.degree != 1 or phi.degree != 1 or phi1.degree != 0:
        raise ValueError("expected (1-form, 1-form, 0-form)")
    for name, f, bad in (("A", A, (0, 3)), ("phi", phi, (0, 3))):
        if np.max(np.abs(f.components[list(bad)]), initial=0.0) > tol:
            raise ValueError(f"{name} has dx1 or dy components; expected Σ components only")
    for name, f in (("A", A), ("phi", phi), ("phi1", phi1)):
        if _x1_variation(f) > tol * (1 + np.max(np.abs(f.components), initial=0.0)):
            raise ValueError(f"{name} depends on x1")
    comps = phi.components.copy()
    comps[0] = phi1.components[0]
    parts = None
    if phi.partials is not None and phi1.partials is not None:
        parts = phi.partials.copy()
        parts[:, 0] = phi1.partials[:, 0]
    return A, LatticeField(phi.grid, 1, comps, phi.algebra_tag, parts)
