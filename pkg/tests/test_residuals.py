import numpy as np
import pytest

from kwlab import lie
from kwlab.lattice import Grid4, LatticeField, l2_norm
from kwlab.models import E_PLUS, nahm_ebe_triple, nahm_pole_field, pullback_to_kw
from kwlab.residuals import (
    HermitianMetricField, commutator_residual, d_operators, ebe_fields, ebe_residual,
    flatness_fields, flatness_residual, flow_rhs, hitchin_fields, hitchin_residual,
    knot_kw_residual, kw_fields, kw_residual, lambda_contract, moment_map_fields,
    random_sections, richardson_order,
)
from kwlab.testfields import random_ebe_triple


def grid(N=6, Ny=8, y=(0.5, 2.0)):
    return Grid4((N, N, N, Ny), y)


def random_pair(g, rng, n=2):
    X1, X2, X3, Y = g.mesh()
    out = []
    for _ in range(2):
        c = np.zeros((4,) + g.shape + (n, n), dtype=complex)
        for mu in range(4):
            M = lie.random_su(n, 2, rng=rng)
            prof = np.sin(2 * np.pi * (X1 + X3) + rng.uniform(0, 6)) * np.exp(-(Y - 1.2) ** 2)
            c[mu] = prof[..., None, None] * M[0] + np.cos(2 * np.pi * X2)[..., None, None] * M[1]
        out.append(LatticeField(g, 1, c))
    return out


# --- Kapustin-Witten ----------------------------------------------------

def test_kw_zero_fields():
    g = grid()
    z = LatticeField.zeros(g, 1, 2)
    rep = kw_residual(z, z)
    assert rep.max_sup == 0 and rep.total_l2 == 0
    assert set(rep.names) == {"kw_curvature", "kw_divergence"}
    assert [r[0] for r in rep.rows()] == rep.names


@pytest.mark.parametrize("n", [2, 3])
def test_kw_nahm_pole(n):
    rep = kw_residual(*nahm_pole_field(lie.principal_triple(n), grid(4, 16, (0.2, 4.0))))
    assert rep.max_sup < 1e-10


def test_kw_rejects_bad_degrees():
    g = grid()
    with pytest.raises(ValueError):
        kw_fields(LatticeField.zeros(g, 0, 2), LatticeField.zeros(g, 1, 2))
    with pytest.raises(ValueError):
        kw_fields(LatticeField.zeros(g, 1, 2), LatticeField.zeros(grid(4), 1, 2))


def test_kw_norms_gauge_invariant(rng):
    g = grid()
    A, Phi = random_pair(g, rng)
    u = lie.random_unitary(2, rng=rng)
    r1 = kw_residual(A, Phi)
    r2 = kw_residual(A.conjugate_by(u), Phi.conjugate_by(u))
    for k in r1.names:
        assert r2.l2(k) == pytest.approx(r1.l2(k), rel=1e-10)
        assert r2.sup(k) == pytest.approx(r1.sup(k), rel=1e-10)


# --- flatness -----------------------------------------------------------

def test_complex_curvature_splits(rng):
    g = grid()
    A, Phi = random_pair(g, rng)
    f = flatness_fields(A, Phi)
    lhs = l2_norm(f["complex_curvature"]) ** 2
    rhs = l2_norm(f["flat_curvature"]) ** 2 + l2_norm(f["flat_dA_phi"]) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_flatness_zero_and_nahm_is_not_flat():
    g = grid(4, 8, (0.5, 2.0))
    z = LatticeField.zeros(g, 1, 2)
    assert flatness_residual(z, z).max_sup == 0
    rep = flatness_residual(*nahm_pole_field(lie.principal_triple(2), g))
    # the pole solves KW but F − Φ∧Φ = −Φ∧Φ ≠ 0
    assert rep.sup("flat_curvature") > 0.1


# --- extended Bogomolny -------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_ebe_nahm(n):
    rep = ebe_residual(*nahm_ebe_triple(lie.principal_triple(n), grid(4, 16, (0.2, 4.0))))
    assert rep.max_sup < 1e-10


def test_ebe_zero():
    g = grid()
    z1, z0 = LatticeField.zeros(g, 1, 2), LatticeField.zeros(g, 0, 2)
    assert ebe_residual(z1, z1, z0).max_sup == 0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pullback_norm_identity(seed):
    g = Grid4((4, 8, 8, 12), (0.5, 2.0))
    A, phi, phi1 = random_ebe_triple(seed, g)
    kw = kw_residual(*pullback_to_kw(A, phi, phi1))
    ebe = ebe_residual(A, phi, phi1)
    lhs = kw.l2("kw_curvature") ** 2
    rhs = ebe.l2("ebe_curvature") ** 2 + ebe.l2("ebe_bracket") ** 2
    assert lhs == pytest.approx(rhs, rel=1e-10)
    assert kw.l2("kw_divergence") == pytest.approx(ebe.l2("ebe_divergence"), rel=1e-10)
    assert lhs > 1e-3  # the random data is far from a solution


# --- Hitchin ------------------------------------------------------------

def _phi_z(g, M):
    return LatticeField(g, 0, np.broadcast_to(M, g.shape + M.shape)[None].copy(), "sl_n_c")


def test_hitchin_constant_raising_matrix():
    g = grid(4, 4)
    z = LatticeField.zeros(g, 1, 2)
    c = 0.7 - 0.2j
    f = hitchin_fields(z, _phi_z(g, c * E_PLUS))
    expect = -2j * abs(c) ** 2 * np.diag([1, -1])
    assert np.allclose(f["hitchin_curvature"].component(1, 2), expect)
    assert np.max(np.abs(f["hitchin_holomorphic"].components)) == 0


def test_hitchin_diagonal_higgs_is_solution():
    g = grid(4, 4)
    z = LatticeField.zeros(g, 1, 2)
    assert hitchin_residual(z, _phi_z(g, np.diag([1 + 2j, -1 - 2j]))).max_sup == 0


def test_hitchin_constant_metric_oracle():
    g = grid(4, 4)
    z = LatticeField.zeros(g, 1, 2)
    Hm = np.diag([2.0, 0.5]).astype(complex)
    H = HermitianMetricField(np.broadcast_to(Hm, g.shape + (2, 2)).copy())
    phi = E_PLUS + 0.3 * np.diag([1, -1])
    got = hitchin_fields(z, _phi_z(g, phi), H)["hitchin_curvature"].component(1, 2)
    dagH = np.linalg.solve(Hm, phi.conj().T @ Hm)
    expect = -2j * (phi @ dagH - dagH @ phi)
    assert np.allclose(got, expect)


def test_hitchin_matches_slice_curvature(rng):
    # at H = 1 and φ_z = (φ₂ − iφ₃)/2 the curvature residual is F₂₃ − [φ₂, φ₃]
    g = Grid4((4, 8, 8, 4), (1.0, 2.0))
    A, phi, _ = random_ebe_triple(3, g)
    pz = LatticeField(g, 0, (0.5 * (phi.components[1] - 1j * phi.components[2]))[None], "sl_n_c")
    got = hitchin_fields(A, pz)["hitchin_curvature"].component(1, 2)
    from kwlab.lattice import curvature
    p2, p3 = phi.components[1], phi.components[2]
    expect = curvature(A).total.component(1, 2) - (p2 @ p3 - p3 @ p2)
    assert np.allclose(got, expect, atol=1e-12)


def test_metric_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        HermitianMetricField(np.array([[1, 1], [0, 1]], dtype=complex))
    with pytest.raises(ValueError, match="positive"):
        HermitianMetricField(np.diag([-1.0, -1.0]))
    with pytest.raises(ValueError, match="determinant"):
        HermitianMetricField(np.diag([2.0, 2.0]))
    H = HermitianMetricField(np.diag([4.0, 0.25]))
    assert np.allclose(H.frame.conj().T @ H.frame, H.values)
    X = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(H.adjoint(X), np.linalg.inv(H.values) @ X.conj().T @ H.values)


# --- moment map and the 𝒟 operators ------------------------------------

def test_moment_map_reduces_to_hitchin(rng):
    g = Grid4((4, 8, 8, 4), (1.0, 2.0))
    A, phi, _ = random_ebe_triple(4, g)
    z0 = LatticeField.zeros(g, 0, 2)
    # y-independent data with φ₁ = 0
    for f in (A, phi):
        f.components[:] = f.components[:, :, :, :, :1]
    mu = moment_map_fields(A, phi, z0)["moment_map"].components[0]
    pz = LatticeField(g, 0, (0.5 * (phi.components[1] - 1j * phi.components[2]))[None], "sl_n_c")
    hit = hitchin_fields(A, pz)["hitchin_curvature"]
    assert np.allclose(mu, 4 * lambda_contract(hit), atol=1e-12)


def test_moment_map_unitary_covariance(rng):
    g = Grid4((4, 6, 6, 8), (0.5, 2.0))
    A, phi, phi1 = random_ebe_triple(5, g)
    u = lie.random_unitary(2, rng=rng)
    mu = moment_map_fields(A, phi, phi1)["moment_map"].components[0]
    mu_u = moment_map_fields(A.conjugate_by(u), phi.conjugate_by(u), phi1.conjugate_by(u))["moment_map"].components[0]
    assert np.allclose(mu_u, np.linalg.inv(u) @ mu @ u, atol=1e-12)


def test_moment_map_constant_metric_on_zero_data():
    g = Grid4((4, 4, 4, 4), (0.5, 2.0))
    z1, z0 = LatticeField.zeros(g, 1, 2), LatticeField.zeros(g, 0, 2)
    H = HermitianMetricField(np.broadcast_to(np.diag([3.0, 1 / 3]), g.shape + (2, 2)).astype(complex))
    assert np.max(np.abs(moment_map_fields(z1, z1, z0, H)["moment_map"].components)) < 1e-14


def test_moment_map_nahm_pole_vanishes():
    g = Grid4((4, 4, 4, 16), (0.2, 4.0))
    A, phi, phi1 = nahm_ebe_triple(lie.principal_triple(2), g)
    # ∇_yφ₁ is differenced on the grid here, so it is only O(h²) small
    mu = moment_map_fields(A, phi, phi1)["moment_map"]
    assert np.max(np.abs(mu.components[..., 2:-2, :, :])) < 0.2


def _nahm_ops(Ny):
    g = Grid4((4, 4, 4, Ny), (1.0, 2.0))
    A, phi, phi1 = nahm_ebe_triple(lie.principal_triple(2), g)
    return g, d_operators(A, phi, phi1)


def test_d_operator_commutators_on_nahm_pole():
    g, ops = _nahm_ops(16)
    secs = random_sections(g, 2, 3, rng=1)
    assert commutator_residual(ops, 1, 2, secs).max_sup < 1e-12
    assert commutator_residual(ops, 1, 3, secs).max_sup < 1e-10
    errs = []
    for Ny in (16, 32, 64):
        g, ops = _nahm_ops(Ny)
        errs.append(commutator_residual(ops, 2, 3, random_sections(g, 2, 3, rng=1)).max_sup)
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] > 3.0


def test_d_operator_validation():
    g, ops = _nahm_ops(8)
    with pytest.raises(ValueError):
        ops.apply(4, np.zeros(g.shape + (2, 2)))
    with pytest.raises(ValueError):
        commutator_residual(ops, 2, 2, [])


# --- flow ---------------------------------------------------------------

def test_flow_rhs_nahm_pole():
    g = Grid4((4, 4, 4, 8), (0.5, 2.0))
    A, Phi = nahm_pole_field(lie.principal_triple(2), g)
    z0 = LatticeField.zeros(g, 0, 2)
    dA, dphi, dphi_y = flow_rhs(A, Phi, z0)
    y = g.axis(3)[:, None, None]
    assert np.allclose(dphi.components[:3], -Phi.components[:3] / y, atol=1e-12)
    assert np.max(np.abs(dA.components)) < 1e-12
    assert np.max(np.abs(dphi_y.components)) < 1e-12


def test_flow_rhs_flat_and_errors(rng):
    g = Grid4((4, 4, 4, 4), (0.5, 2.0))
    z1, z0 = LatticeField.zeros(g, 1, 2), LatticeField.zeros(g, 0, 2)
    for f in flow_rhs(z1, z1, z0):
        assert np.max(np.abs(f.components)) == 0
    bad = LatticeField.zeros(g, 1, 2)
    bad.components[3] = lie.random_su(2, g.shape, rng=rng)
    with pytest.raises(ValueError, match="temporal"):
        flow_rhs(bad, z1, z0)


# --- helpers ------------------------------------------------------------

def test_richardson_order():
    assert richardson_order(2.0, 1.25, 1.0625) == pytest.approx(2.0)
    assert np.isnan(richardson_order(1.0, 1.0, 1.0))


def test_knot_residual_report():
    rep = knot_kw_residual(1, np.array([0.5, 1.0]), np.array([0.4, 1.2]), np.array([0.0, 1.0]))
    assert rep.max_sup < 1e-8 and rep.h == 1e-4
    assert rep.l2("kw_curvature") <= rep.sup("kw_curvature")
