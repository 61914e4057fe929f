import numpy as np
import pytest

from kwlab import _fastaudit, forms, lie
from kwlab.audit import (
    S1_BULK, T3_BULK, AuditReport, boundary_decay, boundary_form, chi_integral,
    random_field_study, refinement_orders, s1_densities, t3_energy_gap, term_orders,
    weitzenbock_gap,
)
from kwlab.lattice import Grid4, LatticeField, boundary_integral, curvature
from kwlab.models import nahm_pole_field
from kwlab.residuals import kw_residual
from kwlab.testfields import grid_for, random_field


def test_zero_fields_audit_to_zero():
    g = Grid4((4, 4, 4, 8), (0.5, 2.0))
    z = LatticeField.zeros(g, 1, 2)
    for rep in (weitzenbock_gap(z, z), t3_energy_gap(z, z)):
        assert rep.lhs == 0 and rep.gap == 0 and rep.relative_gap == 0


@pytest.mark.parametrize("n", [2, 3])
def test_nahm_pole_terms_vanish(n):
    g = Grid4((4, 4, 4, 16), (0.2, 3.0))
    rep = weitzenbock_gap(*nahm_pole_field(lie.principal_triple(n), g))
    for k in ("nabla1_phi", "B_A", "nabla1_phi1"):
        assert np.sqrt(rep.terms[k]) <= 1e-10
    assert rep.lhs <= 1e-20
    assert rep.rhs_boundary == 0


def test_lhs_is_kw_norm_squared():
    g = grid_for((4, 6, 6, 12))
    A, Phi = random_field(3).sample(g)
    rep = weitzenbock_gap(A, Phi)
    kw = kw_residual(A, Phi)
    assert rep.lhs == pytest.approx(kw.total_l2 ** 2, rel=1e-12)


@pytest.mark.parametrize("support", ["inner", None])
def test_fast_path_matches_matrix_path(support):
    g = grid_for((8, 8, 8, 16))
    fld = random_field(11, support=support, n=2)
    A, Phi = fld.sample(g)
    slow = {"s1": weitzenbock_gap(A, Phi), "t3": t3_energy_gap(A, Phi)}
    fast = dict(zip(("s1", "t3"), _fastaudit.audit_reports(fld, g)))
    for key in ("s1", "t3"):
        scale = abs(slow[key].lhs)
        for term, v in slow[key].terms.items():
            assert fast[key].terms[term] == pytest.approx(v, abs=1e-9 * scale), (key, term)


def test_fast_path_su3():
    g = grid_for((6, 6, 6, 8))
    fld = random_field(2, n=3)
    s1, t3 = _fastaudit.audit_reports(fld, g)
    slow = weitzenbock_gap(*fld.sample(g))
    assert s1.lhs == pytest.approx(slow.lhs, rel=1e-10)
    assert s1.rhs_bulk == pytest.approx(slow.rhs_bulk, rel=1e-10)


def test_fast_path_rejects_phi_y():
    with pytest.raises(ValueError):
        _fastaudit.audit_reports(random_field(0, phi_y=True), grid_for((4, 4, 4, 4)))


def test_chi_pieces_match_slice_integrals():
    g = grid_for((4, 6, 6, 10), label="S1xT2")
    A, Phi = random_field(5, support=None).sample(g)
    phi = Phi.select((1, 2, 3))
    phi1 = LatticeField(g, 0, Phi.components[0:1].copy())
    nab, bd = chi_integral(A, phi, phi1)
    assert abs(nab) < 1e-10
    # rebuild the boundary term as dx1 ∧ Tr(B ∧ φ) and integrate the two slices
    w = forms.wedge(curvature(A).B.components, 1, phi.components, 1)
    c = np.zeros((4,) + g.shape + (2, 2), dtype=complex)
    c[forms.position(3)[(0, 1, 2)]] = w[forms.position(2)[(1, 2)]]
    three = LatticeField(g, 3, c, "sl_n_c")
    expect = -2 * (boundary_integral(three, -1) - boundary_integral(three, 0))
    assert bd == pytest.approx(expect, rel=1e-12)
    assert abs(bd) > 1e-6


def test_boundary_decay_nahm_is_zero():
    g = Grid4((4, 4, 4, 8), (0.05, 0.4))
    A, Phi = nahm_pole_field(lie.principal_triple(2), g)
    for _, v in boundary_decay(A, Phi.select((1, 2)), range(8)):
        assert v == 0


def test_boundary_decay_synthetic_oracle():
    g = Grid4((4, 4, 4, 8), (0.05, 0.4))
    t = lie.principal_triple(2).array()
    y = g.axis(3)[:, None, None]
    ones = np.ones(g.shape)[..., None, None]
    A = LatticeField.from_components(g, 1, {(0,): ones * y * t[0], (1,): ones * y * t[1]}, 2)
    _, Phi = nahm_pole_field(t, g)
    idx = [int(np.argmin(abs(g.axis(3) - v))) for v in (0.05, 0.1, 0.2, 0.4)]
    for yv, val in boundary_decay(A, Phi.select((1, 2)), idx):
        # B₂ = −F₀₂ = −y² t₃, so Tr(B∧φ)₂₃ = −y Tr(t₃²) = y/2
        assert val == pytest.approx(yv / 2, rel=1e-12)


def test_boundary_form_flat_constant():
    g = Grid4((4, 4, 4, 4), (0.5, 2.0))
    D = np.diag([1j, -1j])
    ones = np.ones(g.shape)[..., None, None]
    A = LatticeField.from_components(g, 1, {(0,): ones * D, (2,): 2 * ones * D}, 2)
    phi = LatticeField.from_components(g, 1, {(1,): ones * 3 * D}, 2)
    assert np.max(np.abs(boundary_form(A, phi))) == 0


def test_phi_y_rejected():
    g = Grid4((4, 4, 4, 4), (0.5, 2.0))
    z = LatticeField.zeros(g, 1, 2)
    P = LatticeField.zeros(g, 1, 2)
    P.components[3] = lie.random_su(2, g.shape, rng=0)
    with pytest.raises(ValueError):
        s1_densities(z, P)
    with pytest.raises(ValueError):
        t3_energy_gap(z, P)


def test_report_helpers():
    r = AuditReport(2.0, 1.5, 0.25, 0.1)
    assert r.signed_gap == 0.25 and r.relative_gap == 0.125
    assert r.row() == (0.1, 2.0, 1.5, 0.25, 0.25)
    assert AuditReport(0.0, 1.0, 0.0, 0.1).relative_gap == float("inf")
    with pytest.raises(ValueError):
        refinement_orders([r, r])


def test_refinement_second_order():
    shapes = ((8, 8, 8, 16), (16, 16, 16, 32), (32, 32, 32, 64))
    out = random_field_study(1, shapes)
    for key, names in (("s1", S1_BULK), ("t3", T3_BULK)):
        reps = out[key]
        gaps = [r.gap for r in reps]
        assert gaps[0] > gaps[1] > gaps[2]
        assert refinement_orders(reps) == pytest.approx(2.0, abs=0.5)
        assert set(names) <= set(term_orders(reps))
        assert reps[-1].relative_gap < 0.05
