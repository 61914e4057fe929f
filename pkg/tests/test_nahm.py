import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kwlab import lie
from kwlab.nahm import (
    NahmState, NahmTrajectory, casimir_of, deviation_profile, integrate, nahm_rhs,
    pole_deviation, terminal_error,
)


def oracle_rk4(T0, y0, y1, h):
    """Textbook RK4 on dT_a/dy = −½ ε_abc [T_b, T_c], written independently."""
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c], eps[a, c, b] = 1, -1

    def f(T):
        return -0.5 * np.einsum("abc,bij,cjk->aik", eps, T, T) + 0.5 * np.einsum("abc,cij,bjk->aik", eps, T, T)

    T, y = T0.astype(complex), y0
    n = int(round((y1 - y0) / h))
    for _ in range(n):
        k1 = f(T)
        k2 = f(T + h / 2 * k1)
        k3 = f(T + h / 2 * k2)
        k4 = f(T + h * k3)
        T = T + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return T


def test_rhs_on_pole():
    t = lie.principal_triple(2)
    s = NahmState.pole(t, 0.5)
    # d/dy (t_a/y) = −t_a/y²
    assert np.allclose(nahm_rhs(s), -t.array() / 0.25)
    assert np.allclose(nahm_rhs(s.T), nahm_rhs(s))


def test_rhs_commuting_data_is_static():
    T = np.stack([np.diag([1j, -1j]), np.diag([2j, -2j]), np.zeros((2, 2))])
    assert np.max(np.abs(nahm_rhs(T))) == 0


def test_state_validation():
    with pytest.raises(ValueError):
        NahmState(0.0, np.zeros((3, 2, 2)))
    with pytest.raises(ValueError):
        NahmState(1.0, np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        NahmState(1.0, np.zeros((3, 2, 3)))
    assert NahmState(1.0, np.zeros((3, 4, 4))).n == 4


@pytest.mark.parametrize("n,bound", [(2, 1e-8), (3, 1e-8), (4, 1e-6)])
def test_pole_tracked(n, bound):
    t = lie.principal_triple(n)
    tr = integrate(NahmState.pole(t, 0.05), 10.0, 1e-3)
    assert not tr.truncated
    assert tr.y[-1] == 10.0 and tr.y[0] == 0.05
    assert pole_deviation(tr, t) < bound
    assert len(tr) == len(tr.states()) == 9951


def test_zero_start_stays_zero():
    tr = integrate(NahmState(1.0, np.zeros((3, 3, 3))), 2.0, 0.1)
    assert np.max(np.abs(tr.T)) == 0


def test_casimir_conserved():
    t = lie.principal_triple(3)
    tr = integrate(NahmState.pole(t, 0.05, scale=1.0), 5.0, 1e-3)
    c = tr.casimir * tr.y ** 2
    assert np.max(np.abs(c - c[0])) < 1e-6 * abs(c[0])
    assert casimir_of(t.array()) == pytest.approx(lie.casimir(t))


def test_terminal_error_ratio_n2():
    t = lie.principal_triple(2)
    e = [terminal_error(integrate(NahmState.pole(t, 0.05), 10.0, h), t) for h in (2e-3, 1e-3)]
    assert 12 <= e[0] / e[1] <= 20


def test_perturbed_start_matches_oracle():
    t = lie.principal_triple(2)
    s0 = NahmState.pole(t, 0.5, scale=1.1)
    tr = integrate(s0, 2.5, 1e-3)
    ref = oracle_rk4(s0.T, 0.5, 2.5, 1e-3)
    assert np.max(np.abs(tr.T[-1] - ref)) < 1e-8
    # and the perturbation does not decay to the pole
    assert pole_deviation(tr, t) > 0.05


def test_u_variable_agrees():
    t = lie.principal_triple(2)
    exact = integrate(NahmState.pole(t, 0.05), 3.0, 1e-2, t=t, variable="u")
    assert pole_deviation(exact, t) == 0.0
    s0 = NahmState.pole(t, 0.5, scale=1.05)
    a = integrate(s0, 2.0, 1e-3)
    b = integrate(s0, 2.0, 1e-3, t=t, variable="u")
    assert np.max(np.abs(a.T[-1] - b.T[-1])) < 1e-9
    assert b.method == "rk4-u"


def test_integrate_errors():
    s = NahmState.pole(lie.principal_triple(2), 1.0)
    with pytest.raises(ValueError):
        integrate(s, 2.0, 0.0)
    with pytest.raises(ValueError):
        integrate(s, 0.5, 0.1)
    with pytest.raises(ValueError):
        integrate(s, 2.0, 0.1, variable="u")
    with pytest.raises(ValueError):
        integrate(s, 2.0, 0.1, variable="w")
    with pytest.raises(ValueError):
        pole_deviation(NahmTrajectory(np.zeros(0), np.zeros((0, 3, 2, 2))), lie.principal_triple(2))


def test_last_step_lands_on_endpoint():
    s = NahmState.pole(lie.principal_triple(2), 1.0)
    tr = integrate(s, 1.25, 0.1)
    assert tr.y[-1] == 1.25
    assert np.allclose(np.diff(tr.y)[:-1], 0.1)


def test_non_finite_state_truncates():
    t = lie.principal_triple(2)
    # −t/y blows up in finite y: T = −t/(y_* − y) style reversed pole
    tr = integrate(NahmState.pole(t, 1.0, scale=-1000.0), 5.0, 1e-2)
    assert tr.truncated
    assert "non-finite" in tr.message
    assert np.all(np.isfinite(tr.T))
    assert len(tr) < 401


def test_local_error_fifth_order():
    t = lie.principal_triple(2)
    s0 = NahmState.pole(t, 0.5, scale=1.3)
    errs = []
    for h in (0.02, 0.01):
        one = integrate(s0, 0.5 + h, h).T[-1]
        fine = oracle_rk4(s0.T, 0.5, 0.5 + h, h / 64)
        errs.append(np.max(np.abs(one - fine)))
    assert errs[0] / errs[1] == pytest.approx(32, rel=0.15)


def test_deviation_profile_shape():
    t = lie.principal_triple(2)
    tr = integrate(NahmState.pole(t, 0.5), 1.0, 0.1)
    d = deviation_profile(tr, t)
    assert d.shape == tr.y.shape and d[0] == 0


@settings(max_examples=15)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.8, 1.2))
def test_gauge_equivariance(seed, scale):
    t = lie.principal_triple(2)
    u = lie.random_unitary(2, rng=seed)
    ui = np.linalg.inv(u)
    s0 = NahmState.pole(t, 0.5, scale)
    a = integrate(s0, 1.0, 0.05).T
    b = integrate(NahmState(0.5, ui @ s0.T @ u), 1.0, 0.05).T
    assert np.max(np.abs(ui @ a @ u - b)) < 1e-10 * (1 + np.max(np.abs(a)))
