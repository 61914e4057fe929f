"""The eight acceptance criteria, each printing one PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from kwlab import lie
from kwlab.audit import ACCEPT_SHAPES, random_field_study, refinement_orders, weitzenbock_gap
from kwlab.classify import (
    Admissible, Divisor, SurfaceSpec, admissibility, classify_existence,
    nonhitchin_sl2_check, solution_count_bound,
)
from kwlab.lattice import Grid4, SphericalPatch
from kwlab.models import nahm_pole_field, pullback_to_kw
from kwlab.nahm import NahmState, integrate, pole_deviation, terminal_error
from kwlab.residuals import ebe_residual, knot_kw_pointwise, kw_residual
from kwlab.testfields import random_ebe_triple

SEEDS = range(20)


@pytest.fixture
def verdict(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def audit_studies():
    return {seed: random_field_study(seed, ACCEPT_SHAPES) for seed in SEEDS}


def test_criterion_1_knot_model(verdict):
    R, s, th, _ = SphericalPatch((0.1, 2.0), (0.1, np.pi / 2), 10_000).sample(0)
    t0 = time.perf_counter()
    sups = {}
    for k in (1, 2, 3):
        n1, n2 = knot_kw_pointwise(k, R, s, th, step=1e-4)
        sups[k] = float(max(n1.max(), n2.max()))
    elapsed = time.perf_counter() - t0
    ok = max(sups.values()) <= 1e-8 and elapsed < 30
    verdict(1, ok, f"sup residual by k {sups}, {elapsed:.1f} s for 3 x 10^4 points")


def test_criterion_2_nahm_pole(verdict):
    grid = Grid4((4, 4, 4, 64), (0.1, 10.0))
    sups = {n: kw_residual(*nahm_pole_field(lie.principal_triple(n), grid)).max_sup for n in (2, 3, 4)}
    verdict(2, max(sups.values()) <= 1e-10, f"sup KW residual by n {sups}")


def _identity_check(studies, key):
    worst_gap, orders = 0.0, []
    for seed, study in studies.items():
        reps = study[key]
        worst_gap = max(worst_gap, reps[0].relative_gap)
        orders.append(refinement_orders(reps))
    orders = np.array(orders)
    ok = worst_gap <= 0.05 and np.all(np.abs(orders - 2.0) <= 0.4)
    return ok, f"max relative gap at h {worst_gap:.2e}, orders in [{orders.min():.3f}, {orders.max():.3f}]"


def test_criterion_3_weitzenbock_audit(verdict, audit_studies):
    ok, detail = _identity_check(audit_studies, "s1")
    verdict(3, ok, f"S1 identity, {len(SEEDS)} seeds: {detail}")


def test_criterion_4_t3_energy_identity(verdict, audit_studies):
    ok, detail = _identity_check(audit_studies, "t3")
    verdict(4, ok, f"T3 identity, {len(SEEDS)} seeds: {detail}")


def test_criterion_5_pullback(verdict):
    grid = Grid4((4, 8, 8, 16), (0.5, 2.0))
    worst = 0.0
    for seed in range(10):
        A, phi, phi1 = random_ebe_triple(seed, grid)
        kw = kw_residual(*pullback_to_kw(A, phi, phi1))
        ebe = ebe_residual(A, phi, phi1)
        curv = np.hypot(ebe.l2("ebe_curvature"), ebe.l2("ebe_bracket"))
        worst = max(worst, abs(kw.l2("kw_curvature") - curv), abs(kw.l2("kw_divergence") - ebe.l2("ebe_divergence")))
    verdict(5, worst <= 1e-10, f"max norm mismatch over 10 seeds {worst:.2e}")


def test_criterion_6_nahm_ode(verdict):
    sups = {}
    for n in (2, 3, 4):
        t = lie.principal_triple(n)
        sups[n] = pole_deviation(integrate(NahmState.pole(t, 0.05), 10.0, 1e-3), t)
    t = lie.principal_triple(2)
    e = [terminal_error(integrate(NahmState.pole(t, 0.05), 10.0, h), t) for h in (1e-3, 5e-4)]
    ratio = e[0] / e[1]
    ok = max(sups.values()) <= 1e-6 and 12 <= ratio <= 20
    verdict(6, ok, f"sup deviation by n {sups}; n=2 halving ratio {ratio:.2f}")


def _sl2_oracle(deg_l, g, D, Z):
    lo = 2 * g - 2 - 2 * deg_l
    if D.degree == lo:
        return "UniqueSolution" if D == Z else "NoSolution"
    if lo < D.degree < 2 * g - 2:
        return "NoSolution"
    return "NotCovered"


def test_criterion_7_classification(verdict):
    mismatches = 0
    for n, g, d in itertools.product(range(2, 6), (2, 3, 4), range(0, 41)):
        oracle = any(d == -n * L + n * (n - 1) * (g - 1) for L in range(-100, 100))
        mismatches += oracle != isinstance(admissibility(d, SurfaceSpec(g, n)), Admissible)
    bounds = (solution_count_bound(SurfaceSpec(2, 2)), solution_count_bound(SurfaceSpec(3, 3)))
    clauses = (classify_existence(SurfaceSpec(0)).verdict,
               classify_existence(SurfaceSpec(1)).verdict,
               classify_existence(SurfaceSpec(2), "hitchin").verdict)
    rng = np.random.default_rng(7)
    sl2_bad = 0
    for _ in range(50):
        g = int(rng.integers(3, 9))
        deg_l = int(rng.integers(1, g - 1))
        lo = 2 * g - 2 - 2 * deg_l
        Z = Divisor(tuple((f"z{i}", 1) for i in range(lo)))
        d = int(rng.integers(lo, 2 * g - 2))
        D = Z if d == lo and rng.random() < 0.5 else Divisor(tuple((f"p{i % 4}", 1) for i in range(d)))
        sl2_bad += nonhitchin_sl2_check(deg_l, g, D, Z).verdict != _sl2_oracle(deg_l, g, D, Z)
    ok = (mismatches == 0 and bounds == (16, 729)
          and clauses == ("NoSolutions", "Unique", "ExistsUnique") and sl2_bad == 0)
    verdict(7, ok, f"{mismatches} admissibility mismatches, bounds {bounds}, clauses {clauses}, "
                   f"{sl2_bad} SL2 mismatches in 50")


def test_criterion_8_s1_invariance_witness(verdict):
    worst = {}
    for n in (2, 3, 4):
        rep = weitzenbock_gap(*nahm_pole_field(lie.principal_triple(n), Grid4((4, 4, 4, 32), (0.1, 10.0))))
        worst[n] = max(float(np.sqrt(rep.terms[k])) for k in ("nabla1_phi", "B_A", "nabla1_phi1"))
    verdict(8, max(worst.values()) <= 1e-10, f"max of |nabla1 phi|, |B_A|, |nabla1 phi1| by n {worst}")
