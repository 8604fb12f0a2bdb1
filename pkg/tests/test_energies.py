import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curveflow.energies import (
    energies,
    length_domination_slack,
    poincare_slack,
    sup_fx_embedding_slack,
    tol_bound,
)
from curveflow.grid import CurveState, geometry
from curveflow.presets import make_preset
from oracles import ellipse_nodes, rotation


def breakdown(curve, lam=0.5):
    return energies(geometry(curve, lam), lam)


def test_circle_energies_within_stated_tolerance():
    # closed-form circle: L = 2 pi r, D = pi r^2, E = pi / r; stated bound 1e-4 at N = 256
    e = breakdown(make_preset("circle", {"r": 2.0}, 256))
    assert e.length == pytest.approx(4 * math.pi, rel=1e-4)
    assert e.dirichlet == pytest.approx(4 * math.pi, rel=1e-4)
    assert e.bending == pytest.approx(math.pi / 2, rel=1e-4)


@pytest.mark.parametrize("N", [8, 64, 256])
@pytest.mark.parametrize("r", [0.5, 2.0])
def test_circle_energies_discrete_closed_form(N, r):
    # central differences see a circle with speed r sinc(h) and curvature 1/r
    h = 2 * math.pi / N
    s = math.sin(h) / h
    e = breakdown(make_preset("circle", {"r": r}, N))
    assert e.length == pytest.approx(2 * math.pi * r * s, rel=1e-12)
    assert e.dirichlet == pytest.approx(math.pi * r * r * s * s, rel=1e-12)
    assert e.bending == pytest.approx(math.pi / r * s, rel=1e-12)


def test_circle_energies_converge_at_second_order():
    errs = []
    for N in (128, 256, 512):
        e = breakdown(make_preset("circle", {"r": 2.0}, N))
        errs.append(abs(e.length - 4 * math.pi) + abs(e.dirichlet - 4 * math.pi) + abs(e.bending - math.pi / 2))
    assert 3.9 <= errs[0] / errs[1] <= 4.1
    assert 3.9 <= errs[1] / errs[2] <= 4.1


def test_unit_circle_d_lambda():
    e = breakdown(make_preset("circle", None, 512), 0.5)
    assert e.d_lambda == pytest.approx(1.5 * math.pi, abs=10 * (2 * math.pi / 512) ** 2)
    assert e.d_lambda == e.bending + 0.5 * e.dirichlet
    assert e.e_lambda == e.bending + 0.5 * e.length


def test_ellipse_length_against_quadrature_oracle():
    # complete elliptic integral by adaptive-free fine quadrature of |f_x|
    x = np.linspace(0, 2 * np.pi, 200001)[:-1]
    exact = np.mean(np.hypot(2 * np.sin(x), np.cos(x))) * 2 * np.pi
    e = breakdown(CurveState(ellipse_nodes(512)))
    assert e.length == pytest.approx(exact, rel=1e-4)


def test_translation_and_rotation_invariance():
    curve = make_preset("figure", {"lift": 0.5}, 128, n=3)
    base = breakdown(curve)
    Q = rotation(3, seed=1)
    moved = breakdown(CurveState(curve.nodes @ Q.T + np.array([3.0, -1.0, 2.0])))
    for a, b in zip((base.length, base.dirichlet, base.bending), (moved.length, moved.dirichlet, moved.bending)):
        assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("c", [2.0, 3.0])
def test_dilation_law(c):
    curve = make_preset("ellipse", None, 128)
    a = breakdown(curve)
    b = breakdown(CurveState(c * curve.nodes))
    assert b.length == pytest.approx(c * a.length, rel=1e-12)
    assert b.dirichlet == pytest.approx(c * c * a.dirichlet, rel=1e-12)
    assert b.bending == pytest.approx(a.bending / c, rel=1e-12)


def test_poincare_slack_equality_on_circles():
    for r in (0.3, 1.0, 4.0):
        c = geometry(make_preset("circle", {"r": r}, 256), 0.5)
        assert abs(poincare_slack(c)) <= tol_bound(c.h)


def test_poincare_slack_positive_on_ellipse():
    c = geometry(CurveState(ellipse_nodes(1024)), 0.5)
    assert poincare_slack(c) > 0.5


def test_poincare_slack_rotation_invariant():
    curve = make_preset("ellipse", None, 128)
    Q = rotation(2, seed=2)
    a = poincare_slack(geometry(curve, 0.5))
    b = poincare_slack(geometry(CurveState(curve.nodes @ Q.T), 0.5))
    assert a == pytest.approx(b, abs=1e-12)


def test_length_domination_slack():
    assert abs(length_domination_slack(breakdown(make_preset("circle", None, 64)))) < 1e-12
    s = length_domination_slack(breakdown(make_preset("warped_circle", None, 128)))
    assert s > 0
    s2 = length_domination_slack(breakdown(make_preset("warped_circle", {"r": 2.0}, 128)))
    assert s2 == pytest.approx(2 * s, rel=1e-12)


def test_sup_fx_embedding_slack():
    c = geometry(make_preset("circle", {"r": 1.7}, 64), 0.5)
    assert abs(sup_fx_embedding_slack(c)) < 1e-12
    for N in (128, 256, 512):
        c = geometry(make_preset("warped_circle", None, N), 0.5)
        assert sup_fx_embedding_slack(c) >= 0


def test_sup_fx_embedding_slack_unchanged_by_index_shift():
    curve = make_preset("warped_circle", None, 128)
    a = sup_fx_embedding_slack(geometry(curve, 0.5))
    b = sup_fx_embedding_slack(geometry(CurveState(np.roll(curve.nodes, 17, axis=0)), 0.5))
    assert a == pytest.approx(b, abs=1e-12)


@given(st.integers(0, 10_000), st.floats(0.0, 0.5), st.integers(1, 6))
def test_inequalities_hold_on_random_curves(seed, amp, modes):
    curve = make_preset("perturbed_circle", {"amp": amp, "modes": modes}, 128, seed=seed)
    c = geometry(curve, 0.5)
    e = energies(c)
    tol = tol_bound(c.h)
    assert e.e_lambda >= 0 and e.d_lambda >= 0
    assert poincare_slack(c) >= -tol
    assert length_domination_slack(e) >= -tol
    assert sup_fx_embedding_slack(c) >= -tol
