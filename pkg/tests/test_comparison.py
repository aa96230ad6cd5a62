import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mtlab.comparison import as_warped_surface, closed_form_f, ode_residual, solve_f
from mtlab.errors import OutOfRegime
from mtlab.geom import disk_area
from mtlab.profile import build_g, make_params


@pytest.fixture(scope="module")
def figure_disk():
    g = build_g(make_params(1.0, 1.6, -1.0), 0.2, enforce_v0=False)
    return solve_f(g)


def test_breakpoints_against_quadrature(figure_disk):
    # A' = g(A), so r(A) = int_0^A da / g(a); an independent quad oracle
    g = figure_disk.profile
    r1 = quad(lambda a: 1.0 / g(a), 0.0, g.eps, epsabs=1e-14, epsrel=1e-13)[0]
    assert r1 == pytest.approx(math.acosh(1 + g.eps / (2 * math.pi)), rel=1e-12)
    r2 = r1 + (g.t2 - g.eps) / g.g_eps
    tight = solve_f(g, tol=1e-12)
    assert tight.r1 == pytest.approx(r1, rel=1e-10)
    assert tight.r2 == pytest.approx(r2, rel=1e-10)
    # the default tolerance is a global one
    assert figure_disk.r2 == pytest.approx(r2, rel=1e-8)


def test_closed_forms_per_regime():
    for K, eps in ((-1.0, math.inf), (0.0, math.inf), (1.0, 2.0)):
        g = build_g(make_params(1.0, 1.0, K), eps, enforce_v0=False)
        d = solve_f(g, r_max=None if math.isfinite(eps) else 2.0, tol=1e-12)
        sel = (d.r > 0) & (d.r <= min(d.r1, d.r_max))
        exact = closed_form_f(K, d.r[sel])
        assert np.max(np.abs(d.f[sel] / exact - 1)) < 1e-8


def test_fixed_step_is_fourth_order():
    g = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    errs = []
    for h in (0.2, 0.1, 0.05):
        d = solve_f(g, r_max=2.0, adaptive=False, max_step=h)
        errs.append(np.max(np.abs(d.f[1:] / closed_form_f(-1.0, d.r[1:]) - 1)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 3.7


def test_residual_and_area_roundtrip(figure_disk):
    assert ode_residual(figure_disk) < 1e-8
    assert ode_residual(figure_disk, midpoints=True) < 1e-7
    for a in (0.05, 0.2, 0.6, 5.0, 100.0):
        assert figure_disk.area(figure_disk.r_at_area(a)) == pytest.approx(a, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 10.0))
def test_f_is_increasing_and_convex_past_plateau(r):
    d = _shared_disk()
    assert d.fprime_at(r) > 0
    if r > d.r2:
        h = d.profile.h
        assert d.fprime_at(r) == pytest.approx(h * d.f_at(r), rel=1e-8)


_CACHE = {}


def _shared_disk():
    if "d" not in _CACHE:
        _CACHE["d"] = solve_f(build_g(make_params(1.0, 1.6, -1.0), 0.2, enforce_v0=False))
    return _CACHE["d"]


def test_distortion_limits(figure_disk):
    rep = figure_disk.distortion
    r2, h = figure_disk.r2, 1.6
    f2 = figure_disk.f_at(r2)
    assert rep.limit_inf == pytest.approx(2 * h * f2 * math.exp(-h * r2), rel=1e-12)
    assert rep.computed_limit_inf == pytest.approx(rep.limit_inf, rel=1e-6)
    assert rep.limit_inf_literal == pytest.approx(2 * h * f2 * math.exp(-figure_disk.profile.g_eps), rel=1e-12)
    assert rep.constant >= max(rep.sup_ratio, 1 / rep.inf_ratio) * (1 - 1e-12)


def test_hyperbolic_model_has_constant_distortion():
    # K = -h^2 with no plateau: f' = sinh(h r) / h exactly
    g = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    d = solve_f(g, r_max=6.0, tol=1e-13)
    rep = d.distortion
    assert rep.spread - 1 < 1e-9
    assert rep.sup_ratio == pytest.approx(1.0, rel=1e-9)


def test_as_warped_surface_areas(figure_disk):
    surf = as_warped_surface(figure_disk, area_max=10.0)
    assert surf.volume == pytest.approx(10.0, rel=1e-9)
    r = figure_disk.r_at_area(0.5)
    assert disk_area(surf, r) == pytest.approx(0.5, rel=1e-8)


def test_closed_form_domain():
    with pytest.raises(OutOfRegime):
        closed_form_f(1.0, 4.0)
    with pytest.raises(OutOfRegime):
        closed_form_f(-1.0, 3.0, eps=0.1)
