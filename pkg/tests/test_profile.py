import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mtlab.errors import EpsTooLarge, NonPositive
from mtlab.geom import hyperbolic_disk, round_sphere
from mtlab.profile import (
    DegeneratePlateauWarning,
    build_g,
    make_params,
    measure_profile,
    positive_curvature_clip,
    profile_dominates,
    small_volume_bound,
)


def test_v0_closed_form():
    p = make_params(1.0, 1.0, -1.0)
    assert p.v0 == pytest.approx(1.0 / (2 * math.pi + math.sqrt(4 * math.pi**2 + 1)), rel=1e-14)
    # the systole caps the plateau: g(v0) <= delta
    assert small_volume_bound(p.v0, -1.0) <= 1.0 + 1e-12


def test_figure_parameters():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g = build_g(make_params(1.0, 1.6, -1.0), 0.2, enforce_v0=False)
    assert g.g_eps == pytest.approx(1.597897, abs=5e-7)
    assert g.t2 == pytest.approx(0.998685, abs=5e-7)
    assert [g.branch(t) for t in (0.1, 0.5, 2.0)] == [0, 1, 2]


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(-2.0, 0.5),
)
def test_profile_is_continuous_and_nondecreasing(delta, h, K):
    p = make_params(delta, h, K)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePlateauWarning)
        g = build_g(p)
    assume(not g.degenerate)
    for b in (g.eps, g.t2):
        lo, hi = g(b * (1 - 1e-12)), g(b * (1 + 1e-12))
        assert hi == pytest.approx(lo, rel=1e-9)
    t = np.linspace(1e-9, 3 * g.t2, 400)
    assert np.all(np.diff(g(t)) >= -1e-12)


def test_small_volume_bound_is_model_perimeter():
    # geodesic disk in curvature -1: A = 2 pi (cosh r - 1), L = 2 pi sinh r
    r = 0.7
    A = 2 * math.pi * (math.cosh(r) - 1)
    assert small_volume_bound(A, -1.0) == pytest.approx(2 * math.pi * math.sinh(r), rel=1e-12)


def test_pure_branch_and_errors():
    g = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    assert g(5.0) == pytest.approx(small_volume_bound(5.0, -1.0))
    with pytest.raises(EpsTooLarge):
        build_g(make_params(1.0, 1.0, 1.0), math.inf)
    with pytest.raises(EpsTooLarge):
        build_g(make_params(1.0, 1.0, -1.0), 0.5)
    with pytest.raises(NonPositive):
        build_g(make_params(1.0, 1.0, -1.0), -0.1)
    assert positive_curvature_clip(1.0) == pytest.approx(2 * math.pi)


def test_degenerate_plateau_warns():
    with pytest.warns(DegeneratePlateauWarning):
        g = build_g(make_params(1.0, 50.0, -1.0), 0.05)
    assert g.degenerate and g.t2 == g.eps


def test_sphere_profile_of_caps():
    m = measure_profile(round_sphere())
    A, P = m.areas, m.perimeters
    assert np.max(np.abs(P**2 - A * (4 * math.pi - A))) < 1e-9


def test_hyperbolic_disk_dominates_model_profile():
    g = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    rep = profile_dominates(g, measure_profile(hyperbolic_disk(3.0)))
    assert rep.dominated
    # a profile with a larger Cheeger constant is beaten by the same disk
    g_big = build_g(make_params(1.0, 3.0, -1.0), 0.05)
    assert not profile_dominates(g_big, measure_profile(hyperbolic_disk(3.0))).dominated
