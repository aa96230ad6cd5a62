import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.errors import ValidationError
from mtlab.geom import (
    GridFunction,
    Segment,
    Topology,
    Warp,
    WarpedSurface,
    collar_surface,
    curvature_at,
    cusp_surface,
    dirichlet_energy,
    disk_area,
    disk_perimeter,
    euclidean_disk,
    flat_cylinder,
    hyperbolic_disk,
    integrate,
    round_sphere,
    t_derivative,
)


def test_volumes_of_model_surfaces():
    assert euclidean_disk(2.0).volume == pytest.approx(4 * math.pi, rel=1e-12)
    assert round_sphere(1.0).volume == pytest.approx(4 * math.pi, rel=1e-10)
    assert hyperbolic_disk(3.0).volume == pytest.approx(2 * math.pi * (math.cosh(3.0) - 1), rel=1e-10)
    assert flat_cylinder(0.0, 2.0).volume == pytest.approx(4 * math.pi, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 4.0))
def test_hyperbolic_disk_area_and_perimeter(r):
    surf = hyperbolic_disk(4.0, n_t=512, n_theta=8)
    assert disk_area(surf, r) == pytest.approx(2 * math.pi * (math.cosh(r) - 1), rel=1e-8)
    assert disk_perimeter(surf, r) == pytest.approx(2 * math.pi * math.sinh(r), rel=1e-12)


def test_disk_area_needs_a_disk():
    assert disk_area(euclidean_disk(2.0), 1.5) == pytest.approx(math.pi * 2.25, rel=1e-12)
    with pytest.raises(ValidationError):
        disk_area(round_sphere(), 1.0)


def test_cusp_volume_and_tail():
    surf = cusp_surface(0.5)
    assert surf.topology is Topology.CUSP and surf.truncated
    assert surf.volume + surf.tail_bound == pytest.approx(2 * math.pi * math.exp(0.5), rel=1e-8)


def test_energy_of_coordinate_function():
    # u = x = t cos(theta) on the unit disk has |grad u| = 1
    surf = euclidean_disk(1.0, n_t=256, n_theta=128)
    u = GridFunction.from_function(surf, lambda T, TH: T * np.cos(TH), radial=False)
    assert dirichlet_energy(surf, u) == pytest.approx(math.pi, rel=1e-6)
    r = GridFunction.from_function(surf, lambda t: t)
    assert dirichlet_energy(surf, r) == pytest.approx(math.pi, rel=1e-10)


def test_t_derivative_fourth_order():
    errs = []
    for n in (64, 128):
        surf = hyperbolic_disk(2.0, n_t=n, n_theta=8)
        u = GridFunction.from_function(surf, lambda t: np.sin(t) ** 2)
        errs.append(max(np.max(np.abs(du - np.sin(2 * surf.t[sl]))) for sl, _, du in t_derivative(surf, u)))
    assert errs[0] / errs[1] > 12


def test_integrate_with_transform():
    surf = round_sphere()
    u = GridFunction.from_function(surf, lambda t: np.cos(t))
    assert integrate(surf, u) == pytest.approx(0.0, abs=1e-10)
    assert integrate(surf, u, lambda v: v**2) == pytest.approx(4 * math.pi / 3, rel=1e-8)


def test_curvature():
    assert curvature_at(round_sphere(2.0), 1.0) == pytest.approx(0.25, rel=1e-6)
    assert curvature_at(hyperbolic_disk(3.0, K=-2.0), 1.0) == pytest.approx(-2.0, rel=1e-6)
    assert curvature_at(collar_surface(0.1, 1.0), 0.3) == pytest.approx(-1.0, rel=1e-6)


def test_segments_match_single_grid():
    plain = collar_surface(0.01, 2.0, n_t=512, n_theta=8)
    split = collar_surface(0.01, 2.0, breaks=(-0.5, 0.5), n_t=512, n_theta=8)
    exact = 2 * math.pi * 0.01 * 2 * math.sinh(2.0)
    assert plain.volume == pytest.approx(exact, rel=1e-9)
    assert split.volume == pytest.approx(exact, rel=1e-9)


def test_validation():
    with pytest.raises(ValidationError):
        WarpedSurface(Warp("linear"), 1.0, 0.0, Topology.DISK)
    with pytest.raises(ValidationError):
        # cone angle pi instead of 2 pi
        WarpedSurface(Warp("linear"), 0.0, 1.0, Topology.DISK, theta_period=math.pi)
    with pytest.raises(ValidationError):
        WarpedSurface(Warp("linear"), 0.0, 1.0, Topology.DISK, segments=(Segment(0.0, 0.5),))
    with pytest.raises(ValidationError):
        hyperbolic_disk(1.0, K=1.0)
