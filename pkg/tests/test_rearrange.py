import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.comparison import solve_f
from mtlab.errors import ConstantFunction, ValidationError
from mtlab.geom import GridFunction, euclidean_disk, hyperbolic_disk, integrate, round_sphere
from mtlab.profile import build_g, make_params
from mtlab.rearrange import (
    coarea_lower_bound,
    distribution,
    polya_szego_report,
    rearrange_decreasing,
    rearrange_two_sided,
)

FS = {"x2": lambda v: v**2, "x4": lambda v: v**4, "exp": lambda v: np.expm1(v**2)}


@pytest.fixture(scope="module")
def flat_disk():
    return solve_f(build_g(make_params(1.0, 1.0, 0.0), math.inf), r_max=2.0)


def test_distribution_of_radial_paraboloid():
    # u = 1 - t^2 on the unit disk: {u >= s} is the disk of area pi (1 - s)
    surf = euclidean_disk(1.0, n_t=512, n_theta=8)
    u = GridFunction.from_function(surf, lambda t: 1 - t**2)
    dist = distribution(surf, u, 65)
    # u is linear between nodes, so crossings carry an O(dt^2) error
    assert np.max(np.abs(dist.A - math.pi * (1 - dist.levels))) < 1e-5
    # level sets are circles of radius sqrt(1 - s)
    inner = (dist.levels > 0) & (dist.levels < 1)
    assert np.allclose(dist.l[inner], 2 * math.pi * np.sqrt(1 - dist.levels[inner]), rtol=1e-4)
    assert dist.average == pytest.approx(0.5, rel=1e-10)
    assert dist.median == pytest.approx(0.5, abs=1e-6)


def test_rearranging_radial_decreasing_is_identity(flat_disk):
    surf = euclidean_disk(1.0, n_t=512, n_theta=8)
    u = GridFunction.from_function(surf, lambda t: 1 - t**2)
    star = rearrange_decreasing(distribution(surf, u), flat_disk)
    assert star.energy == pytest.approx(2 * math.pi, rel=1e-6)
    r = star.surface.t
    assert np.max(np.abs(star.function.values - (1 - r**2))) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0.1, 0.6), min_size=2, max_size=4))
def test_equimeasurable_for_monotone_radial(coefs):
    surf = hyperbolic_disk(1.5, n_t=256, n_theta=8)
    disk = _hyp_disk()

    def fn(t):
        return -sum(c * (t / 1.5) ** (k + 1) for k, c in enumerate(coefs))

    u = GridFunction.from_function(surf, fn)
    star = rearrange_decreasing(distribution(surf, u), disk)
    for F in FS.values():
        assert integrate(star.surface, star.function, F) == pytest.approx(integrate(surf, u, F), rel=1e-4)


_DISKS = {}


def _hyp_disk():
    if "h" not in _DISKS:
        _DISKS["h"] = solve_f(build_g(make_params(1.0, 1.0, -1.0), math.inf), r_max=3.0)
    return _DISKS["h"]


def test_two_dimensional_equimeasurability(flat_disk):
    surf = euclidean_disk(1.0, n_t=256, n_theta=64)
    u = GridFunction.from_function(
        surf, lambda T, TH: (1 - T**2) ** 2 * (1 + 0.5 * T * np.sin(TH)), radial=False
    )
    star = rearrange_decreasing(distribution(surf, u), flat_disk)
    for F in FS.values():
        assert integrate(star.surface, star.function, F) == pytest.approx(integrate(surf, u, F), rel=1e-3)


def test_polya_szego_chain(flat_disk):
    surf = euclidean_disk(1.0, n_t=256, n_theta=64)
    u = GridFunction.from_function(
        surf, lambda T, TH: (1 - T**2) ** 2 * (1 + 0.5 * T * np.sin(TH)), radial=False
    )
    rep = polya_szego_report(surf, u, flat_disk)
    assert rep.dominated and rep.holds
    assert rep.E_rearranged <= rep.coarea_bound * 1.01 <= rep.E_original * 1.0201


def test_edge_gate(flat_disk):
    # level sets of x = t cos(theta) end on the boundary of the window
    surf = euclidean_disk(1.0, n_t=128, n_theta=32)
    u = GridFunction.from_function(surf, lambda T, TH: T * np.cos(TH), radial=False)
    assert not polya_szego_report(surf, u, flat_disk).dominated


def test_two_sided_identity():
    surf = round_sphere(n_t=256, n_theta=64)
    g = build_g(make_params(1.0, 0.5, 1.0), 2 * math.pi, enforce_v0=False)
    disk = solve_f(g)
    u = GridFunction.from_function(surf, lambda T, TH: np.cos(T) + 0.4 * np.sin(T) * np.cos(TH), radial=False)
    two = rearrange_two_sided(surf, u, disk)
    assert two.volume == pytest.approx(4 * math.pi, rel=1e-9)
    for F in FS.values():
        lhs = integrate(surf, u, F)
        rhs = integrate(two.u_minus.surface, two.u_minus.function, F) + integrate(
            two.u_plus.surface, two.u_plus.function, F
        )
        assert rhs == pytest.approx(lhs, rel=1e-3)
    # u_plus is nonincreasing and u_minus nondecreasing in r
    assert np.all(np.diff(two.u_plus.function.values) <= 1e-12)
    assert np.all(np.diff(two.u_minus.function.values) >= -1e-12)


def test_coarea_bound_for_radial_is_energy():
    surf = hyperbolic_disk(1.5, n_t=512, n_theta=8)
    u = GridFunction.from_function(surf, lambda t: np.cos(t))
    from mtlab.geom import dirichlet_energy

    dist = distribution(surf, u, 513)
    assert coarea_lower_bound(dist) == pytest.approx(dirichlet_energy(surf, u), rel=1e-4)


def test_errors():
    surf = euclidean_disk(1.0, n_t=64, n_theta=8)
    with pytest.raises(ConstantFunction):
        distribution(surf, GridFunction.from_function(surf, lambda t: 0 * t + 2.0))
    with pytest.raises(ValidationError):
        distribution(surf, GridFunction.from_function(surf, lambda t: t), n_levels=4)
