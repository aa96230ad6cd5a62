import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.errors import ConstraintViolated, NotMonotone, Overflow, PreconditionViolated
from mtlab.functionals import (
    hardy_report,
    lp_norm,
    markov_report,
    median_average,
    mt_functional,
    quadratic_shift_bound,
    shift_expression,
)
from mtlab.geom import GridFunction, euclidean_disk, flat_cylinder, round_sphere
from mtlab.spectral import radial_gap

J01 = 2.404825557695773


def test_mt_small_amplitude_and_zero():
    surf = euclidean_disk(1.0, n_t=256, n_theta=8)
    zero = GridFunction.from_function(surf, lambda t: 0 * t)
    assert mt_functional(surf, zero).value == 0.0
    tiny = GridFunction.from_function(surf, lambda t: 1e-4 * (1 - t**2))
    # expm1(a u^2) ~ a u^2; int (1 - t^2)^2 = pi / 3
    assert mt_functional(surf, tiny, 4 * math.pi).value == pytest.approx(4 * math.pi * 1e-8 * math.pi / 3, rel=1e-6)


def test_mt_overflow_carries_partial():
    surf = euclidean_disk(1.0, n_t=64, n_theta=8)
    u = GridFunction.from_function(surf, lambda t: 10 * (1 - t))
    with pytest.raises(Overflow) as info:
        mt_functional(surf, u, 4 * math.pi)
    assert info.value.node == (0,) and info.value.partial > 0


def test_lp_norms():
    surf = euclidean_disk(1.0)
    one = GridFunction.from_function(surf, lambda t: 0 * t + 1)
    for p in (1, 2, 4):
        assert lp_norm(surf, one, p) == pytest.approx(math.pi ** (1 / p), rel=1e-12)


def test_median_average_of_radius():
    surf = euclidean_disk(1.0, n_t=512, n_theta=8)
    m, avg = median_average(surf, GridFunction.from_function(surf, lambda t: t))
    assert avg == pytest.approx(2 / 3, rel=1e-10)
    assert m == pytest.approx(1 / math.sqrt(2), abs=1e-5)


def test_markov_poincare_reading():
    surf = flat_cylinder(0.0, 2.0, n_t=256, n_theta=32)
    est = radial_gap(surf, 1024, sectors=(0, 1, 2))
    u = GridFunction.from_function(surf, lambda T, TH: T**3 + np.cos(TH), radial=False)
    rep = markov_report(surf, u, est)
    assert rep.holds_poincare
    assert rep.lhs == pytest.approx(abs(rep.median - rep.average))


def test_hardy_ramp_on_unit_disk():
    surf = euclidean_disk(1.0, n_t=512, n_theta=8)
    m = 0.3
    v = GridFunction.from_function(surf, lambda t: -5 * m + 6 * m * t)
    est = radial_gap(surf, 2048, boundary="dirichlet")
    rep = hardy_report(surf, v, m, est)
    assert rep.energy == pytest.approx(36 * math.pi * m * m, rel=1e-10)
    assert rep.integral == pytest.approx(-m * math.pi, rel=1e-10)
    assert rep.certified and rep.holds
    assert rep.bound_lambda == pytest.approx(4 * J01**2 * m * m * math.pi, rel=1e-4)


def test_hardy_preconditions():
    surf = euclidean_disk(1.0, n_t=128, n_theta=8)
    est = radial_gap(surf, 256, boundary="dirichlet")
    with pytest.raises(NotMonotone):
        hardy_report(surf, GridFunction.from_function(surf, lambda t: 1 - t), 0.0 + 1e-3, est)
    with pytest.raises(PreconditionViolated):
        hardy_report(surf, GridFunction.from_function(surf, lambda t: 0.5 * t), 0.5, est)
    # the ramp from -3m to m integrates to -m A / 3, above the required -m A
    with pytest.raises(PreconditionViolated):
        hardy_report(surf, GridFunction.from_function(surf, lambda t: -3 * 0.2 + 4 * 0.2 * t), 0.2, est)
    assert not hardy_report(
        surf, GridFunction.from_function(surf, lambda t: -5 * 0.2 + 6 * 0.2 * t), 0.2,
        radial_gap(surf, 256),
    ).certified


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.booleans())
def test_shift_bound_matches_search(c, Lam, A, neg):
    m = math.sqrt(c / (4 * Lam * A)) * (-1 if neg else 1)
    sb = quadratic_shift_bound(m, Lam, A)
    assert sb.c == pytest.approx(c, rel=1e-12)
    assert sb.agreement < 1e-8
    assert shift_expression(sb.argmin, m, sb.c) == pytest.approx(sb.min_value, rel=1e-10, abs=1e-12)
    grid = np.linspace(sb.argmin - 3, sb.argmin + 3, 101)
    assert np.all(shift_expression(grid, m, sb.c) >= sb.min_value - 1e-9 * abs(sb.min_value))


def test_shift_bound_rejects_c_out_of_range():
    with pytest.raises(ConstraintViolated):
        quadratic_shift_bound(1.0, 1.0, 1.0)
    with pytest.raises(ConstraintViolated):
        quadratic_shift_bound(0.1, -1.0, 1.0)
