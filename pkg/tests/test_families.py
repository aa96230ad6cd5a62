import math

import numpy as np
import pytest

from mtlab.errors import InsufficientRange, ValidationError
from mtlab.families import (
    FamilyKind,
    FamilySpec,
    collar_blowup_scan,
    collar_member,
    collar_width,
    cusp_member,
    cusp_ratio,
    extrapolate_limit,
    moser_member,
    moser_mt_exact,
    mt_scan,
    ordered_map,
)
from mtlab.functionals import mt_functional
from mtlab.geom import dirichlet_energy


@pytest.mark.parametrize("b", [-2.0, -1.0, 0.0, 1.0])
def test_cusp_closed_forms(b):
    m = cusp_member(b)
    got = m.measured()
    for key in ("e2", "l2", "l4"):
        assert got[key] == pytest.approx(m.closed_forms[key], rel=1e-6)
    assert got["l4"] / got["e2"] ** 2 == pytest.approx(cusp_ratio(b), rel=1e-6)


def test_collar_width_is_the_standard_one():
    eps = 1e-3
    assert math.sinh(collar_width(eps)) * math.sinh(math.pi * eps) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_collar_quadrature_matches_exact(eps):
    rep = collar_member(eps).report
    assert rep["energy"] == pytest.approx(rep["energy_exact"], rel=1e-9)
    assert rep["integral"] == pytest.approx(rep["integral_exact"], rel=1e-9)
    # the quoted expressions leave out the 2 pi of the theta integral
    R0 = eps**0.1
    assert rep["energy_exact"] / (2 * math.pi) == pytest.approx(
        eps * (2 / 3) * math.sinh(R0) ** 3, rel=1e-12
    )


def test_collar_scan_shape():
    scan = collar_blowup_scan([1e-2, 1e-3, 1e-4, 1e-5])
    assert scan.increasing
    assert scan.slope < 0
    with pytest.raises(InsufficientRange):
        collar_blowup_scan([1e-2, 1e-3, 1e-4])
    with pytest.raises(InsufficientRange):
        collar_blowup_scan([1e-2, 5e-3, 2e-3, 1e-3])


def test_moser_members():
    for k in (math.e, 10.0, 1000.0):
        m = moser_member(k)
        assert dirichlet_energy(m.surface, m.u) == pytest.approx(1.0, rel=1e-10)
        for alpha in (4 * math.pi, 4.4 * math.pi):
            got = mt_functional(m.surface, m.u, alpha).value
            assert got == pytest.approx(moser_mt_exact(k, alpha), rel=1e-6)


def test_moser_limit_at_critical_exponent():
    # the values tend to 2 pi, approached like 1 / log k
    vals = [moser_mt_exact(10.0**p, 4 * math.pi) for p in (6, 12, 24)]
    assert abs(vals[-1] - 2 * math.pi) < abs(vals[0] - 2 * math.pi)
    assert vals[-1] == pytest.approx(2 * math.pi, rel=0.05)


def test_extrapolation_recovers_exact_series():
    k = np.array([10.0, 100.0, 1e3, 1e4])
    v = 3.0 + 2.0 / np.log(k) - 0.5 / np.log(k) ** 2
    assert extrapolate_limit(k, v) == pytest.approx(3.0, rel=1e-10)


def test_family_spec_validation():
    assert FamilySpec("cusp", (-1, 0)).kind is FamilyKind.CUSP
    with pytest.raises(ValidationError):
        FamilySpec("cusp", (0, -1))
    with pytest.raises(ValidationError):
        FamilySpec("moser", (2.0, 10.0))
    with pytest.raises(ValidationError):
        FamilySpec("collar", (1e-3, 1e-2))
    with pytest.raises(ValidationError):
        FamilySpec("cusp", ())


def test_ordered_map_and_threads(monkeypatch):
    monkeypatch.setenv("MTLAB_THREADS", "4")
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    spec = FamilySpec("moser", (math.e, 10.0))
    par = mt_scan(spec, [4 * math.pi])
    monkeypatch.setenv("MTLAB_THREADS", "1")
    assert mt_scan(spec, [4 * math.pi]) == par
    monkeypatch.setenv("MTLAB_THREADS", "zero")
    with pytest.raises(ValidationError):
        ordered_map(abs, [1])


def test_scan_normalizes_energy():
    rows = mt_scan(FamilySpec("cusp", (-1.0, 0.0)), [4 * math.pi])
    assert all(r.energy == pytest.approx(1.0, rel=1e-10) for r in rows)
