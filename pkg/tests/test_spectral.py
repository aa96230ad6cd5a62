import math

import pytest
from hypothesis import given, settings, strategies as st

from mtlab.errors import ValidationError
from mtlab.geom import euclidean_disk, flat_cylinder, hyperbolic_disk, round_sphere
from mtlab.spectral import Boundary, cheeger_buser_report, radial_gap

J01 = 2.404825557695773
J11 = 3.8317059702075125  # first zero of J_1, i.e. of J_0'


def test_disk_neumann_and_dirichlet():
    assert radial_gap(euclidean_disk(), 4096).lambda1 == pytest.approx(J11**2, rel=1e-5)
    dirichlet = radial_gap(euclidean_disk(), 2048, boundary="dirichlet").lambda1
    assert dirichlet == pytest.approx(J01**2, rel=1e-5)


def test_second_order_convergence():
    errs = [radial_gap(euclidean_disk(), n).lambda1 - J11**2 for n in (256, 512, 1024)]
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_sphere_and_sectors():
    est = radial_gap(round_sphere(), 2048, sectors=(0, 1, 2))
    assert est.by_sector[0].eigenvalue == pytest.approx(2.0, rel=1e-5)
    assert est.by_sector[1].eigenvalue == pytest.approx(2.0, rel=1e-5)
    assert est.by_sector[2].eigenvalue == pytest.approx(6.0, rel=1e-5)
    assert est.poincare_const == pytest.approx(1 / est.lambda1)


def test_cylinder_neumann():
    # first nonconstant radial mode cos(pi t / L)
    est = radial_gap(flat_cylinder(0.0, 2.0), 2048)
    assert est.lambda1 == pytest.approx((math.pi / 2) ** 2, rel=1e-5)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 5.0))
def test_scaling_law(s):
    base = radial_gap(euclidean_disk(1.0), 512).lambda1
    scaled = radial_gap(euclidean_disk(s), 512).lambda1
    assert scaled * s * s == pytest.approx(base, rel=1e-9)


def test_large_hyperbolic_disk_radial_gap():
    est = radial_gap(hyperbolic_disk(30.0), 4096)
    assert 0.25 < est.lambda1 < 0.3
    rep = cheeger_buser_report(hyperbolic_disk(30.0), est, 1.0, -1.0, certified=True, h_true=1.0)
    assert rep.holds_with_true_h


def test_boundary_parse():
    assert Boundary.parse("Neumann") is Boundary.NEUMANN
    assert Boundary.parse(Boundary.DIRICHLET) is Boundary.DIRICHLET
    with pytest.raises(ValidationError):
        Boundary.parse("robin")
