import math

import numpy as np
import pytest

from dispbound.convexity import (
    CF,
    CG,
    TANGENCY_POINT,
    RegionD,
    det_hessian_f,
    det_hessian_g,
    f_det_zero_x,
    f_two,
    g_det_zero_x,
    g_two,
    hessian_f,
    hessian_g,
    in_region2,
    pd_scan,
    pd_status,
    region_membership_uniform,
    regions_for_family,
)
from dispbound.dispfun import family_for
from oracles import fd_hessian, triangle_samples


@pytest.mark.parametrize("fun,hess", [(f_two, hessian_f), (g_two, hessian_g)])
def test_hessian_vs_finite_differences(fun, hess):
    worst = 0.0
    for x, y in triangle_samples(1, 1000):
        H = hess(x, y)
        err = np.abs(fd_hessian(fun, x, y) - H).max() / np.abs(H).max()
        worst = max(worst, err)
    assert worst < 1e-6


def test_gyy_differs_from_listed_form_by_two_over_y_cubed():
    # the listed entry is 2x^2(x^2+3xy+3y^2-y^3)/(x^2 y^3 (x+y)^3)
    for x, y in triangle_samples(2, 50):
        listed = 2 * x**2 * (x**2 + 3 * x * y + 3 * y**2 - y**3) / (x**2 * y**3 * (x + y) ** 3)
        assert hessian_g(x, y)[1, 1] - listed == pytest.approx(-2 / y**3, rel=1e-9)


def test_determinant_formulas():
    for x, y in triangle_samples(3, 200):
        assert det_hessian_f(x, y) == pytest.approx(np.linalg.det(hessian_f(x, y)), rel=1e-8, abs=1e-6)
        assert det_hessian_g(x, y) == pytest.approx(np.linalg.det(hessian_g(x, y)), rel=1e-8, abs=1e-6)


def test_determinants_vanish_on_critical_curves():
    for y in np.linspace(0.02, 0.7, 50):
        x = f_det_zero_x(y)
        if x > 0 and x + y < 1:
            assert abs(det_hessian_f(x, y) * x**4 * y**4) < 1e-6
    for y in np.linspace(0.02, 0.45, 50):
        x = g_det_zero_x(y)
        if x > 0 and x + y < 1:
            assert abs(det_hessian_g(x, y) * y**4 * (x + y) ** 4) < 1e-6


def test_f_critical_curve_is_not_the_listed_one():
    # det H_f vanishes on x + y - xy = 3/4; on x + xy + y = 3/4 it stays positive
    for y in np.linspace(0.05, 0.7, 20):
        x = (0.75 - y) / (1 + y)
        assert det_hessian_f(x, y) > 0
        xs = f_det_zero_x(y)
        assert xs + y - xs * y == pytest.approx(0.75)


def test_tangency_point():
    x, y = TANGENCY_POINT
    assert abs(CF.residual(x, y)) < 1e-12
    assert abs(x + x * y + y - 0.75) < 1e-12


@pytest.mark.parametrize("region", [CF, CG])
def test_pd_inside_regions(region):
    rep = pd_scan(region, 2000, seed=11)
    assert rep.inside_all_pd, rep.to_dict()
    assert rep.min_margin > 0
    assert rep.outside_not_pd > 0


def test_pd_scan_is_seeded():
    assert pd_scan(CF, 300, 5).to_dict() == pd_scan(CF, 300, 5).to_dict()
    with pytest.raises(ValueError):
        pd_scan(CF, 0, 5)


def test_pd_status():
    assert pd_status(np.eye(2)) == "pd"
    assert pd_status(np.diag([1.0, -1.0])) == "not_pd"
    assert pd_status(np.zeros((2, 2))) == "indeterminate"


def test_region2_membership():
    assert in_region2(CF, 0.1, 0.1) and in_region2(CG, 0.1, 0.1)
    assert not in_region2(CF, 0.6, 0.3)
    assert not in_region2(CG, 0.0, 0.1)


@pytest.mark.parametrize("k", [2, 3])
def test_uniform_inside_every_region(k):
    fam = family_for(2, k)
    rep = region_membership_uniform(fam)
    assert rep["all_inside"]
    assert rep["kinds"]["C1"] + rep["kinds"]["C2"] == fam.d
    if k == 2:
        assert rep["kinds"]["C1"] == 0


def test_regionD_forms():
    r = RegionD(1, 1, 2, 3)
    assert r.target_in_block and list(r.block) == list(range(1, 10))
    assert not RegionD(1, 4, 2, 3).target_in_block
    u = np.full(36, 1 / 36)
    rest, xi = 8 / 36, 1 / 36
    assert r.residual(u) == pytest.approx(rest + 2 * xi - rest * xi - xi**2 - 0.75)
    assert len(regions_for_family(family_for(2, 2))) == 12
    assert math.isfinite(RegionD(5, 2, 2, 2).residual(np.full(12, 1 / 12)))
