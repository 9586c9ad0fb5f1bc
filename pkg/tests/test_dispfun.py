import numpy as np
import pytest
from hypothesis import given, strategies as st

from dispbound.dispfun import (
    DomainError,
    SimplexPoint,
    block_sum,
    eval_function,
    family_for,
    gradient,
    numerator_block,
    sigma,
)

# numerator block of f_i for the k = 2 listing, i = 1..12
F2_BLOCKS = [4, 3, 2, 1, 4, 3, 2, 1, 4, 3, 2, 1]


@pytest.fixture(scope="module")
def fam2():
    return family_for(2, 2)


@pytest.fixture(scope="module")
def fam3():
    return family_for(2, 3)


def interior_points(d):
    return st.lists(st.floats(0.05, 1.0), min_size=d, max_size=d).map(
        lambda v: SimplexPoint.from_array(v)
    )


def test_sigma():
    assert sigma(0.25) == 3.0
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            sigma(bad)


def test_simplex_point():
    p = SimplexPoint.from_array([1, 1, 2])
    assert p.renormalized and p[3] == pytest.approx(0.5)
    assert not SimplexPoint.uniform(4).renormalized
    with pytest.raises(DomainError):
        SimplexPoint.from_array([0.5, 0.5, 0.0])
    with pytest.raises(DomainError):
        SimplexPoint.from_array([0.5, np.nan])
    with pytest.raises(ValueError):
        p.coords[0] = 1.0


def test_block_sum():
    x = SimplexPoint.from_array(np.arange(1, 13))
    assert block_sum(x, 1, 2, 2) == pytest.approx(6 / 78)
    with pytest.raises(ValueError):
        block_sum(x, 5)
    with pytest.raises(ValueError):
        block_sum(x, 1, 2, 3)


def test_F2_matches_listing(fam2):
    F = fam2.F_subset
    assert [f.target_index for f in F] == list(range(1, 13))
    assert [numerator_block(f, fam2) for f in F] == F2_BLOCKS


def test_family_sizes(fam2, fam3):
    assert len(fam2.G_all) == 48 and len(fam2.F_subset) == 12
    assert len(fam3.G_all) == 252 and len(fam3.F_subset) == 36
    for fam in (fam2, fam3):
        assert all(numerator_block(f, fam) is not None for f in fam.F_subset)


@pytest.mark.parametrize("n,k,alpha", [(2, 2, 33), (2, 3, 105), (3, 2, 145)])
def test_uniform_values(n, k, alpha):
    fam = family_for(n, k)
    u = SimplexPoint.uniform(fam.d)
    F, ties = fam.eval_F(u)
    G, _ = fam.eval_G(u)
    assert F == pytest.approx(alpha, rel=1e-12) and G == pytest.approx(alpha, rel=1e-12)
    assert len(ties) == fam.d


def test_strata_at_uniform(fam3):
    u = SimplexPoint.uniform(36)
    vals = fam3.values(u, "G")
    by_j = {}
    for f, v in zip(fam3.G_all, vals):
        by_j.setdefault(f.product_length, set()).add(round(float(v), 10))
    assert by_j == {0: {105.0}, 1: {round(35 / 3, 10)}, 2: {round(35 / 11, 10)}, 3: {1.0}}


@given(interior_points(12))
def test_vectorized_matches_scalar(x):
    fam = family_for(2, 2)
    vals = fam.values(x, "G")
    for f, v in zip(fam.G_all, vals):
        assert v == pytest.approx(eval_function(f, x), rel=1e-12)
    assert np.allclose(np.exp(fam.log_values(x, "G")), vals, rtol=1e-12)


@given(interior_points(12))
def test_gradient_finite_difference(x):
    fam = family_for(2, 2)
    v = x.coords
    h = 1e-6
    G = fam.gradients(v, "G")
    for r, f in enumerate(fam.G_all[:12]):
        g = gradient(f, x)
        assert np.allclose(G[r], g, rtol=1e-12)
        fd = np.empty(12)
        for i in range(12):
            e = np.zeros(12)
            e[i] = h
            fd[i] = (eval_function(f, v + e) - eval_function(f, v - e)) / (2 * h)
        assert np.abs(fd - g).max() <= 1e-6 * np.abs(g).max()


def test_saturation_reported(fam2):
    x = np.full(12, 1e-320)
    x[0] = 1.0
    vals, sat = fam2.values(x, "G", report_saturation=True)
    assert sat and not np.any(np.isnan(vals))
    assert np.all(np.isfinite(fam2.log_values(x, "G")))


def test_permutation_check(fam2):
    ident = {i: i for i in range(1, 13)}
    assert fam2.index_permutation_preserves(ident)
    swap = {**ident, 1: 2, 2: 1}
    assert not fam2.index_permutation_preserves(swap)
    with pytest.raises(ValueError):
        fam2.rows("H")
