import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dispbound.freegroup import Word, enumerate_ball, multiply
from dispbound.hyperbolic import (
    H3Point,
    MoebiusMap,
    SchottkyConfig,
    TrialConfig,
    WordBank,
    apply,
    bound_for,
    classify,
    displacements,
    distance,
    infimum_search,
    run_trials,
    sample_base_points,
    sample_schottky,
    test_bound as bound_report,
    translation_length,
    word_to_matrix,
)

cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
points = st.builds(H3Point, cplx, st.floats(0.05, 5))


def random_map(rng):
    while True:
        a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
        if abs(a * d - b * c) > 0.1:
            return MoebiusMap(a, b, c, d)


def close(p, q, tol=1e-12):
    return abs(p.z - q.z) < tol and abs(p.t - q.t) < tol


def test_normalization():
    m = MoebiusMap(2, 0, 0, 2)
    assert abs(m.det - 1) < 1e-12
    with pytest.raises(ValueError):
        MoebiusMap(1, 1, 1, 1)
    with pytest.raises(ValueError):
        H3Point(0, 0.0)


def test_apply_examples():
    lam = math.exp(0.5)
    m = MoebiusMap(lam, 0, 0, 1 / lam)
    q = apply(m, H3Point(0, 1))
    assert abs(q.z) < 1e-15 and q.t == pytest.approx(math.e, rel=1e-14)
    p = H3Point(0.3 + 0.2j, 0.7)
    assert close(apply(MoebiusMap.identity(), p), p)


def test_distance_examples():
    assert distance(H3Point(0, 1), H3Point(0, math.e)) == pytest.approx(1.0, rel=1e-12)
    p = H3Point(1 - 1j, 2)
    assert distance(p, p) == 0.0


def test_isometry_invariance():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        m = random_map(rng)
        p = H3Point(complex(*rng.normal(size=2)), float(rng.uniform(0.1, 3)))
        q = H3Point(complex(*rng.normal(size=2)), float(rng.uniform(0.1, 3)))
        worst = max(worst, abs(distance(apply(m, p), apply(m, q)) - distance(p, q)))
    assert worst < 1e-10


def test_composition_and_inverse():
    rng = np.random.default_rng(1)
    for _ in range(200):
        m, n = random_map(rng), random_map(rng)
        p = H3Point(complex(*rng.normal(size=2)), float(rng.uniform(0.2, 2)))
        a, b = apply(m @ n, p), apply(m, apply(n, p))
        assert abs(a.z - b.z) < 1e-9 * (1 + abs(a.z)) and abs(a.t - b.t) < 1e-9 * (1 + a.t)
        r = apply(m, apply(m.inverse(), p))
        assert abs(r.z - p.z) < 1e-9 and abs(r.t - p.t) < 1e-9


@given(points, points, points)
def test_metric_axioms(p, q, r):
    d = distance(p, q)
    assert d >= 0 and d == pytest.approx(distance(q, p), abs=1e-12)
    assert distance(p, r) <= distance(p, q) + distance(q, r) + 1e-9


def test_classify():
    half = math.exp(0.5)
    assert classify(MoebiusMap(half, 0, 0, 1 / half)) == "loxodromic"
    assert classify(MoebiusMap(1, 1, 0, 1)) == "parabolic"
    assert classify(MoebiusMap.identity()) == "identity"
    th = math.pi / 5
    assert classify(MoebiusMap(cmath.exp(1j * th), 0, 0, cmath.exp(-1j * th))) == "elliptic"
    assert classify(MoebiusMap(1j * 2, 0, 0, -0.5j)) == "loxodromic"
    eps = 5e-6  # tr^2 - 4 is about 4 eps^2, inside the band
    near = MoebiusMap(1 + eps, 0, 0, 1 / (1 + eps))
    assert classify(near) == "indeterminate"
    assert translation_length(MoebiusMap(half, 0, 0, 1 / half)) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def pair():
    return sample_schottky(42)


def test_sampler_certificate(pair):
    cert = pair.certificate
    assert pair.certified
    assert cert["min_disk_gap"] > 0 and cert["min_image_margin"] > 0
    assert cert["max_circle_error"] < 1e-9
    assert set(cert["types"].values()) == {"loxodromic"}


def test_sampler_rejects_degenerate_margin():
    with pytest.raises(ValueError):
        sample_schottky(1, SchottkyConfig(margin_factor=0.0))
    with pytest.raises(ValueError):
        sample_schottky(1, SchottkyConfig(margin_factor=1.5))


def test_sampler_deterministic():
    a, b = sample_schottky(5), sample_schottky(5)
    assert a.xi == b.xi and a.eta == b.eta and a.disks == b.disks


def test_word_homomorphism(pair):
    gens = pair.generators
    ball = enumerate_ball(2, 3)
    for u in ball:
        mu = word_to_matrix(u, gens).as_array()
        for v in ball:
            uv = word_to_matrix(multiply(u, v), gens).as_array()
            mv = word_to_matrix(v, gens).as_array()
            prod = mu @ mv
            err = min(np.abs(uv - prod).max(), np.abs(uv + prod).max())
            assert err < 1e-12 * max(1.0, np.abs(mu).max() * np.abs(mv).max())


def test_long_words_stay_unimodular(pair):
    from dispbound.freegroup import parse_word

    w = parse_word("xyXYxy" * 5)
    m = word_to_matrix(w, pair.generators)
    scale = abs(m.a * m.d) + abs(m.b * m.c)
    assert abs(m.det - 1) < 1e-12 * scale
    # the fold agrees with the product of its halves
    half, rest = Word(w.letters[:13]), Word(w.letters[13:])
    assert multiply(half, rest) == w
    prod = (word_to_matrix(half, pair.generators) @ word_to_matrix(rest, pair.generators)).as_array()
    err = min(np.abs(prod - m.as_array()).max(), np.abs(prod + m.as_array()).max())
    assert err < 1e-10 * np.abs(prod).max()


def test_inverse_displacement(pair):
    p = H3Point(0.1 + 0.2j, 0.8)
    for w in enumerate_ball(2, 3):
        d1 = distance(p, apply(word_to_matrix(w, pair.generators), p))
        d2 = distance(p, apply(word_to_matrix(w.inverse(), pair.generators), p))
        assert d1 == pytest.approx(d2, rel=1e-9, abs=1e-12)


def test_vectorized_displacements(pair):
    bank = WordBank(pair, 2)
    p = H3Point(-0.3j, 1.3)
    fast = displacements(bank.stack, p)
    slow = [distance(p, apply(m, p)) for m in bank.maps]
    assert np.allclose(fast, slow, rtol=1e-12)


def test_bound_report(pair):
    rep = bound_report(pair, 2, H3Point(0, 1))
    assert rep["bound"] == pytest.approx(0.5 * math.log(33), rel=1e-15)
    assert rep["margin"] == pytest.approx(rep["D"] - rep["bound"])
    assert rep["margin"] >= 0 and rep["status"] == "certified"
    assert bound_for(3) == pytest.approx(0.5 * math.log(105))


@pytest.mark.parametrize("k", [2, 3])
def test_margins_nonnegative_small_batch(k):
    out = run_trials(TrialConfig(k=k, trials=10, seed=3, base_points=5, infimum=True))
    assert out["violations"] == 0 and out["min_margin"] >= 0
    assert len(out["rows"]) == 10 * 6


def test_infimum_search_improves_on_samples(pair):
    bank = WordBank(pair, 2)
    best = infimum_search(bank)
    sampled = min(bank.max_displacement(p)[0] for p in sample_base_points(0, 20))
    assert best["D"] <= sampled + 1e-9
    assert best["D"] >= bound_for(2)


def test_smaller_disks_displace_more():
    # reported, not asserted: shrinking the disks should lengthen translations
    big = run_trials(TrialConfig(k=2, trials=5, seed=1, base_points=1, infimum=True))
    small = run_trials(TrialConfig(k=2, trials=5, seed=1, base_points=1, infimum=True,
                                   schottky=SchottkyConfig(margin_factor=0.09)))
    inf = lambda out: min(r["D"] for r in out["rows"] if r["kind"] == "infimum")
    print(f"infimum D: margin 0.9 -> {inf(big):.4f}, margin 0.09 -> {inf(small):.4f}")
    assert small["violations"] == big["violations"] == 0
