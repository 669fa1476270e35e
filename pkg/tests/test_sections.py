import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypertess import geometry as geo
from hypertess import sections as sec
from hypertess.errors import UsageError
from hypertess.measure import ProcessSample, derive_seed, mu_hit_ball, sample_process


def test_omega_values():
    assert sec.omega(1) == pytest.approx(2.0, rel=1e-14)
    assert sec.omega(2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert sec.omega(3) == pytest.approx(4 * math.pi, rel=1e-14)
    assert sec.omega(4) == pytest.approx(19.7392088, rel=1e-8)
    with pytest.raises(UsageError):
        sec.omega(0)
    with pytest.raises(UsageError):
        sec.omega(1.5)


def test_section_constant_examples():
    assert sec.section_constant(3, 2) == pytest.approx(math.pi / 4, abs=1e-15)
    w = sec.omega
    assert sec.section_constant(4, 3) == pytest.approx(w(5) * w(3) / (w(4) * w(4)), rel=1e-12)
    for d, k in [(3, 3), (3, 0), (2, 4)]:
        with pytest.raises(UsageError):
            sec.section_constant(d, k)


def test_section_constant_forms_agree():
    for d in range(2, 12):
        for k in range(1, d):
            assert abs(sec.section_constant_omega(d, k) - sec.section_constant_gamma(d, k)) <= 1e-12


def test_section_constant_tower():
    for d in range(3, 10):
        for m in range(2, d):
            for k in range(1, m):
                prod = sec.section_constant(d, m) * sec.section_constant(m, k)
                assert abs(sec.section_constant(d, k) - prod) <= 1e-12


# ---------------------------------------------------------------- induced hyperplanes

def one(u, t, d=3, R=3.0):
    u, t = geo.canonical_form(np.asarray(u, float), t)
    return ProcessSample(d, 1.0, R, 0, np.array([u]), np.array([t]))


def test_induce_examples():
    [h] = sec.induce_on_kplane(one([1, 0, 0], 0.5), 2)
    assert np.allclose(h.u, [1, 0]) and h.offset == pytest.approx(0.5)
    assert sec.induce_on_kplane(one([0, 0, 1], 0.5), 2) == []
    [h] = sec.induce_on_kplane(one(np.array([1, 0, 1]) / math.sqrt(2), 0.3), 2)
    assert np.allclose(h.u, [1, 0]) and h.offset == pytest.approx(0.3 * math.sqrt(2), rel=1e-14)
    # offset 0.8 over a projection of 1/sqrt 2 leaves the disc
    assert sec.induce_on_kplane(one(np.array([1, 0, 1]) / math.sqrt(2), 0.8), 2) == []
    with pytest.raises(UsageError):
        sec.induce_on_kplane(one([1, 0, 0], 0.5), 3)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(3, 6))
def test_projection_identity_by_membership(seed, d):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, d))
    u = geo.uniform_sphere(rng, 1, d)[0]
    t = rng.uniform(0, 0.95)
    S = one(u, t, d)
    hs = sec.induce_on_kplane(S, k)
    X = rng.uniform(-1, 1, (400, k))
    X = X[np.sum(X * X, axis=1) < 1]
    Xa = np.zeros((len(X), d))
    Xa[:, :k] = X
    amb = np.sign(Xa @ S.normals[0] - S.offsets[0])
    if hs:
        h = hs[0]
        ind = np.sign(X @ h.u - h.offset)
        # the induced normal may be flipped by canonicalization
        assert np.array_equal(amb, ind) or np.array_equal(amb, -ind)
    else:
        assert np.all(amb == amb[0])


def test_tower_chord_for_chord():
    for i in range(20):
        S = sample_process(5, 2.0, 2.0, derive_seed(40, i))
        direct = sec.induced_sample(S, 2)
        two = sec.induced_sample(sec.induced_sample(S, 4), 2)
        a = np.column_stack([direct.normals, direct.offsets])
        b = np.column_stack([two.normals, two.offsets])
        a = a[np.lexsort(a.T[::-1])]
        b = b[np.lexsort(b.T[::-1])]
        assert a.shape == b.shape
        assert np.allclose(a, b, atol=1e-12)
        assert two.gamma == pytest.approx(direct.gamma, rel=1e-12)


def test_induced_sample_keeps_window_and_marks():
    S = sample_process(3, 3.0, 1.5, 41)
    I = sec.induced_sample(S, 2)
    assert I.d == 2 and I.window_radius == 1.5
    assert I.gamma == pytest.approx(3.0 * math.pi / 4)
    assert np.all(I.offsets < math.tanh(1.5))
    assert np.allclose(np.linalg.norm(I.normals, axis=1), 1.0)


# ---------------------------------------------------------------- section intensity

def test_section_targets():
    r = sec.verify_section_intensity(3, 2, 1.0, 1.0, 3, 0)
    assert r.target == pytest.approx(1.8460, abs=1e-4)
    r2 = sec.verify_section_intensity(3, 2, 2.0, 1.0, 3, 0)
    assert r2.target == 2 * r.target
    r4 = sec.verify_section_intensity(4, 2, 1.0, 1.0, 3, 0)
    assert r4.target == pytest.approx(sec.section_constant(4, 2) * 2 * math.sinh(1), rel=1e-14)


def test_section_intensity_poisson():
    r = sec.verify_section_intensity(3, 2, 1.0, 1.0, 2000, 42)
    assert r.within(3.0)
    assert 0.9 <= r.extras["variance_to_mean"] <= 1.1
    assert r.extras["ks_pvalue"] > 1e-3


def test_section_intensity_d4():
    r = sec.verify_section_intensity(4, 3, 1.0, 1.0, 1000, 43)
    assert r.target == pytest.approx(sec.section_constant(4, 3) * mu_hit_ball(3, 1.0))
    assert r.within(3.5)
