import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypertess import geometry as geo
from hypertess.errors import DomainError, UsageError

E1 = np.array([1.0, 0.0])


def lorentz_dist(x, y):
    # independent oracle: arcosh of the Minkowski pairing of the lifts
    X = np.r_[1.0, x] / math.sqrt(1 - np.dot(x, x))
    Y = np.r_[1.0, y] / math.sqrt(1 - np.dot(y, y))
    return math.acosh(max(1.0, X[0] * Y[0] - np.dot(X[1:], Y[1:])))


def random_ball_points(rng, n, d, rmax=3.0):
    W = geo.uniform_sphere(rng, n, d)
    return np.tanh(rng.uniform(0, rmax, n))[:, None] * W


# ---------------------------------------------------------------- examples

def test_dist_examples():
    assert geo.dist([0, 0], [0, 0]) == 0.0
    assert geo.dist([0, 0], [0.5, 0]) == pytest.approx(0.5493061443340549, abs=1e-13)
    assert geo.dist([0.3, 0], [-0.3, 0]) == pytest.approx(2 * math.atanh(0.3), abs=1e-13)
    assert geo.dist([0.3, 0], [-0.3, 0]) == pytest.approx(lorentz_dist(np.array([0.3, 0]), np.array([-0.3, 0])), abs=1e-12)


def test_dist_errors():
    with pytest.raises(UsageError):
        geo.dist([0, 0], [0, 0, 0])
    with pytest.raises(DomainError):
        geo.dist([0, 0], [1.0, 0])


def test_dist_matches_hyperboloid_oracle():
    rng = np.random.default_rng(1)
    X = random_ball_points(rng, 300, 3)
    Y = random_ball_points(rng, 300, 3)
    for x, y in zip(X, Y):
        assert geo.dist(x, y) == pytest.approx(lorentz_dist(x, y), rel=1e-9, abs=1e-9)


def test_dist_small_separation_is_accurate():
    x = np.array([0.9, 0.0])
    y = x + np.array([0.0, 1e-9])
    # metric at x: transverse length element dy / sqrt(1 - |x|^2)
    assert geo.dist(x, y) == pytest.approx(1e-9 / math.sqrt(1 - 0.81), rel=1e-6)


def test_side_examples():
    H = geo.hyperplane(E1, 0.5)
    assert geo.side(H, [0, 0]) == -1
    assert geo.side(H, [0.5, 0]) == 0
    assert geo.side(H, [0.9, 0]) == 1


def test_segment_crosses_examples():
    H = geo.hyperplane(E1, 0.5)
    assert geo.segment_crosses(H, [0, 0], [0.9, 0])
    assert not geo.segment_crosses(H, [0, 0], [-0.9, 0])
    assert geo.segment_crosses(H, [0.5, 0.1], [0.5, -0.1])


def test_ray_hits_examples():
    H = geo.hyperplane(E1, 0.5)
    assert geo.ray_hits(H, E1)
    assert not geo.ray_hits(H, -E1)
    a = math.pi / 3 - 0.01
    assert geo.ray_hits(H, [math.cos(a), math.sin(a)])
    a = math.pi / 3 + 0.01
    assert not geo.ray_hits(H, [math.cos(a), math.sin(a)])


def test_cut_cap_examples():
    c = geo.cut_cap_at_radius(geo.hyperplane(E1, 0.5), 40.0)
    assert c.radius == pytest.approx(math.pi / 3, abs=1e-12)
    assert c.center == (1.0, 0.0)
    assert geo.cut_cap_at_radius(geo.hyperplane(E1, 0.9), 1.0) is None
    for r in (0.1, 1.0, 5.0):
        assert geo.cut_cap_at_radius(geo.hyperplane(E1, 0.0), r).radius == pytest.approx(math.pi / 2, abs=1e-15)


def test_ball_volume_examples():
    assert geo.ball_volume(2, 0) == 0.0
    assert geo.ball_volume(2, 2) == pytest.approx(2 * math.pi * (math.cosh(2) - 1), rel=1e-14)
    assert geo.ball_volume(2, 2) == pytest.approx(17.35539, abs=1e-5)
    # closed form pi (sinh 2 - 2) = 5.11093
    assert geo.ball_volume(3, 1) == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-10)
    assert geo.ball_volume(3, 1) == pytest.approx(5.11093, abs=1e-5)


def test_ball_volume_increasing_and_small_r():
    for d in (2, 3, 4, 5):
        v = [geo.ball_volume(d, r) for r in np.linspace(0, 4, 21)]
        assert np.all(np.diff(v) > 0)
        # Euclidean limit: omega_d r^d / d
        r = 1e-3
        assert geo.ball_volume(d, r) == pytest.approx(geo.sphere_area(d) * r ** d / d, rel=1e-5)


def test_klein_area_density_integrates_to_ball_volume():
    # Klein area element (1 - rho^2)^(-3/2) rho drho dphi over the disc of radius tanh R
    from scipy import integrate
    for R in (0.5, 2.0):
        val, _ = integrate.quad(lambda p: p * (1 - p * p) ** -1.5, 0, math.tanh(R))
        assert 2 * math.pi * val == pytest.approx(geo.ball_volume(2, R), rel=1e-10)


def test_translation_examples():
    x = np.array([0.1, -0.2, 0.3])
    assert np.allclose(geo.apply(geo.translation_along_axis(3, 1, 0.0), x), x, atol=1e-15)
    for s in (-2.0, 0.7, 3.0):
        p = geo.apply(geo.translation_along_axis(3, 2, s), np.zeros(3))
        assert np.allclose(p, [0, math.tanh(s), 0], atol=1e-15)
        assert geo.dist_origin(p) == pytest.approx(abs(s), abs=1e-12)
    with pytest.raises(UsageError):
        geo.translation_along_axis(3, 0, 1.0)
    with pytest.raises(UsageError):
        geo.translation_along_axis(3, 4, 1.0)


def test_to_origin_maps_point_to_origin():
    rng = np.random.default_rng(3)
    for y in random_ball_points(rng, 50, 2):
        g = geo.to_origin(y)
        assert np.allclose(g.apply(y), 0.0, atol=1e-10)


def test_hits_ball_matches_mapped_offset():
    # oracle: move the center to o, where the ball is round and the test is t < tanh rho
    rng = np.random.default_rng(5)
    for _ in range(200):
        d = int(rng.integers(2, 5))
        c = random_ball_points(rng, 1, d, 2.0)[0]
        rho = float(rng.uniform(0.1, 2.0))
        U = geo.uniform_sphere(rng, 20, d)
        t = rng.uniform(0, 0.95, 20)
        Ug, tg = geo.to_origin(c).apply_hyperplanes(U, t)
        want = tg < math.tanh(rho)
        got = geo.hits_ball(U, t, c, rho)
        margin = np.abs(tg - math.tanh(rho)) > 1e-9
        assert np.array_equal(got[margin], want[margin])


def test_point_hyperplane_distance_oracle():
    rng = np.random.default_rng(6)
    for _ in range(100):
        y = random_ball_points(rng, 1, 2, 2.0)[0]
        u = geo.uniform_sphere(rng, 1, 2)[0]
        t = float(rng.uniform(0, 0.9))
        # brute force: minimize distance over points of the chord
        v = np.array([-u[1], u[0]])
        half = math.sqrt(1 - t * t)
        lam = np.linspace(-half, half, 20001)[1:-1]
        pts = t * u + lam[:, None] * v
        brute = min(geo.dist(y, p) for p in pts[:: 40])
        fine = geo.point_hyperplane_distance(u[None, :], np.array([t]), y)[0]
        assert fine <= brute + 1e-9
        assert brute - fine < 0.05


# ---------------------------------------------------------------- properties

@settings(max_examples=1000, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_metric_axioms(d, seed):
    rng = np.random.default_rng(seed)
    x, y, z = random_ball_points(rng, 3, d)
    assert geo.dist(x, y) == geo.dist(y, x)
    assert geo.dist(x, z) <= geo.dist(x, y) + geo.dist(y, z) + 1e-9
    assert geo.dist(x, y) >= 0


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1), st.floats(-0.99, 0.99))
def test_canonical_form_idempotent(d, seed, t):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d) * rng.uniform(0.1, 10)
    u1, t1 = geo.canonical_form(u, t)
    u2, t2 = geo.canonical_form(u1, t1)
    assert np.array_equal(u1, u2) and t1 == t2
    assert t1 >= 0
    # (u, t) and (-u, -t) describe the same chord and canonicalize identically
    u3, t3 = geo.canonical_form(-u, -t)
    assert np.allclose(u3, u1, atol=1e-15) and t3 == pytest.approx(t1, abs=1e-15)


def test_canonical_form_distinguishes_distinct_chords():
    a = geo.hyperplane([1.0, 0.0], 0.5)
    assert geo.hyperplane([-2.0, 0.0], -1.0) == a
    assert geo.hyperplane([1.0, 0.0], 0.4) != a
    assert geo.hyperplane([0.0, 1.0], 0.5) != a
    # t = 0: the first nonzero coordinate is made positive
    assert geo.hyperplane([-1.0, 1.0], 0.0).normal[0] > 0
    assert geo.hyperplane([0.0, -1.0], 0.0).normal == (0.0, 1.0)
    U, t = geo.canonicalize_arrays(np.array([[-1.0, 1.0], [0.0, -3.0], [2.0, 0.0]]), np.array([0.0, 0.0, -1.0]))
    assert np.allclose(U, [[1 / math.sqrt(2), -1 / math.sqrt(2)], [0, 1], [-1, 0]])
    assert np.allclose(t, [0, 0, 0.5])


def test_hyperplane_validation():
    with pytest.raises(UsageError):
        geo.Hyperplane((1.0, 1.0), 0.2)
    with pytest.raises(DomainError):
        geo.Hyperplane((1.0, 0.0), 1.0)
    with pytest.raises(DomainError):
        geo.hyperplane([1.0, 0.0], 1.5)


def segment_meets_plane(u, t, w):
    # parametric: <u, s w> = t for some s in [0, 1 - 1e-9]
    c = float(np.dot(u, w))
    if c <= 0:
        return False
    return t / c <= 1 - 1e-9


@settings(max_examples=1000, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_ray_hits_matches_parametric_segment(d, seed):
    rng = np.random.default_rng(seed)
    u = geo.uniform_sphere(rng, 1, d)[0]
    w = geo.uniform_sphere(rng, 1, d)[0]
    t = float(rng.uniform(0, 0.999))
    ang = math.acos(np.clip(np.dot(w, u), -1, 1))
    if abs(ang - math.acos(t)) <= 1e-6:
        return
    assert geo.ray_hits(geo.hyperplane(u, t), w) == segment_meets_plane(u, t, w)


def test_cap_nesting():
    h = geo.hyperplane(E1, 0.5)
    radii = [geo.cut_cap_at_radius(h, r).radius for r in (2, 4, 8, 16)]
    assert np.all(np.diff(radii) > 0)
    assert math.acos(0.5) - radii[-1] < 1e-3
    assert radii[-1] <= math.acos(0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_isometries_preserve_form_and_distance(d, seed):
    rng = np.random.default_rng(seed)
    g = geo.identity(d)
    for _ in range(4):
        if rng.random() < 0.5:
            g = geo.translation_along_axis(d, int(rng.integers(1, d + 1)), float(rng.uniform(-2, 2))) @ g
        else:
            i, j = rng.choice(d, 2, replace=False) + 1
            g = geo.rotation(d, int(i), int(j), float(rng.uniform(0, 2 * math.pi))) @ g
    J = np.diag([-1.0] + [1.0] * d)
    M = g.lorentz
    assert np.allclose(M.T @ J @ M, J, atol=1e-10)
    assert M[0, 0] > 0
    x, y = random_ball_points(rng, 2, d, 2.0)
    assert geo.dist(g.apply(x), g.apply(y)) == pytest.approx(geo.dist(x, y), abs=1e-9)


def test_isometry_moves_hyperplanes_consistently():
    rng = np.random.default_rng(9)
    g = geo.random_isometry(3, rng, 1.5)
    U = geo.uniform_sphere(rng, 30, 3)
    t = rng.uniform(0, 0.8, 30)
    Ug, tg = g.apply_hyperplanes(U, t)
    X = random_ball_points(rng, 50, 3, 1.5)
    # sides are preserved up to a global flip per hyperplane
    s0 = geo.signs(U, t, X)
    s1 = geo.signs(Ug, tg, g.apply(X))
    flip = s0[:, :1] * s1[:, :1]
    assert np.array_equal(s0 * flip, s1)
    assert np.all(tg >= 0)


def test_inverse_and_composition():
    rng = np.random.default_rng(10)
    g = geo.random_isometry(2, rng)
    x = random_ball_points(rng, 5, 2)
    assert np.allclose((g.inverse() @ g).apply(x), x, atol=1e-10)
    assert g.is_valid()
