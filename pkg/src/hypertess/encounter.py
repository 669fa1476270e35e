"""Encounter points: wall constructions, detection against a Poisson point set, forests."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from . import tessellation as tess
from .errors import ConfigError, DegenerateConfigurationError, UsageError
from .estimators import EstimateReport, _mean_se, _binomial_se
from .measure import WallSet, derive_seed, invert_sinh_power, sample_process, sample_wall, sinh_power_integral
from .parallel import pmap


def cap_centers(d: int) -> np.ndarray:
    """The 2^d diagonal directions (+-1, .., +-1) / sqrt(d)."""
    if d < 2:
        raise UsageError("need d >= 2")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d))) / math.sqrt(d)


def r0(d: int) -> float:
    if d < 2:
        raise UsageError("need d >= 2")
    return 2.0 * math.atanh(math.sqrt(1.0 - 1.0 / d))


@dataclass(frozen=True)
class EncounterConfig:
    r: float
    epsilon: float
    a: float
    b: float
    R: float
    point_intensity: float = 1.0


def epsilon_bounds(d: int, cfg: EncounterConfig) -> dict:
    """Upper bounds on the cap half-width, keyed by the constraint they come from."""
    return {
        "disjoint caps": math.acos(1.0 - 2.0 / d) / 2.0,
        "walls miss the diagonal caps": (math.acos(math.sqrt(1.0 - 1.0 / d)) - math.acos(cfg.a)) / 2.0,
        "walls block G within r": math.acos(cfg.b / math.tanh(cfg.r)) / 2.0,
    }


def validate_config(d: int, cfg: EncounterConfig) -> None:
    if not cfg.r > r0(d):
        raise ConfigError(f"r = {cfg.r} must exceed r0({d}) = {r0(d):.6f}")
    if not math.tanh(r0(d)) < cfg.a < cfg.b < math.tanh(cfg.r):
        raise ConfigError(f"need tanh(r0) = {math.tanh(r0(d)):.6f} < a < b < tanh(r) = {math.tanh(cfg.r):.6f}")
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon must be positive")
    for name, bound in epsilon_bounds(d, cfg).items():
        if not cfg.epsilon < bound:
            raise ConfigError(f"epsilon = {cfg.epsilon} violates '{name}' (bound {bound:.6f})")
    if not cfg.point_intensity > 0:
        raise ConfigError("point intensity must be positive")


# ---------------------------------------------------------------- the set G and its cover

def g_mesh(d: int, pitch: float) -> np.ndarray:
    """Points of G = {u in S^{d-1} : some u_i = 0}, every point of G within ``pitch``."""
    pts = []
    for i in range(d):
        if d == 2:
            sub = np.array([[1.0], [-1.0]])
        elif d == 3:
            n = int(math.ceil(math.pi / pitch))
            a = np.arange(n) * (2 * math.pi / n)
            sub = np.column_stack([np.cos(a), np.sin(a)])
        else:
            # radial projection of a cube-surface grid is 1-Lipschitz outside the unit ball
            m = int(math.ceil(2.0 * math.sqrt(d - 1) / pitch))
            ax = np.linspace(-1, 1, m + 1)
            faces = []
            for j in range(d - 1):
                for s in (-1.0, 1.0):
                    g = np.stack(np.meshgrid(*([ax] * (d - 2)), indexing="ij"), axis=-1).reshape(-1, d - 2)
                    faces.append(np.insert(g, j, s, axis=1))
            sub = geo.unit(np.unique(np.vstack(faces), axis=0))
        pts.append(np.insert(sub, i, 0.0, axis=1))
    P = np.vstack(pts)
    return np.unique(np.round(P, 15), axis=0)


def greedy_cover(points: np.ndarray, radius: float) -> np.ndarray:
    """Centers chosen among ``points``; every point within ``radius`` of a center."""
    left = np.ones(len(points), dtype=bool)
    centers = []
    cr = math.cos(radius)
    while left.any():
        i = int(np.argmax(left))
        centers.append(points[i])
        left &= points @ points[i] < cr
    return np.array(centers)


def wall_cover(d: int, eps: float) -> np.ndarray:
    """Cap centers whose eps-caps cover G (mesh pitch eps/4, greedy spacing 3 eps/4)."""
    mesh = g_mesh(d, 0.999 * eps / 4)
    return greedy_cover(mesh, 0.75 * eps)


def build_walls(d: int, cfg: EncounterConfig, seed) -> list:
    validate_config(d, cfg)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(int(seed)))
    walls = []
    for c in wall_cover(d, cfg.epsilon):
        walls.append(sample_wall(d, WallSet(tuple(c), cfg.epsilon, cfg.a, cfg.b), rng))
    return walls


def wall_covers_G(walls, d: int, r: float, eps: float | None = None) -> bool:
    """Every ray from o towards G crosses a wall before radius r."""
    mesh = g_mesh(d, (eps or 0.05) / 8)
    U = np.array([w.normal for w in walls])
    t = np.array([w.offset for w in walls])
    ends = math.tanh(r) * mesh
    crossed = (U @ ends.T - t[:, None]) >= -geo.SIDE_TOL
    return bool(np.all(crossed.any(axis=0)))


def wall_misses_caps(walls, d: int, eps: float) -> bool:
    """No ray from o towards cap(v, eps), v a diagonal direction, meets a wall."""
    V = cap_centers(d)
    for w in walls:
        ang = np.arccos(np.clip(V @ w.u, -1.0, 1.0))
        if np.any(ang < eps + math.acos(w.offset)):
            return False
    return True


# ---------------------------------------------------------------- detection

def _arms(sample, y, r, h):
    """Arm structure at y: (reach flags, function mapping points to arm labels)."""
    if sample.d == 2 and h is None:
        A = tess.arms_2d(sample.normals, sample.offsets, sample.window_radius, y, r)
        return A.reaches, A.arm_of
    cnt, W, lab, reach, g = tess.arms_mesh(sample.normals, sample.offsets, sample.window_radius, y, r, h or 0.02)
    labels = np.unique(lab[reach])
    flags = np.zeros(lab.max() + 1 if lab.size and lab.max() >= 0 else 0, dtype=bool)
    flags[labels] = True

    def arm_of(X):
        Z = geo.unit(g.apply(np.atleast_2d(X)))
        return lab[np.argmax(Z @ W.T, axis=1)]

    return flags, arm_of


def isolated(points: np.ndarray, r: float) -> np.ndarray:
    P = np.atleast_2d(points)
    if len(P) < 2:
        return np.ones(len(P), dtype=bool)
    D = geo.pairwise_dist(P, P)
    np.fill_diagonal(D, np.inf)
    return D.min(axis=1) >= 2 * r


def detect_encounter_points(sample, points, r, h=None) -> list:
    """Indices of points with >= 3 window-reaching arms and no other point within 2r."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if len(P) == 0 or P.shape[1] == 0:
        return []
    R = sample.window_radius
    for p in P:
        if geo.dist_origin(p) + r >= R:
            raise UsageError("points must lie in B(o, R - r)")
    iso = isolated(P, r)
    out = []
    for i in np.flatnonzero(iso):
        flags, _ = _arms(sample, P[i], r, h)
        if int(np.sum(flags)) >= 3:
            out.append(int(i))
    return out


def build_forest(sample, encounter_indices, points, labels, r, h=None) -> list:
    """Edges joining each encounter point to the nearest encounter point in each arm.

    Cells are convex, so the intrinsic distance inside a cell is the hyperbolic
    distance; ties are broken by the smaller label.
    """
    E = [int(i) for i in encounter_indices]
    if len(E) < 2:
        return []
    P = np.atleast_2d(np.asarray(points, dtype=float))
    lab = np.asarray(labels, dtype=float)
    U, t = sample.normals, sample.offsets
    S = np.sign(U @ P[E].T - t[:, None]).T if len(t) else np.zeros((len(E), 0))
    edges = set()
    for a, i in enumerate(E):
        same = [E[b] for b in range(len(E)) if b != a and np.array_equal(S[b], S[a])]
        if not same:
            continue
        flags, arm_of = _arms(sample, P[i], r, h)
        arms = arm_of(P[same])
        for k in np.flatnonzero(flags):
            cand = [j for j, ak in zip(same, arms) if ak == k]
            if not cand:
                continue
            dd = [(geo.dist(P[i], P[j]), lab[j], j) for j in cand]
            j = min(dd)[2]
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


# ---------------------------------------------------------------- point process in a ball

def sample_points_in_ball(d: int, intensity: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Poisson points of the given intensity (per unit hyperbolic volume) in B(o, radius)."""
    vol = geo.ball_volume(d, radius)
    n = rng.poisson(intensity * vol)
    top = float(sinh_power_integral(d - 1, radius))
    rho = invert_sinh_power(d - 1, rng.random(n) * top, radius)
    W = geo.uniform_sphere(rng, n, d)
    return np.tanh(rho)[:, None] * W


def _encounter_task(args):
    d, gamma, cfg, h, seed, i = args
    rng = np.random.Generator(np.random.PCG64(derive_seed(derive_seed(seed, i), 1)))
    S = sample_process(d, gamma, cfg.R, derive_seed(seed, i))
    Y = sample_points_in_ball(d, cfg.point_intensity, cfg.R - cfg.r, rng)
    try:
        found = detect_encounter_points(S, Y, cfg.r, h)
    except DegenerateConfigurationError:
        return len(Y), 0, 1
    return len(Y), len(found), 0


def encounter_rate(d, gamma, cfg: EncounterConfig, n, seed, h=None, jobs=1) -> EstimateReport:
    """Detected encounter points per unit volume of B(o, R - r), with the window hit rate."""
    if cfg.R <= cfg.r:
        raise UsageError("window radius must exceed r")
    out = pmap(_encounter_task, [(d, gamma, cfg, h, seed, i) for i in range(n)], jobs)
    ny = np.array([o[0] for o in out], dtype=float)
    nf = np.array([o[1] for o in out], dtype=float)
    degenerate = int(sum(o[2] for o in out))
    vol = geo.ball_volume(d, cfg.R - cfg.r)
    m, se = _mean_se(nf)
    frac = float(np.mean(nf > 0))
    return EstimateReport("encounter_rate", {"d": d, "gamma": gamma, "r": cfg.r, "R": cfg.R,
                                             "point_intensity": cfg.point_intensity},
                          m / vol, se / vol, None, n, seed,
                          {"window_fraction": frac, "window_fraction_se": _binomial_se(frac, n),
                           "mean_points": float(ny.mean()), "mean_detected": m, "degenerate": degenerate})
