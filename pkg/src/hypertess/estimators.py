"""Monte Carlo estimators with closed-form targets."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import geometry as geo
from . import tessellation as tess
from .errors import UsageError
from .measure import (derive_seed, mean_abs_coordinate, mu_joint_separation, mu_hit_ball,
                      sample_batch, sample_process)
from .parallel import pmap

BLOCK = 10_000


@dataclass
class EstimateReport:
    name: str
    parameters: dict
    estimate: float
    standard_error: float
    target: float | None
    n: int
    seed: int | None
    extras: dict = field(default_factory=dict)

    def z_score(self) -> float:
        if self.target is None or not self.standard_error > 0:
            return math.nan
        return (self.estimate - self.target) / self.standard_error

    def within(self, k: float = 3.0) -> bool:
        return abs(self.z_score()) <= k

    def to_json(self) -> str:
        d = asdict(self)
        d["se"] = d.pop("standard_error")
        d["params"] = d.pop("parameters")
        return json.dumps(d, sort_keys=True, default=_jsonable)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _binomial_se(p, n):
    # a floor of 1/n keeps the standard error positive at p in {0, 1}
    return math.sqrt(max(p * (1 - p), 1.0 / n) / n)


# ---------------------------------------------------------------- two-point function

def _two_point_block(args):
    d, gamma, x, y, R, seed, b, m = args
    counts, U, t = sample_batch(d, gamma, R, derive_seed(seed, b), m)
    sep = np.sign(U @ x - t) != np.sign(U @ y - t)
    owner = np.repeat(np.arange(m), counts)
    hits = np.bincount(owner[sep], minlength=m)
    return int(np.sum(hits == 0))


def two_point(d, gamma, s, n, seed, jobs=1, isometry: geo.Isometry | None = None) -> EstimateReport:
    """Frequency with which o and a point at distance s lie in the same cell.

    With ``isometry`` both points are moved first; the window is then the
    smallest ball around o holding both, which every separating hyperplane meets.
    """
    if not s > 0:
        raise UsageError("s must be positive")
    x = np.zeros(d)
    y = np.zeros(d)
    y[0] = math.tanh(s)
    if isometry is not None:
        x, y = isometry.apply(x), isometry.apply(y)
    R = max(geo.dist_origin(x), geo.dist_origin(y)) * (1 + 1e-12) + 1e-12
    blocks = [(d, gamma, x, y, R, seed, b, min(BLOCK, n - b * BLOCK)) for b in range((n + BLOCK - 1) // BLOCK)]
    same = sum(pmap(_two_point_block, blocks, jobs))
    p = same / n
    c = mean_abs_coordinate(d)
    return EstimateReport("two_point", {"d": d, "gamma": gamma, "s": s, "window_radius": R},
                          p, _binomial_se(p, n), math.exp(-gamma * s), n, seed,
                          {"crofton_target": math.exp(-gamma * c * s), "separating_measure": c * s})


# ---------------------------------------------------------------- vertex intensity

def _vertex_task(args):
    gamma, Rc, Rw, seed, i = args
    S = sample_process(2, gamma, Rw, derive_seed(seed, i))
    return count_vertices(S.normals, S.offsets, Rc)


def count_vertices(U, t, R: float) -> int:
    """Pairwise line intersections inside B(o, R)."""
    n = len(t)
    if n < 2:
        return 0
    i, j = np.triu_indices(n, 1)
    det = U[i, 0] * U[j, 1] - U[i, 1] * U[j, 0]
    ok = np.abs(det) > 1e-15
    i, j, det = i[ok], j[ok], det[ok]
    x = (t[i] * U[j, 1] - t[j] * U[i, 1]) / det
    y = (U[i, 0] * t[j] - U[j, 0] * t[i]) / det
    T = math.tanh(R)
    return int(np.sum(x * x + y * y < T * T))


def vertex_intensity_2d(gamma, R_count, R_window, n, seed, jobs=1) -> EstimateReport:
    if R_window < R_count:
        raise UsageError("the window must contain the counting ball")
    counts = pmap(_vertex_task, [(gamma, R_count, R_window, seed, i) for i in range(n)], jobs)
    vol = geo.ball_volume(2, R_count)
    m, se = _mean_se(counts)
    return EstimateReport("vertex_intensity_2d", {"gamma": gamma, "R_count": R_count, "R_window": R_window},
                          m / vol, se / vol, gamma ** 2 / math.pi, n, seed,
                          {"mean_count": m, "ball_volume": vol})


# ---------------------------------------------------------------- cell statistics

def _cells_task(args):
    gamma, R, margin, rule, seed, i = args
    S = sample_process(2, gamma, R, derive_seed(seed, i))
    F = tess.arrangement_faces(S.normals, S.offsets, R)
    Tc = math.tanh(R - margin)
    if rule == "center":
        sel = F.bounded & (np.sum(F.center ** 2, axis=1) < Tc * Tc)
    else:
        sel = F.bounded & (F.max_norm < Tc)
    # faces without a closed boundary but with a vertex in the core
    edge = int(np.sum(~F.bounded & (F.max_norm < Tc)))
    return int(sel.sum()), float(F.area[sel].sum()), edge


def cell_stats_2d(gamma, R, n, seed, margin=1.0, rule="center", jobs=1):
    """Face intensity and mean bounded-cell area by minus-sampling in B(o, R - margin).

    ``rule='center'`` counts cells whose Minkowski barycenter lies in the core
    ball (unbiased for both targets); ``rule='inside'`` counts cells lying
    wholly inside it.
    """
    if margin < 1:
        raise UsageError("margin must be at least 1")
    if rule not in ("center", "inside"):
        raise UsageError("rule must be 'center' or 'inside'")
    if gamma < math.pi:
        target_f = target_a = None
    else:
        target_f = (2 * gamma ** 2 - 1) / (2 * math.pi)
        target_a = 2 * math.pi / (2 * gamma ** 2 - 1)
    out = pmap(_cells_task, [(gamma, R, margin, rule, seed, i) for i in range(n)], jobs)
    N = np.array([o[0] for o in out], dtype=float)
    A = np.array([o[1] for o in out], dtype=float)
    edge = int(sum(o[2] for o in out))
    vol = geo.ball_volume(2, R - margin)
    mN, seN = _mean_se(N)
    ratio = A.sum() / N.sum() if N.sum() else math.nan
    # delta-method standard error of a ratio of replicate sums
    se_ratio = float(np.std(A - ratio * N, ddof=1) / math.sqrt(n) / mN) if n > 1 and mN > 0 else math.nan
    params = {"gamma": gamma, "R": R, "margin": margin, "rule": rule}
    diag = {"cells_counted": int(N.sum()), "open_faces_in_core": edge, "missed_cells": 0}
    face = EstimateReport("face_intensity", params, mN / vol, seN / vol, target_f, n, seed, dict(diag))
    area = EstimateReport("mean_bounded_cell_area", params, ratio, se_ratio, target_a, n, seed, dict(diag))
    return face, area


# ---------------------------------------------------------------- mixing

def mixing_decay(d, r, separations, gamma=1.0, seed=None):
    """Rows (separation, mu_joint, P(no hyperplane meets both balls))."""
    rows = []
    for s in separations:
        mj = mu_joint_separation(d, float(s), r)
        rows.append({"separation": float(s), "mu_joint": mj, "p_disjoint": math.exp(-gamma * mj)})
    return rows


def rows_to_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
