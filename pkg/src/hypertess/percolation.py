"""Critical intensities, window-crossing probabilities and intensity sweeps."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import partial
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from . import geometry as geo
from . import tessellation as tess
from .errors import DegenerateConfigurationError, ResolutionError, ThresholdNotFoundError, UsageError
from .measure import ProcessSample, derive_seed, sample_process
from .parallel import pmap

MAX_RESAMPLE = 20


def gamma_crit(d: int) -> float:
    """(d-1)^2 sqrt(pi) Gamma((d-1)/2) / Gamma(d/2)."""
    if int(d) != d or d < 2:
        raise UsageError("gamma_crit needs an integer d >= 2")
    if d == 2:
        # sqrt(pi) * Gamma(1/2) is pi; avoid two roundings
        return math.pi
    return (d - 1) ** 2 * math.exp(0.5 * math.log(math.pi) + gammaln((d - 1) / 2) - gammaln(d / 2))


def gamma_crit_face(d: int, k: int) -> float:
    """Intensity above which k-dimensional faces are bounded."""
    if int(d) != d or d < 3:
        raise UsageError("gamma_crit_face needs d >= 3")
    if not 2 <= k <= d - 1:
        raise UsageError(f"face dimension k = {k} outside 2..{d - 1}")
    return (k - 1) / (d - 1) * gamma_crit(d)


# ---------------------------------------------------------------- crossing probabilities

class CrossingEstimate(NamedTuple):
    p_hat: float
    se: float
    n: int
    indeterminate: int


def _replicate_sample(d, gamma, R, seed, i):
    """Replicate i; resample (with a fresh sub-seed) on null degeneracies."""
    for attempt in range(MAX_RESAMPLE):
        s = derive_seed(seed, i) if attempt == 0 else derive_seed(derive_seed(seed, i), attempt)
        S = sample_process(d, gamma, R, s)
        if not np.any(S.offsets <= 1e-12):
            return S
    raise DegenerateConfigurationError("repeated degenerate samples")


def _critical_mark_task(args):
    d, gamma_max, R, seed, i, method, h = args
    S = _replicate_sample(d, gamma_max, R, seed, i)
    if method == "exact":
        return tess.critical_mark(S), 0
    # probe lattice: reach is monotone in the prefix, so bisect on it as well
    try:
        return _probe_critical_mark(S, h), 0
    except ResolutionError:
        return math.nan, 1


def _probe_reaches(S: ProcessSample, h: float) -> bool:
    g = tess.build_probe_graph(S, h)
    return tess.component_of(g, S, np.zeros(S.d)).unbounded_in_window


def _probe_critical_mark(S: ProcessSample, h: float) -> float:
    n = len(S)
    if _probe_reaches(S, h):
        return math.inf
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        sub = ProcessSample(S.d, S.marks[mid - 1], S.window_radius, S.seed, S.normals[:mid], S.offsets[:mid], S.marks[:mid])
        if _probe_reaches(sub, h):
            lo = mid
        else:
            hi = mid
    return float(S.marks[hi - 1])


def critical_marks(d, R, gamma_max, n, seed, jobs=1, method="exact", h=0.01):
    """Per-replicate intensity at which the zero cell stops reaching the window.

    Replicates share nothing but the base seed; replicate i at any intensity
    below gamma_max is the prefix of its marked stream.
    """
    if n < 1:
        raise UsageError("need n >= 1")
    if method not in ("exact", "probe"):
        raise UsageError("method must be 'exact' or 'probe'")
    tasks = [(d, gamma_max, R, seed, i, method, h) for i in range(n)]
    out = pmap(_critical_mark_task, tasks, jobs)
    marks = np.array([m for m, _ in out], dtype=float)
    bad = int(sum(b for _, b in out))
    return marks, bad


def _p_from_marks(marks, gamma, n_total):
    ok = ~np.isnan(marks)
    n = int(ok.sum())
    p = float(np.mean(marks[ok] > gamma)) if n else math.nan
    se = math.sqrt(p * (1 - p) / n) if n else math.nan
    return p, se, n


def crossing_probability(d, gamma, R, h=0.01, n=1000, seed=0, jobs=1, method="exact") -> CrossingEstimate:
    """Fraction of samples whose zero cell reaches the window sphere."""
    marks, bad = critical_marks(d, R, gamma, n, seed, jobs, method, h)
    if bad > 0.01 * n:
        raise ResolutionError(f"{bad} of {n} replicates were indeterminate; refine h")
    p, se, m = _p_from_marks(marks, gamma, n)
    return CrossingEstimate(p, se, m, bad)


@dataclass
class SweepResult:
    d: int
    R: float
    h: float
    gammas: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    n: int
    seed: int
    indeterminate: int = 0
    marks: np.ndarray = field(default=None, repr=False)

    def rows(self):
        frac = self.indeterminate / self.n if self.n else 0.0
        for g, p, s in zip(self.gammas, self.p_hat, self.se):
            yield {"gamma": float(g), "p_hat": float(p), "se": float(s), "n": self.n,
                   "R": self.R, "h": self.h, "indeterminate_fraction": frac}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["gamma", "p_hat", "se", "n", "R", "h", "indeterminate_fraction"],
                           lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def sweep(d, R, gammas, n, seed, h=0.01, jobs=1, method="exact") -> SweepResult:
    """Crossing probabilities over an intensity grid on coupled streams."""
    gammas = np.asarray(sorted(gammas), dtype=float)
    if len(gammas) == 0:
        raise UsageError("empty intensity grid")
    marks, bad = critical_marks(d, R, float(gammas[-1]), n, seed, jobs, method, h)
    if bad > 0.01 * n:
        raise ResolutionError(f"{bad} of {n} replicates were indeterminate; refine h")
    ps, ses = [], []
    for g in gammas:
        p, se, _ = _p_from_marks(marks, g, n)
        ps.append(p)
        ses.append(se)
    return SweepResult(d, float(R), float(h), gammas, np.array(ps), np.array(ses), n, seed, bad, marks)


def parse_grid(text: str) -> np.ndarray:
    """'a:b:step' (inclusive) or a comma list."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        if s <= 0 or b < a:
            raise UsageError(f"bad grid {text!r}")
        k = int(math.floor((b - a) / s + 1e-9))
        return np.round(a + s * np.arange(k + 1), 12)
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _crossing(x, y, level):
    """Linear-interpolated first crossing of the decreasing curve y(x) through level."""
    above = y > level
    if above.all():
        return None, "above"
    if not above.any():
        return None, "below"
    k = int(np.argmin(above))  # first index at or below level
    if k == 0:
        return float(x[0]), "ok"
    x0, x1, y0, y1 = x[k - 1], x[k], y[k - 1], y[k]
    return float(x0 + (y0 - level) * (x1 - x0) / (y0 - y1)), "ok"


def estimate_threshold(sw: SweepResult, level: float = 0.5):
    """Interval where p_hat crosses ``level``, widened by two standard errors.

    The outer ends come from the curves p_hat - 2 se and p_hat + 2 se; when a
    band curve leaves the grid the interval is clamped to the grid end.
    """
    x, p, se = sw.gammas, sw.p_hat, sw.se
    mid, status = _crossing(x, p, level)
    if mid is None:
        raise ThresholdNotFoundError(
            f"p_hat never crosses {level} on [{x[0]}, {x[-1]}] at R = {sw.R}: "
            f"p_hat ranges over [{p.min():.4f}, {p.max():.4f}]")
    lo, _ = _crossing(x, p - 2 * se, level)
    hi, _ = _crossing(x, p + 2 * se, level)
    lo = float(x[0]) if lo is None else lo
    hi = float(x[-1]) if hi is None else hi
    return (min(lo, mid), max(hi, mid))


# ---------------------------------------------------------------- components and cap events

def count_window_components(sample: ProcessSample, h: float) -> int:
    """Number of cells with a certified probe path to the window sphere.

    Probe fragments of one convex cell share a sign vector and are counted once.
    """
    g = tess.build_probe_graph(sample, h)
    labs = tess.window_components(g, sample)
    if len(labs) == 0:
        return 0
    reps = np.array([np.flatnonzero(g.labels == lab)[0] for lab in labs])
    return int(len(np.unique(g.node_signs[reps], axis=0)))


def _window_arc_witnesses(U, t, T):
    """Midpoints of the circle arcs cut out by the chords, radius T (just inside)."""
    a = np.arctan2(U[:, 1], U[:, 0])
    w = np.arccos(np.clip(t / T, -1.0, 1.0))
    ends = np.sort(np.r_[(a - w) % tess.TWO_PI, (a + w) % tess.TWO_PI])
    mids = 0.5 * (ends + np.roll(ends, -1))
    mids[-1] = 0.5 * (ends[-1] + ends[0] + tess.TWO_PI)
    return ends, mids


def count_window_cells_2d(sample: ProcessSample, inner: float | None = None) -> int:
    """Exact number of cells meeting the window circle (d = 2).

    With ``inner`` only cells that also meet B(o, inner) are counted.
    """
    if sample.d != 2:
        raise UsageError("exact window cell count needs d = 2")
    R = sample.window_radius
    T = math.tanh(R)
    U, t = sample.normals, sample.offsets
    if inner is not None:
        return _count_spanning_cells_2d(U, t, R, float(inner))
    if len(t) == 0:
        return 1
    # walking around the circle flips one line's side per chord endpoint, so the
    # cells are tracked by an xor hash of the set of lines with positive side
    rng = np.random.default_rng(0x5EED)
    keys = rng.integers(1, 2 ** 63, size=len(t), dtype=np.int64)
    a = np.arctan2(U[:, 1], U[:, 0])
    w = np.arccos(np.clip(t / T, -1.0, 1.0))
    ends = np.r_[(a - w) % tess.TWO_PI, (a + w) % tess.TWO_PI]
    owner = np.r_[np.arange(len(t)), np.arange(len(t))]
    o = np.argsort(ends, kind="stable")
    ends, owner = ends[o], owner[o]
    mid0 = 0.5 * (ends[-1] + ends[0] + tess.TWO_PI)
    x0 = T * np.array([math.cos(mid0), math.sin(mid0)])
    h = np.bitwise_xor.reduce(keys[U @ x0 > t]) if np.any(U @ x0 > t) else np.int64(0)
    hashes = np.bitwise_xor.accumulate(np.r_[h, keys[owner]])[1:]
    return int(len(np.unique(hashes)))


def _count_spanning_cells_2d(U, t, R, inner):
    """Cells meeting both B(o, inner) and the window circle."""
    if not 0 < inner < R:
        raise UsageError("inner radius must lie in (0, R)")
    Ti = math.tanh(inner)
    near = t < Ti
    Un, tn = U[near], t[near]
    # one witness per cell meeting the inner ball: arc midpoints plus bounded faces
    if len(tn):
        _, mids = _window_arc_witnesses(Un, tn, Ti)
        W = 0.999999 * Ti * np.column_stack([np.cos(mids), np.sin(mids)])
        F = tess.arrangement_faces(Un, tn, inner)
        W = np.vstack([W, F.center[F.bounded]])
        sg = np.sign(Un @ W.T - tn[:, None]).T
        ok = ~np.any(np.abs(Un @ W.T - tn[:, None]).T < 1e-12, axis=1)
        _, first = np.unique(sg[ok], axis=0, return_index=True)
        W = W[ok][first]
    else:
        W = np.zeros((1, 2))
    count = 0
    for y in W:
        gap = np.min(np.abs(U @ y - t) / np.sqrt(1 - t * t)) if len(t) else 1.0
        r = 0.5 * math.asinh(gap / math.sqrt(1 - y @ y)) if len(t) else 0.5
        # a ball inside the cell leaves one arm, which reaches the sphere iff the cell does
        count += tess.arms_2d(U, t, R, y, r).count > 0
    return int(count)


def cap_event(sample: ProcessSample, center, eps: float, gamma: float | None = None) -> bool:
    """Whether the zero cell reaches the window sphere inside cap(center, eps), d = 2."""
    if sample.d != 2:
        raise UsageError("cap events are implemented for d = 2")
    U, t = sample.normals, sample.offsets
    if gamma is not None and sample.marks is not None:
        k = int(np.searchsorted(sample.marks, gamma, side="right"))
        U, t = U[:k], t[:k]
    c, hw = tess.blocking_caps_2d(U, t, sample.window_radius)
    gaps = tess.arc_gaps(c, hw)
    return _arcs_meet(gaps, math.atan2(center[1], center[0]), eps)


def _arcs_meet(arcs, center_angle, eps):
    """Whether any (start, end) arc overlaps the arc of half-width eps around center_angle."""
    lo = center_angle - eps
    for s, e in arcs:
        off = (s - lo) % tess.TWO_PI
        if off < 2 * eps or off + (e - s) > tess.TWO_PI:
            return True
    return False


def halfspace_event(sample: ProcessSample, direction, level: float, cap_cos: float) -> bool:
    """Whether a cell of the vacant set inside W = {<x, e> > level} spans W.

    True when some cell of the vacant set cut by the boundary line of W touches
    that line and reaches the window circle at a direction w with <w, e> > cap_cos
    (d = 2; ``level`` is a Klein offset below tanh R).
    """
    if sample.d != 2:
        raise UsageError("half-space events are implemented for d = 2")
    R = sample.window_radius
    T = math.tanh(R)
    if not 0 <= level < T:
        raise UsageError("level must lie in [0, tanh R)")
    e = geo.unit(np.asarray(direction, dtype=float))
    f = np.array([-e[1], e[0]])
    U, t = sample.normals, sample.offsets
    half = math.sqrt(T * T - level * level)
    ue, uf = U @ e, U @ f
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (t - level * ue) / uf
    lam = np.sort(lam[np.isfinite(lam) & (np.abs(lam) < half)])
    cuts = np.r_[-half, lam, half]
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    # only chords entering W can bound a cell inside it
    enters = t * ue + np.sqrt(np.maximum(T * T - t * t, 0.0)) * np.abs(uf) > level
    Ua = np.vstack([U[enters], e[None, :]])
    ta = np.r_[t[enters], level]
    eps = math.acos(max(-1.0, min(1.0, cap_cos)))
    ce = math.atan2(e[1], e[0])
    for m in mids:
        p = level * e + m * f + 1e-9 * e
        if np.any(np.abs(U @ p - t) <= geo.SIDE_TOL):
            continue
        poly = tess.cell_polygon(Ua, ta, p, R)
        V = poly.vertices
        for i in np.flatnonzero(poly.arc):
            a0 = math.atan2(V[i][1], V[i][0]) % tess.TWO_PI
            a1 = math.atan2(V[(i + 1) % len(V)][1], V[(i + 1) % len(V)][0]) % tess.TWO_PI
            if a1 <= a0:
                a1 += tess.TWO_PI
            if _arcs_meet([(a0, a1)], ce, eps):
                return True
    return False
