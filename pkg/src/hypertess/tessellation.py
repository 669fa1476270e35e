"""Cells of the vacant set inside the window B(o, R).

Three exact tools for the plane (d = 2):

* arc calculus on the circle of directions at a point: a line at offset t
  from the point blocks the open arc of directions of half-width
  arccos(t / tanh r) within hyperbolic radius r;
* convex clipping of the window disc by half-planes (cell polygons with
  chord and window-arc edges);
* a line-arrangement walk that enumerates every face in the window.

In any dimension a Euclidean probe lattice in Klein coordinates gives
component labels; ``qhull`` decides whether the zero cell reaches the
window sphere for d >= 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import geometry as geo
from .errors import DegenerateConfigurationError, ResolutionError, UsageError
from .measure import ProcessSample

TWO_PI = 2.0 * math.pi
RADIUS_TOL = 1e-9


# ---------------------------------------------------------------- arcs on the circle

def arc_gaps(centers, halfwidths) -> np.ndarray:
    """Complement of a union of open arcs on the unit circle.

    Arcs are given by center angle and half-width.  Returns an array of
    (start, end) angle pairs with start in [0, 2 pi) and start < end <= start + 2 pi.
    An empty union gives the single gap (0, 2 pi).
    """
    c = np.asarray(centers, dtype=float)
    h = np.asarray(halfwidths, dtype=float)
    keep = h > 0
    c, h = c[keep], h[keep]
    if c.size == 0:
        return np.array([[0.0, TWO_PI]])
    if np.any(h >= math.pi):
        return np.empty((0, 2))
    s = (c - h) % TWO_PI
    e = s + 2.0 * h
    o = np.argsort(s, kind="stable")
    s, e = s[o], e[o]
    s0 = s[0]
    # arcs that wrap past 2 pi also cover the start of the unrolled circle
    reach = np.maximum.accumulate(np.maximum(e, e.max() - TWO_PI))
    gaps = []
    idx = np.flatnonzero(s[1:] > reach[:-1])
    for k in idx:
        gaps.append((reach[k], s[k + 1]))
    if reach[-1] < s0 + TWO_PI:
        gaps.append((reach[-1], s0 + TWO_PI))
    if not gaps:
        return np.empty((0, 2))
    g = np.array(gaps)
    shift = np.floor(g[:, 0] / TWO_PI) * TWO_PI
    return g - shift[:, None]


def arcs_cover_circle(centers, halfwidths) -> bool:
    return len(arc_gaps(centers, halfwidths)) == 0


def in_gap(gaps: np.ndarray, angle) -> np.ndarray:
    """Index of the gap containing each angle, or -1."""
    a = np.atleast_1d(np.asarray(angle, dtype=float))
    out = np.full(a.shape, -1, dtype=int)
    for k, (s, e) in enumerate(gaps):
        inside = ((a - s) % TWO_PI) < (e - s)
        if e - s >= TWO_PI:
            inside[:] = True
        out[(out < 0) & inside] = k
    return out


def blocking_caps_2d(U, t, r: float):
    """Direction arcs from o blocked within radius r by lines (rows of U, t)."""
    T = math.tanh(r)
    t = np.asarray(t, dtype=float)
    m = t < T
    return geo.angle_of(U[m]), np.arccos(t[m] / T)


def zero_cell_reaches_2d(U, t, R: float) -> bool:
    c, h = blocking_caps_2d(U, t, R)
    return not arcs_cover_circle(c, h)


# ---------------------------------------------------------------- zero cell, any d

def zero_cell_reaches_window(sample: ProcessSample, gamma: float | None = None) -> bool:
    """Whether the cell of o reaches the window sphere ||x|| = tanh R."""
    U, t = sample.normals, sample.offsets
    if gamma is not None and sample.marks is not None:
        k = int(np.searchsorted(sample.marks, gamma, side="right"))
        U, t = U[:k], t[:k]
    return reaches_window(U, t, sample.window_radius)


def reaches_window(U, t, R: float) -> bool:
    U = np.asarray(U, dtype=float)
    d = U.shape[1]
    if len(t) == 0:
        return True
    if np.any(np.asarray(t) <= geo.SIDE_TOL):
        raise DegenerateConfigurationError("origin lies on a sampled hyperplane")
    if d == 2:
        return zero_cell_reaches_2d(U, t, R)
    return _max_vertex_norm(U, t) >= math.tanh(R)


def _max_vertex_norm(U, t) -> float:
    from scipy.spatial import HalfspaceIntersection
    d = U.shape[1]
    box = np.hstack([np.vstack([np.eye(d), -np.eye(d)]), -np.ones((2 * d, 1))])
    hs = np.vstack([np.hstack([U, -np.asarray(t)[:, None]]), box])
    hi = HalfspaceIntersection(hs, np.zeros(d))
    return float(np.max(np.linalg.norm(hi.intersections, axis=1)))


def critical_mark(sample: ProcessSample) -> float:
    """Smallest mark at which the prefix of the stream disconnects o from the sphere.

    Returns inf when the full sample still reaches the window.
    """
    U, t, m = sample.normals, sample.offsets, sample.marks
    R = sample.window_radius
    n = len(t)
    if n == 0 or reaches_window(U, t, R):
        return math.inf
    lo, hi = 0, n  # prefix of length lo reaches, prefix of length hi does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reaches_window(U[:mid], t[:mid], R):
            lo = mid
        else:
            hi = mid
    return float(m[hi - 1])


# ---------------------------------------------------------------- cells

@dataclass
class CellApprox:
    witness: np.ndarray
    signs: np.ndarray
    unbounded_in_window: bool
    probe_members: object = None
    polygon: "CellPolygon | None" = None


@dataclass
class CellPolygon:
    """Convex cell in the Klein disc; edge i joins vertex i to vertex i+1 (ccw).

    ``arc[i]`` marks edges running along the window circle.  A polygon with no
    vertices and ``full`` set is the whole window disc.
    """
    vertices: np.ndarray
    arc: np.ndarray
    window_radius: float
    full: bool = False

    @property
    def touches_window(self) -> bool:
        return self.full or bool(np.any(self.arc))

    def area(self) -> float:
        return polygon_area(self)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        T = math.tanh(self.window_radius)
        if x @ x >= T * T:
            return False
        if self.full:
            return True
        V = self.vertices
        W = np.roll(V, -1, axis=0)
        cr = (W[:, 0] - V[:, 0]) * (x[1] - V[:, 1]) - (W[:, 1] - V[:, 1]) * (x[0] - V[:, 0])
        return bool(np.all(cr[~self.arc] > -1e-15))


def _clip(poly: np.ndarray, u, t, s) -> np.ndarray:
    """Keep the part of a convex polygon where s * (<u,x> - t) >= 0."""
    if len(poly) == 0:
        return poly
    v = s * (poly @ u - t)
    out = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        va, vb = v[i], v[(i + 1) % n]
        if va >= 0:
            out.append(a)
        if (va >= 0) != (vb >= 0):
            out.append(a + (b - a) * (va / (va - vb)))
    return np.array(out).reshape(-1, 2)


def _disc_intersection(poly: np.ndarray, T: float):
    """Boundary of (convex polygon) cap (disc of radius T) as vertices + arc flags.

    Returns (vertices, arc, full); ``full`` means the polygon contains the disc.
    """
    n = len(poly)
    if np.all(np.sum(poly * poly, axis=1) < T * T):
        return poly, np.zeros(n, dtype=bool), False
    pieces = []  # inside part of each edge: (start, end, leaves the disc at end)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        dv = b - a
        A = dv @ dv
        if A == 0:
            continue
        B = 2 * a @ dv
        C = a @ a - T * T
        disc = B * B - 4 * A * C
        if disc <= 0:
            continue
        sq = math.sqrt(disc)
        s0 = max((-B - sq) / (2 * A), 0.0)
        s1 = min((-B + sq) / (2 * A), 1.0)
        if s1 <= s0:
            continue
        p = a + s0 * dv if s0 > 0 else a
        q = a + s1 * dv if s1 < 1 else b
        pieces.append((p, q, s1 < 1))
    if not pieces:
        return np.empty((0, 2)), np.empty(0, dtype=bool), True
    verts, arcs = [], []
    for p, q, leaves in pieces:
        verts.append(p)
        arcs.append(False)
        if leaves:
            verts.append(q)
            arcs.append(True)
    return np.array(verts), np.array(arcs, dtype=bool), False


def cell_polygon(U, t, z, R: float) -> CellPolygon:
    """Exact cell of z in the window disc for lines (rows of U, t), d = 2."""
    z = np.asarray(z, dtype=float)
    T = math.tanh(R)
    s = np.sign(np.asarray(U) @ z - t) if len(t) else np.zeros(0)
    if len(t) and np.any(np.abs(np.asarray(U) @ z - t) <= geo.SIDE_TOL):
        raise DegenerateConfigurationError("point lies on a sampled line")
    poly = np.array([[-1.5, -1.5], [1.5, -1.5], [1.5, 1.5], [-1.5, 1.5]])
    for u, ti, si in zip(U, t, s):
        poly = _clip(poly, u, ti, si)
    V, A, full = _disc_intersection(poly, T)
    if full:
        return CellPolygon(np.empty((0, 2)), np.empty(0, dtype=bool), R, full=True)
    return CellPolygon(V, A, R)


def zero_cell_polygon(sample: ProcessSample) -> CellApprox:
    if sample.d != 2:
        raise UsageError("zero_cell_polygon needs d = 2")
    o = np.zeros(2)
    U, t = sample.normals, sample.offsets
    if len(t) and np.any(np.abs(t) <= geo.SIDE_TOL):
        raise DegenerateConfigurationError("origin lies on a sampled line")
    poly = cell_polygon(U, t, o, sample.window_radius)
    sg = -np.ones(len(t), dtype=np.int8)
    return CellApprox(o, sg, poly.touches_window, probe_members=poly.vertices, polygon=poly)


def _chord_primitive(x, u):
    """Antiderivative of the Klein area element over the sector from o to a chord."""
    p = x @ u
    lam = x[..., 0] * -u[1] + x[..., 1] * u[0] if x.ndim == 1 else x[:, 0] * -u[1] + x[:, 1] * u[0]
    r2 = np.sum(x * x, axis=-1)
    return np.arctan2(lam, p * np.sqrt(1.0 - r2)) - np.arctan2(lam, p)


def chord_sector_area(a, b) -> float:
    """Signed hyperbolic area of the Klein triangle (o, a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dv = b - a
    nrm = math.hypot(dv[0], dv[1])
    if nrm == 0:
        return 0.0
    u = np.array([dv[1], -dv[0]]) / nrm
    p = float(a @ u)
    if abs(p) < 1e-15:
        return 0.0
    if p < 0:
        u = -u
    val = float(_chord_primitive(b, u) - _chord_primitive(a, u))
    # the primitive is an angle difference; keep it in (-pi, pi)
    return (val + math.pi) % TWO_PI - math.pi


def polygon_area(poly: CellPolygon) -> float:
    R = poly.window_radius
    if poly.full:
        return geo.ball_volume(2, R)
    V = poly.vertices
    n = len(V)
    total = 0.0
    k = math.cosh(R) - 1.0
    for i in range(n):
        a, b = V[i], V[(i + 1) % n]
        if poly.arc[i]:
            dth = (math.atan2(b[1], b[0]) - math.atan2(a[1], a[0])) % TWO_PI
            total += k * dth
        else:
            total += chord_sector_area(a, b)
    return total


def gauss_bonnet_area(vertices) -> float:
    """Area of a compact Klein polygon from its interior angles."""
    V = np.asarray(vertices, dtype=float)
    n = len(V)
    X = geo.to_hyperboloid(V)
    ang = 0.0
    for i in range(n):
        P, Q, S = X[i - 1], X[i], X[(i + 1) % n]
        # tangent directions at Q towards P and S
        tp = P + geo.minkowski(P, Q) * Q
        ts = S + geo.minkowski(S, Q) * Q
        c = geo.minkowski(tp, ts) / math.sqrt(geo.minkowski(tp, tp) * geo.minkowski(ts, ts))
        ang += math.acos(max(-1.0, min(1.0, c)))
    return (n - 2) * math.pi - ang


# ---------------------------------------------------------------- probe lattice

@dataclass
class ProbeGraph:
    spacing: float
    window_radius: float
    nodes: np.ndarray
    lattice: np.ndarray
    edges: np.ndarray
    labels: np.ndarray
    n_components: int
    node_signs: np.ndarray = field(repr=False, default=None)

    @property
    def adjacency(self):
        m = len(self.nodes)
        e = self.edges
        return sparse.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                                 shape=(m, m)).tocsr()


def _lattice(d: int, h: float, T: float):
    K = int(math.floor(T / h))
    ax = np.arange(-K, K + 1)
    grid = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    pts = grid * h
    keep = np.sum(pts * pts, axis=1) < T * T
    return grid[keep], pts[keep], K


def build_probe_graph(sample: ProcessSample, h: float) -> ProbeGraph:
    T = math.tanh(sample.window_radius)
    if not 0 < h < T / 4:
        raise UsageError(f"lattice pitch must lie in (0, tanh(R)/4), got {h}")
    d = sample.d
    lat, pts, K = _lattice(d, h, T)
    m = len(pts)
    size = 2 * K + 1
    flat = np.zeros(m, dtype=np.int64)
    for k in range(d):
        flat = flat * size + (lat[:, k] + K)
    index = np.full(size ** d, -1, dtype=np.int64)
    index[flat] = np.arange(m)
    S = geo.signs(sample.normals, sample.offsets, pts).T if len(sample) else np.zeros((m, 0), np.int8)
    pairs = []
    for k in range(d):
        ok = lat[:, k] < K
        a = np.flatnonzero(ok)
        b = index[flat[a] + size ** (d - 1 - k)]
        a, b = a[b >= 0], b[b >= 0]
        if S.shape[1]:
            blocked = np.any((S[a].astype(np.int16) * S[b]) <= 0, axis=1)
            a, b = a[~blocked], b[~blocked]
        pairs.append(np.column_stack([a, b]))
    E = np.vstack(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
    adj = sparse.coo_matrix((np.ones(len(E)), (E[:, 0], E[:, 1])), shape=(m, m))
    nc, labels = connected_components(adj, directed=False)
    return ProbeGraph(h, sample.window_radius, pts, lat, E, labels, nc, S)


def _outward_free(graph: ProbeGraph, sample: ProcessSample, idx: np.ndarray) -> np.ndarray:
    """Member nodes whose radial segment out to the window sphere crosses no hyperplane.

    Any such node certifies that its cell reaches the sphere.  The test does
    not depend on the pitch, so a certificate found at pitch h survives at h/2
    (the coarse lattice is a sublattice of the fine one).
    """
    T = math.tanh(graph.window_radius)
    X = graph.nodes[idx]
    rr = np.linalg.norm(X, axis=1)
    out = np.zeros(len(idx), dtype=bool)
    ok = rr > 0
    if len(sample) == 0:
        return np.ones(len(idx), dtype=bool)
    ends = X[ok] * (T / rr[ok])[:, None]
    sa = graph.node_signs[idx[ok]]
    sb = geo.signs(sample.normals, sample.offsets, ends).T
    out[ok] = np.all((sa.astype(np.int16) * sb) > 0, axis=1)
    return out


def component_of(graph: ProbeGraph, sample: ProcessSample, z) -> CellApprox:
    z = geo.as_point(z, sample.d)
    sz = geo.signs(sample.normals, sample.offsets, z[None, :])[:, 0] if len(sample) else np.zeros(0, np.int8)
    if np.any(sz == 0):
        raise DegenerateConfigurationError("query point lies on a sampled hyperplane")
    same = np.all(graph.node_signs == sz, axis=1) if len(sample) else np.ones(len(graph.nodes), bool)
    cand = np.flatnonzero(same)
    if cand.size == 0:
        raise ResolutionError("no probe node inside the cell; halve the lattice pitch")
    # convex cell: the segment from z to any node with the same signs is free
    seed = cand[np.argmin(np.sum((graph.nodes[cand] - z) ** 2, axis=1))]
    members = np.flatnonzero(graph.labels == graph.labels[seed])
    unb = bool(np.any(_outward_free(graph, sample, members)))
    return CellApprox(z, sz, unb, probe_members=members)


def window_components(graph: ProbeGraph, sample: ProcessSample) -> np.ndarray:
    """Labels of probe components with a certified path to the window sphere."""
    idx = np.arange(len(graph.nodes))
    free = _outward_free(graph, sample, idx)
    return np.unique(graph.labels[free])


# ---------------------------------------------------------------- arms outside a ball (d = 2)

@dataclass
class Arms:
    """Components of C(y) minus B(y, r), described by free direction arcs at y.

    ``gaps`` are direction arcs (in the frame where y sits at o) and
    ``reaches`` flags the arcs whose component meets the window sphere.
    """
    y: np.ndarray
    r: float
    isometry: geo.Isometry
    gaps: np.ndarray
    reaches: np.ndarray
    signs: np.ndarray

    @property
    def count(self) -> int:
        return int(np.sum(self.reaches))

    def arm_of(self, x) -> int:
        """Index of the arm containing x, or -1 (x must lie in the cell, outside the ball)."""
        X = np.atleast_2d(x)
        xs = self.isometry.apply(X)
        return in_gap(self.gaps, geo.angle_of(xs))


def arms_2d(U, t, R: float, y, r: float) -> Arms:
    """Exact arm analysis of C(y) minus B(y, r) inside the window, d = 2."""
    U = np.asarray(U, dtype=float).reshape(-1, 2)
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    T = math.tanh(R)
    sv = U @ y - t
    if np.any(np.abs(sv) <= geo.SIDE_TOL):
        raise DegenerateConfigurationError("point lies on a sampled line")
    sg = np.sign(sv).astype(np.int8)
    g = geo.to_origin(y)
    Ug, tg = g.apply_hyperplanes(U, t) if len(t) else (np.empty((0, 2)), np.empty(0))
    c, h = blocking_caps_2d(Ug, tg, r)
    gaps = arc_gaps(c, h)
    if len(gaps) == 0:
        return Arms(y, r, g, gaps, np.zeros(0, dtype=bool), sg)
    # window-circle arcs on y's side of every line: forbidden arcs are the complements
    if len(t):
        al = geo.angle_of(U)
        ratio = np.clip(t / T, -1.0, 1.0)
        pos = sg > 0
        # sg > 0 allows cos(phi - al) > t/T; forbidden arc centered at al + pi
        fc = np.where(pos, al + math.pi, al)
        fh = np.where(pos, math.pi - np.arccos(ratio), np.arccos(ratio))
        wgaps = arc_gaps(fc, fh)
    else:
        wgaps = np.array([[0.0, TWO_PI]])
    reaches = np.zeros(len(gaps), dtype=bool)
    if len(wgaps):
        mids = 0.5 * (wgaps[:, 0] + wgaps[:, 1])
        Z = T * np.column_stack([np.cos(mids), np.sin(mids)])
        idx = in_gap(gaps, geo.angle_of(g.apply(Z)))
        reaches[idx[idx >= 0]] = True
    return Arms(y, r, g, gaps, reaches, sg)


# ---------------------------------------------------------------- arms outside a ball (any d)

def direction_mesh(d: int, pitch: float):
    """Near-uniform directions on S^{d-1} with neighbor pairs (angular pitch ~ ``pitch``)."""
    from scipy.spatial import cKDTree
    if d == 2:
        n = max(8, int(math.ceil(TWO_PI / pitch)))
        a = np.arange(n) * TWO_PI / n
        W = np.column_stack([np.cos(a), np.sin(a)])
        P = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
        return W, P
    if d == 3:
        n = max(32, int(math.ceil(4 * math.pi / pitch ** 2)))
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = math.pi * (3 - math.sqrt(5)) * k
        rho = np.sqrt(1 - z * z)
        W = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    else:
        m = max(2, int(math.ceil(2.0 / pitch)))
        ax = np.linspace(-1, 1, m + 1)
        faces = []
        for i in range(d):
            for sgn in (-1.0, 1.0):
                g = np.stack(np.meshgrid(*([ax] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
                faces.append(np.insert(g, i, sgn, axis=1))
        W = geo.unit(np.unique(np.round(np.vstack(faces), 12), axis=0))
    tree = cKDTree(W)
    P = np.array(sorted(tree.query_pairs(2.2 * pitch)), dtype=np.int64).reshape(-1, 2)
    return W, P


def _window_exit(g: geo.Isometry, W: np.ndarray, R: float) -> np.ndarray:
    """Klein radius along each direction (frame g) where the window sphere is crossed."""
    C = g.lorentz[:, 0]  # image of o on the hyperboloid
    ch = math.cosh(R)
    k = W @ C[1:]
    a = k * k + ch * ch
    disc = np.maximum(k * k + ch * ch - C[0] ** 2, 0.0)
    return (C[0] * k + ch * np.sqrt(disc)) / a


def arms_mesh(U, t, R: float, y, r: float, pitch: float = 0.02):
    """Count arms of C(y) minus B(y, r) reaching the window on a direction mesh."""
    U = np.asarray(U, dtype=float)
    t = np.asarray(t, dtype=float)
    d = U.shape[1] if U.ndim == 2 and U.size else len(y)
    y = np.asarray(y, dtype=float)
    if len(t) and np.any(np.abs(U @ y - t) <= geo.SIDE_TOL):
        raise DegenerateConfigurationError("point lies on a sampled hyperplane")
    g = geo.to_origin(y)
    W, P = direction_mesh(d, pitch)
    if len(t):
        Ug, tg = g.apply_hyperplanes(U, t)
        Tr = math.tanh(r)
        cosang = W @ Ug.T  # (m, n)
        # ray from o in direction w meets (u, t) at Klein radius t / <w, u> when <w, u> > 0
        with np.errstate(divide="ignore"):
            hit_r = np.where(cosang > 0, tg[None, :] / cosang, np.inf)
        first = hit_r.min(axis=1)
    else:
        first = np.full(len(W), np.inf)
    Tr = math.tanh(r)
    free = first > Tr
    reach = free & (first > _window_exit(g, W, R))
    keep = free[P[:, 0]] & free[P[:, 1]]
    E = P[keep]
    m = len(W)
    adj = sparse.coo_matrix((np.ones(len(E)), (E[:, 0], E[:, 1])), shape=(m, m))
    nc, lab = connected_components(adj, directed=False)
    lab = np.where(free, lab, -1)
    return len(np.unique(lab[reach])), W, lab, reach, g


def unbounded_components_outside_ball(sample: ProcessSample, y, r: float, pitch: float | None = None) -> int:
    """Number of components of C(y) minus B(y, r) that reach the window sphere."""
    y = geo.as_point(y, sample.d)
    R = sample.window_radius
    if geo.dist_origin(y) + r >= R:
        raise UsageError("the excised ball must lie inside the window")
    if sample.d == 2 and pitch is None:
        return arms_2d(sample.normals, sample.offsets, R, y, r).count
    return arms_mesh(sample.normals, sample.offsets, R, y, r, pitch or 0.02)[0]


# ---------------------------------------------------------------- arrangement of lines (d = 2)

@dataclass
class Faces:
    """Faces of a line arrangement clipped to the window disc."""
    bounded: np.ndarray        # per face: closed cycle without window edges
    area: np.ndarray           # hyperbolic area (nan for faces touching the window)
    center: np.ndarray         # Minkowski barycenter of vertices (Klein coords)
    max_norm: np.ndarray       # largest vertex norm
    n_vertices: np.ndarray
    face_of_halfedge: np.ndarray = field(repr=False, default=None)


def arrangement_faces(U, t, R: float) -> Faces:
    """Enumerate the faces of the arrangement inside the window by walking half-edges."""
    U = np.asarray(U, dtype=float).reshape(-1, 2)
    t = np.asarray(t, dtype=float)
    T = math.tanh(R)
    n = len(t)
    empty = Faces(np.zeros(0, bool), np.zeros(0), np.zeros((0, 2)), np.zeros(0), np.zeros(0, int))
    if n < 2:
        return empty
    P0 = U * t[:, None]
    V = np.column_stack([-U[:, 1], U[:, 0]])
    i, j = np.triu_indices(n, 1)
    det = U[i, 0] * U[j, 1] - U[i, 1] * U[j, 0]
    ok = np.abs(det) > 1e-14
    i, j, det = i[ok], j[ok], det[ok]
    X = np.column_stack([(t[i] * U[j, 1] - t[j] * U[i, 1]) / det, (U[i, 0] * t[j] - U[j, 0] * t[i]) / det])
    inside = np.sum(X * X, axis=1) < T * T
    i, j, X = i[inside], j[inside], X[inside]
    nv = len(X)
    if nv == 0:
        return empty
    # incidences: (line, vertex, lambda along line)
    inc_line = np.r_[i, j]
    inc_vert = np.r_[np.arange(nv), np.arange(nv)]
    inc_other = np.r_[j, i]
    lam = np.sum((X[inc_vert] - P0[inc_line]) * V[inc_line], axis=1)
    order = np.lexsort((lam, inc_line))
    inc_line, inc_vert, inc_other, lam = inc_line[order], inc_vert[order], inc_other[order], lam[order]
    start = np.searchsorted(inc_line, np.arange(n))
    count = np.bincount(inc_line, minlength=n)
    pos = np.arange(len(inc_line)) - start[inc_line]
    # position of every incidence, keyed by (vertex, line)
    m = len(inc_line)
    # incidence index of vertex v on its other line
    key = inc_vert * 2 + (inc_line == j[inc_vert]).astype(int)
    inc_by_key = np.empty(2 * nv, dtype=np.int64)
    inc_by_key[key] = np.arange(m)
    twin = inc_by_key[inc_vert * 2 + 1 - (inc_line == j[inc_vert]).astype(int)]
    # half-edges: incidence k -> k+1 (dir +1) and k+1 -> k (dir -1) along the same line
    fwd = np.flatnonzero(pos < count[inc_line] - 1)       # from k to k+1
    he_from = np.r_[fwd, fwd + 1]
    he_to = np.r_[fwd + 1, fwd]
    he_dir = np.r_[np.ones(len(fwd)), -np.ones(len(fwd))]
    H = len(he_from)
    he_id = {}
    # lookup from (arrival incidence on the new line, direction) to half-edge id
    out_fwd = np.full(m, -1, dtype=np.int64)
    out_bwd = np.full(m, -1, dtype=np.int64)
    out_fwd[fwd] = np.arange(len(fwd))
    out_bwd[fwd + 1] = len(fwd) + np.arange(len(fwd))
    # arrive at incidence he_to on line l; switch to twin incidence on line l'
    arr = he_to
    l1 = inc_line[arr]
    tw = twin[arr]
    l2 = inc_line[tw]
    d1 = V[l1] * he_dir[:, None]
    cr = d1[:, 0] * V[l2, 1] - d1[:, 1] * V[l2, 0]
    sgn = np.where(cr > 0, 1, -1)
    nxt = np.where(sgn > 0, out_fwd[tw], out_bwd[tw])
    # walk faces on the left: components of the successor relation
    valid = nxt >= 0
    src = np.flatnonzero(valid)
    G = sparse.coo_matrix((np.ones(len(src)), (src, nxt[valid])), shape=(H, H))
    nf, face = connected_components(G, directed=True, connection="weak")
    dangling = np.zeros(nf, dtype=bool)
    dangling[face[~valid]] = True
    # faces that own a dangling half-edge run into the window boundary
    a = X[inc_vert[he_from]]
    b = X[inc_vert[he_to]]
    contrib = _halfedge_area(a, b)
    area = np.bincount(face, weights=contrib, minlength=nf)
    Xh = geo.to_hyperboloid(b)
    cen = np.column_stack([np.bincount(face, weights=Xh[:, k], minlength=nf) for k in range(3)])
    center = cen[:, 1:] / cen[:, :1]
    nvert = np.bincount(face, minlength=nf)
    mx = np.zeros(nf)
    np.maximum.at(mx, face, np.sqrt(np.sum(b * b, axis=1)))
    np.maximum.at(mx, face, np.sqrt(np.sum(a * a, axis=1)))
    bounded = ~dangling
    area = np.where(bounded, area, np.nan)
    return Faces(bounded, area, center, mx, nvert, face)


def _halfedge_area(a, b):
    """Vectorized signed Klein triangle areas (o, a, b)."""
    dv = b - a
    nrm = np.hypot(dv[:, 0], dv[:, 1])
    u = np.column_stack([dv[:, 1], -dv[:, 0]]) / nrm[:, None]
    p = np.sum(a * u, axis=1)
    u = np.where(p[:, None] < 0, -u, u)
    p = np.abs(p)

    def F(x):
        lam = -x[:, 0] * u[:, 1] + x[:, 1] * u[:, 0]
        return np.arctan2(lam, p * np.sqrt(1.0 - np.sum(x * x, axis=1))) - np.arctan2(lam, p)

    v = F(b) - F(a)
    v = (v + math.pi) % TWO_PI - math.pi
    return np.where(p < 1e-15, 0.0, v)
