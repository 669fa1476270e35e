"""Klein-model primitives for hyperbolic space H^d.

Points are numpy vectors strictly inside the unit ball.  Hyperplanes are
Euclidean chords {x : <u, x> = t} with unit normal u and offset t in [0, 1).
Isometries are Lorentz matrices acting on the hyperboloid lift
(1, x) / sqrt(1 - |x|^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import DomainError, UsageError

SIDE_TOL = 1e-12
NORMAL_TOL = 1e-12
LORENTZ_TOL = 1e-10


# ---------------------------------------------------------------- points

def as_point(x, d: int | None = None) -> np.ndarray:
    """Validate and return a Klein point as a float array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise UsageError(f"point must be a vector of length >= 2, got shape {p.shape}")
    if d is not None and p.size != d:
        raise UsageError(f"dimension mismatch: expected {d}, got {p.size}")
    if not np.all(np.isfinite(p)) or float(p @ p) >= 1.0:
        raise DomainError(f"point {p.tolist()} is not strictly inside the unit ball")
    return p


def origin(d: int) -> np.ndarray:
    return np.zeros(d)


def to_hyperboloid(x) -> np.ndarray:
    """Lift Klein point(s) to the upper sheet of the hyperboloid."""
    x = np.asarray(x, dtype=float)
    w = 1.0 / np.sqrt(1.0 - np.sum(x * x, axis=-1, keepdims=True))
    return np.concatenate([w, w * x], axis=-1)


def from_hyperboloid(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[..., 1:] / X[..., :1]


def minkowski(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return -X[..., 0] * Y[..., 0] + np.sum(X[..., 1:] * Y[..., 1:], axis=-1)


def dist(x, y) -> float:
    """Hyperbolic distance between two Klein points."""
    x = as_point(x)
    y = as_point(y, x.size)
    if np.array_equal(x, y):
        return 0.0
    c = -minkowski(to_hyperboloid(x), to_hyperboloid(y))
    if c < 1.5:
        # arcosh loses precision near 1; use the Euclidean chord of the lift
        diff = to_hyperboloid(x) - to_hyperboloid(y)
        q = max(float(minkowski(diff, diff)), 0.0)
        return 2.0 * math.asinh(math.sqrt(q) / 2.0)
    return math.acosh(c)


def dist_origin(x) -> float:
    x = as_point(x)
    return math.atanh(math.sqrt(float(x @ x)))


def pairwise_dist(X, Y) -> np.ndarray:
    """Distances between rows of X and rows of Y (no validation)."""
    c = -(to_hyperboloid(X)[:, None, :] * (to_hyperboloid(Y)[None, :, :] * _J(X.shape[1]))).sum(-1)
    return np.arccosh(np.maximum(c, 1.0))


def _J(d: int) -> np.ndarray:
    j = np.ones(d + 1)
    j[0] = -1.0
    return j


# ---------------------------------------------------------------- hyperplanes

@dataclass(frozen=True)
class Hyperplane:
    normal: tuple
    offset: float

    def __post_init__(self):
        u = np.asarray(self.normal, dtype=float)
        if u.ndim != 1 or u.size < 2:
            raise UsageError("hyperplane normal must be a vector of length >= 2")
        if abs(float(np.linalg.norm(u)) - 1.0) > NORMAL_TOL:
            raise UsageError("hyperplane normal must have unit length")
        if not (0.0 <= self.offset < 1.0):
            raise DomainError(f"hyperplane offset {self.offset} outside [0, 1)")
        object.__setattr__(self, "normal", tuple(float(v) for v in u))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def u(self) -> np.ndarray:
        return np.array(self.normal)

    @property
    def d(self) -> int:
        return len(self.normal)

    def minkowski_normal(self) -> np.ndarray:
        """Spacelike unit normal of the hyperplane on the hyperboloid."""
        return np.concatenate([[self.offset], self.u]) / math.sqrt(1.0 - self.offset ** 2)


def canonical_form(u, t):
    """Return (normal, offset) with unit normal, t >= 0 and the t = 0 tie broken."""
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if n == 0.0 or not np.isfinite(n):
        raise UsageError("hyperplane normal must be nonzero")
    if abs(n - 1.0) > 1e-15:
        # unit input is left alone so canonicalization is idempotent bit for bit
        u = u / n
        t = float(t) / n
    t = float(t)
    if t < 0.0:
        u, t = -u, -t
    elif t == 0.0:
        nz = np.flatnonzero(u)
        if u[nz[0]] < 0:
            u = -u
    return u, t


def hyperplane(u, t) -> Hyperplane:
    """Build a canonical hyperplane from any (u, t) representing the same chord."""
    u, t = canonical_form(u, t)
    if t >= 1.0:
        raise DomainError(f"chord <u,x> = {t} misses the unit ball")
    return Hyperplane(tuple(u), t)


def canonicalize_arrays(U, t):
    """Vectorized canonical form for arrays of normals (n, d) and offsets (n,)."""
    U = np.asarray(U, dtype=float)
    t = np.asarray(t, dtype=float)
    n = np.linalg.norm(U, axis=1)
    n = np.where(np.abs(n - 1.0) > 1e-15, n, 1.0)
    U = U / n[:, None]
    t = t / n
    first = U[np.arange(len(U)), np.argmax(U != 0, axis=1)] if len(U) else np.zeros(0)
    flip = (t < 0) | ((t == 0) & (first < 0))
    U = np.where(flip[:, None], -U, U)
    t = np.where(flip, -t, t)
    return U, t


def side(h: Hyperplane, x) -> int:
    v = float(np.dot(h.u, as_point(x, h.d))) - h.offset
    if abs(v) <= SIDE_TOL:
        return 0
    return 1 if v > 0 else -1


def side_values(U, t, X) -> np.ndarray:
    """Raw <u_i, x_j> - t_i for normals U (n, d), offsets t (n,), points X (m, d) -> (n, m)."""
    return np.asarray(U) @ np.atleast_2d(X).T - np.asarray(t)[:, None]


def signs(U, t, X) -> np.ndarray:
    v = side_values(U, t, X)
    s = np.sign(v).astype(np.int8)
    s[np.abs(v) <= SIDE_TOL] = 0
    return s


def segment_crosses(h: Hyperplane, x, y) -> bool:
    return side(h, x) * side(h, y) <= 0


def ray_hits(h: Hyperplane, w) -> bool:
    """Whether the geodesic ray from o towards the ideal point w meets h."""
    w = np.asarray(w, dtype=float)
    c = float(np.clip(np.dot(w, h.u), -1.0, 1.0))
    return math.acos(c) < math.acos(h.offset)


@dataclass(frozen=True)
class Cap:
    center: tuple
    radius: float

    def contains(self, w) -> bool:
        c = float(np.clip(np.dot(np.asarray(w, dtype=float), self.center), -1.0, 1.0))
        return math.acos(c) < self.radius


def sphere_dist(v, w) -> float:
    return math.acos(float(np.clip(np.dot(v, w), -1.0, 1.0)))


def cut_cap_at_radius(h: Hyperplane, r: float):
    """Cap of directions whose ray from o meets h within distance r, or None."""
    if r <= 0:
        raise UsageError("radius must be positive")
    T = math.tanh(r)
    if h.offset >= T:
        return None
    return Cap(h.normal, math.acos(h.offset / T))


def point_hyperplane_distance(U, t, y) -> np.ndarray:
    """Hyperbolic distance from y to each hyperplane (rows of U, t)."""
    y = np.asarray(y, dtype=float)
    num = np.abs(np.asarray(U) @ y - t)
    den = np.sqrt((1.0 - np.asarray(t) ** 2) * (1.0 - y @ y))
    return np.arcsinh(num / den)


def hits_ball(U, t, c, rho) -> np.ndarray:
    """Whether each hyperplane meets the open hyperbolic ball B(c, rho)."""
    c = np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    num = np.abs(np.asarray(U) @ c - t)
    return num < math.sinh(rho) * np.sqrt((1.0 - t * t) * (1.0 - c @ c))


# ---------------------------------------------------------------- balls

def ball_volume(d: int, r: float) -> float:
    if d < 2:
        raise UsageError("dimension must be >= 2")
    if r < 0:
        raise UsageError("radius must be nonnegative")
    if d == 2:
        return 2.0 * math.pi * (math.cosh(r) - 1.0)
    val, _ = integrate.quad(lambda s: math.sinh(s) ** (d - 1), 0.0, r, epsabs=0.0, epsrel=1e-10, limit=200)
    return sphere_area(d) * val


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d))


# ---------------------------------------------------------------- isometries

@dataclass(frozen=True)
class Isometry:
    lorentz: np.ndarray

    def __post_init__(self):
        M = np.array(self.lorentz, dtype=float)
        M.setflags(write=False)
        object.__setattr__(self, "lorentz", M)

    @property
    def d(self) -> int:
        return self.lorentz.shape[0] - 1

    def is_valid(self, tol: float = LORENTZ_TOL) -> bool:
        J = np.diag(_J(self.d))
        M = self.lorentz
        return bool(np.allclose(M.T @ J @ M, J, atol=tol) and M[0, 0] > 0)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.lorentz @ other.lorentz)

    def inverse(self) -> "Isometry":
        J = np.diag(_J(self.d))
        return Isometry(J @ self.lorentz.T @ J)

    def apply(self, x) -> np.ndarray:
        return from_hyperboloid(to_hyperboloid(x) @ self.lorentz.T)

    def apply_hyperplanes(self, U, t):
        """Images of hyperplanes (rows of U, t) in canonical array form."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        N = np.column_stack([t, U]) @ self.lorentz.T
        return canonicalize_arrays(N[:, 1:], N[:, 0])

    def apply_hyperplane(self, h: Hyperplane) -> Hyperplane:
        U, t = self.apply_hyperplanes(h.u[None, :], [h.offset])
        return Hyperplane(tuple(U[0]), float(t[0]))


def apply(g: Isometry, x) -> np.ndarray:
    return g.apply(x)


def identity(d: int) -> Isometry:
    return Isometry(np.eye(d + 1))


def boost(w, s: float) -> Isometry:
    """Translation by hyperbolic distance s along the unit direction w through o."""
    w = np.asarray(w, dtype=float)
    d = w.size
    M = np.eye(d + 1)
    ch, sh = math.cosh(s), math.sinh(s)
    M[0, 0] = ch
    M[0, 1:] = sh * w
    M[1:, 0] = sh * w
    M[1:, 1:] += (ch - 1.0) * np.outer(w, w)
    return Isometry(M)


def translation_along_axis(d: int, i: int, s: float) -> Isometry:
    """Translation by signed distance s along the i-th coordinate axis (1-based)."""
    if not 1 <= i <= d:
        raise UsageError(f"axis index {i} outside 1..{d}")
    e = np.zeros(d)
    e[i - 1] = 1.0
    return boost(e, s)


def rotation(d: int, i: int, j: int, angle: float) -> Isometry:
    """Rotation about o in the (i, j) coordinate plane (1-based axes)."""
    M = np.eye(d + 1)
    c, s = math.cos(angle), math.sin(angle)
    M[i, i] = c
    M[j, j] = c
    M[i, j] = -s
    M[j, i] = s
    return Isometry(M)


def orthogonal(Q) -> Isometry:
    Q = np.asarray(Q, dtype=float)
    M = np.eye(Q.shape[0] + 1)
    M[1:, 1:] = Q
    return Isometry(M)


def to_origin(y) -> Isometry:
    """An isometry sending y to o (a pure translation)."""
    y = np.asarray(y, dtype=float)
    n = float(np.linalg.norm(y))
    if n == 0.0:
        return identity(y.size)
    return boost(y / n, -math.atanh(n))


def random_isometry(d: int, rng: np.random.Generator, max_shift: float = 3.0) -> Isometry:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    return boost(w, rng.uniform(-max_shift, max_shift)) @ orthogonal(Q)


# ---------------------------------------------------------------- sphere helpers

def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def angle_of(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.arctan2(v[..., 1], v[..., 0]) % (2 * math.pi)


def uniform_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    return unit(rng.standard_normal((n, d)))
