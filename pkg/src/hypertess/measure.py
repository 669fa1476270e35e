"""Invariant hyperplane measure in Klein form and Poisson sampling in a window.

The measure is 2 * sigma(du) * (1 - t^2)^{-(d+1)/2} dt on S^{d-1} x [0, 1),
with sigma the uniform probability on the sphere.  With t = tanh(tau) the
offset density becomes proportional to cosh^{d-1}(tau).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import geometry as geo
from .errors import DomainError, NumericalError, UsageError

NEWTON_TOL = 1e-12


# ---------------------------------------------------------------- cosh / sinh power integrals

def cosh_power_integral(n: int, x):
    """int_0^x cosh^n(s) ds, elementwise, via the reduction formula."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return x.copy()
    if n == 1:
        return np.sinh(x)
    c, s = np.cosh(x), np.sinh(x)
    return c ** (n - 1) * s / n + (n - 1) / n * cosh_power_integral(n - 2, x)


def sinh_power_integral(n: int, x):
    """int_0^x sinh^n(s) ds, elementwise.

    The reduction formula cancels badly for small x, so a series is used there.
    """
    x = np.asarray(x, dtype=float)
    if n == 0:
        return x.copy()
    if n == 1:
        return np.expm1(x) ** 2 / (2 * np.exp(x))  # cosh x - 1 without cancellation
    rec = np.sinh(x) ** (n - 1) * np.cosh(x) / n - (n - 1) / n * sinh_power_integral(n - 2, x)
    # leading terms of the Taylor series: x^{n+1}/(n+1) + n x^{n+3} / (6 (n+3))
    ser = x ** (n + 1) / (n + 1) + n * x ** (n + 3) / (6 * (n + 3)) \
        + n * (5 * n - 2) * x ** (n + 5) / (360 * (n + 5))
    return np.where(np.abs(x) < 0.05, ser, rec)


def _invert_increasing(F, f, target, hi, n_guess=1.0, small=None):
    """Solve F(tau) = target on [0, hi] (F increasing, F' = f) for an array of targets."""
    target = np.asarray(target, dtype=float)
    lo_b = np.zeros_like(target)
    hi_b = np.full_like(target, hi)
    top = float(F(np.array(hi)))
    # the integrand grows like exp(n tau) for large tau
    tau = np.clip(hi + np.log(np.maximum(target, 1e-300) / top) / n_guess, 0.0, hi)
    if small is not None:
        tau = np.maximum(tau, np.minimum(small(target), hi))
    if np.all(target <= 0):
        return np.zeros_like(target)
    for _ in range(200):
        g = F(tau) - target
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / f(tau)
        lo_b = np.where(g < 0, tau, lo_b)
        hi_b = np.where(g > 0, tau, hi_b)
        new = tau - step
        bad = (new < lo_b) | (new > hi_b) | ~np.isfinite(new)
        new = np.where(bad, 0.5 * (lo_b + hi_b), new)
        new = np.where(target <= 0, 0.0, new)
        done = (np.abs(new - tau) <= NEWTON_TOL * np.maximum(1.0, np.abs(new))) | (target <= 0)
        tau = new
        if np.all(done):
            return tau
    raise NumericalError("offset inversion did not converge to 1e-12")


def invert_cosh_power(n: int, target, hi: float):
    """tau with int_0^tau cosh^n = target, for targets in [0, int_0^hi cosh^n]."""
    if n == 1:
        return np.arcsinh(np.asarray(target, dtype=float))
    return _invert_increasing(lambda x: cosh_power_integral(n, x), lambda x: np.cosh(x) ** n, target, hi, max(n, 1))


def invert_sinh_power(n: int, target, hi: float):
    if n == 1:
        return np.arccosh(1.0 + np.asarray(target, dtype=float))
    return _invert_increasing(lambda x: sinh_power_integral(n, x), lambda x: np.sinh(x) ** n, target, hi, max(n, 1),
                              small=lambda v: ((n + 1) * np.maximum(v, 0.0)) ** (1.0 / (n + 1)))


# ---------------------------------------------------------------- closed-form measures

def mu_hit_ball(d: int, r: float) -> float:
    """Measure of the hyperplanes meeting a ball of radius r."""
    if d < 2:
        raise UsageError("dimension must be >= 2")
    if r < 0:
        raise UsageError("radius must be nonnegative")
    if d == 2:
        return 2.0 * math.sinh(r)
    return 2.0 * float(cosh_power_integral(d - 1, r))


def mean_abs_coordinate(d: int) -> float:
    """E|u_1| for u uniform on S^{d-1}."""
    return math.exp(gammaln(d / 2) - gammaln((d + 1) / 2)) / math.sqrt(math.pi)


def mu_separating(x, y) -> float:
    """Measure of the hyperplanes separating x from y.

    Equals E|u_1| * dist(x, y) under the sphere normalization used here.
    """
    x = geo.as_point(x)
    return mean_abs_coordinate(x.size) * geo.dist(x, y)


def offset_density(d: int, t):
    return (1.0 - np.asarray(t, dtype=float) ** 2) ** (-(d + 1) / 2)


def offset_cdf(d: int, t, a: float, b: float):
    """CDF of the offset law restricted to (a, b)."""
    n = d - 1
    lo = cosh_power_integral(n, math.atanh(a))
    hi = cosh_power_integral(n, math.atanh(b))
    val = cosh_power_integral(n, np.arctanh(np.clip(t, a, b)))
    return (val - lo) / (hi - lo)


# ---------------------------------------------------------------- process samples

@dataclass
class ProcessSample:
    """Hyperplanes of a Poisson process that meet the window B(o, R).

    ``marks`` holds the arrival intensities of the coupled marked stream;
    the sample at any gamma' < gamma is the prefix with marks <= gamma'.
    """
    d: int
    gamma: float
    window_radius: float
    seed: int
    normals: np.ndarray
    offsets: np.ndarray
    marks: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.offsets)

    @property
    def hyperplanes(self) -> list:
        return [geo.Hyperplane(tuple(u), float(t)) for u, t in zip(self.normals, self.offsets)]

    def at_intensity(self, gamma: float) -> "ProcessSample":
        if self.marks is None:
            raise UsageError("sample carries no marks")
        if gamma > self.gamma:
            raise UsageError("can only thin to a lower intensity")
        k = int(np.searchsorted(self.marks, gamma, side="right"))
        return ProcessSample(self.d, gamma, self.window_radius, self.seed,
                             self.normals[:k], self.offsets[:k], self.marks[:k])

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"hypertess-sample d={self.d} gamma={self.gamma!r} R={self.window_radius!r} "
                  f"seed={self.seed} count={len(self)}\n")
        for u, t in zip(self.normals, self.offsets):
            buf.write(" ".join(f"{v:.17g}" for v in u) + f" {t:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ProcessSample":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("hypertess-sample"):
            raise UsageError("not a hypertess sample record")
        head = dict(kv.split("=", 1) for kv in lines[0].split()[1:])
        d, count = int(head["d"]), int(head["count"])
        rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=float).reshape(-1, d + 1)
        if len(rows) != count:
            raise UsageError(f"sample record declares {count} hyperplanes, found {len(rows)}")
        return cls(d, float(head["gamma"]), float(head["R"]), int(head["seed"]),
                   rows[:, :d].copy(), rows[:, d].copy())

    @classmethod
    def from_hyperplanes(cls, d, hyperplanes, gamma=0.0, window_radius=1.0, seed=0):
        U = np.array([h.normal for h in hyperplanes], dtype=float).reshape(-1, d)
        t = np.array([h.offset for h in hyperplanes], dtype=float)
        return cls(d, gamma, window_radius, seed, U, t)


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit sub-seed for replicate ``index``."""
    s = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(s[0]) | (int(s[1]) << 32)


def _chunk_size(rate: float) -> int:
    return int(min(4096, max(16, 2 ** math.ceil(math.log2(max(rate, 1.0))))))


def _check(d, gamma, R):
    if int(d) != d or d < 2:
        raise UsageError("dimension must be an integer >= 2")
    if not gamma > 0:
        raise UsageError("gamma must be positive")
    if not R > 0:
        raise UsageError("window radius must be positive")


def sample_process(d: int, gamma: float, window_radius: float, seed: int) -> ProcessSample:
    """Poisson hyperplane process of intensity gamma restricted to B(o, R).

    Hyperplanes arrive as a marked stream in fixed-size chunks that depend only
    on (d, R, seed), so samples at different gamma are nested prefixes.
    """
    _check(d, gamma, window_radius)
    R = float(window_radius)
    total = cosh_power_integral(d - 1, R)
    rate = 2.0 * float(total)
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    chunk = _chunk_size(rate * 3.0)
    marks, normals, offsets = [], [], []
    last = 0.0
    while last <= gamma:
        gaps = rng.exponential(1.0 / rate, chunk)
        m = last + np.cumsum(gaps)
        U = geo.unit(rng.standard_normal((chunk, d)))
        tau = invert_cosh_power(d - 1, rng.random(chunk) * total, R)
        marks.append(m)
        normals.append(U)
        offsets.append(np.tanh(tau))
        last = float(m[-1])
    m = np.concatenate(marks)
    k = int(np.searchsorted(m, gamma, side="right"))
    U = np.concatenate(normals)[:k]
    t = np.concatenate(offsets)[:k]
    # offsets that round up to tanh R are pulled back inside the window
    t = np.minimum(t, np.nextafter(math.tanh(R), 0.0))
    return ProcessSample(d, float(gamma), R, int(seed), U, t, m[:k])


def sample_in_ball_count(d, gamma, R, seed) -> int:
    return len(sample_process(d, gamma, R, seed))


# ---------------------------------------------------------------- wall sets

@dataclass(frozen=True)
class WallSet:
    center: tuple
    cap_radius: float
    offset_low: float
    offset_high: float

    def __post_init__(self):
        if not 0.0 < self.offset_low < self.offset_high < 1.0:
            raise UsageError("wall offsets must satisfy 0 < a < b < 1")
        if not 0.0 < self.cap_radius < math.pi:
            raise UsageError("wall cap radius must lie in (0, pi)")
        c = geo.unit(self.center)
        object.__setattr__(self, "center", tuple(float(v) for v in c))


def sample_cap(rng: np.random.Generator, center, eps: float, n: int = 1) -> np.ndarray:
    """Uniform points of the spherical cap of radius eps around ``center``."""
    c = np.asarray(center, dtype=float)
    d = c.size
    out = np.empty((0, d))
    while len(out) < n:
        m = max(16, 2 * (n - len(out)))
        th = rng.random(m) * eps
        if d > 2:
            keep = rng.random(m) < (np.sin(th) / math.sin(min(eps, math.pi / 2))) ** (d - 2)
            th = th[keep]
        # direction orthogonal to c
        v = rng.standard_normal((len(th), d))
        v -= np.outer(v @ c, c)
        v = geo.unit(v)
        out = np.vstack([out, np.cos(th)[:, None] * c + np.sin(th)[:, None] * v])
    return out[:n]


def sample_wall(d: int, wall: WallSet, seed) -> geo.Hyperplane:
    """One hyperplane from the measure restricted to the wall set."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(int(seed)))
    if len(wall.center) != d:
        raise UsageError("wall center dimension mismatch")
    u = sample_cap(rng, wall.center, wall.cap_radius, 1)[0]
    lo = float(cosh_power_integral(d - 1, math.atanh(wall.offset_low)))
    hi = float(cosh_power_integral(d - 1, math.atanh(wall.offset_high)))
    tau = invert_cosh_power(d - 1, np.array([lo + rng.random() * (hi - lo)]), math.atanh(wall.offset_high))[0]
    t = float(np.clip(math.tanh(tau), wall.offset_low, wall.offset_high))
    if t <= wall.offset_low or t >= wall.offset_high:
        t = 0.5 * (wall.offset_low + wall.offset_high)  # measure-zero boundary
    return geo.Hyperplane(tuple(u), t)


# ---------------------------------------------------------------- joint hitting of two balls

def _sphere_weight(d: int):
    """Density of the angle between a uniform direction and a fixed axis."""
    if d == 2:
        return lambda th: 1.0 / math.pi
    norm = math.exp(gammaln(d / 2) - gammaln((d - 1) / 2)) / math.sqrt(math.pi)
    return lambda th: norm * math.sin(th) ** (d - 2)


def mu_joint_balls(d: int, x, y, r: float, tol: float = 1e-12) -> float:
    """Measure of the hyperplanes meeting both B(x, r) and B(y, r)."""
    if not r > 0:
        raise UsageError("radius must be positive")
    x = geo.as_point(x, d)
    y = geo.as_point(y, d)
    return mu_joint_separation(d, geo.dist(x, y), r, tol)


def mu_joint_separation(d: int, sep: float, r: float, tol: float = 1e-12) -> float:
    """mu_joint_balls for two balls of radius r whose centers are sep apart.

    Works for separations beyond what Klein coordinates resolve in float64.
    """
    if not r > 0 or sep < 0:
        raise UsageError("need r > 0 and sep >= 0")
    if sep == 0.0:
        return mu_hit_ball(d, r)
    Y = math.tanh(sep)
    T = math.tanh(r)
    n = d - 1
    # hyperplane (u, t) meets B(c, r), |c| = Y, iff |<u,c> - t| < sinh r sqrt(1 - t^2) / cosh sep
    b = math.sinh(r) / math.cosh(sep)
    w = _sphere_weight(d)

    def inner(th):
        a = math.cos(th) * Y
        disc = 1.0 + b * b - a * a
        if disc <= 0:
            return 0.0
        root = b * math.sqrt(disc)
        lo = max((a - root) / (1 + b * b), 0.0)
        hi = min((a + root) / (1 + b * b), T)
        if hi <= lo:
            return 0.0
        v = cosh_power_integral(n, math.atanh(hi)) - cosh_power_integral(n, math.atanh(lo))
        return 2.0 * w(th) * float(v)

    # kinks where the interval endpoints cross 0 or tanh r
    pts = [math.pi / 2]
    if T / Y < 1:
        pts.append(math.acos(T / Y))
    val, err = integrate.quad(inner, 0.0, math.pi, points=sorted(set(pts)), epsabs=tol,
                              epsrel=1e-10, limit=400)
    if not np.isfinite(val) or err > max(1e-8, 1e-6 * abs(val)):
        raise NumericalError(f"joint hitting quadrature reached only {err:.3g}")
    return val


def mc_measure(d: int, predicate, n: int, rng: np.random.Generator, tmax: float = None):
    """Monte Carlo integral of the measure over a set of hyperplanes.

    Samples hyperplanes from the measure restricted to offsets < tmax and returns
    (estimate, standard error) of mu({H : predicate(U, t)}).
    """
    R = math.atanh(tmax)
    total = mu_hit_ball(d, R)
    U = geo.uniform_sphere(rng, n, d)
    tau = invert_cosh_power(d - 1, rng.random(n) * cosh_power_integral(d - 1, R), R)
    hit = np.asarray(predicate(U, np.tanh(tau)), dtype=float)
    return total * hit.mean(), total * hit.std(ddof=1) / math.sqrt(n)


def sample_batch(d: int, gamma: float, window_radius: float, seed: int, n: int):
    """n independent window samples drawn in one vectorized pass.

    Returns (counts, normals, offsets); replicate i owns the rows
    counts[:i].sum() .. counts[:i+1].sum().
    """
    _check(d, gamma, window_radius)
    R = float(window_radius)
    total = float(cosh_power_integral(d - 1, R))
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    counts = rng.poisson(gamma * 2.0 * total, n)
    N = int(counts.sum())
    U = geo.unit(rng.standard_normal((N, d)))
    t = np.tanh(invert_cosh_power(d - 1, rng.random(N) * total, R))
    return counts, U, np.minimum(t, np.nextafter(math.tanh(R), 0.0))
