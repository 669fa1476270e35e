"""Traces of the hyperplane process on a coordinate k-plane through o."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.special import gammaln

from . import geometry as geo
from .errors import NumericalError, UsageError
from .estimators import EstimateReport, _mean_se
from .measure import ProcessSample, derive_seed, mu_hit_ball, offset_cdf, sample_process
from .parallel import pmap


def omega(j: int) -> float:
    """Surface area of the unit sphere in R^j."""
    if int(j) != j or j < 1:
        raise UsageError("omega needs an integer j >= 1")
    return 2.0 * math.exp(0.5 * j * math.log(math.pi) - gammaln(j / 2))


def section_constant_omega(d: int, k: int) -> float:
    return omega(d + 1) * omega(k) / (omega(d) * omega(k + 1))


def section_constant_gamma(d: int, k: int) -> float:
    return math.exp(gammaln(d / 2) + gammaln((k + 1) / 2) - gammaln((d + 1) / 2) - gammaln(k / 2))


def section_constant(d: int, k: int) -> float:
    """Intensity factor of the trace process on a k-plane."""
    if not (int(k) == k and int(d) == d and 1 <= k < d):
        raise UsageError(f"need 1 <= k < d, got d = {d}, k = {k}")
    a = section_constant_omega(d, k)
    b = section_constant_gamma(d, k)
    if abs(a - b) > 1e-12 * max(1.0, abs(b)):
        raise NumericalError(f"section constant forms disagree: {a} vs {b}")
    return b


def _trace(U, t, k):
    P = U[:, :k]
    n = np.linalg.norm(P, axis=1)
    keep = n > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(keep, t / np.where(keep, n, 1.0), np.inf)
    keep &= tp < 1.0
    Up, tp = geo.canonicalize_arrays(P[keep] / n[keep, None], tp[keep])
    return Up, tp, np.flatnonzero(keep)


def induce_on_kplane(sample: ProcessSample, k: int) -> list:
    """Traces on span(e_1, .., e_k) as hyperplanes of the k-dimensional disc."""
    if not 2 <= k < sample.d:
        raise UsageError(f"need 2 <= k < d = {sample.d}")
    Up, tp, _ = _trace(sample.normals, sample.offsets, k)
    return [geo.Hyperplane(tuple(u), float(s)) for u, s in zip(Up, tp)]


def induced_sample(sample: ProcessSample, k: int) -> ProcessSample:
    """Trace process restricted to the k-dimensional window of the same radius."""
    if not 2 <= k < sample.d:
        raise UsageError(f"need 2 <= k < d = {sample.d}")
    Up, tp, idx = _trace(sample.normals, sample.offsets, k)
    inside = tp < math.tanh(sample.window_radius)
    marks = sample.marks[idx][inside] if sample.marks is not None else None
    return ProcessSample(k, sample.gamma * section_constant(sample.d, k), sample.window_radius, sample.seed,
                         Up[inside], tp[inside], marks)


def _section_task(args):
    d, k, gamma, r, seed, i = args
    S = sample_process(d, gamma, r, derive_seed(seed, i))
    I = induced_sample(S, k)
    return I.offsets


def verify_section_intensity(d, k, gamma, r, n, seed, jobs=1) -> EstimateReport:
    """Mean number of traces meeting B_P(o, r) against c(d, k) gamma mu_hit_ball(k, r)."""
    offs = pmap(_section_task, [(d, k, gamma, r, seed, i) for i in range(n)], jobs)
    counts = np.array([len(o) for o in offs], dtype=float)
    m, se = _mean_se(counts)
    target = section_constant(d, k) * gamma * mu_hit_ball(k, r)
    allt = np.concatenate(offs) if offs else np.zeros(0)
    T = math.tanh(r)
    ks = stats.kstest(allt, lambda x: offset_cdf(k, np.minimum(x, T), 0.0, T)) if len(allt) else None
    var = float(counts.var(ddof=1)) if n > 1 else math.nan
    extras = {"variance_to_mean": var / m if m > 0 else math.nan,
              "ks_statistic": float(ks.statistic) if ks else math.nan,
              "ks_pvalue": float(ks.pvalue) if ks else math.nan}
    return EstimateReport("section_intensity", {"d": d, "k": k, "gamma": gamma, "r": r},
                          m, se, target, n, seed, extras)
