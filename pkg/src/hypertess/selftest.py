"""Fast built-in checks: closed-form identities and elementary properties."""
from __future__ import annotations

import math

import numpy as np

from . import encounter as enc
from . import geometry as geo
from . import measure as msr
from . import percolation as perc
from . import sections as sec
from . import tessellation as tess


def _checks():
    e1 = np.array([1.0, 0.0])
    H = geo.hyperplane(e1, 0.5)
    yield "dist(o, o) = 0", geo.dist([0, 0], [0, 0]) == 0.0
    yield "dist(o, v) = artanh|v|", abs(geo.dist([0, 0], [0.5, 0]) - math.atanh(0.5)) < 1e-12
    yield "side conventions", (geo.side(H, [0, 0]), geo.side(H, [0.5, 0]), geo.side(H, [0.9, 0])) == (-1, 0, 1)
    yield "segment with endpoint on plane crosses", geo.segment_crosses(H, [0.5, 0.1], [0.5, -0.1])
    yield "ray along normal hits", geo.ray_hits(H, e1) and not geo.ray_hits(H, -e1)
    yield "plane through o cuts a half sphere", abs(geo.cut_cap_at_radius(geo.hyperplane(e1, 0.0), 1.0).radius - math.pi / 2) < 1e-15
    yield "ball_volume(2, 0) = 0", geo.ball_volume(2, 0) == 0.0
    yield "ball_volume(3, r) closed form", abs(geo.ball_volume(3, 1.0) - math.pi * (math.sinh(2) - 2)) < 1e-9
    g = geo.translation_along_axis(3, 1, 0.0)
    x = np.array([0.1, -0.2, 0.3])
    yield "zero translation is the identity", np.allclose(g.apply(x), x, atol=1e-15)
    yield "mu_hit_ball(2, r) = 2 sinh r", abs(msr.mu_hit_ball(2, 1.0) - 2 * math.sinh(1)) < 1e-14
    yield "mu_hit_ball(3, 1) closed form", abs(msr.mu_hit_ball(3, 1.0) - (1 + math.sinh(2) / 2)) < 1e-12
    yield "mu_separating(x, x) = 0", msr.mu_separating([0.2, 0.1], [0.2, 0.1]) == 0.0
    a = msr.sample_process(2, 1.0, 2.0, 11)
    b = msr.sample_process(2, 1.0, 2.0, 11)
    yield "sampling is reproducible", np.array_equal(a.normals, b.normals) and np.array_equal(a.offsets, b.offsets)
    yield "tiny intensity gives an empty sample", len(msr.sample_process(2, 1e-12, 1.0, 3)) == 0
    empty = msr.ProcessSample(2, 1.0, 3.0, 0, np.zeros((0, 2)), np.zeros(0))
    yield "empty sample: zero cell is the window", tess.zero_cell_polygon(empty).unbounded_in_window
    yield "empty sample: one arm outside a ball", tess.unbounded_components_outside_ball(empty, [0, 0], 1.0) == 1
    box = msr.ProcessSample(2, 1.0, 3.0, 0, np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]), np.full(4, 0.3))
    yield "boxed origin is bounded", not tess.zero_cell_polygon(box).unbounded_in_window
    yield "gamma_crit(2) = pi", perc.gamma_crit(2) == math.pi
    yield "gamma_crit(3) = 8", abs(perc.gamma_crit(3) - 8.0) <= 1e-10
    ok = all(abs(perc.gamma_crit_face(d, k) * sec.section_constant(d, k) - perc.gamma_crit(k)) <= 1e-10
             for d in range(3, 9) for k in range(2, d))
    yield "face thresholds times section constants", ok
    ok = all(abs(sec.section_constant_omega(d, k) - sec.section_constant_gamma(d, k)) <= 1e-12
             for d in range(2, 9) for k in range(1, d))
    yield "section constant forms agree", ok
    yield "omega values", np.allclose([sec.omega(1), sec.omega(2), sec.omega(3), sec.omega(4)],
                                      [2, 2 * math.pi, 4 * math.pi, 2 * math.pi ** 2], rtol=1e-14)
    yield "r0 identity", all(abs(math.tanh(enc.r0(d) / 2) ** 2 + 1 / d - 1) < 1e-12 for d in range(2, 9))
    V = enc.cap_centers(3)
    yield "cap centers are unit vectors", np.allclose(np.linalg.norm(V, axis=1), 1.0)


def run_checks():
    out = []
    for name, ok in _checks():
        out.append((name, bool(ok), "" if ok else "check failed"))
    return out
