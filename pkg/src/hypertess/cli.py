"""Command-line front end.

Every output file starts with a provenance line (version, flags, seed).
Flags override config-file values, which override defaults.  Exit status is
2 for usage errors and 1 for numerical or domain failures.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import encounter as enc
from . import estimators as est
from . import geometry as geo
from . import measure as msr
from . import percolation as perc
from . import sections as sec
from . import svg
from . import tessellation as tess
from .errors import HypertessError, UsageError

PROVENANCE_SKIP = {"out", "config", "command", "func"}


def _default_seed() -> int:
    v = os.environ.get("HYPERTESS_SEED")
    if v is None:
        return 0
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"HYPERTESS_SEED must be an integer, got {v!r}")


def provenance(args) -> str:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in PROVENANCE_SKIP}
    body = " ".join(f"{k}={v}" for k, v in flags.items())
    return f"hypertess {__version__} {args.command} {body}"


def load_config(path: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


# ---------------------------------------------------------------- writers

class Output:
    def __init__(self, args):
        self.args = args
        self.head = provenance(args)

    def _emit(self, text: str):
        if self.args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.args.out, "w", newline="") as fh:
                fh.write(text)

    def csv(self, body: str):
        self._emit(f"# {self.head}\n" + body)

    def jsonl(self, objs):
        lines = [json.dumps({"provenance": self.head})] + [o if isinstance(o, str) else json.dumps(o, sort_keys=True)
                                                           for o in objs]
        self._emit("\n".join(lines) + "\n")

    def text(self, body: str):
        self._emit(f"# {self.head}\n" + body)

    def raw(self, body: str):
        self._emit(body)


# ---------------------------------------------------------------- commands

def cmd_sample(args, out):
    S = msr.sample_process(args.d, args.gamma, args.R, args.seed)
    out.text(S.to_text())


def cmd_crossing(args, out):
    r = perc.crossing_probability(args.d, args.gamma, args.R, args.h, args.n, args.seed, args.jobs, args.method)
    rep = est.EstimateReport("crossing_probability", {"d": args.d, "gamma": args.gamma, "R": args.R, "h": args.h,
                                                      "method": args.method},
                             r.p_hat, r.se, None, r.n, args.seed, {"indeterminate": r.indeterminate})
    out.jsonl([rep.to_json()])


def cmd_sweep(args, out):
    grid = perc.parse_grid(args.gammas)
    sw = perc.sweep(args.d, args.R, grid, args.n, args.seed, args.h, args.jobs, args.method)
    out.csv(sw.to_csv())
    try:
        lo, hi = perc.estimate_threshold(sw)
        print(f"0.5-crossing interval at R = {args.R}: [{lo:.4f}, {hi:.4f}]", file=sys.stderr)
    except HypertessError as e:
        print(f"note: {e}", file=sys.stderr)


def cmd_twopoint(args, out):
    out.jsonl([est.two_point(args.d, args.gamma, args.s, args.n, args.seed, args.jobs).to_json()])


def cmd_vertexint(args, out):
    rw = args.R_window if args.R_window is not None else args.R_count
    out.jsonl([est.vertex_intensity_2d(args.gamma, args.R_count, rw, args.n, args.seed, args.jobs).to_json()])


def cmd_cells2d(args, out):
    f, a = est.cell_stats_2d(args.gamma, args.R, args.n, args.seed, args.margin, args.rule, args.jobs)
    out.jsonl([f.to_json(), a.to_json()])


def cmd_sections(args, out):
    out.jsonl([sec.verify_section_intensity(args.d, args.k, args.gamma, args.r, args.n, args.seed,
                                            args.jobs).to_json()])


def cmd_mixing(args, out):
    seps = [float(v) for v in args.separations.split(",") if v.strip()]
    out.csv(est.rows_to_csv(est.mixing_decay(args.d, args.r, seps, args.gamma, args.seed)))


def _encounter_config(args):
    lam = args.intensity if args.intensity is not None else 1.0 / geo.ball_volume(args.d, 2 * args.r)
    return enc.EncounterConfig(args.r, args.epsilon, args.a, args.b, args.R, lam)


def cmd_encounter(args, out):
    cfg = _encounter_config(args)
    enc.validate_config(args.d, cfg)
    rep = enc.encounter_rate(args.d, args.gamma, cfg, args.n, args.seed, args.pitch, args.jobs)
    objs = [rep.to_json()]
    if args.walls:
        W = enc.build_walls(args.d, cfg, args.seed)
        objs.append({"name": "wall_predicates", "walls": len(W),
                     "covers_G": enc.wall_covers_G(W, args.d, cfg.r, cfg.epsilon),
                     "misses_caps": enc.wall_misses_caps(W, args.d, cfg.epsilon)})
    out.jsonl(objs)


def cmd_forest(args, out):
    cfg = _encounter_config(args)
    rng = np.random.Generator(np.random.PCG64(msr.derive_seed(args.seed, 1)))
    S = msr.sample_process(args.d, args.gamma, args.R, args.seed)
    Y = enc.sample_points_in_ball(args.d, cfg.point_intensity, cfg.R - cfg.r, rng)
    labels = rng.random(len(Y))
    E = enc.detect_encounter_points(S, Y, cfg.r, args.pitch)
    edges = enc.build_forest(S, E, Y, labels, cfg.r, args.pitch)
    out.csv("i,j\n" + "".join(f"{i},{j}\n" for i, j in edges))


def cmd_render(args, out):
    if args.sample:
        with open(args.sample) as fh:
            S = msr.ProcessSample.from_text(fh.read())
    else:
        S = msr.sample_process(2, args.gamma, args.R, args.seed)
    if S.d != 2:
        raise UsageError("render draws planar scenes only (d = 2)")
    cell = tess.zero_cell_polygon(S).polygon
    pts, hl = None, ()
    if args.encounter_r is not None:
        r = args.encounter_r
        lam = args.intensity if args.intensity is not None else 1.0 / geo.ball_volume(2, 2 * r)
        rng = np.random.Generator(np.random.PCG64(msr.derive_seed(args.seed, 1)))
        pts = enc.sample_points_in_ball(2, lam, S.window_radius - r, rng)
        hl = enc.detect_encounter_points(S, pts, r) if len(pts) else ()
    out.raw(svg.render_scene(S.normals, S.offsets, S.window_radius, cell, pts, hl, header=out.head))


def cmd_selftest(args, out):
    from .selftest import run_checks
    results = run_checks()
    body = "".join(f"{'PASS' if ok else 'FAIL'} {name}{'' if ok else ': ' + msg}\n" for name, ok, msg in results)
    out.text(body)
    if not all(ok for _, ok, _ in results):
        raise SelftestFailed(sum(not ok for _, ok, _ in results))


class SelftestFailed(HypertessError):
    pass


# ---------------------------------------------------------------- parser

def _common(p, seed_default):
    p.add_argument("--seed", type=int, default=seed_default, help="base seed (default: $HYPERTESS_SEED or 0)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")
    p.add_argument("--config", default=None, help="flat key=value file of flag defaults")


def build_parser(seed_default=0) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypertess", description="Poisson hyperplane tessellations of hyperbolic space")
    ap.add_argument("--version", action="version", version=f"hypertess {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a window sample and write it as text")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--R", type=float, default=3.0)
    p.set_defaults(func=cmd_sample)

    for name, fn, hlp in (("crossing", cmd_crossing, "P(zero cell reaches the window sphere)"),
                          ("sweep", cmd_sweep, "crossing probabilities over an intensity grid")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--R", type=float, default=6.0)
        p.add_argument("--h", type=float, default=0.01, help="probe pitch (method=probe)")
        p.add_argument("--n", type=int, default=1000)
        p.add_argument("--method", choices=("exact", "probe"), default="exact")
        if name == "crossing":
            p.add_argument("--gamma", type=float, default=1.0)
        else:
            p.add_argument("--gammas", default="2.0:4.4:0.4", help="a:b:step or comma list")
        p.set_defaults(func=fn)

    p = sub.add_parser("twopoint", help="two-point function estimate")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100000)
    p.set_defaults(func=cmd_twopoint)

    p = sub.add_parser("vertexint", help="vertex intensity in the plane")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--R-count", dest="R_count", type=float, default=2.0)
    p.add_argument("--R-window", dest="R_window", type=float, default=None)
    p.add_argument("--n", type=int, default=500)
    p.set_defaults(func=cmd_vertexint)

    p = sub.add_parser("cells2d", help="face intensity and mean cell area in the plane")
    p.add_argument("--gamma", type=float, default=math.pi)
    p.add_argument("--R", type=float, default=6.0)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--rule", choices=("center", "inside"), default="center")
    p.set_defaults(func=cmd_cells2d)

    p = sub.add_parser("sections", help="trace process on a k-plane")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2000)
    p.set_defaults(func=cmd_sections)

    p = sub.add_parser("mixing", help="joint hitting measure of two balls against separation")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--separations", default="0,2,4,8,16,20")
    p.set_defaults(func=cmd_mixing)

    for name, fn, hlp in (("encounter", cmd_encounter, "encounter-point rate"),
                          ("forest", cmd_forest, "encounter forest edge list for one window")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--gamma", type=float, default=1.5)
        p.add_argument("--r", type=float, default=2.0)
        p.add_argument("--epsilon", type=float, default=0.05)
        p.add_argument("--a", type=float, default=0.95)
        p.add_argument("--b", type=float, default=0.955)
        p.add_argument("--R", type=float, default=8.0)
        p.add_argument("--intensity", type=float, default=None,
                       help="point intensity (default 1/vol B(o, 2r))")
        p.add_argument("--pitch", type=float, default=None, help="direction mesh pitch (d >= 3)")
        if name == "encounter":
            p.add_argument("--n", type=int, default=500)
            p.add_argument("--walls", action="store_true", help="also check the wall predicates")
        p.set_defaults(func=fn)

    p = sub.add_parser("render", help="SVG of a planar scene")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--R", type=float, default=3.0)
    p.add_argument("--sample", default=None, help="sample text file instead of a fresh draw")
    p.add_argument("--encounter-r", dest="encounter_r", type=float, default=None)
    p.add_argument("--intensity", type=float, default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("selftest", help="closed-form identities and quick properties")
    p.set_defaults(func=cmd_selftest)

    for sp in sub.choices.values():
        _common(sp, seed_default)
    return ap


def parse(argv):
    ap = build_parser(_default_seed())
    args = ap.parse_args(argv)
    if args.config:
        cfg = load_config(args.config)
        sp = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = set(cfg) - known - {"config"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        conv = {}
        for a in sp._actions:
            if a.dest in cfg:
                v = cfg[a.dest]
                if a.type is not None:
                    v = a.type(v)
                elif isinstance(a.const, bool):
                    v = v.lower() in ("1", "true", "yes")
                conv[a.dest] = v
        sp.set_defaults(**conv)
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse(argv)
    except UsageError as e:
        print(f"hypertess: usage error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args, Output(args))
    except UsageError as e:
        print(f"hypertess: usage error: {e}", file=sys.stderr)
        return 2
    except (HypertessError, ValueError, ArithmeticError) as e:
        print(f"hypertess: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"hypertess: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
