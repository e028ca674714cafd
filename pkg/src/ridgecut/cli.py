"""``ridgecut`` command line.

Every subcommand writes its artifacts under ``--out`` and a
``comparisons.json`` listing target, measured value, tolerance and
PASS/FAIL. Exit status: 0 when every comparison passes, 2 when one fails,
1 on error.
"""
import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .constructions import SupportSpec
from .errors import BadFrame, RidgecutError
from .geometry import read_mesh, write_mesh
from .measure import bl_distance
from .newton import (
    ConcaveGridFn,
    improvement_sweep,
    min_measure_search,
    plateau_pyramid,
    predicted_ratio_limit,
    resistance,
    solve_2d,
)
from .reproduce import Comparison, at_most, run_construction, run_example
from .ridge import RidgeFrame, sweep

SIG = 12


def _round(obj):
    """Round every float to 12 significant digits, recursively."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.{SIG}g}")
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_round(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_report(out, report):
    _write_json(out / "report.json", report.to_dict())
    report.write_csv(out / "cuts.csv")


def _finish(out, comparisons, extra=None):
    data = {"comparisons": [c.to_dict() for c in comparisons]}
    if extra:
        data.update(extra)
    _write_json(out / "comparisons.json", data)
    for c in comparisons:
        print(f"{c.name}: target {c.target:.{SIG}g} measured {c.measured:.{SIG}g} "
              f"tol {c.tolerance:.3g} {'PASS' if c.passed else 'FAIL'}")
    return 0 if all(c.passed for c in comparisons) else 2


def _schedule(args):
    if args.t_list:
        return {"ts": [float(t) for t in args.t_list.split(",")]}
    out = {"ratio": args.ratio, "count": args.count}
    if args.t0 is not None:
        out["t0"] = args.t0
    return out


# ---------------------------------------------------------------------------


def cmd_example(args):
    params = {}
    if args.id == 2:
        params = {"n": args.n or 4096, "lambda1": args.lambda1}
    elif args.id == 3:
        params = {"n": args.n or 2048}
    elif args.id == 4:
        params = {"a": args.a, "b": args.b, "depth": args.depth}
    sweep_args = {"tol": args.tol, **_schedule(args)}
    ex, rep, comps = run_example(args.id, t=args.t, sweep_args=sweep_args, **params)
    _write_report(args.out, rep)
    print(f"{ex.name}: verdict {rep.verdict}")
    return _finish(args.out, comps, {"example": ex.name, "verdict": rep.verdict,
                                     "frame": ex.frame.to_dict()})


def cmd_cut_sweep(args):
    body = read_mesh(args.mesh)
    kw = {"e": args.e} if args.e else {"lambdas": args.lambdas}
    frame = RidgeFrame.build(args.r0, args.e1, args.e2, angular_tol=args.angular_tol, **kw)
    rep = sweep(body, frame, tol=args.tol, eta=args.eta, **_schedule(args))
    _write_report(args.out, rep)
    print(f"verdict {rep.verdict}")
    comps = [at_most("moment_residual", rep.max_moment_residual, 1e-9)]
    if args.expect_two_atom and rep.limit_candidate is not None:
        comps.append(at_most("bl_to_two_atom_limit",
                             bl_distance(rep.limit_candidate, frame.two_atom_limit()),
                             args.bl_tol))
    return _finish(args.out, comps, {"verdict": rep.verdict, "frame": frame.to_dict()})


def cmd_construct(args):
    with open(args.k_spec) as fh:
        support = SupportSpec.from_dict(json.load(fh))
    run = run_construction(support, slices=args.slices, n_atoms=args.atoms,
                           t0=args.t0, ratio=args.ratio, count=args.count)
    _write_json(args.out / "chain.json", run.chain.to_dict())
    write_mesh(run.body, args.out / "body.obj")
    _write_report(args.out, run.report)
    b, s_minus, s_plus = run.coefficients
    extra = {
        "support": support.to_dict(),
        "frame": run.frame.to_dict(),
        "coefficients": {"cap": b, "side_minus": s_minus, "side_plus": s_plus},
        "predicted_limit": run.predicted.to_dict(),
        "measured_limit": run.report.candidates[-1].to_dict(),
    }
    return _finish(args.out, run.comparisons, extra)


def cmd_resistance(args):
    comps, extra = [], {}
    if args.solve2d is not None:
        sol = solve_2d(args.solve2d)
        M = sol.M
        target = 1 - M / 2 if M < 1 else 1 / (1 + M * M)
        comps.append(Comparison("F_2d", target, sol.F_value, 1e-12))
        extra["solve2d"] = sol.to_dict()
    if args.prop2 is not None:
        res = min_measure_search(args.prop2)
        comps.append(Comparison("measure_minimum", 1 / (2 * math.sqrt(2)), res.value, 1e-9))
        extra["prop2"] = res.to_dict()
    if args.improve:
        u, rim = plateau_pyramid(args.k, n=args.grid)
        ts = [args.t0 * args.ratio**i for i in range(args.count)]
        sw = improvement_sweep(u, rim, ts)
        extra["improve"] = {"slope": args.k, "predicted_limit": predicted_ratio_limit(args.k),
                            **sw.to_dict()}
        with open(args.out / "improvement.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "delta_F", "cap_area", "ratio"])
            for r in sw.rows:
                w.writerow([f"{v:.{SIG}g}" for v in r.to_row().values()])
        if args.k > 1:
            comps.append(Comparison("positive_delta_found", 1.0, float(sw.positive_found), 0.0))
        else:
            comps.append(at_most("abs_extrapolate", abs(sw.extrapolate), 0.02))
    if args.fn is not None:
        u = ConcaveGridFn.load(args.fn)
        rep = resistance(u)
        extra["resistance"] = rep.to_dict()
        print(f"F = {rep.F_value:.{SIG}g}")
        comps.append(at_most("F_minus_domain_area", rep.F_value - u.domain.area, 1e-12))
    if not extra:
        raise RidgecutError("resistance needs a function file, --solve2d, --prop2 or --improve")
    return _finish(args.out, comps, extra)


# ---------------------------------------------------------------------------


def _vec(s):
    return [float(v) for v in s.split(",")]


def build_parser():
    p = argparse.ArgumentParser(prog="ridgecut", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", type=Path, default=Path("ridgecut-out"))
        sp.add_argument("--t0", type=float, default=None)
        sp.add_argument("--ratio", type=float, default=None)
        sp.add_argument("--count", type=int, default=None)
        sp.add_argument("--t-list", default=None, help="comma-separated cut depths")
        sp.add_argument("--tol", type=float, default=1e-9)

    ex = sub.add_parser("example", help="reproduce worked example 1-4")
    ex.add_argument("id", type=int, choices=[1, 2, 3, 4])
    ex.add_argument("--n", type=int, default=None, help="polygon sides (examples 2, 3)")
    ex.add_argument("--lambda1", type=float, default=0.6)
    ex.add_argument("--t", type=float, default=1e-3, help="cut depth checked for example 3")
    ex.add_argument("--a", type=float, default=0.3)
    ex.add_argument("--b", type=float, default=0.7)
    ex.add_argument("--depth", type=int, default=12)
    common(ex)
    ex.set_defaults(func=cmd_example)

    cs = sub.add_parser("cut-sweep", help="sweep a mesh around a ridge point")
    cs.add_argument("mesh", type=Path)
    cs.add_argument("--r0", type=_vec, required=True)
    cs.add_argument("--e1", type=_vec, required=True)
    cs.add_argument("--e2", type=_vec, required=True)
    cs.add_argument("--e", type=_vec, default=None)
    cs.add_argument("--lambdas", type=_vec, default=None)
    cs.add_argument("--angular-tol", type=float, default=1e-9)
    cs.add_argument("--eta", type=float, default=1e-3)
    cs.add_argument("--expect-two-atom", action="store_true")
    cs.add_argument("--bl-tol", type=float, default=1e-3)
    common(cs)
    cs.set_defaults(func=cmd_cut_sweep)

    co = sub.add_parser("construct", help="build a body for a support set and sweep it")
    co.add_argument("k_spec", type=Path)
    co.add_argument("--slices", type=int, default=128)
    co.add_argument("--atoms", type=int, default=32)
    common(co)
    co.set_defaults(func=cmd_construct)

    rs = sub.add_parser("resistance", help="resistance evaluations")
    rs.add_argument("fn", type=Path, nargs="?", default=None, help="grid function JSON")
    rs.add_argument("--solve2d", type=float, default=None, metavar="M")
    rs.add_argument("--prop2", type=int, default=None, metavar="N")
    rs.add_argument("--improve", action="store_true")
    rs.add_argument("--k", type=float, default=2.0)
    rs.add_argument("--grid", type=int, default=512)
    common(rs)
    rs.set_defaults(func=cmd_resistance)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    # per-command schedule defaults: (t0, ratio, count); None keeps the library default
    t0, ratio, count = {"resistance": (0.1, 0.8, 10), "construct": (0.02, 0.5, 8)}.get(
        args.command, (None, 0.5, 14))
    args.t0 = t0 if args.t0 is None else args.t0
    args.ratio = ratio if args.ratio is None else args.ratio
    args.count = count if args.count is None else args.count
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except BadFrame as err:
        print(f"error: {err}", file=sys.stderr)
        if err.classification is not None:
            print(f"classification: {err.classification}", file=sys.stderr)
        return 1
    except (RidgecutError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
