"""Command-line front end.

Every command writes its structured result as JSON, sequences as CSV, and a
``manifest.json`` echoing the resolved configuration into ``--out-dir``.
Failures of a mathematical hypothesis exit with status 3 and an error JSON
naming the failed condition.
"""
import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from gmpy2 import mpq

from . import __version__, linalg
from .errors import ConditionError, SizeGuardError
from .scalars import EXACT, FLOAT, format_part, parse_rational, parse_scalar, scalar_to_json

EXIT_OK, EXIT_INPUT, EXIT_CONDITION, EXIT_SIZE = 0, 2, 3, 4


def _threads():
    try:
        return max(1, int(os.environ.get("TRICONJ_THREADS", "1")))
    except ValueError:
        return 1


def _int_list(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _float_list(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _rat_list(s):
    return tuple(parse_rational(x) for x in s.split(",") if x.strip())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, type(mpq(0))):
        return format_part(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def parse_matrix(rows, mode=None):
    return linalg.as_matrix([[parse_scalar(x) for x in row] for row in rows], mode)


def matrix_to_json(M):
    return [[list(scalar_to_json(x)) for x in row] for row in np.asarray(M)]


def parse_matrix_rule(obj, mode=None):
    """``{"preperiod": [...], "period": [...]}`` or a plain list (periodic) of matrices."""
    from .sequences import EventuallyPeriodic
    if isinstance(obj, list):
        return EventuallyPeriodic([parse_matrix(M, mode) for M in obj])
    return EventuallyPeriodic([parse_matrix(M, mode) for M in obj["period"]],
                              [parse_matrix(M, mode) for M in obj.get("preperiod", [])])


def parse_vector_rule(obj, mode=None):
    from .sequences import EventuallyPeriodic

    def vec(v):
        return parse_matrix([v], mode)[0]
    if isinstance(obj, list):
        return EventuallyPeriodic([vec(v) for v in obj])
    return EventuallyPeriodic([vec(v) for v in obj["period"]], [vec(v) for v in obj.get("preperiod", [])])


class Output:
    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def json(self, name, obj):
        path = self.dir / name
        with open(path, "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.written.append(name)
        return path

    def csv(self, name, header, rows):
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([_jsonable(x) for x in r])
        self.written.append(name)
        return path


# ---------------------------------------------------------------------------
# commands


def cmd_conjugate(args, out):
    from .conjugacy import GermSequence, formal_conjugate
    f = GermSequence.from_json(read_json(args.input))
    if args.mode == FLOAT:
        f = f.to_mode(FLOAT)
    pair = formal_conjugate(f, m0=args.m0, K=args.K, horizon=args.horizon, tol=args.tol)
    out.json("conjugacy.json", pair.to_json())
    rows = [(n, k, format_part(v) if not isinstance(v, float) else v)
            for (n, k), v in sorted(pair.residual_report.items())]
    out.csv("residuals.csv", ["n", "k", "residual"], rows)
    return {"m0": pair.m0, "K": pair.K, "residuals_zero": pair.residuals_exact_zero(),
            "max_residual": pair.max_residual()}


def cmd_ord_check(args, out):
    from .conjugacy import GermSequence, check_ord
    f = GermSequence.from_json(read_json(args.input))
    lam = args.lam if args.lam is not None else f.decay.lam
    rep = check_ord(f.diag_rule(), lam, args.theta_grid, args.horizon)
    out.json("ord.json", rep.to_json())
    return {"verdict": rep.verdict, "witness": rep.to_json()["witness"]}


def cmd_control_solve(args, out):
    from .control import CocycleRule, solve_subexp, solve_with_control
    obj = read_json(args.input)
    mode = None if args.mode == EXACT else FLOAT
    A = CocycleRule(parse_matrix_rule(obj["A"], mode))
    b = parse_vector_rule(obj["b"], mode)
    if obj.get("V"):
        sol, vs = solve_with_control(A, b, [int(i) - 1 for i in obj["V"]], horizon=args.horizon, tol=args.tol)
    else:
        sol, vs = solve_subexp(A, b, horizon=args.horizon, tol=args.tol), None
    rows = []
    for n, u in enumerate(sol.u):
        rows.append([n] + [format_part(x) if not isinstance(x, complex) else abs(x) for x in u]
                    + [sol.tail_bound[n]])
    out.csv("solution.csv", ["n"] + [f"u{i + 1}" for i in range(len(sol.u[0]))] + ["tail_bound"], rows)
    res = {"closure": sol.closure, "rigorous": sol.rigorous,
           "u": [[list(scalar_to_json(x)) for x in u] for u in sol.u],
           "max_residual": max((float(r) for r in sol.residuals), default=0.0)}
    if vs is not None:
        res["v"] = [[list(scalar_to_json(x)) for x in v] for v in vs]
    out.json("solution.json", res)
    return {"closure": sol.closure, "horizon": sol.horizon}


def cmd_norm_bound(args, out):
    from .conjop import quoz_bound
    from .jets import HomogeneousMap, norms
    obj = read_json(args.input)
    if "terms" in obj:
        s = norms(HomogeneousMap.from_json(obj), sampling=args.sampling)
        out.json("norms.json", s.to_json())
        return s.to_json()
    mats = [parse_matrix(M) for M in obj["L"]]
    cert = quoz_bound(mats, int(obj["k"]))
    out.json("quoz.json", cert.to_json())
    if not cert.holds:
        raise ConditionError("quotient norm exceeds the explicit bound", condition="quoz", **cert.to_json())
    return {"holds": cert.holds, "quotient_norm": cert.quotient_norm, "explicit_bound": cert.explicit_bound}


def _svil_one(seed):
    from .conjop import conjugacy_matrix, svil_expansion
    from .instances import random_homogeneous, random_lower
    from .jets import HomogeneousMap
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    k = int(rng.integers(1, 4))
    ell = int(rng.integers(1, 5))
    Ls = [random_lower(d, rng) for _ in range(ell)]
    p = random_homogeneous(d, k, rng)
    prod_ = Ls[0]
    for L in Ls[1:]:
        prod_ = L @ prod_
    want = HomogeneousMap.from_vector(d, k, conjugacy_matrix(prod_, k) @ p.to_vector())
    got = svil_expansion(Ls, p)
    return {"seed": seed, "d": d, "k": k, "ell": ell, "exact_match": got == want}


def cmd_svil_check(args, out):
    seeds = [args.seed * 100003 + j for j in range(args.count)]
    with ThreadPoolExecutor(_threads()) as pool:
        rows = list(pool.map(_svil_one, seeds))
    out.csv("svil.csv", ["seed", "d", "k", "ell", "exact_match"],
            [[r["seed"], r["d"], r["k"], r["ell"], r["exact_match"]] for r in rows])
    bad = [r for r in rows if not r["exact_match"]]
    if bad:
        raise ConditionError(f"{len(bad)} expansion mismatches", condition="svil", seeds=[r["seed"] for r in bad])
    return {"instances": len(rows), "mismatches": 0}


def cmd_spectral(args, out):
    from .conjugacy import spectral_bound
    if args.input:
        rule = parse_matrix_rule(read_json(args.input), FLOAT)
    else:
        rule = [np.eye(args.d, dtype=complex) * args.lam]
    res = spectral_bound(rule, args.k, args.K_trunc, args.horizon, lam=args.lam, mu=args.mu)
    out.json("spectral.json", res)
    if not res["holds"]:
        raise ConditionError("spectral estimate exceeds lam^(k+1) mu", condition="spectral", **res)
    return {k: res[k] for k in ("rho_estimate", "analytic_bound", "holds")}


def cmd_triangularize(args, out):
    from .conjugacy import cocycle_triangularize
    from .conjugacy.cocycle import random_unitary
    rng = np.random.default_rng(args.seed)
    if args.input:
        rule = parse_matrix_rule(read_json(args.input), FLOAT)
    else:
        rule = [rng.standard_normal((args.d, args.d)) + 1j * rng.standard_normal((args.d, args.d))
                for _ in range(args.horizon)]
    U0 = random_unitary(np.asarray(rule[0]).shape[0], rng) if args.random_u0 else None
    tri = cocycle_triangularize(rule, U0, args.horizon)
    diag = tri.abs_diagonals()
    out.csv("diagonals.csv", ["n"] + [f"abs_l{j + 1}" for j in range(diag.shape[1])],
            [[n] + list(row) for n, row in enumerate(diag)])
    res = {"unitarity_defect": tri.unitarity_defect, "lyapunov": tri.lyapunov().tolist()}
    out.json("triangularize.json", res)
    return res


def cmd_basin_sample(args, out):
    from .sequences import EventuallyPeriodic
    from .triangular import SpecialTriangularAuto, basin_sample
    obj = read_json(args.input)
    items = obj if isinstance(obj, list) else obj["period"]
    pre = [] if isinstance(obj, list) else obj.get("preperiod", [])
    rule = EventuallyPeriodic([SpecialTriangularAuto.from_json(g).to_mode(FLOAT) for g in items],
                              [SpecialTriangularAuto.from_json(g).to_mode(FLOAT) for g in pre])
    d = rule[0].d
    rng = np.random.default_rng(args.seed)
    Z = (rng.uniform(-1, 1, (args.points, d)) + 1j * rng.uniform(-1, 1, (args.points, d))) * args.radius
    chunks = np.array_split(Z, _threads())
    with ThreadPoolExecutor(_threads()) as pool:
        parts = list(pool.map(lambda c: basin_sample(rule, c, args.steps) if len(c) else [], chunks))
    rows = [r for p in parts for r in p]
    out.csv("basin.csv", list(rows[0]), [list(r.values()) for r in rows])
    entered = sum(1 for r in rows if r["steps"] >= 0)
    return {"points": len(rows), "entered": entered}


def cmd_counterexample(args, out):
    from .conjugacy import counterexample_section4
    rep = counterexample_section4(args.schedule, args.u0, args.horizon)
    header = ["n"] + [f"abs_u[u0={format_part(u)}]" for u in rep.u0_values]
    n_max = len(rep.sequences[0])
    out.csv("coefficients.csv", header,
            [[n] + [format_part(abs(s[n])) for s in rep.sequences] for n in range(n_max)])
    res = rep.to_json()
    res["verdict"] = "not-subexponential" if rep.all_flagged else "inconclusive"
    out.json("counterexample.json", res)
    return {"verdict": res["verdict"], "growth_ok": rep.growth_ok}


def cmd_remark12(args, out):
    from .control import remark12_demo
    rep = remark12_demo(args.schedule, args.u0)
    header = ["n"] + [f"u[u0={format_part(mpq(u))}]" for u in rep.u0_values]
    n_max = len(rep.trajectories[0])
    out.csv("remark12.csv", header, [[n] + [format_part(t[n]) for t in rep.trajectories] for n in range(n_max)])
    res = {"schedule": list(rep.schedule), "halving_ok": all(rep.halving_checks),
           "doubling_ok": all(rep.doubling_checks), "bound_ok": rep.bound_ok, "rates": rep.rates}
    out.json("remark12.json", res)
    return res


COMMANDS = {
    "conjugate": cmd_conjugate,
    "ord-check": cmd_ord_check,
    "control-solve": cmd_control_solve,
    "norm-bound": cmd_norm_bound,
    "svil-check": cmd_svil_check,
    "spectral": cmd_spectral,
    "triangularize": cmd_triangularize,
    "basin-sample": cmd_basin_sample,
    "counterexample": cmd_counterexample,
    "remark12": cmd_remark12,
}


def build_parser():
    p = argparse.ArgumentParser("triconj", description="Triangular normal forms for germ sequences.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", default=".", help="directory for JSON/CSV outputs")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    c = common(sub.add_parser("conjugate", help="formal conjugacy of a germ sequence"))
    c.add_argument("input")
    c.add_argument("--K", type=int, default=None)
    c.add_argument("--m0", type=int, default=None)
    c.add_argument("--horizon", type=int, default=30)
    c.add_argument("--mode", choices=[EXACT, FLOAT], default=EXACT)
    c.add_argument("--tol", type=float, default=1e-12)

    c = common(sub.add_parser("ord-check", help="diagonal ordering condition"))
    c.add_argument("input")
    c.add_argument("--lam", type=float, default=None)
    c.add_argument("--horizon", type=int, default=40)
    c.add_argument("--theta-grid", type=_float_list, default=(1.05, 1.1, 1.25, 1.5, 2.0))

    c = common(sub.add_parser("control-solve", help="subexponential solution of a forced recursion"))
    c.add_argument("input")
    c.add_argument("--horizon", type=int, default=30)
    c.add_argument("--mode", choices=[EXACT, FLOAT], default=EXACT)
    c.add_argument("--tol", type=float, default=1e-12)

    c = common(sub.add_parser("norm-bound", help="norm sandwich or quotient certificate"))
    c.add_argument("input")
    c.add_argument("--sampling", type=int, default=64)

    c = common(sub.add_parser("svil-check", help="randomized audit of the word expansion"))
    c.add_argument("--count", type=int, default=100)

    c = common(sub.add_parser("spectral", help="spectral radius of the high-degree shift operator"))
    c.add_argument("--input", default=None)
    c.add_argument("--d", type=int, default=1)
    c.add_argument("--lam", type=float, default=0.5)
    c.add_argument("--mu", type=float, default=None)
    c.add_argument("--k", type=int, default=2)
    c.add_argument("--K-trunc", dest="K_trunc", type=int, default=None)
    c.add_argument("--horizon", type=int, default=30)

    c = common(sub.add_parser("triangularize", help="unitary triangularization of a cocycle"))
    c.add_argument("--input", default=None)
    c.add_argument("--d", type=int, default=3)
    c.add_argument("--horizon", type=int, default=50)
    c.add_argument("--random-u0", action="store_true")

    c = common(sub.add_parser("basin-sample", help="escape-time table of a triangular rule"))
    c.add_argument("input")
    c.add_argument("--points", type=int, default=200)
    c.add_argument("--radius", type=float, default=1e3)
    c.add_argument("--steps", type=int, default=200)

    c = common(sub.add_parser("counterexample", help="switching counterexample growth"))
    c.add_argument("--schedule", type=_int_list, default=(1, 3, 9, 27, 81))
    c.add_argument("--u0", type=_rat_list, default=None)
    c.add_argument("--horizon", type=int, default=None)

    c = common(sub.add_parser("remark12", help="switching affine example"))
    c.add_argument("--schedule", type=_int_list, default=(1, 2, 6, 24))
    c.add_argument("--u0", type=_rat_list, default=(mpq(0), mpq(1, 2), mpq(1), mpq(2), mpq(-1)))
    return p


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    np.random.seed(args.seed)
    out = Output(args.out_dir)
    config = {k: v for k, v in vars(args).items()}
    config["threads"] = _threads()
    manifest = {"version": __version__, "command": args.command, "config": config}
    status, summary, error = EXIT_OK, None, None
    try:
        summary = COMMANDS[args.command](args, out)
    except SizeGuardError as exc:
        status, error = EXIT_SIZE, exc.to_json()
    except ConditionError as exc:
        status, error = EXIT_CONDITION, exc.to_json()
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        status, error = EXIT_INPUT, {"error": type(exc).__name__, "message": str(exc), "condition": "input"}
    if error is not None:
        out.json("error.json", error)
        print(json.dumps(_jsonable(error), sort_keys=True), file=sys.stderr)
    else:
        print(json.dumps(_jsonable(summary), sort_keys=True))
    manifest["status"] = status
    manifest["outputs"] = list(out.written)
    out.json("manifest.json", manifest)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
