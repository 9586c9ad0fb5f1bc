"""Command line entry point: ``dispbound <subcommand> ...``.

Every JSON document has the shape ``{"meta": {...}, "result": {...}}``; the
only field allowed to differ between identical runs is ``meta.timestamp``.
Exit codes: 0 success, 1 a checked property failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = "dispbound/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def _meta(args: argparse.Namespace) -> dict:
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "emit", "command")
    }
    return {
        "tool": "dispbound",
        "version": __version__,
        "schema": SCHEMA,
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.ndarray, set, frozenset)):
        return sorted(o.tolist()) if isinstance(o, (set, frozenset)) else o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _csv_cell(r.get(c)) for c in columns})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return v


def _emit(args, doc: dict, rows: list[dict] | None = None, columns: list[str] | None = None,
          stdout: bool = True) -> None:
    fmt = getattr(args, "format", "json")
    path = getattr(args, "emit", None)
    if path is not None and Path(path).suffix == ".csv":
        fmt = "csv"
    if fmt == "csv":
        if rows is None:
            raise UsageError(f"{args.command} has no CSV projection; use --format json")
        text = _csv_text(rows, columns)
    else:
        text = dumps(doc)
    if path is not None:
        Path(path).write_text(text)
    elif stdout:
        sys.stdout.write(text)


def _check_nk(args, max_k: int = 8) -> None:
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    if not 2 <= args.k <= max_k:
        raise UsageError(f"--k must lie in [2, {max_k}]")


# --- subcommands ----------------------------------------------------------

def cmd_relations(args) -> int:
    from .relations import load_or_enumerate, paper_check

    _check_nk(args)
    census = load_or_enumerate(args.n, args.k, args.cap)
    from .freegroup import enumerate_sphere

    records = [r.record() for r in census.relations]
    result = {
        "n": args.n,
        "k": args.k,
        "total": census.total,
        "enumeration_convention": enumerate_sphere(args.n, args.k).convention,
        "count_by_product_length": census.count_by_product_length,
        "relations": records,
    }
    code = EXIT_OK
    if args.paper_check:
        check = paper_check(census)
        result["paper_check"] = check
        if check.get("applicable") and check["diffs"]:
            code = EXIT_FAIL
    rows = [{**r, "S": r["S"]} for r in records]
    _emit(args, {"meta": _meta(args), "result": result}, rows, ["gamma", "s", "S", "j"])
    return code


def _load_point(spec: str, d: int):
    from .dispfun import SimplexPoint

    if spec == "uniform":
        return SimplexPoint.uniform(d)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"--point: no such file {spec}")
    data = json.loads(path.read_text())
    if isinstance(data, dict):
        data = data.get("x", data.get("x_star"))
    if not isinstance(data, list) or len(data) != d:
        raise UsageError(f"--point: expected a list of {d} coordinates")
    return SimplexPoint.from_array(data)


def cmd_family(args) -> int:
    from .dispfun import DomainError, family_for

    _check_nk(args)
    fam = family_for(args.n, args.k)
    try:
        x = _load_point(args.point, fam.d)
    except DomainError as e:
        raise UsageError(str(e)) from e
    vals = fam.values(x, "G")
    members = [
        {
            "row": r,
            "tag": f.tag,
            "gamma": f.gamma,
            "s": f.s,
            "target": f.target_index,
            "A": sorted(f.numerator_set),
            "value": float(v),
        }
        for r, (f, v) in enumerate(zip(fam.G_all, vals))
        if args.which == "G" or f.is_F
    ]
    F_val, F_ties = fam.eval_F(x)
    G_val, G_ties = fam.eval_G(x)
    result = {
        "n": args.n, "k": args.k, "d": fam.d,
        "point_renormalized": x.renormalized,
        "F": {"value": F_val, "ties": sorted(F_ties)},
        "G": {"value": G_val, "ties": sorted(G_ties)},
        "members": members,
    }
    _emit(args, {"meta": _meta(args), "result": result}, members,
          ["row", "tag", "gamma", "s", "target", "A", "value"])
    return EXIT_OK


def _solver_cfg(args):
    from .minimax import SolverConfig

    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    return SolverConfig(restarts=args.restarts, seed=args.seed, threads=args.threads,
                        start=args.start)


def cmd_minimize(args) -> int:
    from .dispfun import family_for
    from .minimax import minimize

    _check_nk(args, max_k=5)
    cfg = _solver_cfg(args)
    res = minimize(family_for(args.n, args.k), args.which, cfg)
    result = {"solver": cfg.to_dict(), **res.to_dict()}
    _emit(args, {"meta": _meta(args), "result": result})
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_verify(args) -> int:
    from .dispfun import family_for
    from .minimax import closed_form_alpha, minimize, verify_uniform_optimum
    from .relations import load_or_enumerate, paper_check

    _check_nk(args, max_k=5)
    cfg = _solver_cfg(args)
    fam = family_for(args.n, args.k)
    res = minimize(fam, "F", cfg)
    alpha = closed_form_alpha(args.n, args.k)
    gap = res.residuals["rel_gap_closed_form"]
    dev = res.residuals["max_dev_from_uniform"]
    uniform = dev < args.tol
    ok = gap < args.tol and uniform
    strata = verify_uniform_optimum(fam)
    ok &= strata["ok"]
    result = {
        "alpha_closed_form": alpha,
        "alpha_star": res.alpha_star,
        "rel_gap": gap,
        "max_dev_from_uniform": dev,
        "x_star_uniform": uniform,
        "uniform_strata": strata,
    }
    if args.paper_check:
        check = paper_check(load_or_enumerate(args.n, args.k))
        result["paper_check"] = check
        ok &= not (check.get("applicable") and check["diffs"])
    result["ok"] = bool(ok)
    where = "uniform" if uniform else "non-uniform"
    rel = "<" if gap < args.tol else ">="
    print(f"alpha={alpha}, x*={where}, gap{rel}{_short_float(args.tol)}")
    if args.emit:
        _emit(args, {"meta": _meta(args), "result": result})
    return EXIT_OK if ok else EXIT_FAIL


def _short_float(v: float) -> str:
    mant, exp = f"{v:e}".split("e")
    return f"{float(mant):g}e{int(exp)}"


def cmd_convexity(args) -> int:
    from .convexity import CF, CG, pd_scan, region_membership

    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if args.region in ("cf", "cg"):
        rep = pd_scan(CF if args.region == "cf" else CG, args.samples, args.seed)
        result = rep.to_dict()
        ok = rep.inside_all_pd
    else:
        from .dispfun import family_for
        from .minimax import SolverConfig, minimize

        if args.k < 2 or args.k > 4:
            raise UsageError("--k must lie in [2, 4] for --region cfi")
        fam = family_for(2, args.k)
        res = minimize(fam, "F", SolverConfig(seed=args.seed, threads=args.threads))
        result = {"k": args.k, "x_star_dev": res.residuals["max_dev_from_uniform"],
                  **region_membership(fam, res.x_star)}
        ok = result["all_inside"]
    result["ok"] = bool(ok)
    _emit(args, {"meta": _meta(args), "result": result})
    return EXIT_OK if ok else EXIT_FAIL


MARGIN_COLUMNS = ["seed", "z0", "D", "bound", "margin", "argmax_word"]


def cmd_hyperbolic(args) -> int:
    from .hyperbolic import SamplingError, SchottkyConfig, TrialConfig, run_trials

    if not 2 <= args.k <= 5:
        raise UsageError("--k must lie in [2, 5]")
    if args.trials < 1 or args.base_points < 1:
        raise UsageError("--trials and --base-points must be >= 1")
    if not 0 < args.margin_factor < 1:
        raise UsageError("--margin-factor must lie in (0, 1)")
    cfg = TrialConfig(k=args.k, trials=args.trials, seed=args.seed, base_points=args.base_points,
                      infimum=args.infimum, threads=args.threads,
                      schottky=SchottkyConfig(margin_factor=args.margin_factor))
    try:
        out = run_trials(cfg)
    except SamplingError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    result = {k: v for k, v in out.items() if k != "config"}
    _emit(args, {"meta": _meta(args), "result": result}, out["rows"], MARGIN_COLUMNS)
    print(f"k={args.k}: min margin {out['min_margin']:.6f} over {len(out['rows'])} points, "
          f"{out['violations']} violations", file=sys.stderr)
    return EXIT_OK if out["violations"] == 0 else EXIT_FAIL


def cmd_conjecture(args) -> int:
    from .dispfun import family_for
    from .freegroup import enumerate_sphere
    from .minimax import closed_form_alpha, uniqueness_probe

    _check_nk(args, max_k=4)
    cfg = _solver_cfg(args)
    if cfg.restarts < 10:
        raise UsageError("--restarts must be >= 10 for the uniqueness probe")
    probe = uniqueness_probe(family_for(args.n, args.k), cfg)
    res = probe.pop("result")
    alpha = closed_form_alpha(args.n, args.k)
    gap = abs(res.alpha_star - alpha) / alpha
    supported = probe["agree"] and gap < 1e-6
    result = {
        "n": args.n, "k": args.k, "d": res.x_star.d,
        "enumeration_convention": enumerate_sphere(args.n, args.k).convention,
        "closed_form": alpha,
        "alpha_star": res.alpha_star,
        "rel_gap": gap,
        **probe,
        "status": "conjecture-supported" if supported else "conjecture-not-supported",
    }
    _emit(args, {"meta": _meta(args), "result": result})
    print(f"{result['status']}: alpha*={res.alpha_star:.9g} vs {alpha}", file=sys.stderr)
    return EXIT_OK if supported else EXIT_FAIL


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispbound", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (results do not depend on this)")
    sub = p.add_subparsers(dest="command", required=True)

    def nk(sp, n=2, k=2):
        sp.add_argument("--n", type=int, default=n, help="rank of the free group")
        sp.add_argument("--k", type=int, default=k, help="sphere radius")

    def emit(sp, formats=True):
        sp.add_argument("--emit", metavar="PATH", help="write output here instead of stdout")
        if formats:
            sp.add_argument("--format", choices=["json", "csv"], default="json")

    def solver(sp, restarts=10):
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--restarts", type=int, default=restarts)
        sp.add_argument("--start", choices=["dirichlet", "facet"], default="dirichlet")

    sp = sub.add_parser("relations", help="enumerate group relations")
    nk(sp)
    emit(sp)
    sp.add_argument("--paper-check", action="store_true", help="diff against the golden tables")
    sp.add_argument("--cap", type=int, default=None, help="word cap for the enumeration")
    sp.set_defaults(func=cmd_relations)

    sp = sub.add_parser("family", help="evaluate the displacement family at a point")
    nk(sp)
    emit(sp)
    sp.add_argument("--point", default="uniform", help="'uniform' or a JSON file with a coordinate list")
    sp.add_argument("--which", choices=["F", "G"], default="G")
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("minimize", help="solve min over the simplex of max F or G")
    nk(sp)
    emit(sp, formats=False)
    solver(sp)
    sp.add_argument("--which", choices=["F", "G"], default="F")
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("verify", help="check the closed-form optimum")
    nk(sp)
    emit(sp, formats=False)
    solver(sp)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--paper-check", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("convexity", help="positive-definiteness scans and region membership")
    sp.add_argument("--region", choices=["cf", "cg", "cfi"], required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    emit(sp, formats=False)
    sp.set_defaults(func=cmd_convexity)

    sp = sub.add_parser("hyperbolic-test", help="displacement bound on Schottky pairs")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--base-points", type=int, default=10)
    sp.add_argument("--margin-factor", type=float, default=0.9)
    sp.add_argument("--infimum", action="store_true", help="also search for the minimizing base point")
    emit(sp)
    sp.set_defaults(func=cmd_hyperbolic)

    sp = sub.add_parser("conjecture", help="restart-agreement check against the rank-n closed form")
    nk(sp, n=3)
    emit(sp, formats=False)
    solver(sp)
    sp.set_defaults(func=cmd_conjecture)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    from .freegroup import EnumerationCapError

    try:
        return args.func(args)
    except (UsageError, EnumerationCapError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
