"""Command-line front end.

Subcommands: catalog | eval | classify | solve sce-m2 | solve csc-m2 |
solve csc-m4 | solve sce-local | probe ke-m4.  Jobs can come from a JSON
file (--job) with individual flags overriding its fields.  Reports are JSON
on stdout (always embedding the fully resolved job); grids go to --out as
CSV with a fixed column order, 17-significant-digit floats and LF endings.

Exit codes: 0 success, 2 validation error, 3 solver failure, 4 I/O error.
Errors are emitted as single-line JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

from .classify import DEFAULT_TOL, classify as run_classify, csc_residual, sce_residual
from .curvature import CurvaturePoint, chern_scalar, evaluate_grid
from .solvers import (
    ProfileSolution,
    probe_ke_m4,
    solve_csc_m2,
    solve_csc_m4,
    solve_sce_local,
    solve_sce_m2,
)
from .catalog import (
    FamilyParams,
    SpaceRecord,
    TABLE,
    custom_space,
    grassmannian,
    make_params,
    real_quadric,
    so_even_mod_u,
    sp_mod_u,
    table_as_json,
    E6_SPACE,
    E7_SPACE,
)
from .errors import CohomlabError, SolverFailure, ValidationError
from .numerics import linspace
from .profiles import MetricProfile, make_grid, profile_from_descriptor

_SPACE_MAKERS = {
    "grassmannian": lambda d: grassmannian(int(d["k1"]), int(d["k2"])),
    "SU(k1+k2)/S(U(k1)xU(k2))": lambda d: grassmannian(int(d["k1"]), int(d["k2"])),
    "SO(2k)/U(k)": lambda d: so_even_mod_u(int(d["k"])),
    "Sp(k)/U(k)": lambda d: sp_mod_u(int(d["k"])),
    "SO(k+2)/(SO(2)xSO(k))": lambda d: real_quadric(int(d["k"])),
    "E6/(SO(2).Spin(10))": lambda d: E6_SPACE,
    "E7/(SO(2).E6)": lambda d: E7_SPACE,
}


def _params_from_job(job: dict) -> FamilyParams:
    pd = job.get("params")
    if not isinstance(pd, dict):
        raise ValidationError("job needs a 'params' object")
    n = pd.get("n", 1)
    family = pd.get("family")
    if family is None:
        raise ValidationError("params needs 'family' in 1..4")
    if "space" in pd:
        label = pd["space"]
        maker = _SPACE_MAKERS.get(label)
        if maker is None:
            raise ValidationError(f"unknown space label {label!r}")
        space = maker(pd)
    elif "m" in pd and "p" in pd:
        space = custom_space(int(pd["m"]), int(pd["p"]))
    else:
        raise ValidationError("params needs either 'space' or raw 'm' and 'p'")
    return make_params(space, int(n), int(family))


def _grid_from_job(job: dict, profile: MetricProfile) -> list[float]:
    gd = job.get("grid") or {}
    count = int(gd.get("count", 401))
    if count < 2:
        raise ValidationError("grid count must be >= 2")
    return make_grid(profile, count, gd.get("r0"), gd.get("r1"))


def _format_float(x: float) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return repr(x)
    return f"{x:.17g}"


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    try:
        out = sys.stdout if path == "-" else open(path, "w", newline="")
        try:
            out.write(",".join(header) + "\n")
            for row in rows:
                out.write(",".join(_format_float(v) for v in row) + "\n")
        finally:
            if out is not sys.stdout:
                out.close()
    except OSError as err:
        raise _IOFailure(str(err))


class _IOFailure(Exception):
    pass


def _emit(report: dict) -> None:
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_job(args: argparse.Namespace) -> dict:
    job: dict = {}
    if getattr(args, "job", None):
        try:
            with open(args.job) as fh:
                job = json.load(fh)
        except OSError as err:
            raise _IOFailure(str(err))
        except json.JSONDecodeError as err:
            raise ValidationError(f"bad job JSON: {err}")
        if not isinstance(job, dict):
            raise ValidationError("job JSON must be an object")
    # flag overrides
    pd = dict(job.get("params") or {})
    for key in ("m", "p", "n", "family"):
        v = getattr(args, key, None)
        if v is not None:
            pd[key] = v
    if getattr(args, "space", None):
        pd["space"] = args.space
    for key in ("k1", "k2", "kk"):
        v = getattr(args, key, None)
        if v is not None:
            pd["k" if key == "kk" else key] = v
    if pd:
        job["params"] = pd
    prof = dict(job.get("profile") or {})
    if getattr(args, "builtin", None):
        prof = {"kind": "builtin", "name": args.builtin}
        if getattr(args, "k", None) is not None:
            prof["k"] = args.k
    if getattr(args, "f", None) and getattr(args, "h", None):
        if not getattr(args, "domain", None):
            raise ValidationError("closed-form profiles need --domain A B")
        prof = {"kind": "closed_form", "f": args.f, "h": args.h, "domain": list(args.domain)}
    if getattr(args, "k", None) is not None and prof.get("kind") == "builtin":
        prof["k"] = args.k
    if prof:
        job["profile"] = prof
    if getattr(args, "grid", None):
        r0, r1, count = args.grid
        job["grid"] = {"r0": float(r0), "r1": float(r1), "count": int(count)}
    for key in ("c", "a", "r_length", "k_max", "tol", "threads", "r_max", "horizon"):
        v = getattr(args, key, None)
        if v is not None:
            job[key] = v
    if getattr(args, "lam", None) is not None:
        job["lambda"] = args.lam
    if getattr(args, "a_grid", None):
        job["a_grid"] = list(args.a_grid)
    if getattr(args, "lambda_grid", None):
        job["lambda_grid"] = list(args.lambda_grid)
    return job


def _cmd_catalog(args) -> int:
    _emit({"table": table_as_json()})
    return 0


def _cmd_eval(args) -> int:
    job = _load_job(args)
    params = _params_from_job(job)
    profile = profile_from_descriptor(job.get("profile") or {}, params)
    grid = _grid_from_job(job, profile)
    threads = int(job.get("threads", 1))
    points = evaluate_grid(params, profile, grid, threads=threads)
    if args.out:
        _write_csv(args.out, CurvaturePoint.CSV_FIELDS, (p.csv_row() for p in points))
    _emit(
        {
            "job": job,
            "rows": len(points),
            "out": args.out,
            "columns": list(CurvaturePoint.CSV_FIELDS),
        }
    )
    return 0


def _cmd_classify(args) -> int:
    job = _load_job(args)
    params = _params_from_job(job)
    profile = profile_from_descriptor(job.get("profile") or {}, params)
    grid = _grid_from_job(job, profile)
    tol = float(job.get("tol", DEFAULT_TOL))
    report = run_classify(
        params, profile, grid, tol=tol, threads=int(job.get("threads", 1))
    )
    _emit({"job": job, "report": report.as_dict()})
    return 0


def _solution_report(args, job: dict, sol: ProfileSolution) -> int:
    params = sol.params
    grid = make_grid(sol.profile, int((job.get("grid") or {}).get("count", 201)))
    rows = []
    for r in grid:
        j = sol.profile.jets(r, check_positivity=False)
        rows.append((r, j.f0, j.h0, chern_scalar(params, j)))
    if args.out:
        _write_csv(args.out, ("r", "f", "h", "scal_ch"), rows)
    meta = sol.as_dict()
    meta["residuals"] = {
        "sce": sce_residual(params, sol.profile, grid),
        "csc_about_estimate": run_classify(params, sol.profile, grid).csc_residual,
    }
    if sol.c is not None:
        meta["residuals"]["csc"] = csc_residual(params, sol.profile, grid, sol.c)
    _emit({"job": job, "solution": meta, "out": args.out})
    return 0


def _cmd_solve(args) -> int:
    job = _load_job(args)
    params = _params_from_job(job)
    what = args.problem
    if what == "sce-m2":
        sol = solve_sce_m2(params, r_length=float(job.get("r_length", 10.0)))
    elif what == "csc-m2":
        if "c" not in job:
            raise ValidationError("solve csc-m2 needs --c (<= 0)")
        sol = solve_csc_m2(
            params, float(job["c"]), r_length=float(job.get("r_length", 10.0))
        )
    elif what == "csc-m4":
        sol = solve_csc_m4(params, k_max=float(job.get("k_max", 50.0)))
    elif what == "sce-local":
        if "a" not in job or "lambda" not in job:
            raise ValidationError("solve sce-local needs --a and --lambda")
        lam_raw = job["lambda"]
        try:
            lam = float(lam_raw)
        except (TypeError, ValueError):
            lam = lam_raw
        sol = solve_sce_local(
            params, float(job["a"]), lam, r_max=float(job.get("r_max", 1.0))
        )
    else:
        raise ValidationError(f"unknown solve problem {what!r}")
    return _solution_report(args, job, sol)


def _cmd_probe(args) -> int:
    job = _load_job(args)
    params = _params_from_job(job)
    if args.problem != "ke-m4":
        raise ValidationError(f"unknown probe {args.problem!r}")
    ag = job.get("a_grid") or [0.5, 2.0, 20]
    lg = job.get("lambda_grid") or [0.5, 15.0, 20]
    if len(ag) != 3 or len(lg) != 3:
        raise ValidationError("grids are lo hi count triples")
    a_grid = linspace(float(ag[0]), float(ag[1]), int(ag[2]))
    l_grid = linspace(float(lg[0]), float(lg[1]), int(lg[2]))
    report = probe_ke_m4(
        params, a_grid, l_grid, horizon=float(job.get("horizon", 60.0))
    )
    out = report.as_dict()
    if not args.cells:
        out.pop("cells")
    _emit({"job": job, "probe": out})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cohomlab",
        description="Curvature, classification and solution families for the "
        "cohomogeneity-one bundle metrics g(f, h).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_params(p):
        p.add_argument("--job", help="job JSON file; flags override its fields")
        p.add_argument("--m", type=int, help="complex dimension m >= 2")
        p.add_argument("--p", type=int, help="Fano index divisor p >= 1")
        p.add_argument("--n", type=int, help="twist n >= 1 (default 1)")
        p.add_argument("--family", type=int, help="family tag 1..4")
        p.add_argument("--space", help="catalog space label")
        p.add_argument("--k1", type=int, help="Grassmannian k1")
        p.add_argument("--k2", type=int, help="Grassmannian k2")
        p.add_argument("--kk", type=int, help="series parameter k for SO/Sp rows")
        p.add_argument("--threads", type=int, help="worker pool size (default 1)")

    def add_profile(p):
        p.add_argument("--builtin", help="builtin profile name")
        p.add_argument("--k", type=float, help="builtin profile parameter k")
        p.add_argument("--f", help="closed-form f(r)")
        p.add_argument("--h", help="closed-form h(r)")
        p.add_argument("--domain", nargs=2, type=float, metavar=("A", "B"))
        p.add_argument("--grid", nargs=3, metavar=("R0", "R1", "COUNT"))

    pc = sub.add_parser("catalog", help="print the base-space table as JSON")
    pc.set_defaults(fn=_cmd_catalog)

    pe = sub.add_parser("eval", help="evaluate curvature quantities on a grid (CSV)")
    add_params(pe)
    add_profile(pe)
    pe.add_argument("--out", help="CSV output path ('-' for stdout)")
    pe.set_defaults(fn=_cmd_eval)

    pl = sub.add_parser("classify", help="special-metric report as JSON")
    add_params(pl)
    add_profile(pl)
    pl.add_argument("--tol", type=float, help="flag tolerance (default 1e-8)")
    pl.set_defaults(fn=_cmd_classify)

    ps = sub.add_parser("solve", help="construct a solution family")
    ps.add_argument("problem", choices=["sce-m2", "csc-m2", "csc-m4", "sce-local"])
    add_params(ps)
    ps.add_argument("--c", type=float, help="target Chern scalar (csc-m2, <= 0)")
    ps.add_argument("--a", type=float, help="h(0) for sce-local")
    ps.add_argument("--lambda", dest="lam", help="prescribed scalar (expression or number)")
    ps.add_argument("--r-length", dest="r_length", type=float, help="target domain length")
    ps.add_argument("--r-max", dest="r_max", type=float, help="sce-local horizon")
    ps.add_argument("--k-max", dest="k_max", type=float, help="csc-m4 scan bound")
    ps.add_argument("--grid", nargs=3, metavar=("R0", "R1", "COUNT"))
    ps.add_argument("--out", help="CSV sample output path")
    ps.set_defaults(fn=_cmd_solve)

    pp = sub.add_parser("probe", help="run a nonexistence probe")
    pp.add_argument("problem", choices=["ke-m4"])
    add_params(pp)
    pp.add_argument("--a-grid", dest="a_grid", nargs=3, metavar=("LO", "HI", "N"))
    pp.add_argument("--lambda-grid", dest="lambda_grid", nargs=3, metavar=("LO", "HI", "N"))
    pp.add_argument("--horizon", type=float, help="integration horizon per cell")
    pp.add_argument("--cells", action="store_true", help="include per-cell records")
    pp.set_defaults(fn=_cmd_probe)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.fn(args)
    except ValidationError as err:
        print(json.dumps({"error": "validation", "message": str(err)}), file=sys.stderr)
        return 2
    except SolverFailure as err:
        print(json.dumps({"error": "solver", "message": str(err)}), file=sys.stderr)
        return 3
    except _IOFailure as err:
        print(json.dumps({"error": "io", "message": str(err)}), file=sys.stderr)
        return 4
    except CohomlabError as err:
        print(json.dumps({"error": "validation", "message": str(err)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
