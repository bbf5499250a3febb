"""Command line front end.

Subcommands: constants, count, chimney, horoball, equidist, locate,
meansq, verify.  Every run echoes its fully resolved configuration in the
JSON output; CSV tables carry a single header row and use '.' decimals
and '\\n' line endings.  Exit codes: 0 success, 1 check failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import acceptance, equidist, moebius, orbits, randlat
from .latcount import CountingError, EllipsoidSpec, count_full, error_terms
from .quadform import GeometryError, QuadForm, constants

USAGE_ERROR = 2
CHECK_FAILURE = 1


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("HOROCOUNT_SEED")
    return int(env) if env else 0


def _load_gram(spec: str, dim: int) -> QuadForm:
    if spec == "identity":
        return QuadForm.identity(dim)
    try:
        mat = np.loadtxt(spec, ndmin=2)
    except OSError as exc:
        raise CountingError(f"cannot read gram file {spec!r}: {exc}") from exc
    except ValueError as exc:
        raise CountingError(f"malformed gram file {spec!r}: {exc}") from exc
    if mat.shape != (dim, dim):
        raise CountingError(
            f"gram file {spec!r} has shape {mat.shape}, expected ({dim}, {dim})")
    return QuadForm.from_gram(mat)


def _emit_json(payload: dict, path: str | None):
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(header: str, rows: list[str], path: str | None):
    text = header + "\n" + "\n".join(rows) + ("\n" if rows else "")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------

def cmd_constants(args) -> int:
    c = constants(args.dim)
    payload = {
        "config": {"subcommand": "constants", "dim": args.dim},
        "d": c.d,
        "lambda": c.lam,
        "mu": c.mu,
        "alpha": c.alpha,
        "omega": c.omega,
        "zeta": c.zeta,
        "C_d": c.c_d,
        "kappa_d": c.kappa_d,
        "kappa_per_volume": c.kappa_per_volume,
        "T_d": c.t_d,
        "exponents": {
            "thm11": c.exponent_interval,
            "thm12": c.exponent_pointwise,
            "edwards": c.exponent_edwards,
            "rh": c.exponent_rh,
        },
    }
    _emit_json(payload, args.output)
    return 0


def cmd_count(args) -> int:
    form = _load_gram(args.gram, args.dim)
    spec = EllipsoidSpec(form, args.radius)
    mode = "exact" if args.exact else "auto"
    start = time.time()
    if args.primitive:
        res = error_terms(spec, mode=mode, threads=args.threads)
    else:
        res = count_full(spec, mode=mode, threads=args.threads)
        cst = constants(args.dim)
        res.e0 = res.n0 - cst.omega * args.radius ** args.dim
    elapsed_ms = 1000.0 * (time.time() - start)
    payload = {
        "config": {"subcommand": "count", "dim": args.dim, "gram": args.gram,
                   "radius": args.radius, "primitive": args.primitive,
                   "exact": args.exact, "threads": args.threads},
        "n0": res.n0,
        "n1": res.n1,
        "e0": res.e0,
        "e1": res.e1,
        "boundary_ambiguous": res.boundary_ambiguous,
        "mode": res.mode,
        "elapsed_ms": elapsed_ms,
    }
    _emit_json(payload, args.output)
    return 0


def _orbit_command(args, kind: str) -> int:
    form = _load_gram(args.gram, args.dim)
    t_values = np.linspace(args.tmin, args.tmax, args.steps)
    results = orbits.sweep(form, [float(t) for t in t_values], kind=kind,
                           sigma=args.sigma, threads=args.threads)
    header = "T,R,count,predicted,rel_error"
    rows = [f"{_fmt(r.T)},{_fmt(r.R)},{r.count},{_fmt(r.predicted)},{_fmt(r.rel_error)}"
            for r in results]
    _emit_csv(header, rows, args.output)
    series = [(r.T, r.rel_error) for r in results]
    try:
        fit = orbits.fit_error_exponent(series, envelope=args.envelope)
        fit_payload = {"slope": fit.slope, "intercept": fit.intercept,
                       "r2": fit.r2, "n_points": fit.n_points}
    except CountingError as exc:
        fit_payload = {"slope": None, "intercept": None, "r2": None,
                       "error": str(exc)}
    payload = {
        "config": {"subcommand": kind, "dim": args.dim, "gram": args.gram,
                   "tmin": args.tmin, "tmax": args.tmax, "steps": args.steps,
                   "envelope": args.envelope, "sigma": args.sigma,
                   "threads": args.threads, "output": args.output},
        **fit_payload,
        "theory_slope": orbits.theory_slope(args.dim),
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_chimney(args) -> int:
    return _orbit_command(args, "chimney")


def cmd_horoball(args) -> int:
    return _orbit_command(args, "horoball")


def cmd_equidist(args) -> int:
    if args.dim not in (2, 3):
        raise CountingError("equidist supports --dim 2 or 3")
    if args.profile == "indicator":
        profile = equidist.indicator_profile(args.support)
    else:
        profile = equidist.bump_profile(args.support, args.plateau)
    base_grid = tuple(int(x) for x in args.base_grid.split(","))
    if len(base_grid) != 2:
        raise CountingError("--base-grid expects nx,ny")
    t_values = [float(t) for t in np.linspace(args.tmin, args.tmax, args.steps)]
    averages = []
    for t in t_values:
        cutoff = None
        if args.alpha is not None:
            cutoff = max(equidist.CUTOFF_FLOOR, math.exp(args.alpha * t / math.sqrt(2.0)))
        q = equidist.QuadratureSpec(torus_grid=args.torus_grid, base_grid=base_grid,
                                    base_cutoff_height=cutoff)
        averages.append(equidist.horosphere_average(t, profile, q, d=args.dim))
    header = "t,value,target,err,quad_err"
    rows = [f"{_fmt(a.t)},{_fmt(a.value)},{_fmt(a.target)},{_fmt(a.err)},{_fmt(a.quad_error_estimate)}"
            for a in averages]
    _emit_csv(header, rows, args.output)
    try:
        fit = orbits.fit_error_exponent([(a.t, a.err) for a in averages], envelope=True)
        fit_payload = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
                       "n_points": fit.n_points}
    except CountingError as exc:
        fit_payload = {"slope": None, "error": str(exc)}
    cst = constants(args.dim)
    payload = {
        "config": {"subcommand": "equidist", "dim": args.dim, "profile": args.profile,
                   "support": args.support, "plateau": args.plateau,
                   "tmin": args.tmin, "tmax": args.tmax, "steps": args.steps,
                   "torus_grid": args.torus_grid, "base_grid": args.base_grid,
                   "alpha": args.alpha, "output": args.output},
        **fit_payload,
        "theory_slope_thm12": -cst.exponent_pointwise,
        "theory_slope_thm11": -cst.exponent_interval,
        "edwards_slope": -cst.exponent_edwards,
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_locate(args) -> int:
    try:
        data = np.loadtxt(args.series, delimiter=",", skiprows=args.skip_rows, ndmin=2)
    except (OSError, ValueError) as exc:
        raise CountingError(f"cannot read series file {args.series!r}: {exc}") from exc
    if data.shape[1] < 2:
        raise CountingError("series file needs two columns: t, g(t)")
    hits = equidist.good_t_locator(data[:, 0], data[:, 1], args.alpha, args.beta,
                                   args.eps, args.kappa, args.ctilde)
    payload = {
        "config": {"subcommand": "locate", "series": args.series, "alpha": args.alpha,
                   "beta": args.beta, "eps": args.eps, "kappa": args.kappa,
                   "ctilde": args.ctilde},
        "t0": equidist.locator_threshold_t0(args.alpha, args.beta, args.eps,
                                            args.kappa, args.ctilde),
        "n_hits": len(hits),
        "hits": hits,
    }
    _emit_json(payload, args.output)
    return 0


def cmd_meansq(args) -> int:
    rep = randlat.mean_square_check(args.dim, args.radius, args.samples,
                                    sampler=args.sampler, seed=args.seed,
                                    step_sigma=args.sigma, burn_in=args.burnin)
    payload = {
        "config": {"subcommand": "meansq", "dim": args.dim, "radius": args.radius,
                   "samples": args.samples, "sampler": args.sampler, "seed": args.seed,
                   "sigma": args.sigma, "burnin": args.burnin},
        "d": rep.d,
        "R": rep.radius,
        "n_samples": rep.n_samples,
        "mean_D2": rep.mean_d2,
        "std_error": rep.std_error,
        "bound": rep.bound,
        "mean_E1sq": rep.mean_e1sq,
        "bound_E1sq": rep.bound_e1sq,
        "passed": rep.passed,
        "degenerate": rep.degenerate,
    }
    _emit_json(payload, args.output)
    return 0 if rep.passed or rep.degenerate else CHECK_FAILURE


def cmd_verify(args) -> int:
    if args.target == "moebius":
        form = _load_gram(args.gram, args.dim)
        spec = EllipsoidSpec(form, args.radius)
        inv = moebius.verify_inversion(spec)
        rel = moebius.error_relation_check(spec)
        payload = {
            "config": {"subcommand": "verify", "target": "moebius", "dim": args.dim,
                       "gram": args.gram, "radius": args.radius},
            "shell_identities": {"ok": inv.ok, "levels_checked": inv.levels_checked,
                                 "first_violation": inv.first_violation},
            "error_relations": {"ok": rel.ok,
                                "residual_full_from_primitive": rel.residual_full_from_primitive,
                                "residual_primitive_from_full": rel.residual_primitive_from_full,
                                "budget": rel.budget},
            "passed": inv.ok and rel.ok,
        }
        _emit_json(payload, args.output)
        return 0 if payload["passed"] else CHECK_FAILURE
    results = acceptance.run(args.suite)
    ok = all(r.passed for r in results)
    return 0 if ok else CHECK_FAILURE


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horocount",
        description="Lattice point counting in ellipsoids and horospherical "
                    "equidistribution checks.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, seeded=False):
        p.add_argument("--output", default=None, help="write the primary table/JSON here")
        p.add_argument("--threads", type=int, default=1)
        if seeded:
            p.add_argument("--seed", type=int, default=None,
                           help="RNG seed (falls back to HOROCOUNT_SEED, then 0)")

    p = sub.add_parser("constants", help="named constants for a dimension")
    p.add_argument("--dim", type=int, required=True)
    common(p)
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("count", help="lattice points in a dilated ellipsoid")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--gram", default="identity", help="'identity' or a d x d text file")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--primitive", action="store_true")
    p.add_argument("--exact", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_count)

    for name, helptext in (("chimney", "orbit counting in truncated chimneys"),
                           ("horoball", "horosphere counting in balls")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--dim", type=int, required=True)
        p.add_argument("--gram", default="identity")
        p.add_argument("--tmin", type=float, required=True)
        p.add_argument("--tmax", type=float, required=True)
        p.add_argument("--steps", type=int, required=True)
        p.add_argument("--envelope", action="store_true")
        p.add_argument("--sigma", type=int, default=None,
                       help="stabilizer order (required for d >= 5 symmetric forms)")
        common(p)
        p.set_defaults(fn=cmd_chimney if name == "chimney" else cmd_horoball)

    p = sub.add_parser("equidist", help="horospherical averages over a t-grid")
    p.add_argument("--dim", type=int, required=True, choices=(2, 3))
    p.add_argument("--profile", choices=("indicator", "bump"), default="indicator")
    p.add_argument("--support", type=float, default=1.0)
    p.add_argument("--plateau", type=float, default=None)
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--torus-grid", type=int, default=101)
    p.add_argument("--base-grid", default="16,24")
    p.add_argument("--alpha", type=float, default=None,
                   help="cusp cutoff exponent for the d=3 base")
    common(p)
    p.set_defaults(fn=cmd_equidist)

    p = sub.add_parser("locate", help="good-t locator on a sampled series")
    p.add_argument("--series", required=True, help="CSV with columns t, g(t)")
    p.add_argument("--skip-rows", type=int, default=0)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--ctilde", type=float, required=True)
    common(p)
    p.set_defaults(fn=cmd_locate)

    p = sub.add_parser("meansq", help="mean-square discrepancy Monte Carlo")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--sampler", choices=("exact", "walk"), default="exact")
    p.add_argument("--sigma", type=float, default=0.5, help="walk step scale")
    p.add_argument("--burnin", type=int, default=200)
    common(p, seeded=True)
    p.set_defaults(fn=cmd_meansq)

    p = sub.add_parser("verify", help="run the acceptance suite or a targeted check")
    p.add_argument("target", nargs="?", choices=("suite", "moebius"), default="suite")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.add_argument("--dim", type=int, default=2, help="dimension for targeted checks")
    p.add_argument("--gram", default="identity")
    p.add_argument("--radius", type=float, default=10.0)
    common(p)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "seed"):
        args.seed = _resolve_seed(args.seed)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.fn(args)
    except (CountingError, GeometryError, equidist.EquidistError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
