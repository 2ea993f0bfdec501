"""Command-line front end.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 discretization
failure, 5 a study missed its tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

from .errors import InputError, KakeyaLabError

EXIT_OK = 0
EXIT_TOLERANCE = 5
THREADS_ENV = "KAKEYA_LAB_THREADS"


# --- argument helpers ---------------------------------------------------------


def _eccentricity(text: str) -> float:
    N = _float(text)
    if not N > 1:
        raise argparse.ArgumentTypeError(f"N must exceed 1, got {text}")
    return N


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def _positive(text: str) -> float:
    v = _float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _orientations(text: str) -> int:
    try:
        K = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if K < 8:
        raise argparse.ArgumentTypeError(f"need at least 8 orientations, got {K}")
    return K


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _N_list(text: str) -> list[float]:
    values = _float_list(text)
    if not values or any(not v > 1 for v in values):
        raise argparse.ArgumentTypeError(f"every N must exceed 1: {text!r}")
    return values


def _load_exponent(source: str):
    """Inline JSON (starting with ``{``) or the path of a JSON recipe file."""
    from .exponent import from_recipe

    if source.lstrip().startswith("{"):
        return from_recipe(source)
    path = Path(source)
    if not path.exists():
        raise InputError(f"exponent recipe not found: {source}")
    return from_recipe(path.read_text(), base_dir=path.parent)


def _write_rows(path: Path, header: list[str], row: list) -> None:
    path.write_text(",".join(header) + "\n" + ",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _default_out(grid: str, suffix: str) -> Path:
    p = Path(grid)
    return p.with_name(p.stem + suffix)


# --- commands -------------------------------------------------------------------


def cmd_norm(args) -> int:
    from .field import read_grid
    from .vnorm import luxemburg_norm

    f = read_grid(args.grid, args.format)
    p = _load_exponent(args.exponent)
    value = luxemburg_norm(f, p, tol=args.tol, boundary="warn")
    print(f"norm={value:.12g}")
    out = Path(args.out) if args.out else _default_out(args.grid, ".norm.csv")
    _write_rows(out, ["norm", "tol"], [value, args.tol])
    return EXIT_OK


def cmd_modular(args) -> int:
    from .field import read_grid
    from .vnorm import modular

    f = read_grid(args.grid, args.format)
    p = _load_exponent(args.exponent)
    res = modular(f, p, args.lam)
    print(f"modular={res.value:.12g}")
    if not res.finite:
        print("modular is infinite in floating point", file=sys.stderr)
    out = Path(args.out) if args.out else _default_out(args.grid, ".modular.csv")
    _write_rows(out, ["modular", "lambda", "finite"], [res.value, args.lam, int(res.finite)])
    return EXIT_OK


def _basis(args, f):
    from .maximal import BasisDiscretization, default_basis

    if args.scales:
        K = args.K if args.K is not None else max(8, math.ceil(4 * args.N))
        return BasisDiscretization.uniform(K, args.scales)
    return default_basis(f.domain, args.N, args.K, args.L_min, args.L_max)


def cmd_maximal(args) -> int:
    from .field import SamplingRule, read_grid, write_grid
    from .maximal import hl_maximal, kakeya_fast, kakeya_oracle, linearize

    f = read_grid(args.grid, args.format)
    rule = SamplingRule(args.spacing)
    if args.engine == "hl":
        out = hl_maximal(f)
    else:
        if args.N is None:
            raise InputError(f"engine {args.engine} needs --N")
        disc = _basis(args, f)
        if args.engine == "oracle":
            out = kakeya_oracle(f, args.N, disc, rule)
        elif args.engine == "tk":
            if args.k is None:
                raise InputError("engine tk needs --k")
            plan, out = linearize(f, args.N, args.k, disc, args.plan, args.seed, rule)
            print(f"cubes={len(plan.selection)}")
        else:
            out = kakeya_fast(f, args.N, disc, mode=args.engine, rule=rule)
    target = Path(args.out) if args.out else _default_out(args.grid, f".{args.engine}" + Path(args.grid).suffix)
    fmt = args.format or ("csv" if Path(args.grid).suffix.lower() == ".csv" else "raw")
    write_grid(out, target, fmt)
    print(f"wrote {target}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .exponent import analyze

    p = _load_exponent(args.exponent)
    report = analyze(p, args.N, cap=args.cap, seed=args.seed)
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def _study_thm13(args):
    from .lab import thm13_scaling_study

    N = args.N or [16, 32, 64, 128, 256, 512]
    rep = thm13_scaling_study(args.s, args.t, args.p1, args.p2, N)
    eps = 1 / args.p1 - 1 / args.p2
    slope = rep.fit.slope
    ok_ratio = bool((rep.column("ratio") >= 0.98).all())
    ok = abs(slope - eps) <= args.slope_tol and ok_ratio
    return rep, ok, f"slope={slope:.6g} target={eps:.6g}+-{args.slope_tol:g} min_ratio={rep.column('ratio').min():.6g}"


def _study_eq11(args):
    from .lab import EQ11_FAMILY, eq11_constant_p_study

    N = args.N or [8, 16, 32, 64, 128, 256]
    family = args.family or EQ11_FAMILY
    rep = eq11_constant_p_study(args.p0, family, N, engine=args.engine)
    slope = rep.fit.slope
    return rep, slope <= args.max_slope, f"slope={slope:.6g} max={args.max_slope:g}"


def _study_thm15(args):
    from .exponent import two_square_exponent
    from .lab import THM15_FAMILY, thm15_bound_check

    p = _load_exponent(args.exponent) if args.exponent else two_square_exponent(args.s, args.t, args.p1, args.p2)
    N = args.N or [16, 32, 64, 128, 256]
    rep = thm15_bound_check(p, N, args.family or THM15_FAMILY, engine=args.engine)
    spread = rep.ratio_spread()
    return rep, spread <= args.max_spread, f"ratio_spread={spread:.6g} max={args.max_spread:g} slope={rep.fit.slope:.6g}"


def _study_lemma31(args):
    from .exponent import two_square_exponent
    from .lab import StudyReport, lemma31_check

    p = _load_exponent(args.exponent) if args.exponent else two_square_exponent(args.s, args.t, args.p1, args.p2)
    rep = StudyReport("lemma31", ("N", "value", "cN", "samples"), metadata={"exponent": p.to_recipe(), "seed": args.seed})
    ok = True
    for N in args.N or [64]:
        res = lemma31_check(p, N, n_samples=args.samples, seed=args.seed)
        rep.add(N, res.worst, res.cN, len(res.rectangles))
        ok &= res.passes()
    return rep, ok, f"worst_ratio={rep.values.max():.12g} max=1+1e-9"


STUDIES = {"thm13": _study_thm13, "eq11": _study_eq11, "thm15": _study_thm15, "lemma31": _study_lemma31}


def cmd_study(args) -> int:
    rep, ok, line = STUDIES[args.name](args)
    out = Path(args.out or f"{args.name}.csv")
    if args.emit == "plot-csv":
        rep.write_plot_csv(out)
    else:
        rep.write(out)
    if len(rep.rows) - rep.burn_in >= 2:
        f = rep.fit
        print(f"fit slope={f.slope:.6g} stderr={f.stderr:.3g}")
    print(f"{line} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_TOLERANCE


# --- parser ---------------------------------------------------------------------


def _grid_args(p):
    p.add_argument("--grid", required=True, help="grid file (CSV or raw float64) with a .meta.json sidecar")
    p.add_argument("--format", choices=["csv", "raw"], help="grid format (default: from the file suffix)")
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kakeya-lab", description="Variable-exponent norms and Kakeya maximal functions on grids."
    )
    parser.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="Luxemburg norm of a grid field")
    _grid_args(p)
    p.add_argument("--exponent", required=True, help="inline JSON recipe or path to one")
    p.add_argument("--tol", type=_positive, default=1e-10, help="relative bisection tolerance")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("modular", help="modular of a grid field at a given scale")
    _grid_args(p)
    p.add_argument("--exponent", required=True, help="inline JSON recipe or path to one")
    p.add_argument("--lam", type=_positive, default=1.0, help="scale lambda")
    p.set_defaults(func=cmd_modular)

    p = sub.add_parser("maximal", help="apply a maximal operator to a grid field")
    _grid_args(p)
    p.add_argument("--engine", choices=["oracle", "pruned", "rotation", "hl", "tk"], default="pruned")
    p.add_argument("--N", type=_eccentricity, help="eccentricity")
    p.add_argument("--K", type=_orientations, help="number of orientations (default ceil(4N))")
    p.add_argument("--scales", type=_float_list, help="explicit rectangle lengths, comma separated")
    p.add_argument("--L-min", dest="L_min", type=_positive, help="shortest length of the dyadic ladder")
    p.add_argument("--L-max", dest="L_max", type=_positive, help="longest length of the dyadic ladder")
    p.add_argument("--spacing", type=_positive, help="rectangle sample spacing (default half a cell)")
    p.add_argument("--k", type=int, help="dyadic generation for the tk engine")
    p.add_argument("--plan", choices=["greedy", "random"], default="greedy", help="rectangle choice for tk")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("analyze-exponent", help="regularity constants of an exponent")
    p.add_argument("--exponent", required=True, help="inline JSON recipe or path to one")
    p.add_argument("--N", type=_eccentricity, help="eccentricity for the N-dependent constants")
    p.add_argument("--cap", type=int, default=20_000_000, help="pair budget before subsampling")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here too")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("study", help="run a scaling study and check it against its tolerance")
    p.add_argument("name", choices=sorted(STUDIES))
    p.add_argument("--N", type=_N_list, help="comma-separated eccentricities")
    p.add_argument("--s", type=_positive, default=0.4, help="square side")
    p.add_argument("--t", type=_positive, default=0.9, help="distance between the square bottoms plus s")
    p.add_argument("--p1", type=_float, default=2.0)
    p.add_argument("--p2", type=_float, default=4.0)
    p.add_argument("--p0", type=_float, default=2.0, help="constant exponent for eq11")
    p.add_argument("--exponent", help="exponent recipe for thm15 and lemma31")
    p.add_argument("--family", type=lambda s: tuple(s.split(",")), help="witness names, comma separated")
    p.add_argument("--engine", choices=["oracle", "pruned", "rotation"], default="rotation")
    p.add_argument("--samples", type=int, default=500, help="rectangles for lemma31")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slope-tol", dest="slope_tol", type=_positive, default=0.05)
    p.add_argument("--max-slope", dest="max_slope", type=_float, default=0.1)
    p.add_argument("--max-spread", dest="max_spread", type=_positive, default=10.0)
    p.add_argument("--emit", choices=["csv", "plot-csv"], default="csv")
    p.add_argument("--out", help="report path (default <name>.csv)")
    p.set_defaults(func=cmd_study)
    return parser


def _set_threads(n: int | None) -> None:
    if n is None:
        env = os.environ.get(THREADS_ENV)
        if not env:
            return
        try:
            n = int(env)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise InputError(f"thread count must be positive, got {n}")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _show_warning
            return args.func(args)
    except KakeyaLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
