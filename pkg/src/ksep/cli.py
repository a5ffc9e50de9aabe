"""Command-line front end.

Exit codes: 0 success (whatever the verdict), 1 configuration error,
2 I/O or matrix-file error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import closedform, criteria, observables
from .mtx import MatrixFileError, read_state
from .qstate import DIM_CAP_ENV, Dims, ghz_noise_family, validate, w_noise_family

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

FAMILIES = {"ghz-noise": ghz_noise_family, "w-noise": w_noise_family}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_k_range(text: str) -> list[int]:
    """``"2"`` or ``"2..4"`` (inclusive)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(text)]
    except ValueError:
        raise ConfigError(f"bad k range {text!r}; use K or A..B") from None
    if not ks:
        raise ConfigError(f"empty k range {text!r}")
    return ks


def parse_p_grid(text: str) -> list[float]:
    """``"0.3"``, ``"0.1,0.2"`` or ``"start..end:count"`` with inclusive endpoints."""
    try:
        if ".." in text:
            span, _, count = text.partition(":")
            start, end = (float(x) for x in span.split("..", 1))
            num = int(count) if count else 101
            if num < 1:
                raise ValueError
            grid = np.linspace(start, end, num).tolist()
        else:
            grid = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad p grid {text!r}; use P, P1,P2,... or START..END:COUNT") from None
    if any(not 0.0 <= p <= 1.0 for p in grid):
        raise ConfigError(f"p values must lie in [0, 1], got {text!r}")
    return grid


def _family(args):
    if args.family is None:
        raise ConfigError("--family is required")
    if args.n is None or args.d is None:
        raise ConfigError("--family needs -n and -d")
    return FAMILIES[args.family](args.n, args.d)


def _load_state(args):
    if args.input is not None:
        if args.family is not None:
            raise ConfigError("give either --input or --family, not both")
        return read_state(args.input)
    family = _family(args)
    if args.p is None:
        raise ConfigError("--family needs -p")
    if not 0.0 <= args.p <= 1.0:
        raise ConfigError(f"p must lie in [0, 1], got {args.p}")
    return family.state(args.p)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _print_table(rows: list[dict], out) -> None:
    if not rows:
        return
    keys = list(rows[0])
    cells = [[_fmt(r[k]) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    print("  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip(), file=out)
    for c in cells:
        print("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip(), file=out)


def _emit(rows: list[dict], args, out, extra: dict | None = None) -> None:
    if args.json:
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        print(json.dumps(payload, indent=2, default=_json_default), file=out)
        return
    if extra:
        for key, value in extra.items():
            print(f"{key}: {_fmt(value)}", file=out)
    _print_table(rows, out)


def _json_default(x):
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def cmd_evaluate(args, out) -> int:
    rho = _load_state(args)
    ks = parse_k_range(args.k) if args.k else list(range(2, rho.n + 1))
    crit = args.criterion.upper()
    try:
        reports = [criteria.evaluate(rho, crit, k) for k in ks]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit([r.as_dict() for r in reports], args, out, {"dims": list(rho.dims)})
    return EXIT_OK


def cmd_validate(args, out) -> int:
    rho = _load_state(args)
    report = validate(rho)
    row = {
        "hermiticity_deviation": report.hermiticity_deviation,
        "trace_deviation": report.trace_deviation,
        "min_eigenvalue": report.min_eigenvalue,
        "passed": report.passed,
    }
    _emit([row], args, out, {"dims": list(rho.dims)})
    return EXIT_OK


def _figure_csv(rows, direct: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["p", "k", "value", "detected"] + (["direct", "abs_diff"] if direct else [])
    writer.writerow(header)

    def cell(v: float) -> str:
        return "undetectable" if np.isinf(v) else repr(float(v))

    for row in rows:
        line = [repr(row.p), row.k, cell(row.value), "true" if row.detected else "false"]
        if direct:
            both_inf = np.isinf(row.value) and np.isinf(row.direct)
            diff = 0.0 if both_inf else abs(row.value - row.direct)
            line += [cell(row.direct), cell(diff)]
        writer.writerow(line)
    return buf.getvalue()


def cmd_figure(args, out) -> int:
    family = _family(args)
    ks = parse_k_range(args.k) if args.k else list(range(2, family.n + 1))
    for k in ks:
        if not 2 <= k <= family.n:
            raise ConfigError(f"k must satisfy 2 <= k <= {family.n}, got {k}")
    grid = parse_p_grid(args.p_grid)
    rows = closedform.figure_data(family, ks, grid, direct=args.direct)
    text = _figure_csv(rows, args.direct)
    if args.output is None:
        out.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_threshold(args, out) -> int:
    family = _family(args)
    natural = closedform.natural_criterion(family)
    crit = (args.criterion or natural).upper()
    ks = parse_k_range(args.k) if args.k else list(range(2, family.n + 1))
    rows = []
    for k in ks:
        try:
            bisect = criteria.noise_threshold(family, crit, k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        analytic = closedform.family_threshold(family, k) if crit == natural else None
        diff = None
        if analytic is not None and analytic.p_star is not None and bisect.p_star is not None:
            diff = abs(analytic.p_star - bisect.p_star)
        rows.append(
            {
                "k": k,
                "analytic": analytic.p_star if analytic and analytic.p_star is not None else "n/a",
                "exact": str(analytic.exact) if analytic and analytic.exact is not None else "n/a",
                "bisection": bisect.p_star if bisect.p_star is not None else bisect.status,
                "difference": diff if diff is not None else "n/a",
                "violated_side": bisect.violated_side,
            }
        )
    _emit(rows, args, out, {"family": family.family, "criterion": crit, "parameter": family.parameter_meaning})
    return EXIT_OK


def _observable_dims(args) -> Dims:
    if args.dims:
        try:
            return Dims(tuple(int(x) for x in args.dims.split(",")))
        except ValueError as exc:
            raise ConfigError(f"bad --dims {args.dims!r}: {exc}") from None
    if args.n is None or args.d is None:
        raise ConfigError("observables needs -n and -d (or --dims)")
    return Dims.uniform(args.n, args.d)


def cmd_observables(args, out) -> int:
    dims = _observable_dims(args)
    crit = args.criterion.upper()
    n = dims.n
    if crit == criteria.C1:
        elements = observables.count_criterion1_elements(n)
        count = observables.count_criterion1_observables(n)
    elif crit == criteria.C2:
        if not dims.is_uniform:
            raise ConfigError("criterion C2 requires equal local dimensions")
        elements = observables.count_criterion2_elements(n, dims[0])
        count = observables.count_criterion2_observables(n, dims[0])
    else:
        raise ConfigError(f"unknown criterion {args.criterion!r}")
    extra = {
        "dims": list(dims),
        "criterion": crit,
        "elements": elements,
        "observables": count,
        "total_elements": dims.total**2,
        "tomography": observables.tomography_count(dims),
    }
    rows = []
    if args.verify:
        settings = observables.verify_ghz_settings(dims)
        contracts = observables.verify_expectation_contracts(dims, samples=args.samples)
        plan = observables.criterion1_plan(dims) if crit == criteria.C1 else observables.criterion2_plan(n, dims[0])
        distinct = observables.count_distinct(plan)
        rows = [
            {"check": "settings_identity", "deviation": max(settings.deviation_Q, settings.deviation_Qtilde),
             "tolerance": settings.tol, "passed": settings.passed},
            {"check": "expectation_contracts", "deviation": contracts.max_deviation,
             "tolerance": contracts.tol, "passed": contracts.passed},
            {"check": "constructed_observables", "deviation": float(abs(distinct - count)),
             "tolerance": 0.0, "passed": distinct == count},
        ]
        extra["verified"] = all(r["passed"] for r in rows)
    _emit(rows, args, out, extra)
    return EXIT_OK


def _add_state_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("-n", type=int, help="number of subsystems")
    p.add_argument("-d", type=int, help="local dimension")
    p.add_argument("-p", type=float, help="family parameter (GHZ weight or W noise weight)")
    p.add_argument("--input", type=Path, help="Matrix Market density-matrix file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ksep", description="Non-k-separability criteria for GHZ/W-class qudit states.")
    parser.add_argument("--dim-cap", type=int, help=f"total-dimension cap (overrides ${DIM_CAP_ENV})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evaluate", help="evaluate a criterion for each k")
    _add_state_source(p)
    p.add_argument("--criterion", choices=["c1", "c2", "C1", "C2"], default="c1")
    p.add_argument("--k", help="K or A..B (default 2..n)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="check Hermiticity, trace and positivity")
    _add_state_source(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figure", help="write detection-function data as CSV")
    p.add_argument("--family", choices=sorted(FAMILIES), required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--k", help="K or A..B (default 2..n)")
    p.add_argument("--p", dest="p_grid", default="0.01..0.99:99", help="START..END:COUNT or P1,P2,...")
    p.add_argument("--direct", action="store_true", help="also recompute values from the matrix")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("threshold", help="analytic and bisection thresholds per k")
    p.add_argument("--family", choices=sorted(FAMILIES), required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--criterion", choices=["c1", "c2", "C1", "C2"])
    p.add_argument("--k", help="K or A..B (default 2..n)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("observables", help="measurement resources for a criterion")
    p.add_argument("-n", type=int)
    p.add_argument("-d", type=int)
    p.add_argument("--dims", help="comma-separated local dimensions (criterion c1)")
    p.add_argument("--criterion", choices=["c1", "c2", "C1", "C2"], default="c1")
    p.add_argument("--verify", action="store_true", help="run the observable verification checks")
    p.add_argument("--samples", type=int, default=100, help="random states for --verify")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_observables)
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.dim_cap is not None:
        os.environ[DIM_CAP_ENV] = str(args.dim_cap)
    try:
        return args.func(args, out)
    except MatrixFileError as exc:
        print(f"ksep: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"ksep: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"ksep: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
