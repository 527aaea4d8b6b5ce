"""Command-line driver.

    connlab symprod     --config FILE [--fields X,Y] [--point "x1,x2;v1,v2"] [--kinds U1,U3]
    connlab verify      --config FILE [--suite lemmas|bch|transport|all]
    connlab invariance  --config FILE [--connection NAME] [--distribution NAME] | --catalog
    connlab convergence --config FILE [--target ID] [--levels N] [--t0 T]

Exit codes: 0 pass, 1 fail, 2 indeterminate, 64 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .config import ConfigError, load
from .geometry import GeometryError
from .suites import (SUITES, TARGETS, catalog_invariance_report, convergence_report,
                     invariance_report, symprod_report, verify_report)

EXIT_PASS, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _names(s: str) -> list[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _point(s: str) -> tuple[list[float], list[float]]:
    try:
        base, fiber = s.split(";")
        return [float(p) for p in base.split(",")], [float(p) for p in fiber.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"point {s!r} is not 'x1,..,xn;v1,..,vn'") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON problem definition")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (defaults to probes.seed in the config)")
    common.add_argument("--tolerance", type=float, default=None)
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--connection", metavar="NAME")

    p = _Parser(prog="connlab", description="Numerical checks for affine connections.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("symprod", parents=[common], help="symmetric-product estimator table")
    s.add_argument("--fields", type=_names, help="two field names, comma separated")
    s.add_argument("--point", type=_point, help='tangent point "x1,..,xn;v1,..,vn"')
    s.add_argument("--kinds", type=_names, help="subset of U1,U2,U3,U4,U3Z,U4Z")

    v = sub.add_parser("verify", parents=[common], help="property suites over random draws")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")

    i = sub.add_parser("invariance", parents=[common], help="geodesic-invariance harness")
    i.add_argument("--distribution", metavar="NAME")
    i.add_argument("--catalog", action="store_true",
                   help="run the shipped (connection, distribution) cases; no config needed")

    c = sub.add_parser("convergence", parents=[common], help="order measurement over a t ladder")
    c.add_argument("--target", choices=TARGETS)
    c.add_argument("--fields", type=_names)
    c.add_argument("--point", type=_point)
    c.add_argument("--levels", type=int)
    c.add_argument("--t0", type=float)
    return p


# ---------------------------------------------------------------------------
# Formatting


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.6e}"
    if isinstance(x, list):
        return "(" + ", ".join(_fmt(e) if not isinstance(e, float) else f"{e:.6g}"
                               for e in x) + ")"
    return str(x)


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, list):
        return " ".join(_csv_cell(e) for e in x)
    return str(x)


def _rows_key(report: dict) -> str:
    return "checks" if report["command"] == "verify" else "rows"


_TABLE_COLUMNS = {
    "symprod": ("kind", "estimate", "reference", "abs_error", "rel_error", "base_drift",
                "ratio_t_t2", "ratio_t2_t4", "passed"),
    "verify": ("connection", "suite", "check", "draws", "worst", "bound", "passed"),
    "invariance": ("connection", "distribution", "geodesic_deviation", "symprod_residual",
                   "nabla_xx_residual", "geodesic_invariant", "symprod_closed",
                   "nabla_xx_closed", "agree"),
    "convergence": ("t", "abs_error", "ratio", "richardson_error", "richardson_ratio"),
}


def render_table(report: dict) -> str:
    cols = _TABLE_COLUMNS[report["command"]]
    rows = report[_rows_key(report)]
    cells = [[_fmt(r.get(k)) for k in cols] for r in rows]
    if report["command"] == "invariance":
        for cell, r in zip(cells, rows):
            for j, k in enumerate(cols):
                if k in ("geodesic_invariant", "symprod_closed", "nabla_xx_closed") \
                        and r[k] is None:
                    cell[j] = "indeterminate"
    widths = [max(len(c), *(len(row[j]) for row in cells)) for j, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    lines.append("")
    lines.extend(_summary(report))
    return "\n".join(lines) + "\n"


def _summary(report: dict) -> list[str]:
    cmd = report["command"]
    out = []
    if cmd == "symprod":
        out.append(f"connection {report['connection']}  fields {','.join(report['fields'])}  "
                   f"t {report['t']:g}  richardson {_fmt(report['richardson'])}")
    elif cmd == "convergence":
        out.append(f"target {report['target']}  fitted order {_fmt(report['fitted_order'])}  "
                   f"richardson order {_fmt(report['richardson_order'])}  "
                   f"expected {report['expected_order']:g}")
    elif cmd == "invariance":
        for r in report["rows"]:
            if r["agree"]:
                agree = "three-way agreement"
            elif r["indeterminate"]:
                agree = "indeterminate (residual inside the margin band)"
            else:
                agree = "DISAGREEMENT"
            line = f"{r['distribution']}: {agree}"
            if r["counterexample"] is not None:
                line += f"; counterexample probe {_fmt(r['counterexample'])}"
            if r["skipped"]:
                line += f"; {r['skipped']} probes left the chart"
            out.append(line)
    elif cmd == "verify":
        for r in report["checks"]:
            if r["error"]:
                out.append(f"{r['check']}: {r['error']}")
    status = {True: "PASS", False: "FAIL", None: "INDETERMINATE"}[report["passed"]]
    out.append(f"result: {status}")
    return out


def render_csv(report: dict) -> str:
    rows = report[_rows_key(report)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if report["command"] == "convergence":
        cols = ["t", "abs_error", "ratio", "richardson_error", "richardson_ratio"]
    else:
        cols = list(rows[0].keys()) if rows else []
    w.writerow(cols)
    for r in rows:
        w.writerow([_csv_cell(r.get(k)) for k in cols])
    if report["command"] == "convergence":
        buf.write(f"# fitted_order,{_csv_cell(report['fitted_order'])}\n")
        buf.write(f"# richardson_order,{_csv_cell(report['richardson_order'])}\n")
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "csv":
        return render_csv(report)
    return render_table(report)


def exit_code(report: dict) -> int:
    return {True: EXIT_PASS, False: EXIT_FAIL, None: EXIT_INDETERMINATE}[report["passed"]]


# ---------------------------------------------------------------------------


def run(args) -> dict:
    if args.command == "invariance" and args.catalog:
        seed = 0 if args.seed is None else args.seed
        return catalog_invariance_report(seed, args.tolerance or 1e-5)
    if not args.config:
        raise ConfigError(f"{args.command} needs --config")
    cfg = load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    if args.command == "symprod":
        return symprod_report(cfg, seed, args.fields, args.point, args.kinds,
                              args.connection, 1e-3 if args.tolerance is None else args.tolerance)
    if args.command == "verify":
        return verify_report(cfg, args.suite, seed, args.connection, args.tolerance)
    if args.command == "invariance":
        return invariance_report(cfg, seed, args.connection, args.distribution, args.tolerance)
    return convergence_report(cfg, seed, args.target, args.fields, args.point,
                              args.connection, args.levels, args.t0)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run(args)
    except ConfigError as exc:
        print(f"connlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, ValueError) as exc:
        print(f"connlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
