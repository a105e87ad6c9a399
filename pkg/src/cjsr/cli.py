"""Command-line front end.

Commands: validate, bounds, certify, report, lift. Exit codes are part
of the interface: 0 success or feasible, 1 input error, 2 infeasible,
3 unknown or unverifiable, 4 enumeration guard tripped. All JSON output
carries schema_version; CSV column names and order are frozen (see the
module constants) so downstream parsers can rely on them.
"""

import argparse
import csv
import io
import json
import os
import sys
import warnings

from .automaton import DEFAULT_PATH_CAP
from .certify import cjsr_bounds, gamma_star, gamma_star_pathdep
from .errors import (
    AutomatonError,
    CjsrError,
    DimensionMismatch,
    ExplosionGuard,
    SystemFileError,
)
from .growth import growth_bounds
from .lmi import FeasibilityStatus, SolverOptions, solve_multinorm, solve_pathdep
from .sysfile import SCHEMA_VERSION, load_system, save_system, system_to_dict
from .system import lift

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_UNKNOWN = 3
EXIT_GUARD = 4

REPORT_COLUMNS = (
    "T",
    "method",
    "upper",
    "lower",
    "guaranteed_eps",
    "num_forms",
    "wall_time",
    "status",
)
BOUNDS_COLUMNS = ("quantity", "t", "value", "witness")
METHODS = ("lift-multinorm", "path-dependent")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_output(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_table(columns, rows):
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [
        max(len(col), *(len(r[i]) for r in cells)) if cells else len(col)
        for i, col in enumerate(columns)
    ]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _render_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _witness_json(path):
    if path is None:
        return None
    return [list(e) for e in path.edges]


def cmd_validate(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        system = load_system(args.file)
    aut = system.automaton
    lines = [
        f"valid: {args.file}",
        f"dim {system.dim}, labels {aut.num_labels}, nodes {aut.num_nodes}, "
        f"edges {len(aut.edges)}",
    ]
    lines.extend(f"warning: {w.message}" for w in caught)
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_bounds(args):
    system = load_system(args.file)
    gb = growth_bounds(
        system, args.tmax, cycle_max_len=args.cycles, cap=args.path_cap
    )
    witness = gb.cycle_witness
    if args.format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "rho_t": {str(t): v for t, v in sorted(gb.rho_t_table.items())},
            "upper_from_rho": gb.upper_from_rho,
            "cycle_lower": gb.cycle_lower,
            "cycle_witness": _witness_json(witness),
        }
        _write_output(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    rows = [("rho_t", t, v, "") for t, v in sorted(gb.rho_t_table.items())]
    wit_str = "" if witness is None else json.dumps(
        _witness_json(witness), separators=(",", ":")
    )
    wit_len = "" if witness is None else witness.length
    rows.append(("cycle_lower", wit_len, gb.cycle_lower, wit_str))
    render = _render_csv if args.format == "csv" else _render_table
    _write_output(render(BOUNDS_COLUMNS, rows), args.out)
    return EXIT_OK


def _certificate_payload(cert):
    if cert is None:
        return {}
    if hasattr(cert, "memory"):
        forms = [
            {"node": node, "path": [list(e) for e in edges], "form": f.tolist()}
            for (node, edges), f in sorted(cert.forms.items())
        ]
        return {
            "memory": cert.memory,
            "slack": cert.slack,
            "normalization": cert.normalization,
            "forms": forms,
        }
    forms = [
        {"node": i + 1, "form": f.tolist()} for i, f in enumerate(cert.forms)
    ]
    return {
        "slack": cert.slack,
        "normalization": cert.normalization,
        "forms": forms,
    }


def cmd_certify(args):
    if args.T < 1:
        raise ValueError("--T must be >= 1")
    system = load_system(args.file)
    opts = SolverOptions(tol_feas=args.tol_feas)
    cap = args.path_cap

    if args.method == "lift-multinorm":
        lifted = lift(system, args.T, cap=cap)
        if args.gamma is not None:
            if args.gamma <= 0:
                raise ValueError("--gamma must be positive")
            out = solve_multinorm(lifted, args.gamma**args.T, opts=opts)
            status, cert, gamma = out.status, out.certificate, args.gamma
            best_slack = out.best_slack
        else:
            res = gamma_star(lifted, tol_bisect=args.tol_bisect, opts=opts, cap=cap)
            status, cert = FeasibilityStatus.FEASIBLE, res.certificate
            gamma = res.gamma_feasible ** (1.0 / args.T)
            best_slack = cert.slack
    else:
        memory = args.T - 1
        if args.gamma is not None:
            if args.gamma <= 0:
                raise ValueError("--gamma must be positive")
            out = solve_pathdep(system, memory, args.gamma, opts=opts, cap=cap)
            status, cert, gamma = out.status, out.certificate, args.gamma
            best_slack = out.best_slack
        else:
            res = gamma_star_pathdep(
                system, memory, tol_bisect=args.tol_bisect, opts=opts, cap=cap
            )
            status, cert = FeasibilityStatus.FEASIBLE, res.certificate
            gamma = res.gamma_feasible
            best_slack = cert.slack

    payload = {
        "schema_version": SCHEMA_VERSION,
        "status": status.value,
        "method": args.method,
        "T": args.T,
        "gamma": gamma,
        "best_slack": best_slack,
    }
    if cert is not None:
        payload["gamma_solved"] = cert.gamma
        payload.update(_certificate_payload(cert))
    _write_output(json.dumps(payload, indent=2) + "\n", args.out)
    if status is FeasibilityStatus.FEASIBLE:
        return EXIT_OK
    if status is FeasibilityStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_UNKNOWN


def cmd_report(args):
    if args.Tmax < 1:
        raise ValueError("--Tmax must be >= 1")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; known: {', '.join(METHODS)}")
    system = load_system(args.file)
    opts = SolverOptions(tol_feas=args.tol_feas)

    rows = []
    for T in range(1, args.Tmax + 1):
        for method in methods:
            try:
                est = cjsr_bounds(
                    system,
                    T=T,
                    method=method,
                    tol_bisect=args.tol_bisect,
                    opts=opts,
                    cap=args.path_cap,
                )
            except ExplosionGuard:
                rows.append((T, method, None, None, None, None, None, "skipped"))
                continue
            rows.append(
                (
                    T,
                    method,
                    est.upper,
                    est.lower,
                    est.guaranteed_eps,
                    est.num_forms,
                    est.wall_time,
                    "ok",
                )
            )

    if args.format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "rows": [dict(zip(REPORT_COLUMNS, row)) for row in rows],
        }
        _write_output(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    if args.format == "csv":
        _write_output(_render_csv(REPORT_COLUMNS, rows), args.out)
        return EXIT_OK
    text = _render_table(REPORT_COLUMNS, rows)
    pairs = sorted(
        (r[6], r[4]) for r in rows if r[7] == "ok"
    )
    if pairs:
        text += "\naccuracy vs time\n"
        text += _render_table(
            ("wall_time", "guaranteed_eps"), [(t, e) for t, e in pairs]
        )
    _write_output(text, args.out)
    return EXIT_OK


def cmd_lift(args):
    if args.T < 1:
        raise ValueError("--T must be >= 1")
    system = load_system(args.file)
    lifted = lift(system, args.T, cap=args.path_cap)
    plain = lifted.as_system
    extra = {
        "lift_depth": args.T,
        "word_table": [list(w) for w in lifted.words],
    }
    if args.out:
        save_system(plain, args.out, extra=extra)
    else:
        data = system_to_dict(plain)
        data.update(extra)
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; 2 means
    infeasible here, so remap to the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser(cap_default):
    parser = _Parser(
        prog="cjsr",
        description="Certified stability bounds for constrained switching systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, fmt=True):
        p.add_argument("file", help="system description JSON file")
        p.add_argument("--out", default=None, help="write output to this path")
        if fmt:
            p.add_argument(
                "--format",
                choices=("table", "csv", "json"),
                default="table",
                help="output format (default table)",
            )

    def add_cap(p):
        p.add_argument(
            "--path-cap",
            type=int,
            default=cap_default,
            help="path enumeration guard (env CJSR_PATH_CAP overrides default)",
        )

    def add_tols(p):
        p.add_argument("--tol-bisect", type=float, default=1e-3)
        p.add_argument("--tol-feas", type=float, default=1e-7)

    p = sub.add_parser("validate", help="parse and validate a system file")
    add_common(p, fmt=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", help="growth table and cycle lower bound")
    add_common(p)
    p.add_argument("--tmax", type=int, default=6, help="largest horizon for the growth table")
    p.add_argument("--cycles", type=int, default=None, help="max cycle length (default 2|V|)")
    add_cap(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("certify", help="solve for a certificate, emit JSON")
    add_common(p, fmt=False)
    p.add_argument("--gamma", type=float, default=None, help="contraction rate per step; bisect if omitted")
    p.add_argument("--T", type=int, default=1, help="lift depth / memory+1")
    p.add_argument("--method", choices=METHODS, default="lift-multinorm")
    add_tols(p)
    add_cap(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("report", help="bounds sweep over T and methods")
    add_common(p)
    p.add_argument("--Tmax", type=int, default=4)
    p.add_argument("--methods", default=",".join(METHODS), help="comma-separated method list")
    add_tols(p)
    add_cap(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("lift", help="write the lifted system as a system file")
    add_common(p, fmt=False)
    p.add_argument("--T", type=int, required=True, help="lift depth")
    add_cap(p)
    p.set_defaults(func=cmd_lift)

    return parser


def main(argv=None):
    raw_cap = os.environ.get("CJSR_PATH_CAP")
    if raw_cap is None:
        cap_default = DEFAULT_PATH_CAP
    else:
        try:
            cap_default = int(raw_cap)
        except ValueError:
            print("cjsr: error: CJSR_PATH_CAP must be an integer", file=sys.stderr)
            return EXIT_INPUT
    parser = _build_parser(cap_default)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ExplosionGuard as exc:
        print(f"cjsr: error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (SystemFileError, DimensionMismatch, AutomatonError, ValueError) as exc:
        print(f"cjsr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CjsrError as exc:
        print(f"cjsr: error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
