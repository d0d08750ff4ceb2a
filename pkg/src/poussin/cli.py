"""Command-line front end.

    poussin derive --source Schoenfeld --ctilde 0.25
    poussin tables --which III --format csv
    poussin verify --tilde-a 1 --tilde-c 0.25 --from 2 --to 101
    poussin xstar --tilde-a 0.5 --tilde-c 0.25 --x0 101
    poussin min-prefactor --tilde-c 0.25 --from 29 --to 149

Exit codes: 0 Holds/success, 1 Fails, 2 Inconclusive, 64 usage,
65 range beyond the sieve limit, 74 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import decimal
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import bounds
from .bounds import BoundFamily, derive_prefactor, exact, lookup, parse_threshold, peak_exponent
from .errors import DomainError, InconclusiveError, NotExtendable, RangeError
from .theta import get_table
from .verifier import FAST, RIGOROUS, EnvelopeFn, Status, check_range, find_x_star, min_prefactor, verify_parent

EXIT_OK, EXIT_FAILS, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_RANGE, EXIT_IO = 64, 65, 74
_VERDICT_EXIT = {Status.HOLDS: EXIT_OK, Status.FAILS: EXIT_FAILS, Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    sieve_limit: int = 10**8
    threads: int = 0
    precision_policy: str = FAST
    output_format: str = "text"

    def __post_init__(self):
        if self.sieve_limit < 2:
            raise CliError("--sieve-limit must be at least 2", EXIT_USAGE)
        if self.threads < 0:
            raise CliError("--threads must be nonnegative", EXIT_USAGE)

    def table(self, hi):
        need = max(2, math.ceil(float(hi)))
        if need > self.sieve_limit:
            raise CliError(f"range end {hi} exceeds the sieve limit {self.sieve_limit}", EXIT_RANGE)
        return get_table(need, threads=self.threads)


def sig10(value) -> str:
    with mpmath.workdps(bounds.WORK_DPS):
        return mpmath.nstr(bounds.to_mpf(value), 10)


def fmt_exact(q) -> str:
    """Terminating decimals print as decimals, anything else as p/q."""
    q = exact(q)
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        d = decimal.Decimal(q.numerator) / q.denominator
    if Fraction(d) == q:
        text = format(d.normalize(), "f")
        return text
    return str(q)


def _number(text: str) -> Fraction:
    try:
        return exact(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


# --- output -------------------------------------------------------------------


def emit(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(rows if len(rows) != 1 else rows[0], indent=2) + "\n")
    elif fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        if len(rows) == 1:
            width = max(len(k) for k in rows[0])
            for k, v in rows[0].items():
                out.write(f"{k:<{width}}  {'' if v is None else v}\n")
        else:
            cols = list(rows[0])
            cells = [[("" if r[c] is None else str(r[c])) for c in cols] for r in rows]
            widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
            out.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip() + "\n")
            for row in cells:
                out.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")


# --- commands -----------------------------------------------------------------


def _family_from_args(args) -> BoundFamily:
    if args.source:
        try:
            return lookup(args.source)
        except KeyError as exc:
            raise CliError(str(exc.args[0]), EXIT_USAGE)
    missing = [f"--{n}" for n in ("a", "b", "c") if getattr(args, n) is None]
    if missing:
        raise CliError(f"give --source or all of --a --b --c (missing {' '.join(missing)})", EXIT_USAGE)
    x0 = parse_threshold(args.x0) if getattr(args, "x0", None) else 2
    return BoundFamily(args.a, args.b, args.c, x0, "explicit")


def cmd_derive(args, cfg: RunConfig) -> tuple[list[dict], int]:
    family = _family_from_args(args)
    tilde_a = derive_prefactor(family, args.ctilde)
    peak = peak_exponent(family.b, family.c, args.ctilde) if exact(family.b) > 0 else None
    row = {
        "source": family.source,
        "a": str(family.a),
        "b": str(family.b),
        "c": str(family.c),
        "x0": str(family.x0),
        "ctilde": fmt_exact(args.ctilde),
        "tilde_a": mpmath.nstr(tilde_a, 30),
        "tilde_a_10": sig10(tilde_a),
        "tilde_a_ceil": int(mpmath.ceil(tilde_a)),
        "x_peak_log": None if peak is None else mpmath.nstr(peak, 15),
    }
    return [row], EXIT_OK


# (source, tilde_c, printed tilde_a, printed x_star)
TABLE_III = [
    ("Schoenfeld", "1/4", "0.3510691792", "59"),
    ("Trudgian", "1/4", "0.2748124978", "101"),
    ("Trudgian", "1/3", "0.4242102935", "59"),
    ("Fiori-Kadiri-Swidinsky", "1/2", "295", "2"),
    ("Johnston-Yang", "1/2", "385", "2"),
]
TABLE_IV = [
    (f"Johnston-Yang {t}", "1/2", a, t)
    for t, a in [
        ("exp(3000)", "357"), ("exp(4000)", "320"), ("exp(5000)", "295"), ("exp(6000)", "274"),
        ("exp(7000)", "263"), ("exp(8000)", "252"), ("exp(9000)", "244"), ("exp(10000)", "249"),
        ("exp(10^5)", "644"), ("exp(10^6)", "348"), ("exp(10^7)", "312"), ("exp(10^8)", "301"),
        ("exp(10^9)", "298"), ("exp(10^10)", "297"),
    ]
] + [
    (f"Johnston-Yang {t}", "1", a, t)
    for t, a in [
        ("exp(10^6)", "1642333"), ("exp(10^7)", "165152"), ("exp(10^8)", "101831"),
        ("exp(10^9)", "87551"), ("exp(10^10)", "83063"),
    ]
]
TABLE_FIELDS = ["source", "ctilde", "tilde_a_recomputed", "tilde_a_printed", "delta", "x_star_recomputed", "x_star_printed"]


def table_rows(which: str, cfg: RunConfig) -> list[dict]:
    """Recompute the derived-bound table III or IV from the catalog families."""
    spec = TABLE_III if which == "III" else TABLE_IV
    table = None
    if which == "III":
        top = max(lookup(src).x0 for src, *_ in spec)
        table = cfg.table(top)
    rows = []
    for source, ctilde, printed, x_star_printed in spec:
        family = lookup(source)
        tilde_a = derive_prefactor(family, ctilde)
        x_star = ""
        if table is not None:
            env = EnvelopeFn(exact(tilde_a), 0, ctilde)
            try:
                x_star = str(find_x_star(env, family.x0, table, cfg.threads, cfg.precision_policy))
            except NotExtendable as exc:
                x_star = str(exc.x_star)
        with mpmath.workdps(bounds.WORK_DPS):
            delta = tilde_a - mpmath.mpf(printed)
        rows.append(
            {
                "source": source,
                "ctilde": ctilde,
                "tilde_a_recomputed": sig10(tilde_a),
                "tilde_a_printed": printed,
                "delta": sig10(delta),
                "x_star_recomputed": x_star,
                "x_star_printed": x_star_printed,
            }
        )
    return rows


def cmd_tables(args, cfg):
    return table_rows(args.which, cfg), EXIT_OK


def cmd_catalog(args, cfg):
    rows = [dict(zip(["source", "a", "b", "c", "x0"], f.row())) for f in bounds.catalog()]
    return rows, EXIT_OK


def _check_range_args(lo, hi):
    if not lo < hi:
        raise CliError(f"empty range: --from {lo} must be below --to {hi}", EXIT_USAGE)


def cmd_verify(args, cfg):
    lo, hi = args.lo, args.hi
    _check_range_args(lo, hi)
    if args.tilde_a is not None:
        if args.tilde_c is None:
            raise CliError("--tilde-a needs --tilde-c", EXIT_USAGE)
        env = EnvelopeFn(args.tilde_a, 0, args.tilde_c)
        table = cfg.table(hi)
        out = check_range(env, lo, hi, table, cfg.threads, cfg.precision_policy)
        label = f"{fmt_exact(args.tilde_a)} x exp(-{fmt_exact(args.tilde_c)} sqrt(ln x))"
    else:
        family = _family_from_args(args)
        table = cfg.table(hi)
        out = verify_parent(family, lo, hi, table, cfg.threads, cfg.precision_policy)
        label = f"{family.source}: {family.a} x (ln x)^{family.b} exp(-{family.c} sqrt(ln x))"
    row = {"bound": label, "from": fmt_exact(lo), "to": fmt_exact(hi), **out.as_dict()}
    return [row], _VERDICT_EXIT[out.status]


def cmd_xstar(args, cfg):
    env = EnvelopeFn(args.tilde_a, 0, args.tilde_c)
    table = cfg.table(args.x0)
    flag = False
    try:
        x_star = find_x_star(env, args.x0, table, cfg.threads, cfg.precision_policy)
    except NotExtendable as exc:
        x_star, flag = exc.x_star, True
    row = {
        "x_star": x_star,
        "verified_interval": f"[{x_star}, {fmt_exact(args.x0)}]",
        "not_extendable": flag,
        "provenance": f"checked on [x_star, x0]; x >= {fmt_exact(args.x0)} is taken from the parent bound",
    }
    return [row], EXIT_OK


def cmd_min_prefactor(args, cfg):
    _check_range_args(args.lo, args.hi)
    table = cfg.table(args.hi)
    value = min_prefactor(args.tilde_c, args.lo, args.hi, table, cfg.threads, policy=cfg.precision_policy)
    row = {
        "tilde_c": fmt_exact(args.tilde_c),
        "from": fmt_exact(args.lo),
        "to": fmt_exact(args.hi),
        "min_tilde_a": repr(value),
        "guarantee": "Holds at min_tilde_a; relative bracket width <= 1e-9",
    }
    return [row], EXIT_OK


# --- parser ---------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=["csv", "json", "text"], default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (0 = all cores)")
    common.add_argument("--sieve-limit", type=int, default=argparse.SUPPRESS)
    common.add_argument("--precision-policy", choices=[FAST, RIGOROUS], default=argparse.SUPPRESS)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="write to a file instead of stdout")

    parser = _Parser(prog="poussin", description=__doc__.split("\n\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def family_args(p):
        p.add_argument("--source", help="catalog label, e.g. Schoenfeld or 'Johnston-Yang exp(10^6)'")
        p.add_argument("--a", type=_number)
        p.add_argument("--b", type=_number)
        p.add_argument("--c", type=_number)

    p = sub.add_parser("derive", parents=[common], help="lemma prefactor for a chosen decay")
    family_args(p)
    p.add_argument("--x0", help="threshold of an explicit family, e.g. 101 or exp(3000)")
    p.add_argument("--ctilde", type=_number, required=True)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("tables", parents=[common], help="recompute derived-bound table III or IV")
    p.add_argument("--which", choices=["III", "IV"], required=True)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("catalog", parents=[common], help="export the built-in source bounds")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", parents=[common], help="check a bound on a range of real x")
    family_args(p)
    p.add_argument("--tilde-a", type=_number)
    p.add_argument("--tilde-c", type=_number)
    p.add_argument("--from", dest="lo", type=_number, required=True)
    p.add_argument("--to", dest="hi", type=_number, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("xstar", parents=[common], help="least integer threshold below x0")
    p.add_argument("--tilde-a", type=_number, required=True)
    p.add_argument("--tilde-c", type=_number, required=True)
    p.add_argument("--x0", type=_number, required=True)
    p.set_defaults(func=cmd_xstar)

    p = sub.add_parser("min-prefactor", parents=[common], help="least prefactor holding on a range")
    p.add_argument("--tilde-c", type=_number, required=True)
    p.add_argument("--from", dest="lo", type=_number, required=True)
    p.add_argument("--to", dest="hi", type=_number, required=True)
    p.set_defaults(func=cmd_min_prefactor)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            sieve_limit=getattr(args, "sieve_limit", 10**8),
            threads=getattr(args, "threads", 0),
            precision_policy=getattr(args, "precision_policy", FAST),
            output_format=getattr(args, "output_format", "text"),
        )
        rows, code = args.func(args, cfg)
    except CliError as exc:
        print(f"poussin: {exc}", file=sys.stderr)
        return exc.code
    except (DomainError, RangeError) as exc:
        print(f"poussin: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InconclusiveError as exc:
        print(f"poussin: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE

    buf = io.StringIO()
    emit(rows, cfg.output_format, buf)
    target = getattr(args, "output", None)
    if target:
        try:
            with open(target, "w", newline="") as fh:
                fh.write(buf.getvalue())
        except OSError as exc:
            print(f"poussin: cannot write {target}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
