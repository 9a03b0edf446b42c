"""``hyperrc`` command line.

Exit codes: 0 success, 1 syntax error or unreadable input, 2 evaluation
error or invalid parameters, 3 undecided, 4 backend contradiction.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import circuit, distribution, exprlang
from . import transfield as tf
from . import ultraproduct as up
from .circuit import INF, CircuitParams

EXIT_OK, EXIT_SYNTAX, EXIT_EVAL, EXIT_UNDECIDED, EXIT_CONTRADICTION = 0, 1, 2, 3, 4

DELTA_TAIL_TIMES = ("1/1000", "1/100", "1/10", "1", "10")
PLOT_POINTS = 200


class UsageError(Exception):
    pass


# -- formatting --------------------------------------------------------------


def fmt_scalar(v) -> str:
    """Deterministic text for a value from any of the scalar fields."""
    if v is None:
        return ""
    if isinstance(v, tf.HyperValue):
        s = v.as_scalar()
        if s is not None and v.exact:
            return fmt_scalar(s)
        return str(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dump_table(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in pairs)


def default_corpus() -> Path:
    return Path(str(resources.files("hyperrc") / "data" / "corpus.txt"))


def read_corpus(path) -> list[str]:
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


# -- argument parsing helpers ------------------------------------------------


def parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_resistance(text: str, K: int, as_float: bool = False):
    if text.strip() == "eps":
        if as_float:
            raise UsageError("--r eps has no float form")
        return tf.epsilon(K)
    r = parse_number(text)
    return float(r) if as_float else r


def parse_lets(items) -> list[tuple[str, str]]:
    lets = []
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip().isidentifier():
            raise UsageError(f"--let expects name=value, got {item!r}")
        lets.append((name.strip(), value.strip()))
    return lets


def _split_list(values) -> list[str]:
    out = []
    for v in values or ():
        out.extend(s.strip() for s in v.split(",") if s.strip())
    return out


def _order(args) -> int:
    return args.k if getattr(args, "k", None) else tf.default_truncation()


# -- commands ----------------------------------------------------------------


def cmd_classify(args, out) -> int:
    K = _order(args)
    ast = exprlang.parse(args.expr)
    lets = parse_lets(args.let)
    for _, value in lets:
        if not exprlang._EPS_POWER.match(value):
            exprlang.parse(value)

    report = {"expr": args.expr, "backend": args.backend}
    code = EXIT_OK
    grid_cls = None
    if args.backend in ("grid", "both"):
        try:
            env = exprlang.bind(lets, "grid", K)
            value = exprlang.eval_grid(ast, env, K)
            grid_cls = tf.classify(value)
            try:
                st = fmt_scalar(tf.standard_part(value))
            except tf.NoStandardPart:
                st = None
            lead = value.leading
            report["grid"] = {
                "classification": str(grid_cls),
                "leading_term": "0" if lead is None else str(
                    tf.HyperValue.from_terms([lead], K)
                ),
                "standard_part": st,
                "exact": value.exact and not value.is_approx,
                "value": value.to_json(),
            }
        except (ArithmeticError, NameError) as exc:
            report["grid"] = {"error": f"{type(exc).__name__}: {exc}"}
            code = EXIT_EVAL
    verdict = None
    if args.backend in ("seq", "both"):
        try:
            env = exprlang.bind(lets, "seq")
            verdict = up.seq_classify(exprlang.eval_seq(ast, env))
            report["seq"] = {"verdict": str(verdict)}
            if isinstance(verdict, up.Undecided) and code == EXIT_OK:
                code = EXIT_UNDECIDED
        except (ArithmeticError, NameError) as exc:
            report["seq"] = {"error": f"{type(exc).__name__}: {exc}"}
            code = EXIT_EVAL
    if args.backend == "both" and grid_cls is not None and isinstance(verdict, up.Decided):
        report["match"] = verdict.value == grid_cls
        if not report["match"]:
            code = EXIT_CONTRADICTION

    if args.format == "json":
        out.write(_dump_json(report) + "\n")
    else:
        pairs = [("expr", args.expr)]
        for key in ("grid", "seq"):
            for k, v in report.get(key, {}).items():
                if k == "value":
                    continue
                label = k.replace("_", " ")
                pairs.append((f"{key} {label}" if args.backend == "both" else label, fmt_json_value(v)))
        if "match" in report:
            pairs.append(("backends agree", "yes" if report["match"] else "NO"))
        out.write(_dump_table(pairs))
    return code


def fmt_json_value(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _circuit_from_args(args, as_float=False) -> CircuitParams:
    K = _order(args)
    q0, c = parse_number(args.q0), parse_number(args.c)
    r = parse_resistance(args.r, K, as_float)
    if as_float:
        q0, c = float(q0), float(c)
    return CircuitParams(q0, c, r, K)


def cmd_audit(args, out) -> int:
    as_float = args.float
    p = _circuit_from_args(args, as_float)
    if args.t.strip() == "inf":
        t = INF
    else:
        t = parse_number(args.t)
        t = float(t) if as_float else t
    audit = circuit.energy_audit(p, t)
    fields = {
        "q0": args.q0,
        "c": args.c,
        "r": args.r,
        "t": args.t,
        "mode": "float" if p.is_float else "exact",
    }
    fields.update({k: fmt_scalar(v) for k, v in audit.as_dict().items()})
    if args.format == "json":
        out.write(_dump_json(fields) + "\n")
    elif args.format == "csv":
        out.write(_dump_csv(list(fields), [list(fields.values())]))
    else:
        out.write(_dump_table(list(fields.items())))
    return EXIT_OK


def cmd_table(args, out) -> int:
    p = _circuit_from_args(args)
    times = _split_list(args.times)
    if not times:
        raise UsageError("--times needs at least one time spec")
    rows = circuit.classify_waveforms(p, times)
    columns = list(circuit.WaveformRow.COLUMNS) + ["error"]
    records = [[fmt_scalar(getattr(row, col)) for col in columns] for row in rows]
    if args.format == "json":
        out.write(_dump_json([dict(zip(columns, rec)) for rec in records]) + "\n")
    elif args.format == "csv":
        out.write(_dump_csv(columns, records))
    else:
        widths = [max(len(col), *(len(rec[i]) for rec in records)) for i, col in enumerate(columns)]
        line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
        out.write(line(columns) + "\n")
        for rec in records:
            out.write(line(rec) + "\n")
    return EXIT_OK if any(not row.error for row in rows) else EXIT_EVAL


def cmd_delta(args, out) -> int:
    K = _order(args)
    try:
        r = parse_resistance(args.r, K)
    except UsageError as exc:
        raise distribution.NonPositiveResistance(str(exc)) from exc
    fam = distribution.DeltaFamily.from_values(parse_number(args.q0), parse_number(args.c), r)
    p = fam.params
    tails = []
    for T in DELTA_TAIL_TIMES:
        v = distribution.tail_mass(fam, Fraction(T))
        tails.append({"T": T, "value": fmt_scalar(v), "class": str(tf.classify(v))})
    energy = distribution.delta_squared_energy(fam)
    report = {
        "q0": args.q0,
        "c": args.c,
        "r": args.r,
        "delta_integral": fmt_scalar(distribution.delta_integral(fam)),
        "tail_mass": tails,
        "delta_squared_energy": fmt_scalar(energy),
        "expected_energy": fmt_scalar(p.q0 * p.v0 / 4),
        "dissipated_0_inf": fmt_scalar(circuit.dissipated(p, Fraction(0), INF)),
    }
    out.write(_dump_json(report) + "\n")
    return EXIT_OK


def plot_grid(params: list[CircuitParams]) -> np.ndarray:
    """``t = 0`` followed by log-spaced times over ``[min rc/1000, max rc*10]``."""
    rcs = [p.r * p.c for p in params]
    lo, hi = min(rcs) * 1e-3, max(rcs) * 10
    return np.concatenate([[0.0], np.geomspace(lo, hi, PLOT_POINTS - 1)])


def plot_curve(p: CircuitParams, quantity: str, t: np.ndarray) -> np.ndarray:
    if quantity == "i":
        return circuit.current(p, t)
    if quantity == "p":
        return circuit.power(p, t)
    return p.q0 * p.v0 / 4 * (1 - circuit._decay(p, t, 4))


def cmd_plotdata(args, out) -> int:
    rs = _split_list(args.r)
    if not rs:
        raise UsageError("--r needs at least one real resistance")
    q0, c = float(parse_number(args.q0)), float(parse_number(args.c))
    params = [CircuitParams(q0, c, float(parse_number(r))) for r in rs]
    t = plot_grid(params)
    curves = [plot_curve(p, args.quantity, t) for p in params]
    header = ["t"] + [f"{args.quantity}[r={r}]" for r in rs]
    rows = [[repr(float(t[i]))] + [repr(float(col[i])) for col in curves] for i in range(len(t))]
    text = _dump_csv(header, rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        out.write(text)
    return EXIT_OK


def cmd_crosscheck(args, out) -> int:
    path = args.corpus or default_corpus()
    try:
        exprs = read_corpus(path)
    except OSError as exc:
        sys.stderr.write(f"cannot read corpus {path}: {exc}\n")
        return EXIT_SYNTAX
    plan = up.SamplingPlan.powers_of_two(4, args.max_log2, args.window)
    matched = decided = contradictions = 0
    for expr in exprs:
        try:
            rep = up.cross_check(expr, plan=plan, K=_order(args))
            record = rep.to_json()
        except (up.BackendError, exprlang.ExprSyntaxError) as exc:
            record = {"expr": expr, "grid": "", "seq": "", "match": False,
                      "status": "error", "error": str(exc)}
            rep = None
        if rep is not None and rep.decided:
            decided += 1
            matched += rep.match
            contradictions += not rep.match
        out.write(_dump_json(record) + "\n")
    total = len(exprs)
    out.write(f"{matched}/{decided}/{total - decided}/{total}\n")
    return EXIT_CONTRADICTION if contradictions else EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hyperrc",
        description="Hyperreal arithmetic and the two-capacitor energy audit.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def k_flag(p):
        p.add_argument("--k", type=int, default=None,
                       help="truncation order (default: $HYPERRC_TRUNCATION or 8)")

    p = sub.add_parser("classify", help="classify a hyperreal expression")
    p.add_argument("expr")
    p.add_argument("--let", action="append", metavar="NAME=VALUE",
                   help="bind a symbol to an expression, or eps_power(p)")
    p.add_argument("--backend", choices=("grid", "seq", "both"), default="grid")
    p.add_argument("--format", choices=("table", "json"), default="table")
    k_flag(p)
    p.set_defaults(func=cmd_classify)

    def circuit_flags(p, r_default=None):
        p.add_argument("--q0", required=True)
        p.add_argument("--c", required=True)
        if r_default is None:
            p.add_argument("--r", required=True, help="resistance: a number or eps")
        else:
            p.add_argument("--r", default=r_default, help="resistance: a number or eps")
        k_flag(p)

    p = sub.add_parser("audit", help="energy bookkeeping up to time t")
    circuit_flags(p)
    p.add_argument("--t", default="inf", help="a number or inf")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--float", action="store_true", help="evaluate in floating point")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("table", help="classify current and power at given times")
    circuit_flags(p, r_default="eps")
    p.add_argument("--times", action="append", required=True,
                   help="comma-separated <rational> or <rational>*eps")
    p.add_argument("--format", choices=("table", "json", "csv"), default="csv")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("delta", help="the delta-family experiment")
    circuit_flags(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("plotdata", help="CSV curves of i, p or E for real r")
    p.add_argument("--q0", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--r", action="append", help="real resistance(s), repeat or comma-separate")
    p.add_argument("--quantity", choices=("i", "p", "E"), default="p")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("crosscheck", help="compare grid and sequence backends on a corpus")
    p.add_argument("--corpus", default=None)
    p.add_argument("--max-log2", type=int, default=26, help="largest sampled n is 2**MAX_LOG2")
    p.add_argument("--window", type=int, default=6)
    k_flag(p)
    p.set_defaults(func=cmd_crosscheck)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except exprlang.ExprSyntaxError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_SYNTAX
    except (UsageError, ValueError, ArithmeticError, NameError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
