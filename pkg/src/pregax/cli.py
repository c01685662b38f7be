"""Command-line front end.

Exit codes: 0 success or Equal, 1 NotEqual or validation errors,
2 Unknown or budget exhausted, 3 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from .axiomgen import axiomatize
from .bisim import Outcome, Verdict, bisimilar
from .core import format_term, hourglass, proj
from .rewrite import NonTermination, Rewriter, prove_equal
from .sampling import seed_from_env
from .semantics import BudgetExceeded, StepBudget, build_lts
from .soundness import check_axioms
from .spec import PregSystem, SpecError, load_spec, print_spec, validate_preg
from .syntax import ParseError
from .transform import positivize

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pregax", description="Operational specifications to equational axioms.")
    p.add_argument("--banner", action="store_true", help="print a version banner on stderr")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a .preg file")
    v.add_argument("spec")
    v.add_argument("--json", action="store_true")

    lts = sub.add_parser("lts", help="reachable transition system of a term")
    lts.add_argument("spec")
    lts.add_argument("-t", "--term", required=True)
    fmt = lts.add_mutually_exclusive_group()
    fmt.add_argument("--dot", action="store_true")
    fmt.add_argument("--json", action="store_true")
    lts.add_argument("--max-states", type=int, default=10_000)

    ax = sub.add_parser("axiomatize", help="generate the equational theory")
    ax.add_argument("spec")
    ax.add_argument("-o", "--output")
    ax.add_argument("--json", action="store_true")
    ax.add_argument("--enumerate-deadlock", type=int, default=1, metavar="N")

    nm = sub.add_parser("normalize", help="rewrite a term to a finite tree")
    nm.add_argument("spec")
    nm.add_argument("-t", "--term", required=True)
    nm.add_argument("--depth", type=int)
    nm.add_argument("--trace", action="store_true")
    nm.add_argument("--json", action="store_true")

    eq = sub.add_parser("equiv", help="prove or refute t = u")
    eq.add_argument("spec")
    eq.add_argument("-t", "--term", required=True)
    eq.add_argument("-u", "--other", required=True)
    eq.add_argument("--depth", type=int, default=8)
    eq.add_argument("--check-oracle", action="store_true")
    eq.add_argument("--trace", action="store_true")
    eq.add_argument("--json", action="store_true")

    orc = sub.add_parser("oracle", help="decide bisimilarity directly")
    orc.add_argument("spec")
    orc.add_argument("-t", "--term", required=True)
    orc.add_argument("-u", "--other", required=True)
    orc.add_argument("--max-states", type=int, default=10_000)
    orc.add_argument("--depth", type=int, default=8)
    orc.add_argument("--json", action="store_true")

    pos = sub.add_parser("positivize", help="replace negative premises by cannot predicates")
    pos.add_argument("spec")
    pos.add_argument("-o", "--output")

    st = sub.add_parser("selftest", help="sample every generated law against the oracle")
    st.add_argument("spec")
    st.add_argument("--samples", type=int, default=100)
    st.add_argument("--height", type=int, default=2)
    return p


def _write(text: str, path: str | None, out: TextIO) -> None:
    if path:
        Path(path).write_text(text)
    else:
        out.write(text)


def _verdict_code(v: Verdict) -> int:
    return {Outcome.EQUAL: EXIT_OK, Outcome.NOT_EQUAL: EXIT_FAIL, Outcome.UNKNOWN: EXIT_UNKNOWN}[v.outcome]


def _print_verdict(v: Verdict, as_json: bool, out: TextIO) -> None:
    if as_json:
        out.write(v.to_json() + "\n")
        return
    line = str(v.outcome)
    if v.outcome is Outcome.UNKNOWN:
        line += f"({v.depth})"
    if v.witness and v.outcome is Outcome.NOT_EQUAL:
        line += f": {v.witness}"
    out.write(line + "\n")
    if v.proof is not None:
        out.write(v.proof.to_text())


def _cmd_validate(args, s: PregSystem, out, err) -> int:
    report = validate_preg(s)
    for line in report.to_lines():
        err.write(line + "\n")
    if args.json:
        out.write(report.to_json() + "\n")
    else:
        out.write(f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)\n")
    return EXIT_FAIL if report.errors else EXIT_OK


def _cmd_lts(args, s, out, err) -> int:
    g = s.with_layers({"restrict", "proj"})
    t = g.parse_term(args.term)
    code = EXIT_OK
    try:
        lts = build_lts(t, g, StepBudget(max_states=args.max_states))
    except BudgetExceeded as exc:
        err.write(f"budget exhausted: {exc}; printing the partial system\n")
        lts, code = exc.partial, EXIT_UNKNOWN
    if args.dot:
        out.write(lts.to_dot())
    elif args.json:
        out.write(lts.to_json() + "\n")
    else:
        for i, st in enumerate(lts.states):
            preds = " {" + ", ".join(sorted(lts.pred_labels[i])) + "}" if lts.pred_labels[i] else ""
            out.write(f"s{i}: {format_term(st)}{preds}\n")
        for i, a, j in lts.transitions:
            out.write(f"s{i} -{a}-> s{j}\n")
    return code


def _cmd_axiomatize(args, s, out, err) -> int:
    _, gen = axiomatize(s, deadlock_bound=args.enumerate_deadlock)
    for w in gen.warnings:
        err.write(w.line() + "\n")
    text = gen.to_json() + "\n" if args.json else gen.to_text()
    _write(text, args.output, out)
    return EXIT_OK


def _cmd_normalize(args, s, out, err) -> int:
    g, gen = axiomatize(s)
    rw = Rewriter(g, gen)
    start = g.parse_term(args.term)
    if args.depth is not None:
        start = proj(start, hourglass(args.depth))
    tr = rw.start_trace(start) if args.trace else None
    try:
        nf = rw.normalize(start)
    except NonTermination as exc:
        err.write(f"no finite normal form: {exc}; try --depth N\n")
        return EXIT_UNKNOWN
    if args.json:
        d = {"term": format_term(start), "normal_form": format_term(nf)}
        if tr is not None:
            d["trace"] = tr.to_dict()
        out.write(json.dumps(d, indent=2, sort_keys=True) + "\n")
    else:
        if tr is not None:
            out.write(tr.to_text())
        out.write(format_term(nf) + "\n")
    return EXIT_OK


def _cmd_equiv(args, s, out, err) -> int:
    g, gen = axiomatize(s)
    t, u = g.parse_term(args.term), g.parse_term(args.other)
    v = prove_equal(t, u, g, max_depth=args.depth, axioms=gen, trace=args.trace)
    _print_verdict(v, args.json, out)
    if args.check_oracle:
        o = bisimilar(t, u, g, StepBudget(max_depth=args.depth))
        if _disagree(v, o, args.depth):
            err.write("DISCREPANCY between prover and oracle\n")
            err.write(f"  prover: {v.outcome} {v.witness or ''}\n  oracle: {o.outcome} {o.witness or ''}\n")
            for line in v.trace + o.trace:
                err.write(f"  {line}\n")
            return EXIT_FAIL
        err.write(f"oracle agrees: {o.outcome}\n")
    return _verdict_code(v)


def _disagree(prover: Verdict, oracle: Verdict, depth: int) -> bool:
    if Outcome.UNKNOWN not in (prover.outcome, oracle.outcome):
        return prover.outcome is not oracle.outcome
    if prover.outcome is Outcome.UNKNOWN and oracle.outcome is Outcome.NOT_EQUAL:
        return oracle.depth is not None and oracle.depth <= depth
    if oracle.outcome is Outcome.UNKNOWN and prover.outcome is Outcome.NOT_EQUAL:
        return prover.depth is None or prover.depth <= depth
    return False


def _cmd_oracle(args, s, out, err) -> int:
    g = s.with_layers({"restrict", "proj"})
    t, u = g.parse_term(args.term), g.parse_term(args.other)
    v = bisimilar(t, u, g, StepBudget(max_states=args.max_states, max_depth=args.depth))
    _print_verdict(v, args.json, out)
    for line in v.trace:
        err.write(line + "\n")
    return _verdict_code(v)


def _cmd_positivize(args, s, out, err) -> int:
    _write(print_spec(positivize(s)), args.output, out)
    return EXIT_OK


def _cmd_selftest(args, s, out, err) -> int:
    seed = seed_from_env()
    report = check_axioms(s, samples=args.samples, seed=seed, max_height=args.height)
    out.write(f"seed {seed}\n")
    for line in report.to_lines():
        out.write(line + "\n")
    out.write("ok\n" if report.ok else f"{len(report.failures)} failure(s)\n")
    return EXIT_OK if report.ok else EXIT_FAIL


_COMMANDS = {
    "validate": _cmd_validate, "lts": _cmd_lts, "axiomatize": _cmd_axiomatize, "normalize": _cmd_normalize,
    "equiv": _cmd_equiv, "oracle": _cmd_oracle, "positivize": _cmd_positivize, "selftest": _cmd_selftest,
}


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.banner:
        err.write(f"pregax {__version__}\n")
    try:
        s = load_spec(args.spec, strict=args.verb != "validate")
        return _COMMANDS[args.verb](args, s, out, err)
    except ParseError as exc:
        err.write(f"{args.spec}: parse error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SpecError as exc:
        err.write(f"{exc}\n")
        for issue in getattr(exc, "issues", None) or []:
            err.write(issue.line() + "\n")
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
