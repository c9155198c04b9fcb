"""Command-line front end.

Every subcommand prints one JSON document (or CSV where offered) on stdout.
Exit status: 0 success or PASS, 1 FAIL verdicts and certificate errors,
2 usage errors, 3 precision exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gmpy2 import mpq

from .core import as_int, as_rational, format_rational
from .errors import (
    CertificateError,
    HypothesisViolation,
    LiouvilleError,
    PrecisionExhausted,
    SpecError,
)
from .measure import (
    companion,
    criterion_report,
    gap_check,
    gap_trials,
    nonmember_probe,
    interleaved_tau_ratios,
    two_squares_check,
    un_profile,
)
from .numbers import SeriesNumber, erdos_split
from .specs import parse_base, parse_number, parse_schedule, parse_u
from .witness import (
    ApproxWitness,
    apply_rational_function,
    combine2,
    emit_certificate,
    encode_int,
    load_certificate,
    natural_witness,
    normalize,
    reciprocal,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3


class UsageError(LiouvilleError):
    pass


def parse_range(text: str) -> tuple[int, int]:
    """``a..b`` or a single ``n``."""
    lo, sep, hi = text.partition("..")
    try:
        a = int(as_int(lo))
        b = int(as_int(hi)) if sep else a
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if a < 1 or b < a:
        raise UsageError(f"bad range {text!r}")
    return a, b


def _int_list(text: str) -> list[int]:
    try:
        return [int(as_int(x)) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _rat(text: str) -> mpq:
    """Exact ``p/q`` parsing; ValueError lets argparse report a usage error."""
    return as_rational(text)


# ------------------------------------------------------------------ output


class Output:
    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream

    def json(self, doc) -> None:
        self.stream.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def emit(self, doc, csv_text: str | None = None) -> None:
        if self.fmt == "csv":
            if csv_text is None:
                raise UsageError("this subcommand has no CSV form")
            self.stream.write(csv_text)
        else:
            self.json(doc)


def _verdict_doc(v) -> dict:
    return {"n": v.n, "b": encode_int(v.b), "a": encode_int(v.a), "verdict": v.verdict}


# ---------------------------------------------------------------- handlers


def cmd_construct(args, out: Output) -> int:
    if args.base:
        q = parse_base(args.base)
        terms = [q.term(n) for n in range(1, args.count + 1)]
        rows = "n,term\n" + "".join(f"{n},{t}\n" for n, t in enumerate(terms, start=1))
        out.emit({"base": q.spec, "terms": [encode_int(t) for t in terms]}, rows)
        return EXIT_OK
    if not args.number:
        raise UsageError("construct needs --number or --base")
    x = parse_number(args.number)
    if args.trunc is not None:
        if not isinstance(x, SeriesNumber):
            raise UsageError("--trunc applies to series numbers only; use --bits")
        if args.trunc > args.max_terms:
            raise UsageError(f"--trunc exceeds --max-terms {args.max_terms}")
        t = x.truncate(args.trunc)
        out.json({"number": x.spec, "terms": t.terms_used, "value": format_rational(t.value),
                  "tail_bound": format_rational(t.tail_bound)})
        return EXIT_OK
    iv = x.enclose(args.bits)
    out.json({"number": x.spec, "bits": args.bits, "lo": format_rational(iv.lo), "hi": format_rational(iv.hi)})
    return EXIT_OK


def cmd_measure(args, out: Output) -> int:
    x, q = parse_number(args.number), parse_base(args.base)
    lo, hi = parse_range(args.n)
    prof = un_profile(x, q, range(lo, hi + 1), args.frac_bits, args.max_bits)
    out.emit(prof.as_dict(), prof.to_csv())
    return EXIT_OK


def cmd_criterion(args, out: Output) -> int:
    if args.tau_pair:
        t1, t2 = (_rat(s) for s in args.tau_pair.split(","))
        lo, hi = parse_range(args.n)
        rows = interleaved_tau_ratios(t1, t2, range(lo, hi + 1))
        doc = {"tau1": format_rational(t1), "tau2": format_rational(t2), "rows": [
            {"n": r.n, "merged_index": r.merged_index, "odd_over_even": format_rational(r.odd_over_even),
             "even_over_odd": format_rational(r.even_over_odd)} for r in rows]}
        csv_text = "n,merged_index,odd_over_even,even_over_odd\n" + "".join(
            f"{r.n},{r.merged_index},{format_rational(r.odd_over_even)},{format_rational(r.even_over_odd)}\n"
            for r in rows)
        out.emit(doc, csv_text)
        return EXIT_OK
    q, u = parse_base(args.base), parse_u(args.u)
    rep = criterion_report(q, u, args.n_max, args.theta)
    out.emit(rep.as_dict(), rep.to_csv())
    return EXIT_OK


def _read_cert(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CertificateError(f"{path}: not JSON: {exc}") from exc


def _loaded_witness(path: str) -> ApproxWitness:
    check = load_certificate(_read_cert(path))
    w = check.witness
    first = min((v.n for v in check.verdicts), default=w.valid_from)
    return w.derive(valid_from=max(w.valid_from, first))


def _emit_cert(w: ApproxWitness, args, out: Output) -> int:
    lo, hi = parse_range(args.n)
    doc = emit_certificate(w, lo, hi)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    out.stream.write(text)
    return EXIT_OK if all(e["verdict"] == "pass" for e in doc["entries"]) else EXIT_FAIL


def cmd_witness(args, out: Output) -> int:
    action = args.action
    if action == "emit":
        w = natural_witness(parse_number(args.number), parse_base(args.base), parse_u(args.u),
                            power=args.power, kappa1=args.kappa1, kappa2=args.kappa2,
                            valid_from=args.valid_from)
        return _emit_cert(w, args, out)
    if action == "verify":
        doc = _read_cert(args.cert)
        check = load_certificate(doc)
        verdicts = check.verdicts
        if args.n:
            lo, hi = parse_range(args.n)
            missing = [n for n in range(max(lo, check.witness.valid_from), hi + 1)
                       if n not in {v.n for v in verdicts}]
            if missing:
                raise CertificateError(f"certificate has no entries for n = {missing}")
            verdicts = [v for v in verdicts if lo <= v.n <= hi]
        ok = all(v.passed for v in verdicts)
        out.json({"certificate": args.cert, "digest": doc["digest"], "all_pass": ok,
                  "entries": [_verdict_doc(v) for v in verdicts]})
        return EXIT_OK if ok else EXIT_FAIL
    w = _loaded_witness(args.cert)
    if action == "combine":
        if not args.cert2:
            raise UsageError("combine needs --cert2")
        w = combine2(w, _loaded_witness(args.cert2), args.mode)
    elif action == "normalize":
        w = normalize(w)
    elif action == "reciprocal":
        w = reciprocal(w)
    elif action == "rational-fn":
        w = apply_rational_function(w, _int_list(args.p), _int_list(args.q))
    return _emit_cert(w, args, out)


def cmd_probe(args, out: Output) -> int:
    x, q, u = parse_number(args.number), parse_base(args.base), parse_u(args.u)
    lo, hi = parse_range(args.n)
    rows = [nonmember_probe(x, q, u, args.kappa1, args.kappa2, n, args.max_bits) for n in range(lo, hi + 1)]
    keys = ["n", "verdict", "cap_log2", "threshold_log2", "best_s", "candidates", "bits"]
    csv_text = ",".join(keys) + "\n" + "".join(",".join(str(r.as_dict()[k]) for k in keys) + "\n" for r in rows)
    out.emit({"number": x.spec, "base": q.spec, "rows": [r.as_dict() for r in rows]}, csv_text)
    return EXIT_OK if all(r.verdict == "PASS" for r in rows) else EXIT_FAIL


def _gap_doc(v) -> dict:
    return {"q": str(v.q), "q2": str(v.q2), "u": format_rational(v.u),
            "q2_ge_q_pow_u": v.q2_ge_q_pow_u, "q_ge_q2_pow_u": v.q_ge_q2_pow_u, "holds": v.holds}


def cmd_gap_check(args, out: Output) -> int:
    if args.trials:
        results = gap_trials(args.trials, args.seed, integer_u=args.integer_u)
        bad = [_gap_doc(v) for _, v in results if not v.holds]
        out.json({"trials": args.trials, "seed": args.seed, "counterexamples": len(bad), "failing": bad})
        return EXIT_OK if not bad else EXIT_FAIL
    if None in (args.p, args.q, args.p2, args.q2, args.u):
        raise UsageError("gap-check needs --p --q --p2 --q2 --u (or --trials)")
    v = gap_check(args.p, args.q, args.p2, args.q2, args.u)
    out.json(_gap_doc(v))
    return EXIT_OK if v.holds else EXIT_FAIL


def cmd_companion(args, out: Output) -> int:
    wx = natural_witness(parse_number(args.xi), parse_base(args.xi_base), parse_u(args.u))
    wy = natural_witness(parse_number(args.eta), parse_base(args.eta_base), parse_u(args.u))
    c = companion(wx, wy, theta=args.theta)
    checks = {}
    for name, w, k in (("rho_even", c.rho_even, args.n_even), ("xi_even", c.xi_even, args.n_even),
                       ("rho_odd", c.rho_odd, args.n_odd), ("eta_odd", c.eta_odd, args.n_odd)):
        checks[name] = [_verdict_doc(v) for v in w.verify_range(1, k)]
    top = 2 * max(args.n_even, args.n_odd) + 1
    ok = all(e["verdict"] == "pass" for rows in checks.values() for e in rows)
    out.json({
        "q": [{"n": n, "source": list(c.q.source(n)), "value": encode_int(c.q.term(n))} for n in range(1, top + 1)],
        "rho": c.rho.spec, "shift": c.shift, "checks": checks, "all_pass": ok,
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_two_squares(args, out: Output) -> int:
    if args.N is not None:
        Ns = [args.N]
    else:
        Ns = range(1, args.n_max + 1)
    results = [two_squares_check(N, args.z_max) for N in Ns]
    contradictions = [r.N for r in results if r.obstructed and r.solutions]
    csv_text = "N,obstructed,decompositions,solutions\n" + "".join(
        f"{r.N},{str(r.obstructed).lower()},{len(r.decompositions)},{len(r.solutions)}\n" for r in results)
    out.emit({"z_max": args.z_max, "results": [r.as_dict() for r in results],
              "obstructed_with_solutions": contradictions}, csv_text)
    return EXIT_OK if not contradictions else EXIT_FAIL


def cmd_erdos_split(args, out: Output) -> int:
    x = parse_number(args.number)
    lam = parse_schedule(args.lam)
    s = erdos_split(x, lam, args.depth, args.max_bits)
    audit_ok = all(a.ok for a in s.audit)
    exact = s.exact()
    out.json({
        "number": x.spec, "lambda": lam.spec, "depth": s.depth, "x_prefix": format_rational(s.x_value),
        "xi_exponents": [int(s.xi.d.key(n)) for n in range(1, (s.xi.length or 0) + 1)],
        "eta_exponents": [int(s.eta.d.key(n)) for n in range(1, (s.eta.length or 0) + 1)],
        "xi_offset": format_rational(s.xi.offset), "exact": exact,
        "audit": [{"part": a.part, "position": a.position, "next_position": a.next_position, "block": a.block,
                   "zero_run": a.zero_run, "ok": a.ok} for a in s.audit],
        "audit_ok": audit_ok,
    })
    return EXIT_OK if exact and audit_ok else EXIT_FAIL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--max-terms", type=int, default=64)
    common.add_argument("--max-bits", type=int, default=1 << 22)

    p = argparse.ArgumentParser(prog="liouville", description="Certified computations with Liouville numbers.",
                                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common], allow_abbrev=False, help="truncate or enclose a number")
    c.add_argument("--number")
    c.add_argument("--base", help="print a prefix of a base sequence instead")
    c.add_argument("--count", type=int, default=6)
    c.add_argument("--trunc", type=int)
    c.add_argument("--bits", type=int, default=64)
    c.set_defaults(func=cmd_construct)

    m = sub.add_parser("measure", parents=[common], allow_abbrev=False, help="u_n profile")
    m.add_argument("--number", required=True)
    m.add_argument("--base", required=True)
    m.add_argument("--n", required=True)
    m.add_argument("--frac-bits", type=int, default=64)
    m.set_defaults(func=cmd_measure)

    k = sub.add_parser("criterion", parents=[common], allow_abbrev=False, help="growth-criterion ratios")
    k.add_argument("--base", default="factorial-pow2")
    k.add_argument("--u", default="identity")
    k.add_argument("--n-max", type=int, default=8)
    k.add_argument("--theta", type=_rat, default=mpq(1, 2))
    k.add_argument("--tau-pair", help="tau1,tau2: interleaving ratios instead (with --n)")
    k.add_argument("--n", default="16..32")
    k.set_defaults(func=cmd_criterion)

    w = sub.add_parser("witness", allow_abbrev=False, help="witness certificates and algebra")
    wsub = w.add_subparsers(dest="action", required=True)
    for name in ("emit", "verify", "combine", "normalize", "reciprocal", "rational-fn"):
        a = wsub.add_parser(name, parents=[common], allow_abbrev=False)
        a.add_argument("--n", required=name != "verify")
        if name == "emit":
            a.add_argument("--number", required=True)
            a.add_argument("--base", required=True)
            a.add_argument("--u", default="identity")
            a.add_argument("--power", type=int, default=1)
            a.add_argument("--kappa1", type=_rat)
            a.add_argument("--kappa2", type=_rat, default=mpq(1, 2))
            a.add_argument("--valid-from", type=int)
        else:
            a.add_argument("--cert", required=True)
        if name == "combine":
            a.add_argument("--cert2", required=True)
            a.add_argument("--mode", choices=["sub", "add", "mul"], default="sub")
        if name == "rational-fn":
            a.add_argument("--p", required=True, help="coefficients, constant term first")
            a.add_argument("--q", default="1")
        if name != "verify":
            a.add_argument("--out")
        a.set_defaults(func=cmd_witness)

    pr = sub.add_parser("probe", parents=[common], allow_abbrev=False, help="finite-scale non-membership probe")
    pr.add_argument("--number", required=True)
    pr.add_argument("--base", required=True)
    pr.add_argument("--u", default="identity")
    pr.add_argument("--kappa1", type=_rat, default=mpq(1))
    pr.add_argument("--kappa2", type=_rat, default=mpq(1, 2))
    pr.add_argument("--n", required=True)
    pr.set_defaults(func=cmd_probe)

    g = sub.add_parser("gap-check", parents=[common], allow_abbrev=False, help="gap lemma disjunction")
    for name in ("--p", "--q", "--p2", "--q2"):
        g.add_argument(name)
    g.add_argument("--u")
    g.add_argument("--trials", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--integer-u", action="store_true")
    g.set_defaults(func=cmd_gap_check)

    cp = sub.add_parser("companion", parents=[common], allow_abbrev=False, help="common companion of two numbers")
    cp.add_argument("--xi", default="classic:2")
    cp.add_argument("--xi-base", default="factorial-pow2")
    cp.add_argument("--eta", default="classic:3")
    cp.add_argument("--eta-base", default="factorial-pow:3")
    cp.add_argument("--u", default="identity")
    cp.add_argument("--theta", type=_rat, default=mpq(1, 2))
    cp.add_argument("--n-even", type=int, default=3)
    cp.add_argument("--n-odd", type=int, default=2)
    cp.set_defaults(func=cmd_companion)

    t = sub.add_parser("two-squares", parents=[common], allow_abbrev=False, help="x^2 + y^2 = N z^2 obstruction")
    t.add_argument("--N", type=int)
    t.add_argument("--n-max", type=int, default=200)
    t.add_argument("--z-max", type=int, default=20)
    t.set_defaults(func=cmd_two_squares)

    e = sub.add_parser("erdos-split", parents=[common], allow_abbrev=False, help="binary digit-block split")
    e.add_argument("--number", required=True)
    e.add_argument("--lambda", dest="lam", default="factorial")
    e.add_argument("--depth", type=int, default=24)
    e.set_defaults(func=cmd_erdos_split)
    return p


def _error(out: Output, exc: Exception, code: int) -> int:
    out.json({"error": type(exc).__name__, "message": str(exc), "exit": code})
    return code


def main(argv: list[str] | None = None, stream=None) -> int:
    out = Output("json", stream or sys.stdout)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out.fmt = args.format
    try:
        return args.func(args, out)
    except (UsageError, SpecError, HypothesisViolation) as exc:
        return _error(out, exc, EXIT_USAGE)
    except PrecisionExhausted as exc:
        return _error(out, exc, EXIT_PRECISION)
    except LiouvilleError as exc:
        return _error(out, exc, EXIT_FAIL)
    except ValueError as exc:
        return _error(out, exc, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
