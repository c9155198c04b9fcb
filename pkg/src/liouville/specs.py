"""Text specs for sequences and numbers (used by the CLI and certificates).

Base sequences::

    factorial-pow2 | factorial-pow:<b> | tau:<r> | pow-of-f:<u> | prop13:<lambda>
    explicit:<n,n,...> | powers:<b> | explicit-pow2:<e,e,...>
    merge(<seq>,<seq>) | lemma8(<seq>,<seq>) | sub(<seq>,even|odd)

Exponent sequences: ``identity`` or ``explicit:<r,r,...>``.

Numbers::

    classic:<b> | xi-t:<t>:<u> | thm3:<signs>:<seq>:<theta> | prop12:<lambda>
    prop13:<lambda> | prop14:<seq>:<u> | rat:<p/q>
    add(<num>,<num>) | sub(..) | mul(..) | div(..) | inv(<num>) | neg(<num>)

``<lambda>`` is a comma list or one of the named rules (``sqrt``, ``identity``
for prop12; ``succ``, ``tower``, ``factorial`` for block schedules).
"""
from __future__ import annotations

from .core import as_int, as_rational
from .errors import SpecError
from .numbers import (
    Real,
    RationalNumber,
    Reciprocal,
    liouville_classic,
    xi_prop12,
    xi_prop13,
    xi_prop14,
    xi_t,
    xi_theorem3,
)
from .sequences import (
    BaseSequence,
    Explicit,
    ExplicitPow2,
    ExplicitU,
    ExponentSequence,
    FactorialPow,
    Identity,
    LambdaSchedule,
    Lemma8Sequence,
    Merge,
    PowerOfF,
    PowersOf,
    TwoListSequence,
    Subsequence,
    TauFactorial,
)


def split_args(text: str) -> list[str]:
    """Split on top-level commas (commas inside parentheses are kept)."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise SpecError(f"unbalanced parentheses in {text!r}")
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise SpecError(f"unbalanced parentheses in {text!r}")
    out.append("".join(cur))
    return [s.strip() for s in out]


def _call(text: str) -> tuple[str, list[str]] | None:
    """``name(a,b)`` -> (name, [a, b]); None when text is not a call."""
    text = text.strip()
    i = text.find("(")
    if i <= 0 or not text.endswith(")") or ":" in text[:i]:
        return None
    return text[:i], split_args(text[i + 1:-1])


def _int_list(text: str) -> list[int]:
    try:
        return [int(as_int(x)) for x in text.split(",")]
    except ValueError as exc:
        raise SpecError(f"bad integer list {text!r}") from exc


def _guard(fn, text, what):
    try:
        return fn()
    except SpecError:
        raise
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        raise SpecError(f"bad {what} spec {text!r}: {exc}") from exc


def parse_u(text: str) -> ExponentSequence:
    text = text.strip()
    if text == "identity":
        return Identity()
    if text.startswith("explicit:"):
        return _guard(lambda: ExplicitU([as_rational(x) for x in text[9:].split(",")]), text, "exponent")
    raise SpecError(f"unknown exponent spec {text!r}")


def parse_schedule(text: str) -> LambdaSchedule:
    text = text.strip()
    if text in LambdaSchedule.RULES:
        return LambdaSchedule(text)
    return _guard(lambda: LambdaSchedule(_int_list(text)), text, "lambda")


def parse_base(text: str) -> BaseSequence:
    text = text.strip()
    call = _call(text)
    if call:
        name, args = call
        if len(args) != 2:
            raise SpecError(f"{name}(...) takes two arguments: {text!r}")
        if name == "merge":
            return Merge(parse_base(args[0]), parse_base(args[1]))
        if name == "lemma8":
            return Lemma8Sequence(parse_base(args[0]), parse_base(args[1]))
        if name == "sub":
            if args[1] not in ("even", "odd"):
                raise SpecError(f"subsequence map must be even or odd: {text!r}")
            return Subsequence(parse_base(args[0]), args[1])
        raise SpecError(f"unknown sequence combinator {name!r}")
    head, _, rest = text.partition(":")
    if head == "factorial-pow2" and not rest:
        return FactorialPow(2)
    builders = {
        "factorial-pow": lambda: FactorialPow(as_int(rest)),
        "tau": lambda: TauFactorial(as_rational(rest)),
        "pow-of-f": lambda: PowerOfF(parse_u(rest)),
        "prop13": lambda: TwoListSequence(parse_schedule(rest)),
        "explicit": lambda: Explicit(_int_list(rest)),
        "explicit-pow2": lambda: ExplicitPow2(_int_list(rest)),
        "powers": lambda: PowersOf(as_int(rest)),
    }
    if head in builders and rest:
        return _guard(builders[head], text, "sequence")
    raise SpecError(f"unknown sequence spec {text!r}")


def _split_last(text: str) -> tuple[str, str]:
    head, sep, tail = text.rpartition(":")
    if not sep:
        raise SpecError(f"missing ':' in {text!r}")
    return head, tail


def _split_seq_u(text: str) -> tuple[BaseSequence, ExponentSequence]:
    """``<seq>:<u>`` where both halves may contain ':'."""
    for i, ch in enumerate(text):
        if ch != ":":
            continue
        try:
            u = parse_u(text[i + 1:])
        except SpecError:
            continue
        return parse_base(text[:i]), u
    raise SpecError(f"expected <seq>:<u> in {text!r}")


NUMBER_CALLS = {"add": 2, "sub": 2, "mul": 2, "div": 2, "inv": 1, "neg": 1}


def parse_number(text: str) -> Real:
    text = text.strip()
    call = _call(text)
    if call:
        name, args = call
        if name not in NUMBER_CALLS or len(args) != NUMBER_CALLS[name]:
            raise SpecError(f"unknown number combinator {text!r}")
        xs = [parse_number(a) for a in args]
        if name == "add":
            return xs[0] + xs[1]
        if name == "sub":
            return xs[0] - xs[1]
        if name == "mul":
            return xs[0] * xs[1]
        if name == "div":
            return xs[0] / xs[1]
        if name == "inv":
            return Reciprocal(xs[0])
        return -xs[0]
    head, _, rest = text.partition(":")
    if not rest:
        raise SpecError(f"unknown number spec {text!r}")
    if head == "classic":
        return _guard(lambda: liouville_classic(as_int(rest)), text, "number")
    if head == "rat":
        return _guard(lambda: RationalNumber(as_rational(rest)), text, "number")
    if head == "xi-t":
        t, _, u = rest.partition(":")
        return _guard(lambda: xi_t(as_rational(t), parse_u(u)), text, "number")
    if head == "thm3":
        signs, _, rem = rest.partition(":")
        seq, theta = _split_last(rem)
        return _guard(lambda: xi_theorem3(signs, parse_base(seq), Identity(), as_rational(theta)), text, "number")
    if head == "prop12":
        if rest.startswith("explicit:"):
            return _guard(lambda: xi_prop12(parse_u(rest)), text, "number")
        return _guard(lambda: xi_prop12(rest), text, "number")
    if head == "prop13":
        return _guard(lambda: xi_prop13(parse_schedule(rest)), text, "number")
    if head == "prop14":
        q, u = _split_seq_u(rest)
        return _guard(lambda: xi_prop14(q, u), text, "number")
    raise SpecError(f"unknown number spec {text!r}")
