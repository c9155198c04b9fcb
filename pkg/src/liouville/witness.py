"""Approximation witnesses (b_n, a_n) and the algebra that combines them.

A witness for xi against (q, u) with constants (kappa1, kappa2) claims, for
every n >= valid_from,

    1 <= b_n <= q_n^kappa1   and   0 < |b_n xi - a_n| <= q_n^(-kappa2 u_n).

``verify_at`` decides both inequalities exactly: sizes by integer/exponent
comparison, the residual by refining an interval enclosure of b_n xi - a_n
until it separates from the threshold.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import gmpy2
import jsonschema
from gmpy2 import mpq, mpz

from .core import (
    DEFAULT_LOG_BITS,
    Interval,
    as_int,
    as_rational,
    compare_to_power,
    format_rational,
    is_pow2,
    log2_enclosure,
    log2_interval,
    nearest_int,
)
from .errors import (
    CertificateError,
    HypothesisViolation,
    PrecisionExhausted,
    RationalHit,
)
from .numbers import DEFAULT_MAX_BITS, RationalNumber, Real, Reciprocal, CriterionSeriesNumber, as_real
from .sequences import BaseSequence, ExponentSequence

SCHEMA_ID = "liouville-witness-v1"
Pair = tuple[mpz, mpz]


def certified_nearest(x: Real, b, max_bits: int = DEFAULT_MAX_BITS) -> mpz:
    """The nearest integer to b*x, certified by an enclosure that avoids half-integers."""
    b = mpz(b)
    bits = int(b.bit_length()) + 32
    while bits <= max_bits + int(b.bit_length()):
        y = x.enclose(bits) * b
        m, _ = nearest_int(y.lo)
        if y.lo > m - mpq(1, 2) and y.hi < m + mpq(1, 2):
            return m
        bits *= 2
    raise PrecisionExhausted(f"nearest integer to b*{x.spec} not certified")


def _log2_of_int(q: mpz) -> tuple[mpq, mpq]:
    iv = log2_interval(q, DEFAULT_LOG_BITS)
    return iv.lo, iv.hi


@dataclass(frozen=True)
class Verdict:
    n: int
    b: mpz
    a: mpz
    size_ok: bool
    approx_ok: bool
    lhs_log2: tuple[mpq, mpq] | None
    rhs_log2: mpq
    bound_log2: mpq

    @property
    def passed(self) -> bool:
        return self.size_ok and self.approx_ok

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


class ApproxWitness:
    """Pairs n -> (b_n, a_n) for ``subject`` against ``base`` and ``u``."""

    def __init__(
        self,
        subject: Real,
        base: BaseSequence,
        u: ExponentSequence,
        kappa1,
        kappa2,
        pairs: Callable[[int], Pair],
        valid_from: int = 1,
        label: str = "",
        max_bits: int = DEFAULT_MAX_BITS,
        denominators: Callable[[int], mpz] | None = None,
    ):
        self.subject = as_real(subject)
        self.base = base
        self.u = u
        self.kappa1 = as_rational(kappa1)
        self.kappa2 = as_rational(kappa2)
        if self.kappa1 <= 0 or self.kappa2 <= 0:
            raise HypothesisViolation("kappa1 and kappa2 must be positive")
        self._pairs = pairs
        self._den = denominators
        self.valid_from = int(valid_from)
        self.label = label or self.subject.spec
        self.max_bits = max_bits
        self._memo: dict[int, Pair] = {}
        self._lock = threading.RLock()

    def pair(self, n: int) -> Pair:
        with self._lock:
            hit = self._memo.get(n)
            if hit is None:
                b, a = self._pairs(n)
                hit = (mpz(b), mpz(a))
                self._memo[n] = hit
            return hit

    def b(self, n: int) -> mpz:
        """Denominator b_n; skips computing a_n when a cheap rule is known."""
        hit = self._memo.get(n)
        if hit is None and self._den is not None:
            return mpz(self._den(n))
        return self.pair(n)[0]

    def a(self, n: int) -> mpz:
        return self.pair(n)[1]

    def derive(self, **changes) -> "ApproxWitness":
        """Copy with some fields replaced (pairs are shared unless given)."""
        fields = dict(
            subject=self.subject, base=self.base, u=self.u, kappa1=self.kappa1, kappa2=self.kappa2,
            pairs=self.pair, valid_from=self.valid_from, label=self.label, max_bits=self.max_bits,
            denominators=None if "pairs" in changes else self._den,
        )
        fields.update(changes)
        return ApproxWitness(**fields)

    # ------------------------------------------------------------------ checks

    def _records(self, q: mpz, r: mpq) -> tuple[mpq, mpq]:
        if is_pow2(q):
            e = int(q.bit_length()) - 1
            return -r * e, self.kappa1 * e
        lo, _ = _log2_of_int(q)
        return -r * lo, self.kappa1 * lo

    def verify_at(self, n: int) -> Verdict:
        if n < self.valid_from:
            raise HypothesisViolation(f"n = {n} is below valid_from = {self.valid_from}")
        b, a = self.pair(n)
        q = self.base.term(n)
        r = self.kappa2 * self.u(n)
        rhs_rec, bound_rec = self._records(q, r)
        size_ok = b >= 1 and compare_to_power(b, q, self.kappa1) <= 0
        if b < 1:
            return Verdict(n, b, a, False, False, None, rhs_rec, bound_rec)
        need = int(gmpy2.c_div(r.numerator * q.bit_length(), r.denominator))
        bits = max(64, need + int(b.bit_length()) + 16)
        while True:
            x = self.subject.enclose(bits)
            res = x * b - a
            if not res.contains_zero():
                if compare_to_power(res.mag(), q, -r) <= 0:
                    approx_ok = True
                    break
                if compare_to_power(res.mig(), q, -r) > 0:
                    approx_ok = False
                    break
            if bits >= self.max_bits + int(b.bit_length()):
                if res.width == 0 and res.lo == 0:
                    raise RationalHit(f"{self.subject.spec}: b_{n} xi - a_{n} is exactly 0")
                raise PrecisionExhausted(f"{self.subject.spec}: residual at n = {n} not resolved "
                                         f"within {self.max_bits} bits")
            bits *= 2
        lhs = log2_enclosure(res)
        return Verdict(n, b, a, size_ok, approx_ok, (lhs.lo, lhs.hi), rhs_rec, bound_rec)

    def verify_range(self, lo: int, hi: int) -> list[Verdict]:
        return [self.verify_at(n) for n in range(max(lo, self.valid_from), hi + 1)]

    def __repr__(self):
        return (f"<ApproxWitness {self.label} base={self.base.spec} kappa=({format_rational(self.kappa1)},"
                f"{format_rational(self.kappa2)}) from {self.valid_from}>")


def natural_witness(subject: Real, base: BaseSequence, u: ExponentSequence, *, power: int = 1,
                    kappa1=None, kappa2="1/2", valid_from: int | None = None, label: str = "") -> ApproxWitness:
    """b_n = q_n^power, a_n = nearest integer to b_n xi."""
    subject = as_real(subject)

    def pairs(n):
        b = base.term(n) ** power
        return b, certified_nearest(subject, b)

    return ApproxWitness(subject, base, u, kappa1 if kappa1 is not None else power, kappa2, pairs,
                         valid_from=base.valid_from if valid_from is None else valid_from, label=label,
                         denominators=lambda n: base.term(n) ** power)


def restrict(w: ApproxWitness, base: BaseSequence, index: Callable[[int], int], u: ExponentSequence | None = None,
             valid_from: int = 1, label: str = "") -> ApproxWitness:
    """The same pairs read along a subsequence: n -> pair(index(n)) against ``base``."""
    return ApproxWitness(w.subject, base, u or w.u, w.kappa1, w.kappa2, lambda n: w.pair(index(n)),
                         valid_from=valid_from, label=label or f"{w.label}|{base.spec}")


# ---------------------------------------------------------------------- algebra


def _check_same_frame(w1: ApproxWitness, w2: ApproxWitness) -> None:
    if w1.base.spec != w2.base.spec or w1.u.spec != w2.u.spec:
        raise HypothesisViolation(
            f"witnesses use different base/exponent sequences: {w1.base.spec}/{w1.u.spec} vs {w2.base.spec}/{w2.u.spec}"
        )


def _first_index_with(base: BaseSequence, start: int, pred: Callable[[int], bool], budget: int = 64) -> int:
    n = start
    while not pred(n):
        n += 1
        if n - start > budget:
            raise PrecisionExhausted("valid_from could not be raised within the scan budget")
    return n


def affine_q(w: ApproxWitness, r, s, mode: str = "shift", kappa1=None, kappa2=None) -> ApproxWitness:
    """Witness for xi - r/s (``shift``) or xi * r/s (``scale``)."""
    r, s = as_int(r), as_int(s)
    if s == 0:
        raise HypothesisViolation("s must be nonzero")
    if s < 0:
        r, s = -r, -s
    c = mpq(r, s)
    if mode == "shift":
        subject = w.subject - RationalNumber(c)

        def pairs(n):
            b, a = w.pair(n)
            return s * b, s * a - r * b

        factor = s
    elif mode == "scale":
        if r == 0:
            raise HypothesisViolation("scale needs r != 0")
        subject = w.subject * RationalNumber(c)

        def pairs(n):
            b, a = w.pair(n)
            return s * b, r * a

        factor = abs(r)
    else:
        raise ValueError(f"unknown affine mode {mode!r}")
    k1 = w.kappa1 if s == 1 else w.kappa1 + 1
    k2 = w.kappa2 if factor == 1 else w.kappa2 / 2
    vf = w.valid_from if s == 1 else _first_index_with(w.base, w.valid_from, lambda n: w.base.term(n) >= s)
    return ApproxWitness(subject, w.base, w.u, kappa1 if kappa1 is not None else k1,
                         kappa2 if kappa2 is not None else k2, pairs, valid_from=vf,
                         label=f"{mode}({w.label},{format_rational(c)})")


def combine2(w1: ApproxWitness, w2: ApproxWitness, mode: str = "sub", kappa2=None) -> ApproxWitness:
    """Witness for xi - xi', xi + xi' or xi * xi' on a shared base sequence."""
    _check_same_frame(w1, w2)
    if mode == "sub":
        subject = w1.subject - w2.subject

        def pairs(n):
            (b, a), (b2, a2) = w1.pair(n), w2.pair(n)
            return b * b2, a * b2 - b * a2
    elif mode == "add":
        subject = w1.subject + w2.subject

        def pairs(n):
            (b, a), (b2, a2) = w1.pair(n), w2.pair(n)
            return b * b2, a * b2 + b * a2
    elif mode == "mul":
        subject = w1.subject * w2.subject

        def pairs(n):
            (b, a), (b2, a2) = w1.pair(n), w2.pair(n)
            return b * b2, a * a2
    else:
        raise ValueError(f"unknown combine mode {mode!r}")
    k2 = kappa2 if kappa2 is not None else min(w1.kappa2, w2.kappa2) / 2
    return ApproxWitness(subject, w1.base, w1.u, w1.kappa1 + w2.kappa1, k2, pairs,
                         valid_from=max(w1.valid_from, w2.valid_from), label=f"{mode}({w1.label},{w2.label})")


def reciprocal(w: ApproxWitness, kappa2=None, budget: int = 64) -> ApproxWitness:
    """Witness for 1/xi: (b, a) -> (|a|, sign(a) b)."""
    def pairs(n):
        b, a = w.pair(n)
        sgn = 1 if a > 0 else -1
        return abs(a), sgn * b

    vf = _first_index_with(w.base, w.valid_from, lambda n: w.a(n) != 0, budget)
    return ApproxWitness(Reciprocal(w.subject), w.base, w.u, 2 * w.kappa1,
                         kappa2 if kappa2 is not None else w.kappa2 / 2, pairs, valid_from=vf,
                         label=f"inv({w.label})")


def normalize(w: ApproxWitness, kappa1=None, kappa2=None) -> ApproxWitness:
    """Scale each pair by ceil(q_n/b_n) when b_n < q_n, so that q_n <= b_n < 2 q_n there."""
    if w.kappa1 < 1:
        raise HypothesisViolation("normalize needs kappa1 >= 1")

    def pairs(n):
        b, a = w.pair(n)
        q = w.base.term(n)
        if b >= q:
            return b, a
        c = gmpy2.c_div(q, b)
        return c * b, c * a

    return w.derive(pairs=pairs, kappa1=kappa1 if kappa1 is not None else w.kappa1,
                    kappa2=kappa2 if kappa2 is not None else w.kappa2 / 2, label=f"normalize({w.label})")


def fit_valid_from(w: ApproxWitness, n_max: int) -> tuple[ApproxWitness, list[Verdict]]:
    """Smallest n0 >= valid_from with every check in [n0, n_max] passing (greedy, from the top)."""
    verdicts = w.verify_range(w.valid_from, n_max)
    n0 = n_max + 1
    for v in reversed(verdicts):
        if not v.passed:
            break
        n0 = v.n
    return w.derive(valid_from=n0), verdicts


# --------------------------------------------------------- rational functions


def _trim(coeffs: Sequence) -> list[mpz]:
    c = [as_int(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_real(x: Real, coeffs: list[mpz]) -> Real:
    acc: Real = RationalNumber(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * x + RationalNumber(c)
    return acc


def _poly_witness(w: ApproxWitness, coeffs: list[mpz]) -> ApproxWitness:
    """Horner: ((p_d xi + p_{d-1}) xi + ...) + p_0, built from scale/shift/mul."""
    d = len(coeffs) - 1
    acc = w if coeffs[d] == 1 else affine_q(w, coeffs[d], 1, "scale")
    if coeffs[d - 1] != 0:
        acc = affine_q(acc, -coeffs[d - 1], 1, "shift")
    for k in range(d - 2, -1, -1):
        acc = combine2(acc, w, "mul")
        if coeffs[k] != 0:
            acc = affine_q(acc, -coeffs[k], 1, "shift")
    return acc


def apply_rational_function(w: ApproxWitness, P: Sequence, Q: Sequence = (1,)) -> ApproxWitness:
    """Witness for P(xi)/Q(xi); coefficients are listed from the constant term up."""
    P, Q = _trim(P), _trim(Q)
    if not Q:
        raise HypothesisViolation("Q is the zero polynomial")
    if not P or (len(P) == 1 and len(Q) == 1):
        raise HypothesisViolation("P/Q is constant")
    if len(P) == len(Q) and all(p * Q[-1] == q * P[-1] for p, q in zip(P, Q)):
        raise HypothesisViolation("P/Q is constant")
    _poly_real(w.subject, Q).separated_from_zero()
    if len(Q) == 1:
        c = Q[0]
        return affine_q(_poly_witness(w, P), 1 if c > 0 else -1, abs(c), "scale")
    inv_q = reciprocal(_poly_witness(w, Q))
    if len(P) == 1:
        return inv_q if P[0] == 1 else affine_q(inv_q, P[0], 1, "scale")
    return combine2(_poly_witness(w, P), inv_q, "mul")


# ----------------------------------------------------------------- certificates

_RAT = {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]+)?$"}
_INT = {
    "oneOf": [
        {"type": "string", "pattern": r"^-?[0-9]+$"},
        {"type": "object", "properties": {"pow2": {"type": "integer", "minimum": 1}},
         "required": ["pow2"], "additionalProperties": False},
    ]
}
CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["schema", "subject", "base", "u", "kappa1", "kappa2", "valid_from", "entries", "digest"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "subject": {"type": "string"},
        "base": {"type": "string"},
        "u": {"type": "string"},
        "kappa1": _RAT,
        "kappa2": _RAT,
        "valid_from": {"type": "integer", "minimum": 1},
        "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n", "b", "a", "lhs_log2", "rhs_log2", "bound_log2", "verdict"],
                "additionalProperties": False,
                "properties": {
                    "n": {"type": "integer", "minimum": 1},
                    "b": _INT,
                    "a": _INT,
                    "lhs_log2": {"oneOf": [{"type": "array", "items": _RAT, "minItems": 2, "maxItems": 2},
                                           {"type": "null"}]},
                    "rhs_log2": _RAT,
                    "bound_log2": _RAT,
                    "verdict": {"enum": ["pass", "fail"]},
                },
            },
        },
    },
}
_VALIDATOR = jsonschema.Draft202012Validator(CERTIFICATE_SCHEMA)


def encode_int(x) -> str | dict:
    x = mpz(x)
    if x >= 2 and is_pow2(x):
        return {"pow2": int(x.bit_length()) - 1}
    return str(x)


def decode_int(v) -> mpz:
    if isinstance(v, dict):
        return mpz(1) << int(v["pow2"])
    return mpz(v)


def _entry(v: Verdict) -> dict:
    return {
        "n": v.n,
        "b": encode_int(v.b),
        "a": encode_int(v.a),
        "lhs_log2": None if v.lhs_log2 is None else [format_rational(v.lhs_log2[0]), format_rational(v.lhs_log2[1])],
        "rhs_log2": format_rational(v.rhs_log2),
        "bound_log2": format_rational(v.bound_log2),
        "verdict": v.verdict,
    }


def dumps(doc: dict) -> str:
    """Canonical JSON: sorted keys, no whitespace, no floats."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def _digest(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "digest"}
    return hashlib.sha256(dumps(body).encode()).hexdigest()


def emit_certificate(w: ApproxWitness, n_lo: int, n_hi: int) -> dict:
    verdicts = w.verify_range(n_lo, n_hi)
    doc = {
        "schema": SCHEMA_ID,
        "subject": w.subject.spec,
        "base": w.base.spec,
        "u": w.u.spec,
        "kappa1": format_rational(w.kappa1),
        "kappa2": format_rational(w.kappa2),
        "valid_from": w.valid_from,
        "entries": [_entry(v) for v in verdicts],
    }
    doc["digest"] = _digest(doc)
    return doc


@dataclass
class CertificateCheck:
    witness: ApproxWitness
    verdicts: list[Verdict]

    @property
    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts)


def load_certificate(doc: dict | str, check_digest: bool = True) -> CertificateCheck:
    """Validate, rebuild the witness from its own fields and re-verify every entry.

    Raises CertificateError on schema violations, digest mismatch or any
    recomputed field that differs from the recorded one.
    """
    from .specs import parse_base, parse_number, parse_u

    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise CertificateError(f"not JSON: {exc}") from exc
    # the digest is checked first so that a modified file is rejected before it is interpreted
    if check_digest:
        if not isinstance(doc, dict) or not isinstance(doc.get("digest"), str):
            raise CertificateError("schema violation: missing digest")
        if _digest(doc) != doc["digest"]:
            raise CertificateError("digest mismatch: certificate was modified")
    try:
        _VALIDATOR.validate(doc)
    except jsonschema.ValidationError as exc:
        raise CertificateError(f"schema violation: {exc.message}") from exc
    entries = doc["entries"]
    ns = [e["n"] for e in entries]
    if ns != sorted(set(ns)):
        raise CertificateError("entries must have strictly increasing n")
    if ns and ns[0] < doc["valid_from"]:
        raise CertificateError("entry below valid_from")
    table = {e["n"]: (decode_int(e["b"]), decode_int(e["a"])) for e in entries}

    def pairs(n):
        try:
            return table[n]
        except KeyError:
            raise CertificateError(f"no recorded pair for n = {n}") from None

    try:
        w = ApproxWitness(parse_number(doc["subject"]), parse_base(doc["base"]), parse_u(doc["u"]),
                          as_rational(doc["kappa1"]), as_rational(doc["kappa2"]), pairs,
                          valid_from=doc["valid_from"])
    except (ValueError, TypeError, HypothesisViolation) as exc:
        raise CertificateError(f"cannot rebuild witness: {exc}") from exc
    verdicts = []
    for e in entries:
        v = w.verify_at(e["n"])
        fresh = _entry(v)
        for key in ("lhs_log2", "rhs_log2", "bound_log2", "verdict"):
            if fresh[key] != e[key]:
                raise CertificateError(f"entry n = {e['n']}: recomputed {key} {fresh[key]!r} != recorded {e[key]!r}")
        verdicts.append(v)
    return CertificateCheck(w, verdicts)


def criterion_witness(x: CriterionSeriesNumber, kappa2="1/4", label: str = "") -> ApproxWitness:
    """Pairs for a criterion series against its own q: b_n = 2^{c_l}, l the last hit with N_l <= n."""

    def last_hit(n):
        ell = 1
        while x.N(ell + 1) <= n:
            ell += 1
        return ell

    def pairs(n):
        ell = last_hit(n)
        cl = x.c(ell)
        a = sum((x.sign(h) * (mpz(1) << int(cl - x.c(h))) for h in range(1, ell + 1)), mpz(0))
        return mpz(1) << int(cl), a

    return ApproxWitness(x, x.q, x.u, 1, kappa2, pairs, valid_from=1, label=label or f"{x.spec}|own")
