"""The ten acceptance criteria, each at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line.  Run directly with
``python3 tests/test_acceptance.py`` for the summary alone, or under pytest.
"""
from __future__ import annotations

import itertools
import random
import re
import sys
import time
from decimal import Decimal
from pathlib import Path

import pytest
from gmpy2 import mpq, mpz

sys.path.insert(0, str(Path(__file__).parent))
from oracles import is_sum_of_two_squares_by_factoring, u_classic  # noqa: E402

from liouville.core import floor_pow, log2_interval, nearest_int  # noqa: E402
from liouville.errors import CertificateError  # noqa: E402
from liouville.measure import (  # noqa: E402
    criterion_ratio,
    gap_trials,
    nonmember_probe,
    interleaved_tau_ratios,
    two_squares_check,
    un_profile,
)
from liouville.numbers import RationalNumber, erdos_split, liouville_classic, xi_prop12, xi_theorem3  # noqa: E402
from liouville.sequences import FactorialPow, Identity, Subsequence  # noqa: E402
from liouville.witness import (  # noqa: E402
    combine2,
    dumps,
    emit_certificate,
    load_certificate,
    natural_witness,
    normalize,
    reciprocal,
)

Q2 = FactorialPow(2)
U = Identity()
CHECKS = {}


def criterion(number: int, title: str):
    def register(fn):
        CHECKS[number] = (title, fn)
        return fn

    return register


def dec(q) -> Decimal:
    return Decimal(int(q.numerator)) / Decimal(int(q.denominator))


# ----------------------------------------------------------------- 1


@criterion(1, "u_n profile of sum 10^-n! within n +/- 0.01, n = 2..6, < 10 s")
def check_profile():
    t0 = time.perf_counter()
    prof = un_profile(liouville_classic(10), FactorialPow(10), range(2, 7))
    elapsed = time.perf_counter() - t0
    ok = elapsed < 10
    worst = Decimal(0)
    for row in prof.rows:
        lo, hi = dec(row.u.lo), dec(row.u.hi)
        ok &= row.n - Decimal("0.01") <= lo and hi <= row.n + Decimal("0.01")
        ok &= lo <= u_classic(10, row.n) <= hi
        worst = max(worst, abs(hi - row.n), abs(row.n - lo))
    return ok, f"max |u_n - n| <= {worst:.3e}, {elapsed:.2f}s"


# ----------------------------------------------------------------- 2


def field_witnesses():
    w = natural_witness(liouville_classic(2), Q2, U)
    w2 = natural_witness(liouville_classic(4), Q2, U, power=2)
    return w, w2, {
        "sub": combine2(w, w2, "sub"),
        "mul": combine2(w, w2, "mul"),
        "reciprocal": reciprocal(w),
        "normalize": normalize(w),
        "normalize-reciprocal": normalize(reciprocal(w)),
    }


@criterion(2, "combine2 sub/mul, reciprocal, normalize pass n = 3..7, < 30 s")
def check_field_closure():
    t0 = time.perf_counter()
    w, w2, outs = field_witnesses()
    ok = w.kappa1 <= 2 and w2.kappa1 <= 2 and w.kappa2 == w2.kappa2 == mpq(1, 2)
    for mode in ("sub", "mul"):
        ok &= outs[mode].kappa1 == w.kappa1 + w2.kappa1
        ok &= outs[mode].kappa2 == min(w.kappa2, w2.kappa2) / 2
    failed = [name for name, o in outs.items() if not all(v.passed for v in o.verify_range(3, 7))]
    elapsed = time.perf_counter() - t0
    ok &= not failed and elapsed < 30
    return ok, f"{len(outs)} derived witnesses, failing: {failed or 'none'}, {elapsed:.2f}s"


# ----------------------------------------------------------------- 3


@criterion(3, "criterion ratios exact; interleaved tau-family ratios < 0.2 on n = 16..32")
def check_criterion():
    ok = True
    for n in range(1, 12):
        r = criterion_ratio(Q2, U, n)
        ok &= r.width == 0 and r.lo == mpq(n + 1, n)
    ok &= criterion_ratio(Q2, U, 3).lo == mpq(4, 3)
    rows = interleaved_tau_ratios("1/3", "2/3", range(16, 33))
    ok &= rows[0].odd_over_even == mpq(3, 16)
    ok &= all(r.odd_over_even < mpq(1, 5) for r in rows)
    other = max(r.even_over_odd for r in rows)
    return ok, (f"r_3 = 4/3, max ratio {max(r.odd_over_even for r in rows)} on 16..32 "
                f"(reverse ratio max {float(other):.4f}, reported only)")


# ----------------------------------------------------------------- 4


@criterion(4, "gap disjunction on 1000 planted instances")
def check_gap():
    trials = gap_trials(1000, seed=2024)
    bad = [inst for inst, v in trials if not v.holds]
    return not bad, f"{len(trials)} instances, {len(bad)} counterexamples"


# ----------------------------------------------------------------- 5


def prop12_witness():
    return natural_witness(xi_prop12("sqrt"), Subsequence(Q2, "even"), U)


@criterion(5, "prop12 witness on the even subsequence n = 2..4; probe PASS at levels 2..3")
def check_prop12():
    w = prop12_witness()
    verdicts = w.verify_range(2, 4)
    ok = [v.n for v in verdicts] == [2, 3, 4] and all(v.passed for v in verdicts)
    x = xi_prop12("sqrt")
    # level n probes the odd index 2n+1 of the full sequence
    probes = [nonmember_probe(x, Q2, U, 1, "1/2", 2 * n + 1) for n in (2, 3)]
    ok &= all(p.verdict == "PASS" for p in probes)
    return ok, f"witness {[v.verdict for v in verdicts]}, probes {[(p.n, p.verdict) for p in probes]}"


# ----------------------------------------------------------------- 6

SIGN_FAMILY = ["++++++", "------", "+-+-+-", "-+-+-+", "++--++", "+++---", "-++-+-", "+--+-+"]


@criterion(6, "sign-family ordering and residue bounds 1/2^c_l < |xi_e - r_n| <= 2/2^c_l")
def check_sign_family():
    xs = {e: xi_theorem3(e, Q2, U, "1/2") for e in SIGN_FAMILY}
    order_ok = True
    for a, b in itertools.combinations(SIGN_FAMILY, 2):
        k = next(i for i in range(6) if a[i] != b[i])
        expect = -1 if a[k] == "-" else 1
        bits = int(xs[a].c(k + 2)) + 64
        ea, eb = xs[a].enclose(bits), xs[b].enclose(bits)
        got = -1 if ea.hi < eb.lo else (1 if eb.hi < ea.lo else 0)
        order_ok &= got == expect
    upper_bad, lower_bad = [], []
    for e, x in xs.items():
        for ell in range(1, 7):
            r = x.residue(ell)
            unit = mpq(1, mpz(2) ** int(x.c(ell)))
            if not r.mag() <= 2 * unit:
                upper_bad.append((e, ell))
            if not r.mig() > unit:
                lower_bad.append((e, ell))
    # periodic signs: e_7 = e_1
    flips = [(e, ell) for e in SIGN_FAMILY for ell in range(1, 7) if (e + e)[ell] != e[ell - 1]]
    where = "exactly the sign changes e_(l+1) = -e_l" if lower_bad == flips else "not only at sign changes"
    ok = order_ok and not upper_bad and not lower_bad
    return ok, (f"orderings {'match' if order_ok else 'MISMATCH'}; upper bound violations {len(upper_bad)}; "
                f"lower bound violations {len(lower_bad)}/48 at {where}")


# ----------------------------------------------------------------- 7


@criterion(7, "x^2 + y^2 = N z^2 has no positive solution, z <= 20, for obstructed N <= 200")
def check_two_squares():
    flagged, ok = [], True
    for N in range(1, 201):
        r = two_squares_check(N, z_max=20)
        ok &= r.obstructed == (not is_sum_of_two_squares_by_factoring(N))
        if r.obstructed:
            flagged.append(N)
            ok &= r.solutions == []
    return ok, f"{len(flagged)} obstructed N, no solutions found"


# ----------------------------------------------------------------- 8

DIGIT = re.compile(r"\d")


def tamper_all_digits(text: str) -> int:
    """Number of single-digit edits that still load as a passing certificate."""
    survivors = 0
    for m in DIGIT.finditer(text):
        i = m.start()
        bad = text[:i] + str((int(text[i]) + 1) % 10) + text[i + 1:]
        try:
            survivors += load_certificate(bad).all_pass
        except CertificateError:
            pass
    return survivors


def tamper_semantic(doc: dict, rng: random.Random, per_field: int = 3) -> int:
    """Edits to pair and bound fields with the digest ignored; re-verification must catch them."""
    survivors = 0
    for k, entry in enumerate(doc["entries"]):
        for key in ("a", "b", "rhs_log2", "bound_log2"):
            value = entry[key]
            text = str(value["pow2"]) if isinstance(value, dict) else value
            spots = [i for i, ch in enumerate(text) if ch.isdigit()]
            for i in rng.sample(spots, min(per_field, len(spots))):
                new = text[:i] + str((int(text[i]) + 1) % 10) + text[i + 1:]
                if isinstance(value, dict):
                    if new.startswith("0"):
                        continue
                    new = {"pow2": int(new)}
                forged = {**doc, "entries": [dict(e) for e in doc["entries"]]}
                forged["entries"][k][key] = new
                try:
                    survivors += load_certificate(forged, check_digest=False).all_pass
                except CertificateError:
                    pass
    return survivors


@criterion(8, "certificate round-trip bit-for-bit; every single-digit tamper fails")
def check_certificates():
    _, _, outs = field_witnesses()
    jobs = [(name, o, 3, 7) for name, o in outs.items()] + [("prop12-even", prop12_witness(), 2, 4)]
    rng = random.Random(8)
    ok, digits, survivors = True, 0, 0
    for _, w, lo, hi in jobs:
        doc = emit_certificate(w, lo, hi)
        text = dumps(doc)
        check = load_certificate(text)
        ok &= check.all_pass
        ok &= [(v.n, v.b, v.a, v.verdict) for v in check.verdicts] == \
              [(v.n, v.b, v.a, v.verdict) for v in w.verify_range(lo, hi)]
        ok &= dumps(emit_certificate(check.witness, lo, hi)) == text
        digits += len(DIGIT.findall(text))
        survivors += tamper_all_digits(text) + tamper_semantic(doc, rng)
    ok &= survivors == 0
    return ok, f"{len(jobs)} certificates, {digits} digits tampered one at a time, {survivors} survived"


# ----------------------------------------------------------------- 9


@criterion(9, "digit-block split reproduces x exactly, depth <= lambda_6, audits pass")
def check_erdos():
    ok, runs = True, 0
    depths = [1, 2, 5, 6, 23, 24, 119, 120, 719, 720]
    third = RationalNumber(mpq(1, 3))
    for depth in depths:
        s = erdos_split(third, "factorial", depth)
        ok &= s.exact() and s.x_value == mpq(int((mpz(1) << depth) // 3), mpz(1) << depth)
        ok &= all(a.ok for a in s.audit)
        runs += len(s.audit)
    x = liouville_classic(2)
    for k in range(1, 7):
        trunc = RationalNumber(x.partial(k))
        for depth in depths:
            s = erdos_split(trunc, "factorial", depth)
            ok &= s.exact() and all(a.ok for a in s.audit)
            runs += len(s.audit)
        ok &= erdos_split(trunc, "factorial", 720).x_value == x.partial(k)
    return ok, f"{len(depths) * 7} splits, {runs} run audits"


# ----------------------------------------------------------------- 10


@criterion(10, "kernel: nearest_int, floor_pow sandwich, log2_interval nesting/exactness")
def check_kernel():
    rng = random.Random(10)
    ok = True
    for _ in range(10_000):
        x = mpq(rng.randrange(-10**12, 10**12), rng.randrange(1, 10**6))
        m, d = nearest_int(x)
        ok &= abs(x - m) == d <= mpq(1, 2)
        ok &= d <= abs(x - m - 1) and d <= abs(x - m + 1)
    for _ in range(1_000):
        den = rng.randrange(1, 1000)
        t = mpq(den + rng.randrange(1, 5000), den)
        e = rng.randrange(0, 60)
        f = floor_pow(t, e)
        ok &= f * t.denominator ** e <= t.numerator ** e < (f + 1) * t.denominator ** e
    for _ in range(300):
        x = mpq(rng.randrange(1, 10**30), rng.randrange(1, 10**9))
        outer = log2_interval(x, 8)
        for bits in (16, 32, 64):
            inner = log2_interval(x, bits)
            ok &= outer.lo <= inner.lo <= inner.hi <= outer.hi
            outer = inner
    for E in itertools.chain(range(-64, 65), [1000, 5040, 40320]):
        iv = log2_interval(mpq(2) ** E)
        ok &= iv.lo == iv.hi == E
    return ok, "10^4 nearest_int, 10^3 floor_pow, 300 nesting chains, 132 powers of two"


# ----------------------------------------------------------------- runner


def run_check(number: int) -> tuple[bool, str]:
    title, fn = CHECKS[number]
    t0 = time.perf_counter()
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title} | {detail} [{time.perf_counter() - t0:.1f}s]"
    return bool(ok), line


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance(number, capsys):
    ok, line = run_check(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_check(n) for n in sorted(CHECKS)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
