"""Measurements: u_n profiles, growth-criterion ratios, the gap lemma,
continued fractions, finite-scale non-membership probes, companions and the
two-squares obstruction.
"""
from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from math import isqrt
from typing import Iterable

import gmpy2
from gmpy2 import mpq, mpz

from .core import (
    DEFAULT_LOG_BITS,
    Interval,
    Log2Interval,
    as_int,
    as_rational,
    compare_to_power,
    format_rational,
    log2_interval,
    nearest_int,
    rpow_bounds,
)
from .errors import HypothesisViolation, PrecisionExhausted, RationalHit
from .numbers import DEFAULT_MAX_BITS, Real, CriterionSeriesNumber, as_real, xi_theorem3
from .sequences import (
    BaseSequence,
    ExponentSequence,
    FunctionSequence,
    Identity,
    Lemma8Sequence,
    Merge,
    Subsequence,
    TauFactorial,
    lemma8_interleave,
)
from .witness import ApproxWitness, restrict, criterion_witness


def _csv(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_rational(v) if isinstance(v, (type(mpq(0)), type(mpz(0)))) else v for v in row])
    return buf.getvalue()


# ------------------------------------------------------------------ u_n profile


@dataclass(frozen=True)
class ProfileRow:
    n: int
    q_bits: int
    dist_log2: Log2Interval
    u: Interval

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "q_bits": self.q_bits,
            "dist_log2_lo": format_rational(self.dist_log2.lo),
            "dist_log2_hi": format_rational(self.dist_log2.hi),
            "u_lo": format_rational(self.u.lo),
            "u_hi": format_rational(self.u.hi),
        }


@dataclass
class MeasureProfile:
    subject: str
    base: str
    frac_bits: int
    rows: list[ProfileRow]

    @property
    def trend(self) -> str:
        """``growing`` when the last u_n is certified above the first, else ``bounded``."""
        if len(self.rows) >= 2 and self.rows[-1].u.lo > self.rows[0].u.hi:
            return "growing"
        return "bounded"

    def as_dict(self) -> dict:
        return {"subject": self.subject, "base": self.base, "frac_bits": self.frac_bits,
                "trend": self.trend, "rows": [r.as_dict() for r in self.rows]}

    def to_csv(self) -> str:
        keys = ["n", "q_bits", "dist_log2_lo", "dist_log2_hi", "u_lo", "u_hi"]
        return _csv(keys, ([r.as_dict()[k] for k in keys] for r in self.rows))


def nearest_distance(x: Real, qn: mpz, frac_bits: int, max_bits: int = DEFAULT_MAX_BITS) -> Interval:
    """Enclosure of ||q_n x|| whose relative width is at most 2^-frac_bits.

    The working precision follows a fixed doubling ladder, so a larger
    ``frac_bits`` only ever stops later on the same ladder; for series that
    makes the results nest.
    """
    qn = mpz(qn)
    qb = int(qn.bit_length())
    bits = qb + DEFAULT_LOG_BITS
    half = mpq(1, 2)
    while True:
        y = x.enclose(bits) * qn
        m, _ = nearest_int(y.mid)
        if y.lo > m - half and y.hi < m + half:
            d = y - m
            if not d.contains_zero():
                dist = Interval(d.mig(), d.mag())
                if dist.width * (mpz(1) << frac_bits) <= dist.lo:
                    return dist
        if bits >= max_bits + qb:
            if y.width == 0 and y.lo == m:
                raise RationalHit(f"{x.spec}: q_n x is an integer at q_n = 2^{qb - 1}..")
            raise PrecisionExhausted(f"{x.spec}: ||q_n x|| not resolved within {max_bits} bits")
        bits *= 2


def un_profile(x, q: BaseSequence, n_range: Iterable[int], frac_bits: int = DEFAULT_LOG_BITS,
               max_bits: int = DEFAULT_MAX_BITS) -> MeasureProfile:
    """Certified enclosures of u_n = -log ||q_n x|| / log q_n."""
    x = as_real(x)
    rows = []
    for n in n_range:
        qn = q.term(n)
        dist = nearest_distance(x, qn, frac_bits, max_bits)
        dl = Log2Interval(log2_interval(dist.lo, frac_bits).lo, log2_interval(dist.hi, frac_bits).hi)
        lq = q.log2(n, frac_bits)
        if lq.lo <= 0:
            raise HypothesisViolation(f"q_{n} = 1 has no logarithm to divide by")
        u = Interval(-dl.hi, -dl.lo) * Interval(1 / lq.hi, 1 / lq.lo)
        rows.append(ProfileRow(n, int(qn.bit_length()), dl, u))
    return MeasureProfile(x.spec, q.spec, frac_bits, rows)


# ------------------------------------------------------------ growth criterion


@dataclass(frozen=True)
class CriterionRow:
    n: int
    ratio: Interval
    exceeds_theta: str

    def as_dict(self) -> dict:
        return {"n": self.n, "ratio_lo": format_rational(self.ratio.lo),
                "ratio_hi": format_rational(self.ratio.hi), "exceeds_theta": self.exceeds_theta}


@dataclass
class CriterionReport:
    base: str
    u: str
    theta: mpq
    rows: list[CriterionRow]
    warnings: list[str] = field(default_factory=list)

    @property
    def hits(self) -> list[int]:
        return [r.n for r in self.rows if r.exceeds_theta == "true"]

    @property
    def max_ratio_hi(self) -> mpq:
        return max(r.ratio.hi for r in self.rows)

    def as_dict(self) -> dict:
        return {"base": self.base, "u": self.u, "theta": format_rational(self.theta),
                "hits": self.hits, "warnings": self.warnings, "rows": [r.as_dict() for r in self.rows]}

    def to_csv(self) -> str:
        keys = ["n", "ratio_lo", "ratio_hi", "exceeds_theta"]
        return _csv(keys, ([r.as_dict()[k] for k in keys] for r in self.rows))


def criterion_ratio(q: BaseSequence, u: ExponentSequence, n: int, frac_bits: int = DEFAULT_LOG_BITS) -> Interval:
    """log q_{n+1} / (u_n log q_n); exact (zero width) for power-of-two sequences."""
    un = u(n)
    if q.pow2:
        e0, e1 = q.key(n), q.key(n + 1)
        if e0 == 0:
            raise HypothesisViolation(f"q_{n} = 1 has no logarithm to divide by")
        return Interval.point(mpq(e1) / (un * e0))
    l0, l1 = q.log2(n, frac_bits), q.log2(n + 1, frac_bits)
    if l0.lo <= 0:
        raise HypothesisViolation(f"q_{n} = 1 has no logarithm to divide by")
    return Interval(l1.lo / (un * l0.hi), l1.hi / (un * l0.lo))


def criterion_report(q: BaseSequence, u: ExponentSequence, n_max: int, theta="1/2",
                     max_frac_bits: int = 4096) -> CriterionReport:
    theta = as_rational(theta)
    rows = []
    for n in range(1, n_max):
        bits = DEFAULT_LOG_BITS
        while True:
            ratio = criterion_ratio(q, u, n, bits)
            if ratio.lo > theta:
                flag = "true"
            elif ratio.hi <= theta:
                flag = "false"
            else:
                flag = "unknown"
            if flag != "unknown" or ratio.width == 0 or bits >= max_frac_bits:
                break
            bits *= 4
        rows.append(CriterionRow(n, ratio, flag))
    warnings = []
    if not u.has_step_ge_one(n_max):
        warnings.append("u_{n+1} - u_n >= 1 fails on the evaluated prefix; the emptiness direction does not apply")
    return CriterionReport(q.spec, u.spec, theta, rows, warnings)


@dataclass(frozen=True)
class TauRatioRow:
    """Both interleaving ratios for two tau-families at index n."""

    n: int
    merged_index: int
    odd_over_even: mpq
    even_over_odd: mpq


def interleaved_tau_ratios(tau1, tau2, ns: Iterable[int]) -> list[TauRatioRow]:
    """log q_{2n+1} / (n log q_{2n}) and log q_{2n+2} / (n log q_{2n+1}), where
    q_{2n} = 2^{n! floor(n^tau1)} and q_{2n+1} = 2^{n! floor(n^tau2)}.

    ``merged_index`` is the position of q_{2n} inside the duplicate-free merge
    of both families; the merge is checked to alternate there.
    """
    s1, s2 = TauFactorial(tau1), TauFactorial(tau2)
    merged = Merge(s1, s2)
    rows = []
    m = 1
    for n in ns:
        e_even, e_odd, e_next = s1.key(n), s2.key(n), s1.key(n + 1)
        while merged.key(m) < e_even:
            m += 1
        if not (merged.key(m) == e_even and merged.key(m + 1) == e_odd and merged.key(m + 2) == e_next):
            raise HypothesisViolation(f"tau-families do not alternate at n = {n}")
        rows.append(TauRatioRow(n, m, mpq(e_odd) / (n * e_even), mpq(e_next) / (n * e_odd)))
    return rows


# --------------------------------------------------------------- gap lemma


@dataclass(frozen=True)
class GapVerdict:
    q: mpz
    q2: mpz
    u: mpq
    q2_ge_q_pow_u: bool
    q_ge_q2_pow_u: bool

    @property
    def holds(self) -> bool:
        return self.q2_ge_q_pow_u or self.q_ge_q2_pow_u


def _neg_power_bounds(q: mpz, r: mpq, frac_bits: int) -> tuple[mpq, mpq]:
    lo, hi = rpow_bounds(q, r, frac_bits)
    return 1 / (hi if hi > 0 else mpq(1, mpz(1) << frac_bits)), 1 / max(lo, mpq(1))


def gap_check(p, q, p2, q2, u, max_frac_bits: int = 1 << 14) -> GapVerdict:
    """Decide the two sides of the gap disjunction for distinct p/q and p2/q2.

    The hypothesis checked exactly is that the intervals of radius q^{-u-1}
    around p/q and q2^{-u-2} around p2/q2 meet (implied by both being close
    to one xi); HypothesisViolation when they do not.  The verdict reports
    q2 >= q^u and q >= q2^u.
    """
    p, q, p2, q2 = as_int(p), as_int(q), as_int(p2), as_int(q2)
    u = as_rational(u)
    if q < 1 or q2 < 1:
        raise HypothesisViolation("denominators must be positive")
    if u <= 0:
        raise HypothesisViolation("u must be positive")
    delta = abs(mpq(p, q) - mpq(p2, q2))
    if delta == 0:
        raise HypothesisViolation("p/q and p2/q2 must be distinct")
    bits = 64
    while True:
        a_lo, a_hi = _neg_power_bounds(q, u + 1, bits)
        b_lo, b_hi = _neg_power_bounds(q2, u + 2, bits)
        if delta <= a_lo + b_lo:
            break
        if delta > a_hi + b_hi:
            raise HypothesisViolation("no common xi: the approximation intervals are disjoint")
        if bits >= max_frac_bits:
            raise PrecisionExhausted("gap hypothesis undecided")
        bits *= 4
    return GapVerdict(q, q2, u, compare_to_power(q2, q, u) >= 0, compare_to_power(q, q2, u) >= 0)


@dataclass(frozen=True)
class GapInstance:
    p: mpz
    q: mpz
    p2: mpz
    q2: mpz
    u: mpq
    xi: mpq


def _log2_floor_ratio(num_log: Log2Interval, den_log: Log2Interval) -> mpq:
    return num_log.lo / den_log.hi


def random_gap_instance(rng: random.Random, depth: int = 12, max_quotient: int = 1 << 40,
                        integer_u: bool = False) -> GapInstance:
    """Plant xi through random partial quotients, take two of its convergents
    and the largest u (on a 1/8 grid, or an integer) for which
    |q xi - p| <= q^{-u} and |q2 xi - p2| <= q2^{-u-1}.
    """
    while True:
        quotients = [rng.randrange(0, 4)] + [rng.choice([rng.randrange(1, 9), rng.randrange(1, max_quotient)])
                                             for _ in range(depth)]
        xi = mpq(quotients[-1])
        for a in reversed(quotients[:-1]):
            xi = a + 1 / xi
        cf = cf_convergents(xi, len(quotients))
        convs = [(p, c) for p, c in cf.convergents if c >= 2 and mpq(p, c) != xi]
        if len(convs) < 2:
            continue
        i, j = sorted(rng.sample(range(len(convs)), 2))
        if rng.random() < 0.5:
            i, j = j, i
        (p, q), (p2, q2) = convs[i], convs[j]
        e1 = abs(q * xi - p)
        e2 = abs(q2 * xi - p2)
        u1 = _log2_floor_ratio(log2_interval(1 / e1), log2_interval(q))
        u2 = _log2_floor_ratio(log2_interval(1 / e2), log2_interval(q2)) - 1
        top = min(u1, u2)
        u = mpq(gmpy2.f_div(top.numerator, top.denominator)) if integer_u else \
            mpq(gmpy2.f_div(8 * top.numerator, top.denominator), 8)
        if u <= 0:
            continue
        if compare_to_power(1 / e1, q, u) < 0 or compare_to_power(1 / e2, q2, u + 1) < 0:
            continue
        return GapInstance(p, q, p2, q2, u, xi)


def gap_trials(count: int, seed: int = 0, integer_u: bool = False) -> list[tuple[GapInstance, GapVerdict]]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        inst = random_gap_instance(rng, integer_u=integer_u)
        out.append((inst, gap_check(inst.p, inst.q, inst.p2, inst.q2, inst.u)))
    return out


# -------------------------------------------------------- continued fractions


@dataclass
class CFExpansion:
    x: mpq
    quotients: list[mpz]
    convergents: list[tuple[mpz, mpz]]
    complete: bool

    def semiconvergents(self, max_den=None) -> list[tuple[mpz, mpz]]:
        """Intermediate fractions (j p_k + p_{k-1}) / (j q_k + q_{k-1}), 0 < j < a_{k+1}.

        With ``max_den`` only the largest admissible j per k is kept: along
        one such family the distance |s x - p| shrinks as j grows.
        """
        out = []
        for k in range(1, len(self.convergents) - 1 + (0 if self.complete else 1)):
            if k + 1 >= len(self.quotients):
                break
            (p0, q0), (p1, q1) = self.convergents[k - 1], self.convergents[k]
            a = self.quotients[k + 1]
            if max_den is None:
                out.extend((j * p1 + p0, j * q1 + q0) for j in range(1, int(a)))
            else:
                j = min(a - 1, (mpz(max_den) - q0) // q1) if max_den >= q0 else mpz(0)
                if j >= 1:
                    out.append((j * p1 + p0, j * q1 + q0))
        return out


def cf_convergents(x, max_terms: int = 64, max_den=None) -> CFExpansion:
    """Continued fraction of a rational x; stops after ``max_terms`` quotients
    or once a convergent denominator exceeds ``max_den``."""
    x = as_rational(x)
    num, den = x.numerator, x.denominator
    quotients, convs = [], []
    p0, q0, p1, q1 = mpz(1), mpz(0), mpz(0), mpz(1)
    complete = False
    while len(quotients) < max_terms:
        a = gmpy2.f_div(num, den)
        quotients.append(mpz(a))
        p0, p1 = a * p0 + p1, p0
        q0, q1 = a * q0 + q1, q0
        convs.append((mpz(p0), mpz(q0)))
        num, den = den, num - a * den
        if den == 0:
            complete = True
            break
        if max_den is not None and q0 > max_den:
            break
    return CFExpansion(x, quotients, convs, complete)


# ------------------------------------------------------------------ probes


@dataclass(frozen=True)
class ProbeResult:
    n: int
    verdict: str
    cap_log2: mpq
    threshold_log2: mpq
    best_s: mpz
    best_dist_log2: tuple[mpq | None, mpq]
    candidates: int
    bits: int

    def as_dict(self) -> dict:
        return {
            "n": self.n, "verdict": self.verdict, "cap_log2": format_rational(self.cap_log2),
            "threshold_log2": format_rational(self.threshold_log2), "best_s": str(self.best_s),
            "best_dist_log2_lo": None if self.best_dist_log2[0] is None else format_rational(self.best_dist_log2[0]),
            "best_dist_log2_hi": format_rational(self.best_dist_log2[1]),
            "candidates": self.candidates, "bits": self.bits,
        }


def _dist_log2(d: mpq, err: mpq) -> tuple[mpq | None, mpq]:
    """log2 bounds for a value within err of d; the lower end is None when d <= err."""
    hi = log2_interval(d + err).hi
    return (log2_interval(d - err).lo if d > err else None), hi


def _dist(s: mpz, x: mpq) -> mpq:
    _, d = nearest_int(s * x)
    return abs(d)


def nonmember_probe(x, q: BaseSequence, u: ExponentSequence, kappa1, kappa2, n: int,
                    max_bits: int = DEFAULT_MAX_BITS) -> ProbeResult:
    """Is there s <= q_n^kappa1 with ||s x|| <= q_n^{-kappa2 u_n}?

    PASS means no such s exists (certified); FAIL means one was found.  A
    dyadic truncation X of x with error eps is expanded in continued
    fractions; convergents and the extreme semiconvergent of each family with
    denominator <= S are the candidates.  min ||s X|| over s <= S is attained
    at the last convergent, so PASS holds once that minimum minus S*eps
    clears the threshold.
    """
    x = as_real(x)
    kappa1, kappa2 = as_rational(kappa1), as_rational(kappa2)
    qn = q.term(n)
    r = kappa2 * u(n)
    cap = mpz(gmpy2.iroot(qn ** int(kappa1.numerator), int(kappa1.denominator))[0])
    lq = q.log2(n)
    cap_log2 = kappa1 * lq.lo
    threshold_log2 = -r * lq.lo
    need = int(gmpy2.c_div(r.numerator * qn.bit_length(), r.denominator))
    bits = int(cap.bit_length()) + need + 64
    while True:
        iv = x.enclose(bits)
        scale = mpz(1) << (bits + 2)
        mid = iv.mid
        X = mpq(gmpy2.f_div(mid.numerator * scale, mid.denominator), scale)
        eps = max(iv.hi - X, X - iv.lo)
        cf = cf_convergents(X, max_terms=1 << 30, max_den=cap)
        cands = [(p, s) for p, s in cf.convergents if 1 <= s <= cap]
        cands += cf.semiconvergents(max_den=cap)
        found = None
        best_s, best = None, None
        for _, s in cands:
            d = _dist(s, X)
            if best is None or d < best:
                best_s, best = s, d
            if found is None and compare_to_power(d + s * eps, qn, -r) <= 0:
                found = s
        if found is not None:
            return ProbeResult(n, "FAIL", cap_log2, threshold_log2, found, _dist_log2(_dist(found, X), found * eps),
                               len(cands), bits)
        if best is not None and best > cap * eps and compare_to_power(best - cap * eps, qn, -r) > 0:
            return ProbeResult(n, "PASS", cap_log2, threshold_log2, best_s, _dist_log2(best, best_s * eps),
                               len(cands), bits)
        if bits >= max_bits:
            raise PrecisionExhausted(f"{x.spec}: probe at n = {n} undecided within {max_bits} bits")
        bits = min(bits * 2, max_bits)


# --------------------------------------------------------------- companion


@dataclass
class Companion:
    q: Lemma8Sequence
    rho: CriterionSeriesNumber
    rho_even: ApproxWitness
    rho_odd: ApproxWitness
    xi_even: ApproxWitness
    eta_odd: ApproxWitness
    shift: int


def _denominator_sequence(w: ApproxWitness, shift: int, name: str) -> FunctionSequence:
    start = w.valid_from + shift
    return FunctionSequence(lambda k: w.b(start + k - 1), f"den({name})")


def companion(wx: ApproxWitness, wy: ApproxWitness, theta="1/2", kappa2="1/4",
              scan: int = 64) -> Companion:
    """A number rho sharing a Liouville set with each of two witnessed numbers.

    q interleaves the denominators of wx (even places) and wy (odd places)
    with q_{n+1} >= q_n^n; rho is the criterion series over q.  When the first
    usable denominator of wx equals b_1 of wy, the wx denominators are read
    from the first one exceeding it so that q stays increasing.
    """
    b1 = wy.b(wy.valid_from)
    shift = 0
    while wx.b(wx.valid_from + shift) < b1:
        shift += 1
        if shift > scan:
            raise PrecisionExhausted("no denominator of the first witness reaches b_1 of the second")
    shift = shift + 1 if wx.b(wx.valid_from + shift) == b1 else 0
    a = _denominator_sequence(wx, shift, wx.label)
    b = _denominator_sequence(wy, 0, wy.label)
    q = lemma8_interleave(a, b, count=2)
    rho = xi_theorem3("+", q, Identity(), theta)
    w_rho = criterion_witness(rho, kappa2)
    even, odd = Subsequence(q, "even"), Subsequence(q, "odd")
    ident = Identity()
    rho_even = restrict(w_rho, even, lambda k: 2 * k, ident, label="rho|even")
    rho_odd = restrict(w_rho, odd, lambda k: 2 * k + 1, ident, label="rho|odd")
    xi_even = restrict(wx, even, lambda k: wx.valid_from + shift + q.source(2 * k)[1] - 1, ident,
                       label=f"{wx.label}|even")
    eta_odd = restrict(wy, odd, lambda k: wy.valid_from + q.source(2 * k + 1)[1] - 1, ident,
                       label=f"{wy.label}|odd")
    return Companion(q, rho, rho_even, rho_odd, xi_even, eta_odd, shift)


# ------------------------------------------------------------ two squares


@dataclass(frozen=True)
class TwoSquares:
    N: int
    obstructed: bool
    decompositions: list[tuple[int, int]]
    solutions: list[tuple[int, int, int]]
    z_max: int

    def as_dict(self) -> dict:
        return {"N": self.N, "obstructed": self.obstructed, "z_max": self.z_max,
                "decompositions": [list(d) for d in self.decompositions],
                "solutions": [list(s) for s in self.solutions]}


def two_squares_check(N: int, z_max: int = 20) -> TwoSquares:
    """Brute-force x^2 + y^2 = N and positive x^2 + y^2 = N z^2 for z <= z_max."""
    N, z_max = int(N), int(z_max)
    if N < 1 or z_max < 1:
        raise HypothesisViolation("N and z_max must be >= 1")
    decomps = []
    for x in range(isqrt(N) + 1):
        y2 = N - x * x
        y = isqrt(y2)
        if y * y == y2 and x <= y:
            decomps.append((x, y))
    sols = []
    for z in range(1, z_max + 1):
        target = N * z * z
        for x in range(1, isqrt(target // 2) + 1):
            y2 = target - x * x
            y = isqrt(y2)
            if y >= x and y * y == y2:
                sols.append((x, y, z))
    return TwoSquares(N, not decomps, decomps, sols, z_max)
