"""Certified real numbers: rationals, series with proven tails, and arithmetic on them.

Every ``Real`` answers ``enclose(bits)`` with a rational interval of width at
most 2^-bits that contains the value.  Series get their enclosures from exact
partial sums plus the tail bound 2/d_{n+1}, which holds whenever the
denominators at least double from ``growth_from`` on.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import factorial, isqrt
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .core import (
    Interval,
    as_int,
    as_rational,
    floor_log2,
    format_rational,
    log2_lower_int,
    log2_upper_int,
)
from .errors import (
    CriterionNotMet,
    GrowthError,
    HypothesisViolation,
    PrecisionExhausted,
    PrefixExhausted,
)
from .sequences import (
    BaseSequence,
    ExplicitPow2,
    ExponentSequence,
    FactorialPow,
    FormulaU,
    FunctionSequence,
    Identity,
    LambdaSchedule,
    PowerOfF,
    TwoListSequence,
    as_schedule,
    scan_valid_from,
    term_exceeds_power,
)

DEFAULT_MAX_BITS = 1 << 22


class Real:
    """A real number that can be enclosed to any requested width."""

    spec: str = "?"
    max_bits: int = DEFAULT_MAX_BITS

    def __init__(self):
        self._cache: dict[int, Interval] = {}
        self._cache_lock = threading.Lock()

    def _enclose(self, bits: int) -> Interval:
        raise NotImplementedError

    def enclose(self, bits: int) -> Interval:
        bits = max(int(bits), 0)
        with self._cache_lock:
            hit = self._cache.get(bits)
        if hit is not None:
            return hit
        iv = self._enclose(bits)
        with self._cache_lock:
            self._cache[bits] = iv
        return iv

    def magnitude_bound(self) -> mpq:
        """Some M >= |x|."""
        return self.enclose(0).mag() + 1

    def separated_from_zero(self, max_bits: int | None = None) -> Interval:
        """An enclosure that excludes zero, or PrecisionExhausted."""
        limit = max_bits or self.max_bits
        bits = 8
        while bits <= limit:
            iv = self.enclose(bits)
            if not iv.contains_zero():
                return iv
            bits *= 2
        raise PrecisionExhausted(f"{self.spec}: enclosure still contains 0 at {limit} bits")

    # arithmetic sugar
    def __add__(self, other):
        return Sum(self, as_real(other))

    def __radd__(self, other):
        return Sum(as_real(other), self)

    def __sub__(self, other):
        return Difference(self, as_real(other))

    def __rsub__(self, other):
        return Difference(as_real(other), self)

    def __mul__(self, other):
        return Product(self, as_real(other))

    def __rmul__(self, other):
        return Product(as_real(other), self)

    def __truediv__(self, other):
        return Product(self, Reciprocal(as_real(other)), spec=f"div({self.spec},{as_real(other).spec})")

    def __neg__(self):
        return Negation(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


def as_real(x) -> Real:
    return x if isinstance(x, Real) else RationalNumber(x)


class RationalNumber(Real):
    def __init__(self, value):
        super().__init__()
        self.value = as_rational(value)
        self.spec = f"rat:{format_rational(self.value)}"

    def _enclose(self, bits):
        return Interval.point(self.value)


def _log2_ceil_bound(x: mpq) -> int:
    """An integer L >= 0 with x <= 2^L (for x >= 0)."""
    if x <= 1:
        return 0
    return max(0, log2_upper_int(x))


class Sum(Real):
    def __init__(self, a: Real, b: Real):
        super().__init__()
        self.a, self.b = a, b
        self.spec = f"add({a.spec},{b.spec})"

    def _enclose(self, bits):
        return (self.a.enclose(bits + 2) + self.b.enclose(bits + 2)).outward(bits + 2)


class Difference(Real):
    def __init__(self, a: Real, b: Real):
        super().__init__()
        self.a, self.b = a, b
        self.spec = f"sub({a.spec},{b.spec})"

    def _enclose(self, bits):
        return (self.a.enclose(bits + 2) - self.b.enclose(bits + 2)).outward(bits + 2)


class Negation(Real):
    def __init__(self, a: Real):
        super().__init__()
        self.a = a
        self.spec = f"neg({a.spec})"

    def _enclose(self, bits):
        return -self.a.enclose(bits)


class Product(Real):
    def __init__(self, a: Real, b: Real, spec: str | None = None):
        super().__init__()
        self.a, self.b = a, b
        self.spec = spec or f"mul({a.spec},{b.spec})"

    def _enclose(self, bits):
        slack = _log2_ceil_bound(self.a.magnitude_bound() + self.b.magnitude_bound() + 1)
        k = bits + 3 + slack
        return (self.a.enclose(k) * self.b.enclose(k)).outward(bits + 2)


class Reciprocal(Real):
    def __init__(self, a: Real):
        super().__init__()
        self.a = a
        self.spec = f"inv({a.spec})"

    def _enclose(self, bits):
        first = self.a.separated_from_zero()
        m = first.mig()
        lead = max(0, -log2_lower_int(m))
        k = bits + 5 + 2 * lead
        iv = self.a.enclose(k)
        if iv.contains_zero():
            iv = first
        return iv.reciprocal().outward(bits + 2)


# --------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class Truncation:
    value: mpq
    tail_bound: mpq
    terms_used: int

    def interval(self) -> Interval:
        return Interval.ball(self.value, self.tail_bound)


class SeriesNumber(Real):
    """offset + sum_{n>=1} e_n / d_n with e_n in {-1, 0, 1}.

    ``d`` is a BaseSequence (power-of-two sequences keep exponents only).
    The growth attestation d_{m+1} >= 2 d_m for m >= ``growth_from`` is
    checked on every pair of terms the series touches.
    """

    MAX_TERMS = 10_000
    GROWTH_SCAN = 12

    def __init__(
        self,
        d: BaseSequence,
        sign: Callable[[int], int] | None = None,
        *,
        spec: str,
        label: str | None = None,
        nonneg: bool | None = None,
        growth_from: int | None = None,
        offset=0,
    ):
        super().__init__()
        self.d = d
        self._sign = sign
        self.nonneg = (sign is None) if nonneg is None else nonneg
        self.offset = as_rational(offset)
        self.spec = spec
        self.label = label or spec
        self.length = d.length
        self._partials: list[mpq] = [self.offset]
        self._plock = threading.RLock()
        self.growth_from = self._scan_growth() if growth_from is None else growth_from
        self._growth_checked = 0

    @property
    def valid_from(self) -> int:
        return self.d.valid_from

    def sign(self, n: int) -> int:
        e = 1 if self._sign is None else int(self._sign(n))
        if e not in (-1, 0, 1):
            raise HypothesisViolation(f"{self.spec}: sign e_{n} = {e} not in {{-1, 0, 1}}")
        return e

    def _available(self, n: int) -> bool:
        return self.length is None or n <= self.length

    def _pair_grows(self, m: int) -> bool:
        a, b = self.d.key(m), self.d.key(m + 1)
        return b >= a + 1 if self.d.pow2 else b >= 2 * a

    def _scan_growth(self) -> int:
        top = self.GROWTH_SCAN if self.length is None else min(self.GROWTH_SCAN, self.length)
        g = 1
        for m in range(1, top):
            if not self._pair_grows(m):
                g = m + 1
        return g

    def _ensure_growth(self, upto: int) -> None:
        """Check d_{m+1} >= 2 d_m for growth_from <= m < upto."""
        with self._plock:
            start = max(self._growth_checked + 1, self.growth_from)
            for m in range(start, upto):
                if not self._available(m + 1):
                    break
                if not self._pair_grows(m):
                    raise GrowthError(f"{self.spec}: d_{m + 1} < 2 d_{m}; tail bound 2/d_{{n+1}} is not certified")
                self._growth_checked = m

    def denominator(self, n: int) -> mpz:
        return self.d.term(n)

    def term(self, n: int) -> mpq:
        e = self.sign(n)
        if e == 0:
            return mpq(0)
        if self.d.pow2:
            return mpq(e, mpz(1) << int(self.d.key(n)))
        return mpq(e, self.d.key(n))

    def partial(self, n: int) -> mpq:
        """Exact sum of the first n terms (plus the offset)."""
        if n < 0:
            raise ValueError("n must be >= 0")
        if not self._available(n):
            raise PrefixExhausted(f"{self.spec}: only {self.length} terms")
        with self._plock:
            while len(self._partials) <= n:
                m = len(self._partials)
                self._partials.append(self._partials[-1] + self.term(m))
            return self._partials[n]

    def tail_bound(self, n: int) -> mpq:
        """Certified bound on |sum_{m>n} e_m/d_m|."""
        if n < 0:
            raise ValueError("n must be >= 0")
        if not self._available(n + 1):
            return mpq(0)
        g = self.growth_from
        self._ensure_growth(n + 1)
        if n >= g - 1:
            return self._two_over_d(n + 1)
        total = sum((abs(self.term(m)) for m in range(n + 1, g) if self._available(m)), mpq(0))
        if self._available(g):
            total += self._two_over_d(g)
        return total

    def _two_over_d(self, m: int) -> mpq:
        if self.d.pow2:
            return mpq(2, mpz(1) << int(self.d.key(m)))
        return mpq(2, self.d.key(m))

    def tail_log2_upper(self, n: int) -> int | None:
        """Integer t with tail_bound(n) <= 2^t, or None when the tail is empty."""
        if not self._available(n + 1):
            return None
        if n >= self.growth_from - 1:
            self._ensure_growth(n + 1)
            if self.d.pow2:
                return 1 - int(self.d.key(n + 1))
            return 2 - int(self.d.key(n + 1).bit_length())
        t = self.tail_bound(n)
        return None if t == 0 else log2_upper_int(t)

    def truncate(self, n: int) -> Truncation:
        return Truncation(self.partial(n), self.tail_bound(n), n)

    def terms_for(self, bits: int) -> int:
        """Least n whose tail leaves an enclosure of width <= 2^-bits."""
        need = -bits if self.nonneg else -bits - 1
        n = 0
        while True:
            t = self.tail_log2_upper(n)
            if t is None or t <= need:
                return n
            n += 1
            if n > self.MAX_TERMS:
                raise PrecisionExhausted(f"{self.spec}: more than {self.MAX_TERMS} terms needed")

    def _enclose(self, bits):
        n = self.terms_for(bits)
        v, t = self.partial(n), self.tail_bound(n)
        if self.nonneg:
            return Interval(v, v + t)
        return Interval(v - t, v + t)


def truncate(x: SeriesNumber, n: int) -> Truncation:
    return x.truncate(n)


# --------------------------------------------------------------------------
# constructors


def xi_t(t, u: ExponentSequence | None = None) -> SeriesNumber:
    """sum 1/floor(t^{f(n)}) with f(1) = 1, f(n) = u_1 ... u_{n-1}."""
    t = as_rational(t)
    if t <= 1:
        raise HypothesisViolation("xi_t needs t > 1")
    u = u or Identity()
    d = PowerOfF(u, t=t, min_term=1)
    return SeriesNumber(d, spec=f"xi-t:{format_rational(t)}:{u.spec}", label="xi_t")


def liouville_classic(base: int = 10) -> SeriesNumber:
    """sum base^{-n!}."""
    base = as_int(base)
    if base < 2:
        raise HypothesisViolation("base must be >= 2")
    return SeriesNumber(FactorialPow(base), spec=f"classic:{base}", label="classic", growth_from=1)


def parse_signs(signs) -> list[int]:
    if isinstance(signs, str):
        table = {"+": 1, "-": -1}
        try:
            out = [table[c] for c in signs.strip()]
        except KeyError as exc:
            raise HypothesisViolation(f"sign string may only contain '+' and '-': {signs!r}") from exc
    else:
        out = [int(e) for e in signs]
    if not out or any(e not in (-1, 1) for e in out):
        raise HypothesisViolation("signs must be a non-empty sequence of +1/-1")
    return out


def format_signs(signs: Sequence[int]) -> str:
    return "".join("+" if e > 0 else "-" for e in signs)


class CriterionDenominators(BaseSequence):
    """2^{c_l} with 2^{c_l} <= q_{N_l} < 2^{c_l + 1}, N_l the criterion hits.

    N qualifies when q_N > q_{N-1}^{theta u_{N-1}}; N = 1 qualifies by the
    convention q_0 = 1.  Hits whose c would not increase are skipped.
    """

    pow2 = True

    def __init__(self, q: BaseSequence, u: ExponentSequence, theta, budget: int):
        super().__init__()
        self.q, self.u = q, u
        self.theta = as_rational(theta)
        self.budget = budget
        self.hits: list[int] = []
        self.length = None
        self.spec = f"criterion({q.spec},{u.spec},{format_rational(self.theta)})"

    def qualifies(self, N: int) -> bool:
        if N == 1:
            return True
        return term_exceeds_power(self.q, N, N - 1, self.theta * self.u(N - 1))

    def _c_of(self, N: int) -> mpz:
        if self.q.pow2:
            return self.q.key(N)
        return mpz(self.q.key(N).bit_length() - 1)

    def _compute(self, ell):
        N = self.hits[-1] + 1 if self.hits else 1
        stop = N + self.budget
        while N < stop:
            if not self.q.available(N):
                raise PrefixExhausted(f"{self.q.spec}: prefix ended before criterion hit #{ell}")
            if self.qualifies(N):
                c = self._c_of(N)
                if not self._memo or c > self._memo[-1]:
                    self.hits.append(N)
                    return c
            N += 1
        raise CriterionNotMet(f"no index N with q_N > q_(N-1)^(theta u_(N-1)) within {self.budget} indices")


class CriterionSeriesNumber(SeriesNumber):
    def __init__(self, signs: list[int], q, u, theta, cseq: CriterionDenominators):
        self.signs = signs
        self.cseq = cseq
        self.q, self.u, self.theta = q, u, as_rational(theta)
        p = len(signs)
        super().__init__(
            cseq,
            lambda n: signs[(n - 1) % p],
            spec=f"thm3:{format_signs(signs)}:{q.spec}:{format_rational(self.theta)}",
            label="thm3",
            nonneg=all(e > 0 for e in signs),
            growth_from=1,
        )

    def N(self, ell: int) -> int:
        self.cseq.key(ell)
        return self.cseq.hits[ell - 1]

    def c(self, ell: int) -> mpz:
        return self.cseq.key(ell)

    def residue(self, ell: int, extra_bits: int = 64) -> Interval:
        """Enclosure of xi - (sum of the first ell - 1 terms) = sum_{h >= ell} e_h 2^{-c_h}.

        The precision reaches past c_{ell+1}, so the sign pattern of the next
        term is resolved.
        """
        return self.enclose(int(self.c(ell + 1)) + extra_bits) - self.partial(ell - 1)


def xi_theorem3(signs, q: BaseSequence, u: ExponentSequence | None = None, theta="1/2",
                max_terms: int = 64, budget: int = 10**6) -> CriterionSeriesNumber:
    """sum e_l 2^{-c_l} along the indices where the growth criterion exceeds theta."""
    theta = as_rational(theta)
    if theta <= 0:
        raise HypothesisViolation("theta must be positive")
    u = u or Identity()
    e = parse_signs(signs)
    cseq = CriterionDenominators(q, u, theta, budget)
    top = max_terms if q.length is None else min(max_terms, q.length)
    if not any(cseq.qualifies(N) for N in range(2, top + 1)):
        raise CriterionNotMet(
            f"{q.spec}: no N in [2, {top}] with q_N > q_(N-1)^(theta u_(N-1)) at theta = {format_rational(theta)}"
        )
    return CriterionSeriesNumber(e, q, u, theta, cseq)


LAMBDA_RULES: dict[str, Callable[[int], int]] = {
    "sqrt": lambda n: isqrt(n) + 1,
}


def lambda_sequence(spec) -> ExponentSequence:
    """Integer sequences used as lambda_n: ``sqrt`` (floor(sqrt n) + 1), ``identity`` or an ExponentSequence."""
    if isinstance(spec, ExponentSequence):
        return spec
    if spec in LAMBDA_RULES:
        return FormulaU(LAMBDA_RULES[spec], spec)
    if spec == "identity":
        return Identity()
    raise HypothesisViolation(f"unknown lambda rule {spec!r}")


def lambda_flags(lam: ExponentSequence, window: int = 64) -> dict[str, bool]:
    """Prefix evidence for lambda_n -> infinity and lambda_n / n -> 0.

    Neither limit is decidable from a prefix; the heuristics are: lambda is a
    nondecreasing positive integer sequence that grows across the window, and
    lambda_W / W is at most half of lambda_1.
    """
    top = window if lam.length is None else min(window, lam.length)
    vals = [lam(n) for n in range(1, top + 1)]
    integral = all(v.denominator == 1 and v >= 1 for v in vals)
    nondecreasing = all(b >= a for a, b in zip(vals, vals[1:]))
    return {
        "integral": integral,
        "unbounded": nondecreasing and vals[-1] > vals[0],
        "sublinear": vals[-1] / top <= vals[0] / 2,
    }


def xi_prop12(lam="sqrt") -> SeriesNumber:
    """sum 2^{-(2n-1)! lambda_n}."""
    lam = lambda_sequence(lam)
    flags = lambda_flags(lam)
    bad = [k for k, ok in flags.items() if not ok]
    if bad:
        raise HypothesisViolation(f"lambda {lam.spec} fails: {', '.join(bad)}")
    d = FunctionSequence(lambda n: factorial(2 * n - 1) * int(lam(n)), f"prop12-d:{lam.spec}",
                         length=lam.length, pow2=True)
    return SeriesNumber(d, spec=f"prop12:{lam.spec}", label="prop12", growth_from=1)


class TwoListNumber(SeriesNumber):
    def __init__(self, q: TwoListSequence):
        self.q = q
        super().__init__(q, spec=f"prop13:{q.lam.spec}", label="prop13")

    def a(self, n: int) -> mpz:
        """sum_{m<=n} 2^{d_n - d_m}, so that a_n / q_n is the n-th partial sum."""
        dn = self.q.key(n)
        return sum((mpz(1) << int(dn - self.q.key(m)) for m in range(1, n + 1)), mpz(0))


def xi_prop13(lam) -> TwoListNumber:
    return TwoListNumber(lam if isinstance(lam, TwoListSequence) else TwoListSequence(lam))


class SqrtExponentNumber(SeriesNumber):
    GROWTH_SCAN = 8

    def __init__(self, q: BaseSequence, u: ExponentSequence):
        self.q, self.u = q, u
        top = self.GROWTH_SCAN if q.length is None else min(self.GROWTH_SCAN, q.length)
        for n in range(1, top):
            self.check_q_growth(n)
        d = FunctionSequence(self._d_key, f"prop14-d:{q.spec}:{u.spec}", pow2=q.pow2, min_term=1,
                             length=q.length)
        scan_valid_from(d)
        super().__init__(d, spec=f"prop14:{q.spec}:{u.spec}", label="prop14")

    def check_q_growth(self, n: int) -> None:
        if not term_exceeds_power(self.q, n + 1, n, self.u(n)):
            raise GrowthError(f"{self.q.spec}: q_{n + 1} > q_{n}^u_{n} fails at n = {n}")

    def _d_key(self, n: int) -> mpz:
        if n % 2 == 0:
            if n >= 2:
                self.check_q_growth(n - 1)
            return self.q.key(n)
        if n == 1:
            return mpz(0) if self.q.pow2 else mpz(1)
        r = isqrt(int(gmpy2.f_div(self.u(n).numerator, self.u(n).denominator)))
        if self.q.pow2:
            return self.q.key(n - 1) * r
        return self.q.key(n - 1) ** r

    def b(self, n: int) -> mpz:
        """d_1 d_2 ... d_n."""
        if self.q.pow2:
            return mpz(1) << int(self.b_log2(n))
        out = mpz(1)
        for m in range(1, n + 1):
            out *= self.d.key(m)
        return out

    def b_log2(self, n: int) -> mpz:
        if not self.q.pow2:
            raise TypeError("b_log2 needs a power-of-two base")
        return sum((self.d.key(m) for m in range(1, n + 1)), mpz(0))

    def a(self, n: int) -> mpz:
        """sum_{m<=n} b_n / d_m, so that a_n / b_n is the n-th partial sum."""
        bn = self.b(n)
        return sum((bn // self.d.term(m) for m in range(1, n + 1)), mpz(0))

    def b_within_q_squared(self, n: int) -> bool:
        if self.q.pow2:
            return self.b_log2(n) <= 2 * self.q.key(n)
        return self.b(n) <= self.q.term(n) ** 2


def xi_prop14(q: BaseSequence, u: ExponentSequence | None = None, window: int = 32) -> SqrtExponentNumber:
    """sum 1/d_n with d_n = q_n (n even) and q_{n-1}^{floor(sqrt u_n)} (n odd)."""
    u = u or Identity()
    if not u.is_sqrt_dominated(window):
        raise HypothesisViolation(f"{u.spec}: sqrt(u_(n+1)) <= u_n + 1 fails")
    if not u.has_step_ge_one(window):
        raise HypothesisViolation(f"{u.spec}: u_n + 1 <= u_(n+1) fails")
    return SqrtExponentNumber(q, u)


# --------------------------------------------------------------------------
# binary digit-block split


@dataclass(frozen=True)
class RunAudit:
    part: str
    position: int
    next_position: int
    block: int
    zero_run: int
    ok: bool


@dataclass
class ErdosSplit:
    xi: SeriesNumber
    eta: SeriesNumber
    depth: int
    x_value: mpq
    digits: list[int]
    audit: list[RunAudit] = field(default_factory=list)

    def exact(self) -> bool:
        return self.xi.partial(self.xi.length) + self.eta.partial(self.eta.length) == self.x_value


def certified_binary_prefix(x: Real, depth: int, max_bits: int = DEFAULT_MAX_BITS) -> tuple[mpz, mpz]:
    """(I, F) with floor(x) = I and floor(2^depth (x - I)) = F, certified."""
    bits = depth + 16
    while bits <= max(max_bits, depth + 16):
        iv = x.enclose(bits)
        scale = mpz(1) << depth
        lo, hi = iv.lo * scale, iv.hi * scale
        flo = gmpy2.f_div(lo.numerator, lo.denominator)
        fhi = gmpy2.f_div(hi.numerator, hi.denominator)
        if flo == fhi:
            whole = gmpy2.f_div(flo, scale)
            return mpz(whole), mpz(flo - whole * scale)
        bits *= 2
    raise PrecisionExhausted(f"{x.spec}: binary digits up to {depth} are not certified")


def erdos_split(x, lam="factorial", depth: int = 24, max_bits: int = DEFAULT_MAX_BITS) -> ErdosSplit:
    """Split the binary digits of x into alternating lambda-blocks.

    Digits in [lambda_{2s}, lambda_{2s+1}) go to xi, digits in
    [lambda_{2s+1}, lambda_{2s+2}) go to eta; the integer part goes to xi.
    """
    x = as_real(x)
    lam = lam if isinstance(lam, LambdaSchedule) else LambdaSchedule(lam)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    lam.block_of(depth)
    whole, frac = certified_binary_prefix(x, depth, max_bits)
    digits = [int((frac >> (depth - k)) & 1) for k in range(1, depth + 1)]
    pos = {"xi": [], "eta": []}
    for k, bit in enumerate(digits, start=1):
        if bit:
            pos["xi" if lam.block_of(k) % 2 == 0 else "eta"].append(k)
    xi = SeriesNumber(ExplicitPow2(pos["xi"]), spec=f"split-xi:{x.spec}:{lam.spec}:{depth}", offset=whole,
                      growth_from=1)
    eta = SeriesNumber(ExplicitPow2(pos["eta"]), spec=f"split-eta:{x.spec}:{lam.spec}:{depth}", growth_from=1)
    audit = []
    for part, ps in pos.items():
        for p, p_next in zip(ps, ps[1:]):
            bp, bn = lam.block_of(p), lam.block_of(p_next)
            if bn == bp:
                continue
            j = bp + 1
            lj, lj1 = lam(j), lam(j + 1)
            ok = p_next * lj >= p * (lj1 - lj) and p_next - p - 1 >= lj1 - lj - 1
            audit.append(RunAudit(part, p, p_next, j, p_next - p - 1, ok))
    x_value = mpq(whole) + mpq(frac, mpz(1) << depth)
    return ErdosSplit(xi, eta, depth, x_value, digits, audit)
