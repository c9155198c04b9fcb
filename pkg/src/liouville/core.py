"""Exact integer/rational kernel.

Integers and rationals are gmpy2 ``mpz``/``mpq``; every routine here is exact
or returns a certified enclosure.  Base-2 logarithms are computed as dyadic
intervals by repeated squaring with directed rounding, which is the only
"transcendental" operation the rest of the package needs.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq, mpz

from .errors import PrecisionExhausted

Integer = type(mpz(0))
Rational = type(mpq(0))

DEFAULT_LOG_BITS = 64
_HALF = mpq(1, 2)


def as_int(x) -> mpz:
    if isinstance(x, str):
        x = x.strip()
    try:
        v = mpz(x)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"not an integer: {x!r}") from exc
    return v


def as_rational(x) -> mpq:
    """Coerce ints, Fractions, mpq and ``"p/q"`` strings to ``mpq``.

    Floats are rejected on purpose: nothing in this package is inexact.
    """
    if isinstance(x, float):
        raise TypeError("floating-point input is not accepted; use 'p/q'")
    if isinstance(x, Rational):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s or any(c in s for c in ".eE"):
            raise ValueError(f"not an exact rational: {x!r}")
        num, _, den = s.partition("/")
        try:
            return mpq(mpz(num), mpz(den)) if den else mpq(mpz(num))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational: {x!r}") from exc
    return mpq(x)


def format_rational(x) -> str:
    """Canonical exact text form: ``"p"`` or ``"p/q"``."""
    x = as_rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def is_pow2(x) -> bool:
    x = mpz(x)
    return x > 0 and (x & (x - 1)) == 0


def floor_log2(x) -> int:
    """Largest k with 2^k <= x, for a positive rational x."""
    x = as_rational(x)
    if x <= 0:
        raise ValueError("floor_log2 needs x > 0")
    p, q = x.numerator, x.denominator
    k = int(p.bit_length()) - int(q.bit_length())
    if k >= 0:
        if p < (q << k):
            k -= 1
    elif (p << -k) < q:
        k -= 1
    return k


def nearest_int(x) -> tuple[mpz, mpq]:
    """Nearest integer to x and the distance to it; ties go to the even integer."""
    x = as_rational(x)
    f = gmpy2.f_div(x.numerator, x.denominator)
    r = x - f
    if r < _HALF:
        m = f
    elif r > _HALF:
        m = f + 1
    else:
        m = f if f % 2 == 0 else f + 1
    return mpz(m), abs(x - m)


def floor_pow(t, e) -> mpz:
    """floor(t**e) for rational t > 1 and integer e >= 0, computed exactly."""
    t = as_rational(t)
    e = int(e)
    if t <= 1:
        raise ValueError("floor_pow needs t > 1")
    if e < 0:
        raise ValueError("floor_pow needs e >= 0")
    return gmpy2.f_div(t.numerator ** e, t.denominator ** e)


def floor_rpow(x, tau) -> mpz:
    """floor(x**tau) for an integer x >= 1 and a rational exponent tau >= 0."""
    x = mpz(x)
    tau = as_rational(tau)
    if x < 1 or tau < 0:
        raise ValueError("floor_rpow needs x >= 1 and tau >= 0")
    root, _ = gmpy2.iroot(x ** int(tau.numerator), int(tau.denominator))
    return mpz(root)


def rpow_bounds(x, tau, frac_bits: int) -> tuple[mpq, mpq]:
    """Rational lo <= x**tau <= hi with hi - lo <= 2**-frac_bits, x >= 1 integer, tau >= 0."""
    x = mpz(x)
    tau = as_rational(tau)
    p, r = int(tau.numerator), int(tau.denominator)
    scaled = (x ** p) << (r * frac_bits)
    root, exact = gmpy2.iroot(scaled, r)
    lo = mpq(root, mpz(1) << frac_bits)
    hi = lo if exact else mpq(root + 1, mpz(1) << frac_bits)
    return lo, hi


@dataclass(frozen=True)
class Log2Interval:
    """Certified enclosure [lo, hi] of log2 of a positive rational."""

    lo: mpq
    hi: mpq

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty Log2Interval")

    @property
    def width(self) -> mpq:
        return self.hi - self.lo

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, value) -> bool:
        return self.lo <= value <= self.hi

    def issubset(self, other: "Log2Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi


def log2_interval(x, frac_bits: int = DEFAULT_LOG_BITS) -> Log2Interval:
    """Enclose log2(x) in a dyadic interval of width 2**-frac_bits.

    Powers of two come back exact.  Otherwise the integer part is read off the
    bit lengths and the fraction bits are produced by squaring x / 2^k in
    fixed point, rounding the lower bound down and the upper bound up; if a bit
    cannot be decided at the working precision the guard is doubled.
    """
    x = as_rational(x)
    frac_bits = int(frac_bits)
    if x <= 0:
        raise ValueError("log2_interval needs x > 0")
    if frac_bits < 1:
        raise ValueError("frac_bits must be >= 1")
    p, q = x.numerator, x.denominator
    if is_pow2(p) and is_pow2(q):
        e = mpq(int(p.bit_length()) - int(q.bit_length()))
        return Log2Interval(e, e)
    k = floor_log2(x)
    guard = frac_bits + 32
    while True:
        prec = frac_bits + guard
        shift = prec - k
        if shift >= 0:
            y = gmpy2.f_div(p << shift, q)
        else:
            y = gmpy2.f_div(p, q << -shift)
        lo, hi = mpz(y), mpz(y) + 1
        two = mpz(2) << prec
        bits = 0
        ok = True
        for _ in range(frac_bits):
            lo = (lo * lo) >> prec
            hi = -((-(hi * hi)) >> prec)
            bits <<= 1
            if lo >= two:
                bits |= 1
                lo >>= 1
                hi = -((-hi) >> 1)
            elif hi >= two:
                ok = False
                break
        if ok:
            base = mpq(k) + mpq(bits, mpz(1) << frac_bits)
            return Log2Interval(base, base + mpq(1, mpz(1) << frac_bits))
        guard *= 2


def log2_upper_int(x) -> int:
    """An integer >= log2(x) for positive rational x (cheap, from bit lengths)."""
    x = as_rational(x)
    return int(x.numerator.bit_length()) - int(x.denominator.bit_length()) + 1


def log2_lower_int(x) -> int:
    """An integer <= log2(x) for positive rational x."""
    x = as_rational(x)
    return int(x.numerator.bit_length()) - int(x.denominator.bit_length()) - 1


@dataclass(frozen=True)
class Interval:
    """Closed rational interval with outward-exact arithmetic."""

    lo: mpq
    hi: mpq

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty Interval")

    @classmethod
    def point(cls, x) -> "Interval":
        x = as_rational(x)
        return cls(x, x)

    @classmethod
    def ball(cls, center, radius) -> "Interval":
        center, radius = as_rational(center), as_rational(radius)
        return cls(center - radius, center + radius)

    @property
    def width(self) -> mpq:
        return self.hi - self.lo

    @property
    def mid(self) -> mpq:
        return (self.lo + self.hi) / 2

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def issubset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def mag(self) -> mpq:
        """max |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> mpq:
        """min |x| over the interval (0 if it straddles zero)."""
        if self.contains_zero():
            return mpq(0)
        return min(abs(self.lo), abs(self.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other) -> "Interval":
        return _as_interval(other) - self

    def __mul__(self, other) -> "Interval":
        other = _as_interval(other)
        if other.lo == other.hi:
            c = other.lo
            return Interval(self.lo * c, self.hi * c) if c >= 0 else Interval(self.hi * c, self.lo * c)
        ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def outward(self, frac_bits: int) -> "Interval":
        """Round endpoints outward to multiples of 2**-frac_bits."""
        scale = mpz(1) << int(frac_bits)
        lo = self.lo * scale
        hi = self.hi * scale
        return Interval(
            mpq(gmpy2.f_div(lo.numerator, lo.denominator), scale),
            mpq(gmpy2.c_div(hi.numerator, hi.denominator), scale),
        )


def _as_interval(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(x)


def log2_enclosure(iv: Interval, frac_bits: int = DEFAULT_LOG_BITS) -> Log2Interval:
    """Enclosure of log2|x| over an interval that excludes zero."""
    lo, hi = iv.mig(), iv.mag()
    if lo <= 0:
        raise ValueError("interval touches zero")
    return Log2Interval(log2_interval(lo, frac_bits).lo, log2_interval(hi, frac_bits).hi)


MAX_LOG_BITS = 1 << 20
EXACT_POWER_BITS = 1 << 24


def compare_to_power(v, q, r, max_log_bits: int = MAX_LOG_BITS) -> int:
    """Sign of v - q**r for rational v >= 0, integer q >= 1 and rational r.

    Uses exponent arithmetic when q is a power of two, an exact integer
    comparison when the operands are small enough, and otherwise refines
    base-2 logarithm enclosures until they separate.
    """
    v = as_rational(v)
    q = mpz(q)
    r = as_rational(r)
    if q < 1:
        raise ValueError("compare_to_power needs q >= 1")
    if v < 0:
        raise ValueError("compare_to_power needs v >= 0")
    if v == 0:
        return -1
    if q == 1 or r == 0:
        return (v > 1) - (v < 1)
    a, b = int(r.numerator), int(r.denominator)
    if is_pow2(q):
        t = (int(q.bit_length()) - 1) * r
        if t.denominator == 1:
            e = int(t.numerator)
            target = mpq(mpz(1) << e) if e >= 0 else mpq(1, mpz(1) << -e)
            return (v > target) - (v < target)
        return _cmp_log2(v, Log2Interval(t, t), None, max_log_bits)
    vb = int(v.numerator.bit_length()) + int(v.denominator.bit_length())
    cost = b * vb + abs(a) * int(q.bit_length())
    if cost <= EXACT_POWER_BITS:
        n, d = v.numerator ** b, v.denominator ** b
        qa = q ** abs(a)
        lhs, rhs = (n, d * qa) if a > 0 else (n * qa, d)
        return (lhs > rhs) - (lhs < rhs)
    return _cmp_log2(v, None, (q, r), max_log_bits)


def _cmp_log2(v, fixed: Log2Interval | None, qr, max_log_bits: int) -> int:
    bits = 64
    while bits <= max_log_bits:
        lv = log2_interval(v, bits)
        if fixed is not None:
            rhs = fixed
        else:
            q, r = qr
            lq = log2_interval(q, bits)
            lo, hi = sorted((lq.lo * r, lq.hi * r))
            rhs = Log2Interval(lo, hi)
        if lv.hi < rhs.lo:
            return -1
        if lv.lo > rhs.hi:
            return 1
        if lv.exact and rhs.exact:
            return 0
        bits *= 4
    raise PrecisionExhausted("logarithm enclosures did not separate within the precision budget")
