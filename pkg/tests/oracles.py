"""Independent reference implementations on Python ints and Fractions.

Nothing here imports the package; tests compare package output against these.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction


def nearest(x: Fraction) -> tuple[int, Fraction]:
    lo = math.floor(x)
    cands = [(abs(x - m), m % 2, m) for m in (lo, lo + 1)]
    d, _, m = min(cands)
    return m, d


def floor_pow(t: Fraction, e: int) -> int:
    return math.floor(Fraction(t) ** e)


def log2_contains(x: Fraction, lo: Fraction, hi: Fraction) -> bool:
    """2^lo <= x <= 2^hi for dyadic lo, hi, decided with integer powers."""
    x = Fraction(x)

    def le_pow(e: Fraction, v: Fraction) -> bool:  # 2^e <= v, i.e. 2^num <= v^den
        return Fraction(2) ** e.numerator <= v ** e.denominator

    def ge_pow(e: Fraction, v: Fraction) -> bool:
        return Fraction(2) ** e.numerator >= v ** e.denominator

    return le_pow(Fraction(lo), x) and ge_pow(Fraction(hi), x)


def continued_fraction(x: Fraction) -> list[int]:
    out = []
    x = Fraction(x)
    while True:
        a = math.floor(x)
        out.append(a)
        if x == a:
            return out
        x = 1 / (x - a)


def convergents(quotients: list[int]) -> list[Fraction]:
    out = []
    for k in range(1, len(quotients) + 1):
        v = Fraction(quotients[k - 1])
        for a in reversed(quotients[: k - 1]):
            v = a + 1 / v
        out.append(v)
    return out


def lemma8(a: list[int], b: list[int], count: int) -> list[int]:
    q = [b[0]]
    q.append(min(x for x in a if x >= b[0]))
    while len(q) < count:
        n = len(q)
        src = a if n % 2 == 1 else b
        q.append(min(x for x in src if x >= q[-1] ** n))
    return q[:count]


def series_sum(denominators: list[int], signs: list[int] | None = None) -> Fraction:
    signs = signs or [1] * len(denominators)
    return sum((Fraction(e, d) for e, d in zip(signs, denominators)), Fraction(0))


def classic_terms(base: int, count: int) -> list[int]:
    return [base ** math.factorial(n) for n in range(1, count + 1)]


def u_classic(base: int, n: int, digits: int = 60) -> Decimal:
    """u_n for sum base^{-k!} against q_n = base^{n!}, from three tail terms (error far below 1e-30)."""
    f = math.factorial
    dist = sum(Fraction(1, base ** (f(k) - f(n))) for k in range(n + 1, n + 4))
    with localcontext() as ctx:
        ctx.prec = digits + 40
        d = Decimal(dist.numerator) / Decimal(dist.denominator)
        return -(d.ln() / Decimal(base).ln()) / f(n)


def is_sum_of_two_squares_by_factoring(N: int) -> bool:
    import sympy

    return all(e % 2 == 0 for p, e in sympy.factorint(N).items() if p % 4 == 3)
