"""Base sequences q_n and exponent sequences u_n.

Every base sequence memoizes its prefix.  Sequences whose terms are powers of
two (``pow2``) store only the exponents, so 2^{(2n)!} costs a few machine
words until someone asks for the dense integer.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .core import Log2Interval, as_int, as_rational, compare_to_power, floor_pow, floor_rpow, is_pow2, log2_interval
from .errors import HypothesisViolation, MonotonicityError, PrefixExhausted

MAX_SCAN = 10**6


# --------------------------------------------------------------------------
# exponent sequences


class ExponentSequence:
    """u = (u_n)_{n>=1}, positive and tending to infinity."""

    spec: str = "?"
    length: int | None = None

    def term(self, n: int) -> mpq:
        raise NotImplementedError

    def __call__(self, n: int) -> mpq:
        if n < 1:
            raise ValueError("exponent sequences start at n = 1")
        if self.length is not None and n > self.length:
            raise PrefixExhausted(f"{self.spec}: only {self.length} terms available")
        v = self.term(n)
        if v <= 0:
            raise HypothesisViolation(f"{self.spec}: u_{n} = {v} is not positive")
        return v

    def prefix(self, count: int) -> list[mpq]:
        return [self(n) for n in range(1, count + 1)]

    def _upto(self, n_max: int) -> int:
        return n_max if self.length is None else min(n_max, self.length)

    def is_increasing(self, n_max: int) -> bool:
        top = self._upto(n_max)
        return all(self(n + 1) > self(n) for n in range(1, top))

    def has_step_ge_one(self, n_max: int) -> bool:
        """u_{n+1} >= u_n + 1 on the evaluated prefix."""
        top = self._upto(n_max)
        return all(self(n + 1) >= self(n) + 1 for n in range(1, top))

    def is_sqrt_dominated(self, n_max: int) -> bool:
        """sqrt(u_{n+1}) <= u_n + 1 on the evaluated prefix."""
        top = self._upto(n_max)
        return all(self(n + 1) <= (self(n) + 1) ** 2 for n in range(1, top))

    def flags(self, n_max: int) -> dict[str, bool]:
        return {
            "increasing": self.is_increasing(n_max),
            "step_ge_one": self.has_step_ge_one(n_max),
            "sqrt_dominated": self.is_sqrt_dominated(n_max),
        }

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class Identity(ExponentSequence):
    spec = "identity"

    def term(self, n):
        return mpq(n)


class ExplicitU(ExponentSequence):
    def __init__(self, values: Sequence):
        self.values = [as_rational(v) for v in values]
        if not self.values:
            raise ValueError("empty exponent sequence")
        self.length = len(self.values)
        self.spec = "explicit:" + ",".join(_rat_text(v) for v in self.values)

    def term(self, n):
        return self.values[n - 1]


class FormulaU(ExponentSequence):
    """u_n = fn(n); not serializable unless ``spec`` is a registered name."""

    def __init__(self, fn: Callable[[int], object], spec: str):
        self.fn = fn
        self.spec = spec

    def term(self, n):
        return as_rational(self.fn(n))


def _rat_text(v) -> str:
    v = as_rational(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# --------------------------------------------------------------------------
# base sequences


class BaseSequence:
    """Strictly increasing (from ``valid_from``) integer sequence q_n >= 2.

    Subclasses implement ``_compute(n)`` returning the memo key: the exponent
    E with q_n = 2^E when ``pow2`` is set, the dense integer otherwise.
    ``_compute`` is always called for n = 1, 2, 3, ... in order.
    """

    spec: str = "?"
    pow2: bool = False
    length: int | None = None
    min_term: int = 2

    def __init__(self, valid_from: int = 1):
        self.valid_from = valid_from
        self._memo: list[mpz] = []
        self._lock = threading.RLock()

    def _compute(self, n: int) -> mpz:
        raise NotImplementedError

    def key(self, n: int) -> mpz:
        if n < 1:
            raise ValueError("base sequences start at n = 1")
        if self.length is not None and n > self.length:
            raise PrefixExhausted(f"{self.spec}: only {self.length} terms available")
        with self._lock:
            memo = self._memo
            while len(memo) < n:
                m = len(memo) + 1
                k = mpz(self._compute(m))
                floor = (1 if self.min_term >= 2 else 0) if self.pow2 else self.min_term
                if k < floor:
                    raise MonotonicityError(f"{self.spec}: q_{m} < {self.min_term}")
                if memo and m > self.valid_from and k <= memo[-1]:
                    raise MonotonicityError(
                        f"{self.spec}: q_{m} <= q_{m - 1} (sequence not increasing at n = {m})"
                    )
                memo.append(k)
            return memo[n - 1]

    def term(self, n: int) -> mpz:
        k = self.key(n)
        return mpz(1) << int(k) if self.pow2 else k

    __call__ = term

    def exponent(self, n: int) -> mpz:
        if not self.pow2:
            raise TypeError(f"{self.spec} is not a power-of-two sequence")
        return self.key(n)

    def log2_exact(self, n: int) -> mpq | None:
        return mpq(self.key(n)) if self.pow2 else None

    def log2(self, n: int, frac_bits: int = 64) -> Log2Interval:
        if self.pow2:
            e = mpq(self.key(n))
            return Log2Interval(e, e)
        return log2_interval(self.key(n), frac_bits)

    def bit_length(self, n: int) -> int:
        k = self.key(n)
        return int(k) + 1 if self.pow2 else int(k.bit_length())

    def prefix(self, count: int) -> list[mpz]:
        return [self.term(n) for n in range(1, count + 1)]

    def available(self, n: int) -> bool:
        try:
            self.key(n)
        except PrefixExhausted:
            return False
        return True

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


def _key_ge(seq_a: BaseSequence, ka: mpz, seq_b: BaseSequence, kb: mpz) -> int:
    """Three-way compare of two memo keys that may use different encodings."""
    if seq_a.pow2 == seq_b.pow2:
        return (ka > kb) - (ka < kb)
    va = mpz(1) << int(ka) if seq_a.pow2 else ka
    vb = mpz(1) << int(kb) if seq_b.pow2 else kb
    return (va > vb) - (va < vb)


class FactorialPow(BaseSequence):
    """q_n = base^{n!}."""

    def __init__(self, base: int = 2):
        super().__init__()
        self.base = as_int(base)
        if self.base < 2:
            raise ValueError("factorial-pow base must be >= 2")
        self.pow2 = is_pow2(self.base)
        self._shift = int(self.base.bit_length()) - 1
        self.spec = "factorial-pow2" if self.base == 2 else f"factorial-pow:{self.base}"

    def _compute(self, n):
        if self.pow2:
            return mpz(self._shift) * factorial(n)
        return self.base ** factorial(n)


def FactorialPow2() -> FactorialPow:
    return FactorialPow(2)


class TauFactorial(BaseSequence):
    """q_n = 2^{n! floor(n^tau)}."""

    pow2 = True

    def __init__(self, tau):
        super().__init__()
        self.tau = as_rational(tau)
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        self.spec = f"tau:{_rat_text(self.tau)}"

    def _compute(self, n):
        return mpz(factorial(n)) * floor_rpow(n, self.tau)


class PowersOf(BaseSequence):
    """q_n = base^n."""

    def __init__(self, base: int):
        super().__init__()
        self.base = as_int(base)
        if self.base < 2:
            raise ValueError("powers base must be >= 2")
        self.pow2 = is_pow2(self.base)
        self._shift = int(self.base.bit_length()) - 1
        self.spec = f"powers:{self.base}"

    def _compute(self, n):
        return mpz(self._shift * n) if self.pow2 else self.base ** n


class PowerOfF(BaseSequence):
    """q_n = floor(t^{f(n)}) with f(1) = 1 and f(n) = u_1 u_2 ... u_{n-1}.

    ``valid_from`` is read off a scan of the first terms, since small u_n make
    early terms repeat.  With ``min_term=1`` the sequence may start at 1
    (used for series denominators with t close to 1).
    """

    SCAN = 12

    def __init__(self, u: ExponentSequence, t=2, min_term: int = 2):
        super().__init__(valid_from=10**18)
        self.u = u
        self.t = as_rational(t)
        if self.t <= 1:
            raise ValueError("t must be > 1")
        self.min_term = min_term
        self.spec = f"pow-of-f:{u.spec}" if self.t == 2 else f"pow-of-f:{_rat_text(self.t)}:{u.spec}"
        self._f: list[mpq] = []
        if u.length is not None:
            self.length = u.length + 1
        n_scan = self.SCAN if self.length is None else min(self.SCAN, self.length)
        t_pow2 = self.t.denominator == 1 and is_pow2(self.t.numerator)
        self._shift = int(self.t.numerator.bit_length()) - 1
        self.pow2 = t_pow2 and all(self._f_of(n).denominator == 1 for n in range(1, n_scan + 1)) and (
            isinstance(u, Identity) or u.length is not None
        )
        keys = [self.key(n) for n in range(1, n_scan + 1)]
        vf = 1
        for n in range(2, len(keys) + 1):
            if keys[n - 1] <= keys[n - 2]:
                vf = n
        self.valid_from = vf

    def _f_of(self, n: int) -> mpq:
        while len(self._f) < n:
            m = len(self._f) + 1
            self._f.append(mpq(1) if m == 1 else self._f[-1] * self.u(m - 1))
        return self._f[n - 1]

    def f(self, n: int) -> mpq:
        return self._f_of(n)

    def _compute(self, n):
        f = self._f_of(n)
        if self.pow2:
            return f.numerator * self._shift
        return floor_tpow(self.t, f)


def floor_tpow(t, f) -> mpz:
    """floor(t^f) for rational t > 1 and rational f >= 0."""
    t, f = as_rational(t), as_rational(f)
    a, b = int(f.numerator), int(f.denominator)
    base = floor_pow(t, a)
    if b == 1:
        return base
    root, _ = gmpy2.iroot(base, b)
    return mpz(root)


class Explicit(BaseSequence):
    """A finite list of terms."""

    def __init__(self, values: Sequence, valid_from: int = 1):
        super().__init__(valid_from=valid_from)
        self.values = [as_int(v) for v in values]
        if not self.values:
            raise ValueError("empty explicit sequence")
        self.length = len(self.values)
        self.spec = "explicit:" + ",".join(str(v) for v in self.values)
        for n in range(1, self.length + 1):
            self.key(n)

    def _compute(self, n):
        return self.values[n - 1]


class ExplicitPow2(BaseSequence):
    """A finite (possibly empty) list of powers of two, given by exponents."""

    pow2 = True

    def __init__(self, exponents: Sequence[int], min_term: int = 2):
        super().__init__()
        self.min_term = min_term
        self.exponents = [int(e) for e in exponents]
        self.length = len(self.exponents)
        self.spec = "explicit-pow2:" + ",".join(map(str, self.exponents))

    def _compute(self, n):
        return mpz(self.exponents[n - 1])


class FunctionSequence(BaseSequence):
    """q_n = fn(n) (or 2^{fn(n)} when ``pow2``) for an internal callable."""

    def __init__(self, fn: Callable[[int], object], spec: str, valid_from: int = 1, length=None,
                 pow2: bool = False, min_term: int = 2):
        super().__init__(valid_from=valid_from)
        self.fn = fn
        self.spec = spec
        self.length = length
        self.pow2 = pow2
        self.min_term = min_term

    def _compute(self, n):
        return mpz(self.fn(n))


def scan_valid_from(seq: BaseSequence, n_scan: int = 12) -> int:
    """Evaluate a prefix with checks off, then set valid_from past the last repeat."""
    seq.valid_from = 10**18
    top = n_scan if seq.length is None else min(n_scan, seq.length)
    keys = [seq.key(n) for n in range(1, top + 1)]
    vf = 1
    for n in range(2, len(keys) + 1):
        if keys[n - 1] <= keys[n - 2]:
            vf = n
    seq.valid_from = vf
    return vf


class Merge(BaseSequence):
    """Sorted union of two increasing sequences, duplicates collapsed.

    ``provenance(n)`` reports where q_n came from: ``"left"``, ``"right"`` or
    ``"both"``.
    """

    def __init__(self, left: BaseSequence, right: BaseSequence):
        super().__init__()
        self.left, self.right = left, right
        self.pow2 = left.pow2 and right.pow2
        self.spec = f"merge({left.spec},{right.spec})"
        self._i = 1
        self._j = 1
        self._tags: list[str] = []

    def _dense(self, seq: BaseSequence, k: mpz) -> mpz:
        if self.pow2 or not seq.pow2:
            return k
        return mpz(1) << int(k)

    def _peek(self, seq: BaseSequence, idx: int):
        try:
            return self._dense(seq, seq.key(idx))
        except PrefixExhausted:
            return None

    def _compute(self, n):
        last = self._memo[-1] if self._memo else None
        while True:
            a = self._peek(self.left, self._i)
            b = self._peek(self.right, self._j)
            if a is None and b is None:
                raise PrefixExhausted(f"{self.spec}: both inputs exhausted at n = {n}")
            if b is None or (a is not None and a < b):
                k, tag = a, "left"
                self._i += 1
            elif a is None or b < a:
                k, tag = b, "right"
                self._j += 1
            else:
                k, tag = a, "both"
                self._i += 1
                self._j += 1
            if last is not None and k == last:
                # an input repeated a term (below its valid_from): collapse it
                if self._tags[-1] != tag:
                    self._tags[-1] = "both"
                continue
            self._tags.append(tag)
            return k

    def provenance(self, n: int) -> str:
        self.key(n)
        return self._tags[n - 1]


INDEX_MAPS: dict[str, Callable[[int], int]] = {
    "even": lambda n: 2 * n,
    "odd": lambda n: 2 * n + 1,
}


class Subsequence(BaseSequence):
    """q'_n = q_{m(n)} for an increasing index map m."""

    def __init__(self, parent: BaseSequence, index_map: str | Callable[[int], int] | Sequence[int]):
        if isinstance(index_map, str):
            label, fn = index_map, INDEX_MAPS[index_map]
        elif callable(index_map):
            label, fn = getattr(index_map, "__name__", "map"), index_map
        else:
            idx = [int(i) for i in index_map]
            label = "[" + ";".join(map(str, idx)) + "]"
            fn = (lambda lst: (lambda n: lst[n - 1]))(idx)
            self.length = len(idx)
        super().__init__()
        self.parent = parent
        self.index = fn
        self.pow2 = parent.pow2
        self.spec = f"sub({parent.spec},{label})"
        vf = 1
        n = 2
        while n <= 64 and fn(n - 1) < parent.valid_from:
            vf = n
            n += 1
        self.valid_from = vf

    def _compute(self, n):
        return self.parent.key(self.index(n))


class Lemma8Sequence(BaseSequence):
    """Interleaving of two increasing sequences with q_{n+1} >= q_n^n.

    q_1 = b_1, q_2 = least a_i >= b_1, then q_{n+1} is the least a_i (n odd) or
    b_j (n even) with q_{n+1} >= q_n^n.  ``source(n)`` gives (``"a"``|``"b"``, index).
    """

    def __init__(self, a: BaseSequence, b: BaseSequence, budget: int = MAX_SCAN):
        super().__init__()
        self.a, self.b = a, b
        self.pow2 = a.pow2 and b.pow2
        self.budget = budget
        self.spec = f"lemma8({a.spec},{b.spec})"
        self._sources: list[tuple[str, int]] = []
        self._next = {"a": 1, "b": 1}

    def _value(self, seq: BaseSequence, k: mpz) -> mpz:
        if self.pow2 or not seq.pow2:
            return k
        return mpz(1) << int(k)

    def _least_at_least(self, name: str, target: mpz) -> tuple[mpz, int]:
        seq = self.a if name == "a" else self.b
        i = self._next[name]
        stop = i + self.budget
        while i < stop:
            try:
                k = self._value(seq, seq.key(i))
            except PrefixExhausted as exc:
                raise PrefixExhausted(f"{self.spec}: input {name} exhausted before reaching target") from exc
            if k >= target:
                self._next[name] = i + 1
                return k, i
            i += 1
        raise PrefixExhausted(f"{self.spec}: scan budget exhausted in input {name}")

    def _compute(self, n):
        if n == 1:
            k, i = self._least_at_least("b", mpz(0))
            self._sources.append(("b", i))
            return k
        prev = self._memo[-1]
        m = n - 1
        name = "a" if (m % 2 == 1) else "b"
        target = prev * m if self.pow2 else prev ** m
        k, i = self._least_at_least(name, target)
        self._sources.append((name, i))
        return k

    def source(self, n: int) -> tuple[str, int]:
        self.key(n)
        return self._sources[n - 1]


def merge(left: BaseSequence, right: BaseSequence) -> Merge:
    return Merge(left, right)


def eval_base(q: BaseSequence, n: int) -> mpz:
    return q.term(n)


def lemma8_interleave(a: BaseSequence, b: BaseSequence, count: int, budget: int = MAX_SCAN) -> Lemma8Sequence:
    """Build the interleaving and evaluate ``count`` terms (errors surface here)."""
    seq = Lemma8Sequence(a, b, budget=budget)
    for n in range(1, count + 1):
        seq.key(n)
    return seq


def lemma4_indices(u: ExponentSequence, count: int, budget: int = MAX_SCAN) -> list[int]:
    """m_1 < m_2 < ... with m_n the least index > m_{n-1} such that u_{m_n} > n."""
    out: list[int] = []
    m = 0
    for n in range(1, count + 1):
        m += 1
        start = m
        while True:
            if m - start > budget:
                raise PrefixExhausted(f"u never exceeded {n} within the scan budget")
            try:
                v = u(m)
            except PrefixExhausted as exc:
                raise PrefixExhausted(f"u did not exceed {n} on its prefix") from exc
            if v > n:
                break
            m += 1
        out.append(m)
    return out


# --------------------------------------------------------------------------
# the two-block schedule


class LambdaSchedule:
    """A block-boundary sequence lambda_0 = 1 <= lambda_1 < lambda_2 < ...

    Either a finite list or a named infinite rule: ``succ`` (s + 1),
    ``tower`` (1, 2, 4, 16, 256, ..., i.e. 2^{2^{s-1}} for s >= 1) and
    ``factorial`` (s!, which repeats 1 at s = 0, 1).
    """

    RULES: dict[str, Callable[[int], int]] = {
        "succ": lambda s: s + 1,
        "tower": lambda s: 1 if s == 0 else 2 ** (2 ** (s - 1)),
        "factorial": factorial,
    }

    def __init__(self, values: Sequence[int] | str, allow_repeat_at_start: bool = False):
        if isinstance(values, str):
            if values not in self.RULES:
                raise HypothesisViolation(f"unknown lambda schedule {values!r}")
            self.fn = self.RULES[values]
            self.values = None
            self.length = None
            self.spec = values
            allow_repeat_at_start = allow_repeat_at_start or values == "factorial"
        else:
            self.values = [int(x) for x in values]
            self.fn = None
            self.length = len(self.values)
            self.spec = ",".join(map(str, self.values))
        if self(0) != 1:
            raise HypothesisViolation("lambda must start with lambda_0 = 1")
        top = self.length if self.length is not None else 8
        if top < 2:
            raise HypothesisViolation("lambda needs at least two entries")
        for s in range(1, top):
            a, b = self(s - 1), self(s)
            if b < a or (b == a and not (allow_repeat_at_start and s == 1)):
                raise HypothesisViolation(f"lambda is not strictly increasing at s = {s}")

    def __call__(self, s: int) -> int:
        if self.values is not None:
            if s >= len(self.values):
                raise PrefixExhausted(f"lambda list has only {len(self.values)} entries")
            return self.values[s]
        return self.fn(s)

    def last(self) -> int | None:
        return None if self.values is None else self.values[-1]

    def block_of(self, n: int) -> int:
        """The s with lambda_s <= n < lambda_{s+1}."""
        s = 0
        while True:
            try:
                nxt = self(s + 1)
            except PrefixExhausted as exc:
                raise PrefixExhausted(f"n = {n} lies beyond the last lambda block") from exc
            if self(s) <= n < nxt:
                return s
            s += 1


def as_schedule(lam) -> LambdaSchedule:
    return lam if isinstance(lam, LambdaSchedule) else LambdaSchedule(lam)


def block_of(lam, n: int) -> int:
    return as_schedule(lam).block_of(n)


def schedule_positions(lam, n_max: int) -> tuple[list[int], list[int], dict[int, int]]:
    """Split 1..n_max into the even-block and odd-block index lists.

    Returns (first, second, mult) where ``mult[n]`` is the 1-based position of
    n inside whichever list holds it.
    """
    lam = as_schedule(lam)
    first: list[int] = []
    second: list[int] = []
    mult: dict[int, int] = {}
    for n in range(1, n_max + 1):
        if lam.block_of(n) % 2 == 0:
            first.append(n)
            mult[n] = len(first)
        else:
            second.append(n)
            mult[n] = len(second)
    return first, second, mult


class TwoListSequence(BaseSequence):
    """q_n = 2^{d_n} with d_1 = 2 and d_{n+1} = (position of n in its list) * d_n."""

    pow2 = True

    def __init__(self, lam):
        lam = as_schedule(lam)
        super().__init__(valid_from=lam(1) + 1)
        self.lam = lam
        self.length = lam.last()
        self.spec = "prop13:" + lam.spec
        self._count = {0: 0, 1: 0}

    def _compute(self, n):
        if n == 1:
            return mpz(2)
        s = self.lam.block_of(n - 1) % 2
        self._count[s] += 1
        return self._memo[-1] * self._count[s]


@dataclass
class TwoListSchedule:
    first: list[int]
    second: list[int]
    d: list[mpz]
    q: TwoListSequence
    valid_from: int
    lam: LambdaSchedule

    def k_of_s(self, s: int) -> int:
        """lambda_{2s-1} - lambda_{2s-2} + ... + lambda_1: the position of lambda_{2s} in the first list."""
        return sum(self.lam(j) if j % 2 == 1 else -self.lam(j) for j in range(1, 2 * s))

    def position_formula(self, n: int) -> int:
        """Closed-form position of n inside its list (first or second)."""
        s2 = self.lam.block_of(n)
        lam = self.lam
        if s2 == 0:
            # the alternating formula below would give n - 1 here
            return n
        if s2 % 2 == 0:
            # n - lambda_{2s} + lambda_{2s-1} - ... + lambda_1
            return n - lam(s2) + sum(lam(j) if j % 2 == 1 else -lam(j) for j in range(1, s2))
        # n - lambda_{2s+1} + lambda_{2s} - ... - lambda_1 + 1
        return n - lam(s2) + sum(lam(j) if j % 2 == 0 else -lam(j) for j in range(1, s2)) + 1


def prop13_schedule(lam, count: int) -> TwoListSchedule:
    q = TwoListSequence(lam)
    if q.length is not None and count > q.length:
        raise PrefixExhausted(f"lambda covers only n <= {q.length}")
    n_lists = count if q.length is None else min(count, q.length - 1)
    first, second, _ = schedule_positions(q.lam, n_lists)
    d = [q.key(n) for n in range(1, count + 1)]
    return TwoListSchedule(first, second, d, q, q.valid_from, q.lam)


def term_exceeds_power(q: BaseSequence, n: int, m: int, r) -> bool:
    """q_n > q_m^r, exactly."""
    r = as_rational(r)
    if q.pow2:
        return q.key(n) > r * q.key(m)
    return compare_to_power(q.term(n), q.term(m), r) > 0
