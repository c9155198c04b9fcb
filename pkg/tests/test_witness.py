import json
import re
from fractions import Fraction

import pytest
from gmpy2 import mpq, mpz
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import nearest

from liouville.errors import CertificateError, HypothesisViolation, RationalHit
from liouville.numbers import RationalNumber, liouville_classic
from liouville.sequences import Explicit, FactorialPow2, Identity
from liouville.witness import (
    ApproxWitness,
    affine_q,
    apply_rational_function,
    combine2,
    dumps,
    emit_certificate,
    encode_int,
    decode_int,
    fit_valid_from,
    load_certificate,
    natural_witness,
    normalize,
    reciprocal,
)

Q = FactorialPow2()
U = Identity()


def fixed(pair, subject="1/3", base=None, kappa1=1, kappa2="1/2"):
    return ApproxWitness(RationalNumber(subject), base or Q, U, kappa1, kappa2, lambda n: pair)


@pytest.fixture(scope="module")
def w():
    return natural_witness(liouville_classic(2), Q, U)


@pytest.fixture(scope="module")
def w_sq():
    return natural_witness(liouville_classic(4), Q, U, power=2)


class TestVerify:
    def test_pass_example(self, w):
        v = w.verify_at(3)
        assert (v.b, v.a) == (64, 49)
        assert v.passed
        assert v.rhs_log2 == -9 and v.bound_log2 == 6
        assert v.lhs_log2[0] <= -18 <= v.lhs_log2[1] + 1

    def test_fail_on_large_kappa2(self, w):
        v = w.derive(kappa2=4).verify_at(3)
        assert v.size_ok and not v.approx_ok and v.verdict == "fail"

    def test_fail_on_size(self):
        x = liouville_classic(2)
        w1 = ApproxWitness(x, Q, U, 1, "1/2", lambda n: (Q.term(n) + 1, 0))
        v = w1.verify_at(3)
        assert not v.size_ok and not v.passed

    def test_below_valid_from(self, w):
        with pytest.raises(HypothesisViolation):
            w.derive(valid_from=3).verify_at(2)

    def test_rational_hit(self):
        w1 = ApproxWitness(RationalNumber("1/3"), Q, U, 1, "1/2", lambda n: (3, 1), max_bits=256)
        with pytest.raises(RationalHit):
            w1.verify_at(2)

    def test_natural_pairs_are_nearest(self, w):
        # b*xi lies within 2/b of b*partial(n+1); partial(n+2) is far closer than 1/2
        x = liouville_classic(2)
        for n in range(1, 6):
            b, a = w.pair(n)
            assert b == Q.term(n)
            assert a == nearest(Fraction(int(b)) * Fraction(int(x.partial(n + 2).numerator), int(x.partial(n + 2).denominator)))[0]


class TestAffine:
    def test_shift(self):
        assert affine_q(fixed((64, 49)), 1, 2, "shift").pair(3) == (128, 34)

    def test_scale(self):
        assert affine_q(fixed((64, 49)), 3, 1, "scale").pair(3) == (64, 147)

    def test_shift_by_zero(self, w):
        w0 = affine_q(w, 0, 1, "shift")
        assert [w0.pair(n) for n in range(1, 6)] == [w.pair(n) for n in range(1, 6)]
        assert (w0.kappa1, w0.kappa2) == (w.kappa1, w.kappa2)

    def test_zero_denominator(self, w):
        with pytest.raises(HypothesisViolation):
            affine_q(w, 1, 0)

    def test_shift_and_scale_verify(self, w):
        for ww in (affine_q(w, 1, 3, "shift"), affine_q(w, 5, 2, "scale")):
            assert all(v.passed for v in ww.verify_range(4, 6))


class TestCombine:
    def test_sub_formula(self):
        assert combine2(fixed((64, 49)), fixed((8, 3)), "sub").pair(1) == (512, 200)

    def test_mul_formula(self):
        assert combine2(fixed((64, 49)), fixed((8, 3)), "mul").pair(1) == (512, 147)

    def test_add_formula(self):
        assert combine2(fixed((64, 49)), fixed((8, 3)), "add").pair(1) == (512, 49 * 8 + 64 * 3)

    def test_square_passes(self, w):
        ww = combine2(w, w, "mul")
        assert (ww.kappa1, ww.kappa2) == (2, mpq(1, 4))
        assert all(v.passed for v in ww.verify_range(3, 6))

    def test_frame_mismatch(self, w):
        other = natural_witness(liouville_classic(3), Explicit([3, 9, 27 * 27]), U)
        with pytest.raises(HypothesisViolation):
            combine2(w, other)

    @given(st.fractions(max_denominator=50), st.fractions(max_denominator=50),
           st.integers(1, 10**6), st.integers(-10**6, 10**6), st.integers(1, 10**6), st.integers(-10**6, 10**6))
    def test_difference_and_product_identities(self, x, y, b, a, b2, a2):
        xi, eta = mpq(x.numerator, x.denominator), mpq(y.numerator, y.denominator)
        w1 = fixed((b, a), subject=x)
        w2 = fixed((b2, a2), subject=y)
        bd, ad = combine2(w1, w2, "sub").pair(1)
        assert bd * (xi - eta) - ad == b2 * (b * xi - a) - b * (b2 * eta - a2)
        bm, am = combine2(w1, w2, "mul").pair(1)
        assert bm * xi * eta - am == b * xi * (b2 * eta - a2) + a2 * (b * xi - a)


class TestReciprocal:
    def test_swap(self):
        assert reciprocal(fixed((64, 49))).pair(3) == (49, 64)
        assert reciprocal(fixed((64, -49), subject="-1/3")).pair(3) == (49, -64)

    def test_passes(self, w):
        r = reciprocal(w)
        assert (r.kappa1, r.kappa2) == (2, mpq(1, 4))
        assert all(v.passed for v in r.verify_range(3, 6))


class TestNormalize:
    def test_examples(self):
        base = Explicit([10, 100, 1000])
        assert normalize(fixed((3, 2), base=base)).pair(1) == (12, 8)
        assert normalize(fixed((10, 7), base=base)).pair(1) == (10, 7)
        b, _ = normalize(fixed((3, 2), base=base)).pair(1)
        assert 10 <= b <= 20

    def test_requires_kappa1(self):
        with pytest.raises(HypothesisViolation):
            normalize(fixed((3, 2), kappa1="1/2"))

    @given(st.integers(1, 10**9), st.integers(-10**9, 10**9), st.integers(2, 10**9))
    def test_preserves_fraction_and_bounds(self, b, a, q):
        base = Explicit([q])
        b2, a2 = normalize(fixed((b, a), base=base)).pair(1)
        assert mpq(a2, b2) == mpq(a, b) or a == 0 == a2
        assert b2 >= q or b2 == b
        if b < q:
            assert q <= b2 <= q + b


class TestRationalFunction:
    def test_square_is_product(self, w):
        sq = apply_rational_function(w, [0, 0, 1])
        assert [sq.pair(n) for n in range(2, 6)] == [combine2(w, w, "mul").pair(n) for n in range(2, 6)]

    def test_mobius(self, w):
        r = apply_rational_function(w, [1, 2], [0, 1])
        assert r.kappa1 == 3
        assert r.pair(3) == (3136, 10368)
        assert all(v.passed for v in r.verify_range(3, 5))

    @pytest.mark.parametrize("P,Qc", [([3], [1]), ([2, 4], [1, 2]), ([0], [1])])
    def test_constant_rejected(self, w, P, Qc):
        with pytest.raises(HypothesisViolation):
            apply_rational_function(w, P, Qc)


class TestFitValidFrom:
    def test_greedy_start(self, w):
        fitted, verdicts = fit_valid_from(w, 6)
        assert all(v.passed for v in verdicts if v.n >= fitted.valid_from)
        assert fitted.valid_from <= 3


class TestCertificates:
    def test_pow2_encoding(self):
        assert encode_int(Q.term(3)) == {"pow2": 6}
        assert encode_int(49) == "49"
        assert decode_int({"pow2": 6}) == 64

    def test_round_trip_byte_identical(self, w, w_sq):
        doc = emit_certificate(combine2(w, w_sq, "sub"), 3, 6)
        text = dumps(doc)
        check = load_certificate(text)
        assert check.all_pass
        assert dumps(emit_certificate(check.witness, 3, 6)) == text
        assert dumps(emit_certificate(combine2(w, w_sq, "sub"), 3, 6)) == text

    def test_no_floats(self, w):
        text = dumps(emit_certificate(w, 2, 5))
        assert not re.search(r"\d\.\d|\d[eE][+-]?\d", text)
        json.loads(text, parse_float=lambda s: pytest.fail(f"float {s}"))

    def test_tampered_a_fails(self, w):
        doc = emit_certificate(w, 3, 5)
        doc["entries"][1]["a"] = str(int(doc["entries"][1]["a"]) + 1)
        with pytest.raises(CertificateError):
            load_certificate(doc)
        with pytest.raises(CertificateError):
            load_certificate(doc, check_digest=False)

    def test_schema_violation(self, w):
        doc = emit_certificate(w, 3, 4)
        doc["kappa1"] = "0.5"
        with pytest.raises(CertificateError):
            load_certificate(doc, check_digest=False)
