import random

import pytest
from fractions import Fraction
from hypothesis import given, strategies as st

from posdiv.errors import DivisionContractError, ZeroInputError
from posdiv.twoadic import (
    PrecisionPolicy,
    TwoAdic,
    canonical_decompose,
    epsilon,
    iwasawa_log,
    v2,
)


def brute_log_odd(u, bits):
    """Independent series oracle: Log u = log(u^2)/2 summed naively."""
    work = 1 << (bits + 24)
    t = (u * u - 1) % work
    acc = 0
    tk = 1
    for k in range(1, bits + 24):
        tk = (tk * t) % work
        a = (k & -k).bit_length() - 1
        term = (tk >> a) * pow(k >> a, -1, work) % work
        acc = (acc + term) if k % 2 == 1 else (acc - term)
    return (acc // 2) % (1 << bits)


def test_v2_basics():
    assert v2(8) == 3
    assert v2(5) == 0
    assert v2(Fraction(12, 5)) == 2
    assert v2(Fraction(5, 12)) == -2
    with pytest.raises(ZeroInputError):
        v2(0)


def test_canonical_decompose():
    n, u, s = canonical_decompose(TwoAdic.from_int(-1))
    assert (n, s) == (0, -1) and u.unit == 1
    n, u, s = canonical_decompose(TwoAdic.from_int(3))
    assert (n, s) == (0, -1) and u.unit % 4 == 1
    n, u, s = canonical_decompose(TwoAdic.from_int(20))
    assert (n, s) == (2, 1) and u.unit % (1 << 5) == 5


def test_epsilon_values():
    assert epsilon(5) == 1
    assert epsilon(7) == -1
    assert epsilon(2) == 1
    assert epsilon(-25) == -1
    assert epsilon(Fraction(1, 25)) == 1
    assert epsilon(Fraction(-1, 3)) == 1  # -1/3 = 1 mod 4


def test_epsilon_multiplicative():
    rng = random.Random(7)
    for _ in range(200):
        a = rng.randrange(-10**6, 10**6) or 1
        b = rng.randrange(-10**6, 10**6) or 1
        assert epsilon(a * b) == epsilon(a) * epsilon(b)


def test_log_known_valuations():
    assert iwasawa_log(1).is_zero
    assert v2(iwasawa_log(5)) == 2
    assert v2(iwasawa_log(7)) == 3
    assert iwasawa_log(2, 32).is_zero
    assert iwasawa_log(-1, 32).is_zero
    # Log(-x) = Log(x): sign is stripped
    assert iwasawa_log(-5).same(iwasawa_log(5))


def test_log_matches_series_oracle():
    for u in (3, 5, 7, 9, 23, 97, 195, 1 + 2**7):
        got = iwasawa_log(TwoAdic.from_int(u, 48), 40)
        expect = brute_log_odd(u, 40)
        assert got.residue(40) == expect % (1 << 40)


def test_log_valuation_census_mod_64():
    # v2(Log u) = 2 exactly when u = 3,5 mod 8; >= 3 for u = 1,7 mod 8
    for u in range(1, 128, 2):
        lg = iwasawa_log(TwoAdic.from_int(u, 40), 32)
        if u % 8 in (3, 5):
            assert v2(lg) == 2
        elif u != 1:
            assert lg.is_zero or v2(lg) >= 3


@given(st.integers(min_value=1, max_value=2**28).map(lambda n: 2 * n + 1))
def test_log_is_additive(u):
    v = 2 * (u % 1001) + 3
    lhs = iwasawa_log(TwoAdic.from_int(u * v, 48), 36)
    rhs = iwasawa_log(TwoAdic.from_int(u, 48), 36) + iwasawa_log(
        TwoAdic.from_int(v, 48), 36
    )
    assert lhs.same(rhs, bits=34)


def test_log_square_consistency():
    rng = random.Random(11)
    for _ in range(100):
        u = 2 * rng.randrange(1, 1 << 20) + 1
        l1 = iwasawa_log(TwoAdic.from_int(u, 48), 36)
        l2 = iwasawa_log(TwoAdic.from_int(u * u, 48), 36)
        assert (l1 + l1).same(l2, bits=34)


def test_arithmetic_precision_tracking():
    a = TwoAdic.from_int(5, 16)
    b = TwoAdic.from_int(5, 16)
    d = a - b
    assert d.is_zero and d.zero_prec == 16
    # cancellation eats precision: (1 + 2^10) - 1 has 6 certified bits left
    x = TwoAdic.from_int(1 + (1 << 10), 16)
    y = TwoAdic.from_int(1, 16)
    z = x - y
    assert z.val == 10 and z.prec == 6


def test_division_contract():
    a = TwoAdic.from_int(4)
    b = TwoAdic.from_int(2)
    assert a.divide_integral(b).residue(8) == 2
    with pytest.raises(DivisionContractError):
        b.divide_integral(a)


def test_unit_pow_two_adic_exponent():
    u = TwoAdic.from_int(5, 40)
    e = TwoAdic.from_rational(1, 3, 40)  # 1/3 in Z_2
    w = u.unit_pow(e)
    assert w.unit_pow(TwoAdic.from_int(3, 40)).same(u, bits=30)


def test_precision_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(initial=4)
    with pytest.raises(ValueError):
        PrecisionPolicy(growth=2)
    with pytest.raises(ValueError):
        PrecisionPolicy(stable_runs=1)
