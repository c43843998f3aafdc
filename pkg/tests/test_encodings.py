from fractions import Fraction

import pytest

from rgnn_compiler.encodings import (
    SumSafeTuple,
    binary_sum,
    bti,
    bti_inv,
    decode_rb,
    decode_rq,
    decode_zigzag,
    encode_code,
    encode_nat,
    encode_rb,
    encode_rq,
    encode_zigzag,
    multiset_decode,
    multiset_encode,
    read_nat,
    slot_width,
    sum_safe_decode,
    sum_safe_encode,
    tuple_decode,
    tuple_encode,
)
from rgnn_compiler.errors import MalformedEncoding, NotInRB, NotInRQ, SlotOverflow


def test_rb():
    assert encode_rb("101") == Fraction(5, 8)
    assert encode_rb("") == 0
    assert decode_rb(Fraction(5, 8), 3) == "101"
    assert decode_rb(Fraction(5, 8), 5) == "10100"
    with pytest.raises(NotInRB):
        decode_rb(Fraction(1, 3), 4)
    with pytest.raises(NotInRB):
        decode_rb(Fraction(5, 8), 2)


def test_rq():
    assert encode_rq("") == 0
    assert encode_rq("1") == Fraction(3, 4)
    assert encode_rq("01") == Fraction(7, 16)
    for x in ("", "0", "1", "0110", "1111000"):
        assert decode_rq(encode_rq(x)) == x
    for q in (Fraction(1, 2), Fraction(1, 8), Fraction(1), Fraction(1, 3)):
        with pytest.raises(NotInRQ):
            decode_rq(q)


def test_rq_is_prefix_free():
    # "0" and "00" would collide under the binary encoding
    assert encode_rq("0") != encode_rq("00")
    assert encode_rb("0") == encode_rb("00")


def test_bti():
    assert bti("") == 0
    assert bti("011") == 6
    assert bti_inv(6) == "011"
    assert bti_inv(0) == ""
    assert binary_sum("1", "1") == "01"
    with pytest.raises(ValueError):
        bti_inv(-1)


def test_naturals_and_codes():
    assert encode_nat(0) == "0"
    assert encode_nat(2) == "11001"
    assert read_nat("11001" + "111", 0) == (2, 5)
    assert encode_code("10") == "11001" + "10"
    with pytest.raises(MalformedEncoding):
        read_nat("111")


def test_tuples():
    t = ("", "1", "0110")
    assert tuple_decode(tuple_encode(t)) == t
    assert tuple_decode(tuple_encode(t), 3) == t
    with pytest.raises(MalformedEncoding):
        tuple_decode(tuple_encode(t), 2)
    with pytest.raises(MalformedEncoding):
        tuple_decode("2")


def test_multisets_are_canonical():
    assert multiset_encode([]) == "0"
    assert multiset_encode(["1", "0", "1"]) == multiset_encode(["1", "1", "0"])
    assert multiset_decode(multiset_encode(["1", "0", "1"])) == ("0", "1", "1")
    unsorted = encode_nat(2) + tuple_encode(["1", "0"])
    with pytest.raises(MalformedEncoding, match="canonical"):
        multiset_decode(unsorted)


def test_zigzag():
    assert [encode_zigzag(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    assert all(decode_zigzag(encode_zigzag(v)) == v for v in range(-20, 20))


def test_sum_safe_tuples():
    assert slot_width(2, 3) == 4
    a = sum_safe_encode([3, 1], 2, 2, 3)
    b = sum_safe_encode([2, 3], 2, 2, 3)
    c = sum_safe_encode([3, 3], 2, 2, 3)
    assert sum_safe_decode(a + b + c) == (8, 7)
    with pytest.raises(SlotOverflow):
        sum_safe_encode([4, 0], 2, 2, 3)
    with pytest.raises(MalformedEncoding):
        SumSafeTuple(2, 4, "101")
    with pytest.raises(MalformedEncoding):
        a + sum_safe_encode([1], 1, 2, 3)
