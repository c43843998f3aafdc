"""
Bitstring encodings used throughout the reductions.

Bitstrings are plain `str` objects over "0" and "1". Rationals are
`fractions.Fraction`. `bti` is little-endian (the first bit is the least
significant). `encode_rb` and `encode_rq` read the first bit as the most
significant fractional digit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from rgnn_compiler.errors import MalformedEncoding, NotInRB, NotInRQ, SlotOverflow

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence


def check_bits(x: str) -> str:
    """
    Validate a bitstring.

    Parameters
    ----------
    x
        The candidate bitstring.

    Returns
    -------
    str
        The same bitstring.
    """
    if not isinstance(x, str) or x.strip("01"):
        raise MalformedEncoding(f"Not a bitstring: {x!r}")
    return x


def encode_rb(x: str) -> Fraction:
    """
    Rational binary encoding, sum of b_i 2^-i.

    Parameters
    ----------
    x
        The bitstring.

    Returns
    -------
    Fraction
        A value in [0, 1).
    """
    check_bits(x)
    if not x:
        return Fraction(0)
    return Fraction(int(x, 2), 1 << len(x))


def decode_rb(q: Fraction | int, length: int) -> str:
    """
    Invert `encode_rb` for a known length.

    Parameters
    ----------
    q
        The rational to decode.
    length
        The number of binary digits.

    Returns
    -------
    str
        The bitstring of the given length.
    """
    scaled = Fraction(q) * (1 << length)
    if scaled.denominator != 1 or not 0 <= scaled < (1 << length):
        raise NotInRB(f"{q} has no binary expansion of length {length}")
    return format(int(scaled), f"0{length}b") if length else ""


def encode_rq(x: str) -> Fraction:
    """
    Rational quaternary encoding, sum of (2 b_i + 1) 4^-i.

    Parameters
    ----------
    x
        The bitstring.

    Returns
    -------
    Fraction
        A value in RQ, either 0 or at least 1/4.
    """
    check_bits(x)
    value = 0
    for bit in x:
        value = 4 * value + 2 * int(bit) + 1
    return Fraction(value, 4 ** len(x))


def decode_rq(q: Fraction | int) -> str:
    """
    Invert `encode_rq`. No length hint is needed.

    Parameters
    ----------
    q
        The rational to decode.

    Returns
    -------
    str
        The decoded bitstring.
    """
    q = Fraction(q)
    if q < 0 or q >= 1:
        raise NotInRQ(f"{q} is outside [0, 1)")
    den = q.denominator
    if den & (den - 1) or (den.bit_length() - 1) % 2:
        raise NotInRQ(f"{q} has no finite quaternary expansion")
    bits = []
    while q:
        digit = int(4 * q)
        if digit not in (1, 3):
            raise NotInRQ(f"Quaternary digit {digit} is not 1 or 3")
        bits.append("1" if digit == 3 else "0")
        q = 4 * q - digit
    return "".join(bits)


def bti(x: str) -> int:
    """
    Little-endian binary to integer.

    Parameters
    ----------
    x
        The bitstring.

    Returns
    -------
    int
        The value.
    """
    check_bits(x)
    return int(x[::-1], 2) if x else 0


def bti_inv(v: int) -> str:
    """
    Shortest little-endian binary representation of a natural number.

    Parameters
    ----------
    v
        The natural number.

    Returns
    -------
    str
        The bitstring, empty for 0.
    """
    if v < 0:
        raise ValueError(f"Cannot encode negative value {v}")
    return format(v, "b")[::-1] if v else ""


def binary_sum(x1: str, x2: str) -> str:
    """
    Sum two little-endian naturals.

    Parameters
    ----------
    x1
        First summand.
    x2
        Second summand.

    Returns
    -------
    str
        The little-endian sum.
    """
    return bti_inv(bti(x1) + bti(x2))


def encode_nat(m: int) -> str:
    """
    Self-delimiting natural: 1^|b| 0 b where b = bti_inv(m).

    Parameters
    ----------
    m
        The natural number.

    Returns
    -------
    str
        The encoding.
    """
    b = bti_inv(m)
    return "1" * len(b) + "0" + b


def read_nat(s: str, pos: int = 0) -> tuple[int, int]:
    """
    Read a self-delimiting natural.

    Parameters
    ----------
    s
        The bitstring.
    pos
        Where to start reading.

    Returns
    -------
    tuple[int, int]
        The value and the position after it.
    """
    width = 0
    while pos < len(s) and s[pos] == "1":
        width += 1
        pos += 1
    if pos >= len(s):
        raise MalformedEncoding("Truncated natural number")
    pos += 1
    if pos + width > len(s):
        raise MalformedEncoding("Truncated natural number")
    return bti(s[pos : pos + width]), pos + width


def encode_code(x: str) -> str:
    """
    Length-prefixed bitstring.

    Parameters
    ----------
    x
        The bitstring.

    Returns
    -------
    str
        `encode_nat(len(x)) + x`.
    """
    return encode_nat(len(check_bits(x))) + x


def read_code(s: str, pos: int = 0) -> tuple[str, int]:
    """
    Read a length-prefixed bitstring.

    Parameters
    ----------
    s
        The bitstring.
    pos
        Where to start reading.

    Returns
    -------
    tuple[str, int]
        The payload and the position after it.
    """
    length, pos = read_nat(s, pos)
    if pos + length > len(s):
        raise MalformedEncoding("Truncated length-prefixed string")
    return s[pos : pos + length], pos + length


def tuple_encode(t: Iterable[str]) -> str:
    """
    Tuple encoding, the concatenation of length-prefixed elements.

    Parameters
    ----------
    t
        The elements.

    Returns
    -------
    str
        The encoding.
    """
    return "".join(encode_code(x) for x in t)


def tuple_decode(s: str, arity: int | None = None) -> tuple[str, ...]:
    """
    Decode a tuple encoding.

    Parameters
    ----------
    s
        The encoding.
    arity
        The expected number of elements, if known.

    Returns
    -------
    tuple[str, ...]
        The elements.
    """
    check_bits(s)
    items, pos = [], 0
    while pos < len(s):
        item, pos = read_code(s, pos)
        items.append(item)
    if arity is not None and len(items) != arity:
        raise MalformedEncoding(f"Expected {arity} elements, found {len(items)}")
    return tuple(items)


def multiset_encode(ms: Iterable[str]) -> str:
    """
    Canonical multiset encoding: element count, then the sorted elements.

    Parameters
    ----------
    ms
        The elements, in any order.

    Returns
    -------
    str
        The encoding. The empty multiset encodes to "0".
    """
    items = sorted(ms)
    return encode_nat(len(items)) + tuple_encode(items)


def multiset_decode(s: str) -> tuple[str, ...]:
    """
    Decode a multiset encoding.

    Parameters
    ----------
    s
        The encoding.

    Returns
    -------
    tuple[str, ...]
        The elements in canonical (sorted) order.
    """
    check_bits(s)
    count, pos = read_nat(s, 0)
    items = []
    for _ in range(count):
        item, pos = read_code(s, pos)
        items.append(item)
    if pos != len(s):
        raise MalformedEncoding("Trailing bits after multiset")
    if items != sorted(items):
        raise MalformedEncoding("Multiset elements are not in canonical order")
    return tuple(items)


def encode_zigzag(v: int) -> int:
    """
    Map integers to naturals, 0, -1, 1, -2, ... to 0, 1, 2, 3, ...

    Parameters
    ----------
    v
        The integer.

    Returns
    -------
    int
        The natural number.
    """
    return 2 * v if v >= 0 else -2 * v - 1


def decode_zigzag(m: int) -> int:
    """
    Invert `encode_zigzag`.

    Parameters
    ----------
    m
        The natural number.

    Returns
    -------
    int
        The integer.
    """
    return m // 2 if m % 2 == 0 else -(m + 1) // 2


def slot_width(k: int, c: int) -> int:
    """
    Bits per slot of a sum-safe tuple, ceil(log2(c 2^k)).

    Parameters
    ----------
    k
        Bit length of the largest element.
    c
        Maximum number of summands.

    Returns
    -------
    int
        The slot width, at least 1.
    """
    return max(1, (c * (1 << k) - 1).bit_length())


@dataclass(frozen=True)
class SumSafeTuple:
    """
    A tuple of naturals laid out in fixed-width slots so that adding
    payloads as integers adds the tuples element-wise.

    Attributes
    ----------
    slot_count
        Number of slots.
    slot_width
        Bits per slot.
    payload
        The bitstring, slots in order, each slot most significant bit first.
    """

    slot_count: int
    slot_width: int
    payload: str

    def __post_init__(self) -> None:
        check_bits(self.payload)
        if len(self.payload) != self.slot_count * self.slot_width:
            raise MalformedEncoding(
                f"Payload has {len(self.payload)} bits, expected {self.slot_count * self.slot_width}"
            )

    @property
    def value(self) -> int:
        """The payload read as a binary integer."""
        return int(self.payload, 2) if self.payload else 0

    def __add__(self, other: SumSafeTuple) -> SumSafeTuple:
        if (other.slot_count, other.slot_width) != (self.slot_count, self.slot_width):
            raise MalformedEncoding("Cannot add sum-safe tuples of different layouts")
        total = self.value + other.value
        width = self.slot_count * self.slot_width
        if total >= 1 << width:
            raise SlotOverflow(f"Sum needs more than {width} bits")
        return SumSafeTuple(
            self.slot_count, self.slot_width, format(total, f"0{width}b")
        )


def sum_safe_encode(elems: Sequence[int], l: int, k: int, c: int) -> SumSafeTuple:  # noqa: E741
    """
    Encode a tuple so that up to `c` encodings can be summed safely.

    Parameters
    ----------
    elems
        The naturals, each below 2^k.
    l
        The number of slots.
    k
        Bit length bound of each element.
    c
        Maximum number of summands.

    Returns
    -------
    SumSafeTuple
        The encoding.
    """
    if len(elems) != l:
        raise MalformedEncoding(f"Expected {l} elements, got {len(elems)}")
    width = slot_width(k, c)
    for e in elems:
        if not 0 <= e < 1 << k:
            raise SlotOverflow(f"Element {e} does not fit in {k} bits")
    return SumSafeTuple(l, width, "".join(format(e, f"0{width}b") for e in elems))


def sum_safe_decode(t: SumSafeTuple) -> tuple[int, ...]:
    """
    Decode a (possibly summed) sum-safe tuple.

    Parameters
    ----------
    t
        The tuple.

    Returns
    -------
    tuple[int, ...]
        The slot values.
    """
    w = t.slot_width
    return tuple(int(t.payload[i * w : (i + 1) * w], 2) for i in range(t.slot_count))
