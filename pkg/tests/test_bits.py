"""Bitstring and word-codec tests.

The oracles here work on plain Python lists of bits and on schoolbook base-2
arithmetic, independent of the packed representation under test.
"""

import pytest
from hypothesis import given, strategies as st

from promex.bits import (
    EMPTY,
    BitString,
    LiteralError,
    WordParams,
    bs,
    concat,
    from_text,
    parse_literal,
    render_literal,
    sub,
    val,
)

P8 = WordParams(width=8)


# Independent reference implementations.

def oracle_val(bit_list):
    total = 0
    for i, b in enumerate(bit_list):
        total += b * (2 ** i)
    return total


def oracle_bs(n, width):
    out = []
    k = n
    while k:
        out.append(k % 2)
        k //= 2
    while len(out) < width:
        out.append(0)
    return out


bit_lists = st.lists(st.integers(0, 1), max_size=64)


def test_val_exhaustive_16bit():
    # Every 16-bit string, value checked against the base-2 expansion oracle.
    for v in range(1 << 16):
        b = BitString(16, v)
        assert val(b) == oracle_val(b.bits())


def test_bs_val_roundtrip_exhaustive_8bit():
    for n in range(256):
        b = bs(n, P8)
        assert len(b) == 8
        assert list(b.bits()) == oracle_bs(n, 8)
        assert val(b) == n


@given(st.integers(0, 2**40))
def test_bs_val_roundtrip_wide(n):
    params = WordParams(width=16)
    b = bs(n, params)
    assert val(b) == n
    if n < 2**16:
        assert len(b) == 16
    else:
        assert len(b) == n.bit_length()


def test_val_empty_is_zero():
    assert val(EMPTY) == 0


def test_big_endian_codec_differs():
    pbig = WordParams(width=8, endian="big")
    b = bs(1, pbig)
    assert val(b, pbig) == 1
    assert val(b) == 128  # MSB-first layout read back LSB-first


@given(bit_lists, bit_lists)
def test_concat_matches_list_concat(xs, ys):
    got = concat(BitString.from_bits(xs), BitString.from_bits(ys))
    assert list(got.bits()) == xs + ys


@given(bit_lists, bit_lists, bit_lists)
def test_concat_associative(xs, ys, zs):
    a, b, c = (BitString.from_bits(t) for t in (xs, ys, zs))
    assert concat(concat(a, b), c) == concat(a, concat(b, c))


@given(bit_lists, st.integers(0, 70), st.integers(0, 70))
def test_sub_matches_list_slice(xs, o, l):
    b = BitString.from_bits(xs)
    got = sub(b, o, l)
    if o + l <= len(xs):
        assert got is not None and list(got.bits()) == xs[o:o + l]
    else:
        assert got is None


@given(bit_lists)
def test_sub_full_range_is_identity(xs):
    b = BitString.from_bits(xs)
    assert sub(b, 0, len(xs)) == b
    assert sub(b, len(xs), 0) == EMPTY


def test_sub_of_text_picks_characters():
    ab = from_text("ab")
    assert sub(ab, 8, 8) == from_text("b")
    assert sub(ab, 0, 8) == from_text("a")


def test_indexing_and_equality():
    b = BitString.from_bits([1, 0, 1])
    assert (b[0], b[1], b[2]) == (1, 0, 1)
    assert b != BitString.from_bits([1, 0, 1, 0])
    with pytest.raises(IndexError):
        b[3]


def test_literal_forms():
    assert parse_literal("eps", P8) == EMPTY
    assert parse_literal("i20", P8) == bs(20, P8)
    assert parse_literal("iN", P8) == bs(8, P8)
    assert parse_literal('b"0101"', P8) == BitString.from_bits([0, 1, 0, 1])
    assert parse_literal('"ab"', P8) == from_text("ab")
    assert parse_literal('x"6D736731"', P8) == from_text("msg1")


def test_literal_char_bits_one():
    p1 = WordParams(width=8, char_bits=1)
    b = parse_literal('"msg1"', p1)
    assert len(b) == 4
    # low bit of each of m, s, g, 1
    assert list(b.bits()) == [ord(c) & 1 for c in "msg1"]


def test_literal_errors():
    with pytest.raises(LiteralError):
        parse_literal('x"ABC"', P8)
    with pytest.raises(LiteralError):
        parse_literal('b"012"', P8)
    with pytest.raises(LiteralError):
        parse_literal("0xFF", P8)


def test_render_literal_canonical_forms():
    assert render_literal(EMPTY, P8) == "eps"
    assert render_literal(bs(20, P8), P8) == "i20"
    assert render_literal(from_text("msg1"), P8) == 'x"6D736731"'
    assert render_literal(BitString.from_bits([1, 1, 0]), P8) == 'b"110"'


@given(bit_lists)
def test_render_parse_roundtrip(xs):
    b = BitString.from_bits(xs)
    assert parse_literal(render_literal(b, P8), P8) == b
