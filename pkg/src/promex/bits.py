"""Bit-granular bitstrings and the machine-word codec.

Everything downstream (memory, expressions, protocol messages) is built from
finite sequences of bits.  A bitstring is stored as an int plus a bit count;
bit i of the string is bit i of the int (LSB first), which makes slicing and
concatenation O(1) shift/mask work and makes the little-endian word codec the
identity on values.
"""

from __future__ import annotations

from dataclasses import dataclass


class BitString:
    """An immutable sequence of bits.

    ``value`` holds bit i in the 2**i place, so the first bit of the string is
    the least significant bit of the int.
    """

    __slots__ = ("n", "value")

    def __init__(self, n: int, value: int):
        if n < 0:
            raise ValueError("negative bit length")
        if value < 0 or value >> n:
            raise ValueError(f"value {value} does not fit in {n} bits")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "value", value)

    def __setattr__(self, *_):
        raise AttributeError("BitString is immutable")

    @staticmethod
    def from_bits(bits) -> "BitString":
        v = 0
        n = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            v |= b << n
            n += 1
        return BitString(n, v)

    def bits(self) -> tuple:
        return tuple((self.value >> i) & 1 for i in range(self.n))

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.value >> i) & 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString)
            and self.n == other.n
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.n, self.value))

    def __repr__(self) -> str:
        return f"BitString({self.n}, {self.value:#x})"


EMPTY = BitString(0, 0)


def concat(a: BitString, b: BitString) -> BitString:
    """a followed by b."""
    return BitString(a.n + b.n, a.value | (b.value << a.n))


def sub(b: BitString, offset: int, length: int):
    """The ``length`` bits of ``b`` starting at ``offset``.

    Defined only when offset + length <= len(b); returns None otherwise.
    """
    if offset < 0 or length < 0 or offset + length > b.n:
        return None
    return BitString(length, (b.value >> offset) & ((1 << length) - 1))


@dataclass(frozen=True)
class WordParams:
    """Machine-word shape: width N in bits, codec endianness, and the number
    of bits a text-format string character occupies."""

    width: int
    endian: str = "little"
    char_bits: int = 8

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("word width must be positive")
        if self.endian not in ("little", "big"):
            raise ValueError(f"unknown endianness {self.endian!r}")
        if not 1 <= self.char_bits <= 8:
            raise ValueError("char_bits must be in 1..8")

    @property
    def modulus(self) -> int:
        return 1 << self.width


def bs(n: int, params: WordParams) -> BitString:
    """Encode the natural number n as a bitstring.

    For n < 2**N the result is exactly N bits; larger values take the minimal
    number of bits instead of being truncated.
    """
    if n < 0:
        raise ValueError("bs is defined on naturals")
    width = params.width if n < params.modulus else n.bit_length()
    if params.endian == "little":
        return BitString(width, n)
    return BitString.from_bits(reversed(BitString(width, n).bits()))


def val(b: BitString, params: WordParams | None = None) -> int:
    """Decode a bitstring to the natural number it represents.

    Total on all lengths; val(empty) = 0.  Inverse of bs on n < 2**N.
    """
    if params is not None and params.endian == "big":
        return BitString.from_bits(reversed(b.bits())).value
    return b.value


def from_bytes(data: bytes) -> BitString:
    """Bytes to bits, first byte first, LSB-first within each byte."""
    return BitString(8 * len(data), int.from_bytes(data, "little"))


def to_bytes(b: BitString) -> bytes:
    if b.n % 8:
        raise ValueError("bitstring is not byte-aligned")
    return b.value.to_bytes(b.n // 8, "little")


def from_text(s: str, char_bits: int = 8) -> BitString:
    """Text to bits: each character contributes the low char_bits bits of its
    code point, in order."""
    v = 0
    mask = (1 << char_bits) - 1
    for k, ch in enumerate(s):
        v |= (ord(ch) & mask) << (k * char_bits)
    return BitString(char_bits * len(s), v)


class LiteralError(ValueError):
    pass


def parse_literal(text: str, params: WordParams) -> BitString:
    """Parse one bitstring literal.

    Forms: x"6D7367" (hex bytes), "abc" (text, char_bits per character),
    b"0101" (raw bits), i<decimal> (machine word via bs), iN (the word width
    itself as a word), eps (the empty string).
    """
    text = text.strip()
    if text == "eps":
        return EMPTY
    if text == "iN":
        return bs(params.width, params)
    if text.startswith("i") and text[1:].isdigit():
        return bs(int(text[1:]), params)
    if text.startswith('x"') and text.endswith('"'):
        body = text[2:-1]
        if len(body) % 2:
            raise LiteralError(f"odd hex literal {text!r}")
        try:
            return from_bytes(bytes.fromhex(body))
        except ValueError as e:
            raise LiteralError(str(e)) from None
    if text.startswith('b"') and text.endswith('"'):
        body = text[2:-1]
        if not set(body) <= {"0", "1"}:
            raise LiteralError(f"bad bit literal {text!r}")
        return BitString.from_bits(int(c) for c in body)
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return from_text(text[1:-1], params.char_bits)
    raise LiteralError(f"unrecognised literal {text!r}")


def render_literal(b: BitString, params: WordParams) -> str:
    """Canonical literal for a bitstring: eps, i<n> for word-width strings,
    hex for byte-aligned ones, raw bits otherwise."""
    if b.n == 0:
        return "eps"
    if b.n == params.width:
        return f"i{val(b)}"
    if b.n % 8 == 0:
        return 'x"' + to_bytes(b).hex().upper() + '"'
    return 'b"' + "".join(str(bit) for bit in b.bits()) + '"'
