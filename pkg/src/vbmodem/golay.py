"""Extended binary Golay [24,12,8] code.

Words are handled as Python ints internally: a 12-bit message ``m`` maps to
the 24-bit codeword ``(m << 12) | parity(m)``, so the first twelve bits of a
codeword (most significant first) are the message itself. Bit-sequence
wrappers convert to and from lists of 0/1 with element 0 as the leftmost bit.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

# Icosahedron-derived parity block, row i gives the parity contribution of
# message bit i (row 0 = leftmost message bit).
B_ROWS = (
    "110111000101",
    "101110001011",
    "011100010111",
    "111000101101",
    "110001011011",
    "100010110111",
    "000101101111",
    "001011011101",
    "010110111001",
    "101101110001",
    "011011100011",
    "111111111110",
)
_B = tuple(int(r, 2) for r in B_ROWS)
_MASK12 = 0xFFF


class GolayDecodeError(ValueError):
    """Received word is farther than three bits from every codeword."""


def _parity(message: int) -> int:
    p = 0
    for i in range(12):
        if message >> (11 - i) & 1:
            p ^= _B[i]
    return p


_PARITY = tuple(_parity(m) for m in range(4096))


def _syndrome(word: int) -> int:
    return _PARITY[word >> 12] ^ (word & _MASK12)


def _build_table() -> dict[int, int]:
    table = {}
    for w in range(4):
        for pos in combinations(range(24), w):
            e = 0
            for p in pos:
                e |= 1 << p
            s = _syndrome(e)
            assert s not in table
            table[s] = e
    return table


# syndrome -> coset leader, for all 2325 error patterns of weight <= 3
_SYNDROMES = _build_table()


def encode_int(message: int) -> int:
    if not 0 <= message < 4096:
        raise ValueError("message must fit in 12 bits")
    return (message << 12) | _PARITY[message]


def decode_int(word: int) -> tuple[int, int]:
    """Return ``(message, corrected_bits)``; raises GolayDecodeError past 3 errors."""
    if not 0 <= word < 1 << 24:
        raise ValueError("word must fit in 24 bits")
    e = _SYNDROMES.get(_syndrome(word))
    if e is None:
        raise GolayDecodeError(f"uncorrectable word {word:06x}")
    return (word ^ e) >> 12, bin(e).count("1")


def bits_to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | (1 if b else 0)
    return v


def int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def golay_encode(message: Sequence[int]) -> list[int]:
    if len(message) != 12:
        raise ValueError("Golay message must be 12 bits")
    return int_to_bits(encode_int(bits_to_int(message)), 24)


def golay_decode(word: Sequence[int]) -> tuple[list[int], int]:
    if len(word) != 24:
        raise ValueError("Golay codeword must be 24 bits")
    m, n = decode_int(bits_to_int(word))
    return int_to_bits(m, 12), n
