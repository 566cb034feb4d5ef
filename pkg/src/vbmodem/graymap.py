"""Two-dimensional Gray mapping between 6-bit groups and dual tones."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .freqplan import FrequencyPlan

GRAY3 = (0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100)
_GRAY3_INDEX = {g: i for i, g in enumerate(GRAY3)}


@dataclass(frozen=True)
class ToneSymbol:
    freq_a: int
    freq_b: int

    @property
    def f1(self) -> int:
        """Transmitted sum line."""
        return self.freq_a + self.freq_b

    @property
    def f2(self) -> int:
        return self.freq_a

    @property
    def difference(self) -> int:
        # f1 - f2, regenerated by the square-law term
        return self.f1 - self.f2


def gray3(index: int) -> tuple[int, int, int]:
    if not 0 <= index <= 7:
        raise ValueError(f"gray index out of range: {index}")
    g = GRAY3[index]
    return (g >> 2 & 1, g >> 1 & 1, g & 1)


def tone_of_bits(bits: Sequence[int], plan: FrequencyPlan) -> ToneSymbol:
    if len(bits) != 6:
        raise ValueError("tone groups are 6 bits")
    hi = bits[0] << 2 | bits[1] << 1 | bits[2]
    lo = bits[3] << 2 | bits[4] << 1 | bits[5]
    return ToneSymbol(plan.group_a[_GRAY3_INDEX[hi]], plan.group_b[_GRAY3_INDEX[lo]])


def tone_of_index(ia: int, ib: int, plan: FrequencyPlan) -> ToneSymbol:
    return ToneSymbol(plan.group_a[ia], plan.group_b[ib])


def bits_of_tone(tone: ToneSymbol, plan: FrequencyPlan) -> list[int]:
    try:
        ia = plan.group_a.index(tone.freq_a)
        ib = plan.group_b.index(tone.freq_b)
    except ValueError:
        raise ValueError(f"tone {tone} is not in the frequency plan") from None
    return list(gray3(ia) + gray3(ib))


def bits_of_indices(ia: int, ib: int) -> list[int]:
    return list(gray3(ia) + gray3(ib))
