"""Expanded dual-tone frequency groups.

Two groups of eight frequencies each, built as 21/19 geometric chains and
checked against three constraints: band membership, chain ratio, and
cross-group / sum separation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

BAND_LOW_HZ = 300
BAND_HIGH_HZ = 3400
RATIO_NUM = 21
RATIO_DEN = 19
GROUP_SIZE = 8

# Classic 4x4 touch-tone table. Not an exact chain (770 * 21/19 = 851.05).
DTMF_HIGH_GROUP = (1209, 1336, 1477, 1633)
DTMF_LOW_GROUP = (697, 770, 852, 941)


@dataclass(frozen=True)
class FrequencyPlan:
    group_a: tuple[int, ...]
    group_b: tuple[int, ...]
    threshold_hz: float = 70

    def __post_init__(self):
        object.__setattr__(self, "group_a", tuple(int(f) for f in self.group_a))
        object.__setattr__(self, "group_b", tuple(int(f) for f in self.group_b))

    @property
    def frequencies(self) -> tuple[int, ...]:
        return self.group_a + self.group_b


@dataclass
class PlanValidation:
    valid: bool
    min_pairwise_gap_hz: float
    violations: list[tuple[str, tuple]] = field(default_factory=list)


def build_chain(base_hz: int, count: int) -> list[int]:
    """Geometric 21/19 chain starting at ``base_hz``, each step truncated to an integer."""
    if base_hz <= 0 or count < 1:
        raise ValueError("base_hz must be positive and count >= 1")
    chain = [int(base_hz)]
    for _ in range(count - 1):
        chain.append(chain[-1] * RATIO_NUM // RATIO_DEN)
    return chain


def default_plan() -> FrequencyPlan:
    return FrequencyPlan(tuple(build_chain(1624, GROUP_SIZE)),
                         tuple(build_chain(1402, GROUP_SIZE)), 70)


def classic_plan() -> FrequencyPlan:
    return FrequencyPlan(DTMF_HIGH_GROUP, DTMF_LOW_GROUP, 70)


def validate_plan(plan: FrequencyPlan, check_ratio: bool = True,
                  check_sums: bool = True) -> PlanValidation:
    """Check a plan against the band, ratio and separation constraints.

    The reported minimum gap covers every pair of distinct plan frequencies
    (within and across groups) and, when ``check_sums`` is set, every
    ``f_a + f_b`` against every plan frequency.
    """
    if not plan.group_a or not plan.group_b:
        raise ValueError("both groups must be non-empty")
    thr = plan.threshold_hz
    violations: list[tuple[str, tuple]] = []

    for f in plan.frequencies:
        if not BAND_LOW_HZ <= f <= BAND_HIGH_HZ:
            violations.append(("out_of_band", (f,)))

    if check_ratio:
        for group in (plan.group_a, plan.group_b):
            for lo, hi in zip(group, group[1:]):
                if hi <= lo:
                    violations.append(("not_ascending", (lo, hi)))
                elif abs(hi - lo * RATIO_NUM / RATIO_DEN) > 1:
                    violations.append(("ratio", (lo, hi)))

    allf = plan.frequencies
    gaps = [abs(x - y) for i, x in enumerate(allf) for y in allf[i + 1:]]
    for fa, fb in product(plan.group_a, plan.group_b):
        if abs(fa - fb) < thr:
            violations.append(("pair_gap", (fa, fb)))
        if check_sums:
            s = fa + fb
            for g in allf:
                d = abs(s - g)
                gaps.append(d)
                if d < thr:
                    violations.append(("sum_gap", (fa, fb, g)))

    return PlanValidation(not violations, float(min(gaps)) if gaps else float("inf"),
                          violations)


def _all_chains(count: int) -> tuple[np.ndarray, np.ndarray]:
    bases = np.arange(BAND_LOW_HZ, BAND_HIGH_HZ + 1, dtype=np.int64)
    chains = np.empty((bases.size, count), dtype=np.int64)
    chains[:, 0] = bases
    for i in range(1, count):
        chains[:, i] = chains[:, i - 1] * RATIO_NUM // RATIO_DEN
    keep = chains[:, -1] <= BAND_HIGH_HZ
    return bases[keep], chains[keep]


def search_plan(threshold_hz: float, count: int = GROUP_SIZE) -> FrequencyPlan | None:
    """Exhaustive scan over integer base pairs ``b_a > b_b``.

    Returns the valid plan with the lexicographically smallest ``(b_a, b_b)``
    or ``None``. Chains always satisfy the ratio rule by construction and
    chains leaving the band are discarded up front, so only the separation
    constraints are evaluated here (vectorised over ``b_b``).
    """
    if threshold_hz <= 0:
        raise ValueError("threshold_hz must be positive")
    bases, chains = _all_chains(count)
    for i, b_a in enumerate(bases):
        if i == 0:
            continue
        ca = chains[i]                      # (count,)
        cb = chains[:i]                     # candidates with b_b < b_a
        # pairwise |f_a - f_b|
        pair = np.abs(ca[None, :, None] - cb[:, None, :])
        ok = (pair >= threshold_hz).all(axis=(1, 2))
        if not ok.any():
            continue
        cand = np.nonzero(ok)[0]
        cbs = cb[cand]
        sums = ca[None, :, None] + cbs[:, None, :]          # (n, count, count)
        flat = sums.reshape(len(cand), -1)
        targets = np.concatenate([np.broadcast_to(ca, (len(cand), count)), cbs], axis=1)
        d = np.abs(flat[:, :, None] - targets[:, None, :])
        ok2 = (d >= threshold_hz).all(axis=(1, 2))
        if ok2.any():
            j = cand[np.argmax(ok2)]
            plan = FrequencyPlan(tuple(ca.tolist()), tuple(chains[j].tolist()), threshold_hz)
            assert validate_plan(plan).valid
            return plan
    return None


def format_plan(plan: FrequencyPlan) -> str:
    lines = [f"{'Group A (Hz)':>12}  {'Group B (Hz)':>12}"]
    for fa, fb in zip(plan.group_a, plan.group_b):
        lines.append(f"{fa:>12}  {fb:>12}")
    lines += [f"A,{f}" for f in plan.group_a]
    lines += [f"B,{f}" for f in plan.group_b]
    return "\n".join(lines)
