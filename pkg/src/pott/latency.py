"""Latency-aware timelock margins, link budgets and the stale-rate interval bound.

Block counts are computed with exact rationals. Floats passed in are read
through their shortest decimal repr (``0.1`` means one tenth), so step
boundaries land exactly where the decimal inputs put them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

SECONDS_PER_MINUTE = 60
CSV_UNIT_SECONDS = 512
SECONDS_PER_YEAR = 365 * 86400


def exact(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, (int, Fraction, Decimal)):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class TimelockInputs:
    """Minutes for owlt/J/b_target, blocks for the margins."""

    owlt_minutes: float | Fraction
    J_minutes: float | Fraction
    b_target_minutes: float | Fraction = 10
    B_base_blocks: int = 144
    M_op_blocks: int = 2

    def __post_init__(self):
        if min(exact(self.owlt_minutes), exact(self.J_minutes)) < 0:
            raise ValueError("owlt and J must be non-negative")
        if exact(self.b_target_minutes) <= 0:
            raise ValueError("b_target must be positive")
        if self.B_base_blocks < 0 or self.M_op_blocks < 0:
            raise ValueError("block margins must be non-negative")


def cltv_extra_blocks(inputs: TimelockInputs) -> int:
    """ceil((RTT + J) / b_target) with RTT = 2 * OWLT; equality stays at k."""
    rtt_s = 2 * exact(inputs.owlt_minutes) * SECONDS_PER_MINUTE
    j_s = exact(inputs.J_minutes) * SECONDS_PER_MINUTE
    b_s = exact(inputs.b_target_minutes) * SECONDS_PER_MINUTE
    return math.ceil((rtt_s + j_s) / b_s)


def cltv_total_blocks(inputs: TimelockInputs) -> int:
    return inputs.B_base_blocks + cltv_extra_blocks(inputs) + inputs.M_op_blocks


def csv_sequence_units(t_seconds) -> int:
    """Time-based relative locktime in 512-second units, rounded up."""
    t = exact(t_seconds)
    if t < 0:
        raise ValueError("t must be non-negative")
    return math.ceil(t / CSV_UNIT_SECONDS)


def csv_margin_seconds(owlt_max_minutes, J_minutes, margin_seconds=0) -> Fraction:
    """RTT_max + J (+ operational margin) in seconds, the span a unilateral-close CSV must cover."""
    return (2 * exact(owlt_max_minutes) + exact(J_minutes)) * SECONDS_PER_MINUTE + exact(margin_seconds)


def link_budget(blocks_per_year: int, bytes_per_block) -> tuple[Fraction, Fraction]:
    """``(bytes_per_year, sustained_bits_per_second)`` over a 365-day year."""
    if blocks_per_year < 0 or exact(bytes_per_block) < 0:
        raise ValueError("inputs must be non-negative")
    per_year = blocks_per_year * exact(bytes_per_block)
    return per_year, per_year * 8 / SECONDS_PER_YEAR


def format_bytes(n) -> str:
    value = float(n)
    for unit in ("B", "kB", "MB", "GB", "TB"):
        if value < 1000 or unit == "TB":
            return f"{value:.3g} {unit}"
        value /= 1000
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class StaleBoundInputs:
    max_owlt_minutes: float | Fraction
    margin_minutes: float | Fraction
    epsilon: float | Fraction

    def __post_init__(self):
        if not 0 < exact(self.epsilon) <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if exact(self.max_owlt_minutes) < 0 or exact(self.margin_minutes) < 0:
            raise ValueError("latencies must be non-negative")

    @property
    def delay_minutes(self) -> Fraction:
        """D = 2 * max OWLT + M."""
        return 2 * exact(self.max_owlt_minutes) + exact(self.margin_minutes)


def stale_fair_interval(inputs: StaleBoundInputs) -> Fraction:
    """Smallest block interval (minutes) keeping the linearised stale rate D/b at epsilon."""
    return inputs.delay_minutes / exact(inputs.epsilon)


def stale_probability(block_interval_minutes, delay_minutes) -> float:
    """1 - exp(-D/b) for Poisson block arrivals at rate 1/b."""
    b = exact(block_interval_minutes)
    if b <= 0:
        raise ValueError("block interval must be positive")
    return -math.expm1(-float(exact(delay_minutes) / b))


def cltv_step_table(
    j_values: Sequence = (0, 30, 60),
    owlt_max_minutes=22,
    step_minutes=Fraction(1, 10),
    b_target_minutes=10,
) -> list[tuple[Fraction, Fraction, int]]:
    """Rows ``(owlt_min, J, delta_blocks)`` over an inclusive OWLT grid from 0."""
    step = exact(step_minutes)
    n = int(exact(owlt_max_minutes) / step)
    rows = []
    for j in j_values:
        for i in range(n + 1):
            owlt = i * step
            rows.append((owlt, exact(j), cltv_extra_blocks(TimelockInputs(owlt, exact(j), b_target_minutes))))
    return rows


def step_table_csv(rows: Iterable[tuple[Fraction, Fraction, int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["owlt_min", "J", "delta_blocks"])
    for owlt, j, d in rows:
        w.writerow([_fmt(owlt), _fmt(j), d])
    return buf.getvalue()


def _fmt(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return format(Decimal(x.numerator) / Decimal(x.denominator), "f")
