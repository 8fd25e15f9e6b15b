"""Size Lightning timelocks and anchoring bandwidth for an Earth-Mars link.

The CLTV margin must outlast a full round trip plus operator jitter, rounded
up to whole blocks. The table shows where the margin steps as the planets
drift apart; the budget lines show what carrying headers or compact filters
over the link costs.
"""

from fractions import Fraction

from pott.latency import (
    StaleBoundInputs,
    TimelockInputs,
    csv_margin_seconds,
    csv_sequence_units,
    cltv_extra_blocks,
    cltv_step_table,
    cltv_total_blocks,
    format_bytes,
    link_budget,
    stale_fair_interval,
    stale_probability,
)

for owlt in (3, 12.5, 22):
    for j in (0, 60):
        inputs = TimelockInputs(owlt, j)
        print(f"OWLT {owlt:>4} min, J {j:>2} min: delta {cltv_extra_blocks(inputs):>2} blocks, "
              f"total {cltv_total_blocks(inputs)}")

span = csv_margin_seconds(22, 60)
print(f"\nunilateral close must wait {span} s = {csv_sequence_units(span)} CSV units of 512 s")

print("\nwhere the margin steps (J = 30 min):")
previous = None
for owlt, j, delta in cltv_step_table((30,), 22, Fraction(1, 10)):
    if delta != previous:
        print(f"  from OWLT {float(owlt):5.1f} min: {delta} blocks")
        previous = delta

for label, size in (("headers only", 80), ("headers + 20 kB filters", 20_000)):
    per_year, bps = link_budget(52_560, size)
    print(f"{label:>24}: {format_bytes(per_year)}/yr, {float(bps):.3g} bps")

bound = stale_fair_interval(StaleBoundInputs(22, 0, Fraction(5, 100)))
print(f"\nan interplanetary chain keeping stale blocks near 5% needs ~{bound} min blocks "
      f"({float(bound) / 60:.1f} h); exact Poisson stale rate there {stale_probability(bound, 44):.4f}")
