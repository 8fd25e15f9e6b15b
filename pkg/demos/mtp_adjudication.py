"""Decide whether a delivered payload beat an HTLC expiry, using block time.

The last receipt's t_out is converted from TAI to UTC and compared with the
median of the previous eleven block timestamps (plus a drift allowance).
Block height is checked against the expiry height separately. Both checks
must pass. The synthetic headers stand in for a real SPV header store.
"""

from pott import TaiTimestamp, originate_chain, RelayKeypair, append_hop
from pott.anchor import MtpParams, arrived_before_expiry, dispute_bundle, median_time_past, mtp_drift_bound
from pott.simulator import synth_header_chain
from pott.timebase import LeapSecondTable, tai_to_unix_utc, unix_utc_to_tai

table = LeapSecondTable.bundled()
keys = [RelayKeypair.from_secret(bytes(31) + bytes([i])) for i in (1, 2, 3)]

delivered_utc = 1_760_000_000
t_out = unix_utc_to_tai(delivered_utc, table)
chain = originate_chain(b"\x07" * 32, keys[0], t_out.shifted(-3000), t_out.shifted(-2990))
chain = append_hop(chain, keys[1], t_out.shifted(-2000), t_out.shifted(-1990))
chain = append_hop(chain, keys[2], t_out.shifted(-10), t_out)

headers = synth_header_chain(seed=21, count=30, mean_interval_seconds=600, start_time=delivered_utc - 9000,
                             start_height=910_000)
tip = headers[-1]
mtp = median_time_past(headers)
drift = mtp_drift_bound(headers)
print(f"t* = {tai_to_unix_utc(chain.last.t_out, table)} UTC, tip height {tip.height}, MTP {mtp}")
print(f"observed MTP lag over heights {drift.first_height}-{drift.last_height}: {drift.bound_seconds} s")

params = MtpParams.from_policy(J_seconds=3600, sigma_t_seconds=5, h_expiry=tip.height + 6, kappa_blocks=2)
for label, t_star in (("as delivered", chain.last.t_out), ("two hours later", chain.last.t_out.shifted(7200))):
    d = arrived_before_expiry(t_star, tip, mtp, params, table)
    print(f"{label}: {d.decision.value}: {d.rationale}")

bundle = dispute_bundle(chain, arrived_before_expiry(chain.last.t_out, tip, mtp, params, table),
                        chain.last.t_out, params, drift, ["dsn-utc"])
print(f"dispute bundle: {len(bundle)} bytes of CBOR")
