"""Walk one payload across three relays and check what a verifier sees.

A lander on Mars hands a science file to an orbiter, which forwards it to a
deep-space ground station on Earth. Each relay signs a receipt that echoes the
payload digest and the nonce and hashes the previous receipt. At the end we
verify the chain, tamper with it twice, and publish a privacy-mode commitment.
"""

import dataclasses

from pott import (
    ReceiptChain,
    RelayKeypair,
    TaiTimestamp,
    append_hop,
    compute_payload_digest,
    encode_receipt,
    originate_chain,
    verify_structure,
)
from pott.privacy import commit_transcript, verify_opening
from pott.timebase import LeapSecondTable, tai_to_unix_utc

lander = RelayKeypair.from_secret(bytes(31) + b"\x11")
orbiter = RelayKeypair.from_secret(bytes(31) + b"\x22")
station = RelayKeypair.from_secret(bytes(31) + b"\x33")
allowlist = {k.public for k in (lander, orbiter, station)}

payload = b"spectrometer frame 0042 " * 40
h = compute_payload_digest(payload)
print("payload digest:", h.value.hex())

t0 = TaiTimestamp(2_145_916_837)  # seconds since 1958-01-01 TAI
chain = originate_chain(h, lander, t0, t0.shifted(4))
chain = append_hop(chain, orbiter, t0.shifted(9), t0.shifted(300))
# 14 minutes of one-way light time to the ground station
chain = append_hop(chain, station, t0.shifted(300 + 14 * 60), t0.shifted(300 + 14 * 60 + 2))

table = LeapSecondTable.bundled()
for i, r in enumerate(chain.receipts):
    print(f"hop {i}: node {r.node.hex()[:16]}..  in {tai_to_unix_utc(r.t_in, table)}  "
          f"out {tai_to_unix_utc(r.t_out, table)}  ({len(encode_receipt(r))} bytes on the wire)")

report = verify_structure(chain, allowlist)
print("\nhonest chain structurally valid:", report.structural_ok)

# Editing a hand-off time breaks the relay's own signature, and the next hop's
# prev link still commits to the original receipt.
back = dataclasses.replace(chain.receipts[1], t_out=chain.receipts[1].t_out.shifted(-120))
forged = ReceiptChain((chain.receipts[0], back, chain.receipts[2]))
failures = verify_structure(forged, allowlist).failures
print("edited t_out:", sorted(f"{f.rule}@{f.hop}" for f in failures))

# Dropping the middle hop breaks the link from the station to the lander.
cut = ReceiptChain((chain.receipts[0], chain.receipts[2]))
print("middle hop removed:", sorted(f"{f.rule}@{f.hop}" for f in verify_structure(cut, allowlist).failures))

# Routine publication reveals only the transcript hash and the time span.
c = commit_transcript(chain)
print("\ncommitment:", c.encode().hex())
print("opening matches:", verify_opening(c, chain, allowlist).ok)
print("opening with forged chain:", verify_opening(c, forged, allowlist).ok)
