"""Structural chain verification and evidence-set grouping.

Rules, always all evaluated and reported in this order:

R1  signature valid under the receipt's node, and node on the allowlist
R2  every receipt carries the origin's (h, nu)
R3  t_in <= t_out within a hop, t_out < next t_in across hops
R4  prev_0 is all zeros, prev_i = link_hash(receipt i-1)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Iterable, NamedTuple

from .errors import EmptyChain
from .receipt import ZERO_HASH, ReceiptChain, TaiTimestamp, link_hash, signing_message
from .signing import sha256, verify_signature


class Failure(NamedTuple):
    rule: str
    hop: int
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    failures: tuple[Failure, ...]
    evidence_key: tuple[bytes, bytes]
    hop_count: int
    t_first_in: TaiTimestamp
    t_last_out: TaiTimestamp

    @property
    def structural_ok(self) -> bool:
        return not self.failures

    @property
    def rules_failed(self) -> set[str]:
        return {f.rule for f in self.failures}

    def to_json(self) -> dict:
        return {
            "structural_ok": self.structural_ok,
            "hop_count": self.hop_count,
            "h": self.evidence_key[0].hex(),
            "nu": self.evidence_key[1].hex(),
            "t_first_in": self.t_first_in.seconds,
            "t_last_out": self.t_last_out.seconds,
            "failures": [f._asdict() for f in self.failures],
        }


def verify_structure(chain: ReceiptChain, allowlist: Collection[bytes]) -> VerificationReport:
    receipts = chain.receipts
    if not receipts:
        raise EmptyChain("cannot verify an empty chain")
    allowed = set(allowlist)
    failures: list[Failure] = []
    messages = [signing_message(r) for r in receipts]

    for i, r in enumerate(receipts):
        problems = []
        if not verify_signature(messages[i], r.sig, r.node):
            problems.append("signature invalid")
        if r.node not in allowed:
            problems.append(f"node {r.node.hex()} not on allowlist")
        if problems:
            failures.append(Failure("R1", i, "; ".join(problems)))

    h0, nu0 = receipts[0].h, receipts[0].nu
    for i, r in enumerate(receipts[1:], start=1):
        diffs = [name for name, a, b in (("h", r.h, h0), ("nu", r.nu, nu0)) if a != b]
        if diffs:
            failures.append(Failure("R2", i, f"{' and '.join(diffs)} differ from the origin receipt"))

    for i, r in enumerate(receipts):
        if r.t_in > r.t_out:
            failures.append(Failure("R3", i, "t_in later than t_out"))
        if i > 0 and not receipts[i - 1].t_out < r.t_in:
            failures.append(Failure("R3", i, "t_in not strictly after previous hop's t_out"))

    for i, r in enumerate(receipts):
        expected = ZERO_HASH if i == 0 else sha256(messages[i - 1])
        if r.prev != expected:
            what = "origin prev is not all-zero" if i == 0 else "prev does not match link hash of previous hop"
            failures.append(Failure("R4", i, what))

    return VerificationReport(
        failures=tuple(failures),
        evidence_key=(h0, nu0),
        hop_count=len(receipts),
        t_first_in=receipts[0].t_in,
        t_last_out=receipts[-1].t_out,
    )


def evidence_sets(chains: Iterable[ReceiptChain]) -> dict[tuple[bytes, bytes], list[ReceiptChain]]:
    """Group chains by the origin receipt's ``(h, nu)``; duplicates are kept."""
    sets: dict[tuple[bytes, bytes], list[ReceiptChain]] = {}
    for chain in chains:
        if not chain.receipts:
            continue
        first = chain.receipts[0]
        sets.setdefault((first.h, first.nu), []).append(chain)
    return sets


def nonce_reused(chains: Iterable[ReceiptChain]) -> bool:
    """True when chains sharing one ``(h, nu)`` start from different origin receipts.

    Identical origin receipts are duplicate deliveries or bundle copies of a
    single origination; distinct ones mean the originator minted the same
    nonce twice.
    """
    origins = {link_hash(c.receipts[0]) for c in chains if c.receipts}
    return len(origins) > 1
