"""Commit-and-reveal transcript commitments.

Routine attestations publish only ``(h_txpt, min t_in, max t_out, hop_count)``
where ``h_txpt`` is SHA-256 over the full canonical receipt encodings,
signatures included, concatenated in hop order. A dispute opens the chain
against the commitment.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Collection

from . import cbor
from .errors import DecodeError, EmptyChain
from .receipt import ReceiptChain, TaiTimestamp, encode_receipt
from .signing import sha256
from .verifier import verify_structure


@dataclass(frozen=True)
class TranscriptCommitment:
    h_txpt: bytes
    t_min_in: TaiTimestamp
    t_max_out: TaiTimestamp
    hop_count: int

    def __post_init__(self):
        if len(self.h_txpt) != 32:
            raise ValueError("h_txpt must be 32 bytes")
        if self.t_min_in > self.t_max_out:
            raise ValueError("t_min_in is later than t_max_out")
        if self.hop_count < 1:
            raise ValueError("hop_count must be at least 1")

    def encode(self) -> bytes:
        return cbor.dumps({
            0: self.h_txpt,
            1: self.t_min_in.to_cbor(),
            2: self.t_max_out.to_cbor(),
            3: self.hop_count,
        })

    @classmethod
    def decode(cls, data: bytes) -> TranscriptCommitment:
        obj = cbor.loads(data)
        if not isinstance(obj, dict) or set(obj) != {0, 1, 2, 3}:
            raise DecodeError("commitment must be a map with keys 0-3")
        if not isinstance(obj[0], bytes) or not isinstance(obj[3], int):
            raise DecodeError("malformed commitment fields")
        try:
            return cls(obj[0], TaiTimestamp.from_cbor(obj[1]), TaiTimestamp.from_cbor(obj[2]), obj[3])
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(self.encode())

    @classmethod
    def read(cls, path: str | Path) -> TranscriptCommitment:
        return cls.decode(Path(path).read_bytes())


def transcript_hash(chain: ReceiptChain) -> bytes:
    return sha256(b"".join(encode_receipt(r) for r in chain.receipts))


def commit_transcript(chain: ReceiptChain) -> TranscriptCommitment:
    if not chain.receipts:
        raise EmptyChain("cannot commit to an empty chain")
    return TranscriptCommitment(
        h_txpt=transcript_hash(chain),
        t_min_in=min((r.t_in for r in chain.receipts), key=lambda t: t.key),
        t_max_out=max((r.t_out for r in chain.receipts), key=lambda t: t.key),
        hop_count=len(chain.receipts),
    )


@dataclass(frozen=True)
class OpeningResult:
    ok: bool
    violations: tuple[str, ...]


def verify_opening(
    commitment: TranscriptCommitment,
    chain: ReceiptChain,
    allowlist: Collection[bytes] | None = None,
) -> OpeningResult:
    """Check a revealed chain against its commitment.

    Without an allowlist, signatures are checked against each receipt's own
    node key only; policy bounds are evaluated separately by the caller.
    """
    if not chain.receipts:
        return OpeningResult(False, ("empty chain",))
    v: list[str] = []
    if transcript_hash(chain) != commitment.h_txpt:
        v.append("transcript hash mismatch")
    if len(chain.receipts) != commitment.hop_count:
        v.append(f"hop count {len(chain.receipts)} != committed {commitment.hop_count}")
    for i, r in enumerate(chain.receipts):
        if r.t_in < commitment.t_min_in or r.t_out > commitment.t_max_out:
            v.append(f"hop {i} times outside committed window")
    actual = commit_transcript(chain)
    if actual.t_min_in != commitment.t_min_in:
        v.append("committed min(t_in) does not match the transcript")
    if actual.t_max_out != commitment.t_max_out:
        v.append("committed max(t_out) does not match the transcript")
    nodes = allowlist if allowlist is not None else {r.node for r in chain.receipts}
    report = verify_structure(chain, nodes)
    v.extend(f"{f.rule} at hop {f.hop}: {f.detail}" for f in report.failures)
    return OpeningResult(not v, tuple(v))
