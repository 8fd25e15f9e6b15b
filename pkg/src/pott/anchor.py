"""Bitcoin header handling and MTP-anchored "arrived before expiry" adjudication."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import cbor
from .errors import EmptyInput, WindowTooShort, WrongLength
from .receipt import ReceiptChain, TaiTimestamp, encode_chain
from .signing import double_sha256
from .timebase import LeapSecondTable, tai_to_unix_utc

MTP_SPAN = 11
DEFAULT_DRIFT_WINDOW = 4032


@dataclass(frozen=True)
class BlockHeader:
    raw: bytes
    height: int

    def __post_init__(self):
        if len(self.raw) != 80:
            raise WrongLength(f"block header must be 80 bytes, got {len(self.raw)}")

    @property
    def timestamp(self) -> int:
        return struct.unpack_from("<I", self.raw, 68)[0]

    @property
    def block_hash(self) -> bytes:
        return double_sha256(self.raw)


def parse_header(raw80: bytes, height: int) -> BlockHeader:
    return BlockHeader(bytes(raw80), height)


def median_time_past(headers: Sequence[BlockHeader] | Sequence[int]) -> int:
    """Median of the last (up to) 11 timestamps.

    Sorted index ``count // 2`` is taken, as Bitcoin Core does; for the even
    counts that only occur near genesis this is the upper of the two middles.
    """
    if not headers:
        raise EmptyInput("median_time_past needs at least one header")
    window = list(headers)[-MTP_SPAN:]
    stamps = sorted(h.timestamp if isinstance(h, BlockHeader) else int(h) for h in window)
    return stamps[len(stamps) // 2]


@dataclass(frozen=True)
class MtpParams:
    """Seconds throughout. ``delta_seconds`` is the safety allowance."""

    delta_seconds: int
    h_expiry: int
    delta_mtp_seconds: int = 3600
    kappa_blocks: int = 0
    mtp_window_blocks: int = DEFAULT_DRIFT_WINDOW

    def __post_init__(self):
        if self.delta_seconds < 0 or self.delta_mtp_seconds < 0 or self.kappa_blocks < 0:
            raise ValueError("MTP parameters must be non-negative")
        if self.mtp_window_blocks < MTP_SPAN:
            raise ValueError(f"MTP drift window must be at least {MTP_SPAN} blocks")

    @classmethod
    def from_policy(cls, J_seconds: int, sigma_t_seconds: int, h_expiry: int, **kw) -> MtpParams:
        """Default allowance: delta = J + 2 sigma_t."""
        return cls(delta_seconds=J_seconds + 2 * sigma_t_seconds, h_expiry=h_expiry, **kw)

    def check(self, J_seconds: int, sigma_t_seconds: int, max_delta_mtp: int = 3600) -> None:
        """Raise ValueError if delta < J + 2 sigma_t or delta_mtp exceeds policy."""
        if self.delta_seconds < J_seconds + 2 * sigma_t_seconds:
            raise ValueError(
                f"delta {self.delta_seconds} s below J + 2 sigma_t = {J_seconds + 2 * sigma_t_seconds} s"
            )
        if self.delta_mtp_seconds > max_delta_mtp:
            raise ValueError(f"delta_mtp {self.delta_mtp_seconds} s exceeds policy bound {max_delta_mtp} s")


class Decision(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


@dataclass(frozen=True)
class AnchorDecision:
    decision: Decision
    rationale: str
    t_star_utc: int
    tip_height: int
    tip_mtp: int

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPT


def arrived_before_expiry(
    t_star_tai: TaiTimestamp,
    tip: BlockHeader,
    tip_mtp: int,
    params: MtpParams,
    table: LeapSecondTable,
) -> AnchorDecision:
    """Accept iff t*_utc + delta <= MTP + delta_mtp and tip height <= h_expiry - kappa.

    ``tip`` is whatever best-chain header the caller selected; it is
    recorded in the rationale, fork choice is not attempted here.
    """
    t_utc = tai_to_unix_utc(t_star_tai, table)
    lhs = t_utc + params.delta_seconds
    # a nonzero sub-second fraction pushes t* strictly past the integer second
    late_by_frac = bool(t_star_tai.frac)
    rhs = tip_mtp + params.delta_mtp_seconds
    limit = params.h_expiry - params.kappa_blocks
    reasons = []
    if lhs > rhs or (lhs == rhs and late_by_frac):
        reasons.append(f"time: t*_utc + delta = {lhs} > MTP + delta_mtp = {rhs}")
    if tip.height > limit:
        reasons.append(f"height: tip height {tip.height} > h_expiry - kappa = {limit}")
    tip_desc = f"tip {tip.block_hash[::-1].hex()} at height {tip.height}"
    if reasons:
        return AnchorDecision(Decision.REJECT, "; ".join(reasons) + f" ({tip_desc})", t_utc, tip.height, tip_mtp)
    rationale = (
        f"t*_utc + delta = {lhs} <= MTP + delta_mtp = {rhs} and height {tip.height} <= {limit} ({tip_desc})"
    )
    return AnchorDecision(Decision.ACCEPT, rationale, t_utc, tip.height, tip_mtp)


@dataclass(frozen=True)
class DriftBound:
    bound_seconds: int
    first_height: int
    last_height: int

    @property
    def window_blocks(self) -> int:
        return self.last_height - self.first_height + 1


def mtp_drift_bound(headers: Sequence[BlockHeader]) -> DriftBound:
    """Largest |MTP - own timestamp| over headers that have a full 11-block window."""
    if len(headers) < MTP_SPAN:
        raise WindowTooShort(f"need at least {MTP_SPAN} headers, got {len(headers)}")
    bound = 0
    for i in range(MTP_SPAN - 1, len(headers)):
        mtp = median_time_past(headers[i - MTP_SPAN + 1:i + 1])
        bound = max(bound, abs(mtp - headers[i].timestamp))
    return DriftBound(bound, headers[0].height, headers[-1].height)


def read_headers(path: str | Path, start_height: int | None = None) -> list[BlockHeader]:
    """Read concatenated 80-byte headers; the start height comes from ``<path>.height`` if not given."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) % 80:
        raise WrongLength(f"{path} is not a whole number of 80-byte headers")
    if start_height is None:
        sidecar = path.with_name(path.name + ".height")
        start_height = int(sidecar.read_text().strip()) if sidecar.exists() else 0
    return [BlockHeader(data[i:i + 80], start_height + i // 80) for i in range(0, len(data), 80)]


def write_headers(headers: Sequence[BlockHeader], path: str | Path) -> None:
    path = Path(path)
    path.write_bytes(b"".join(h.raw for h in headers))
    path.with_name(path.name + ".height").write_text(f"{headers[0].height if headers else 0}\n")


def dispute_bundle(
    chain: ReceiptChain,
    decision: AnchorDecision,
    t_star: TaiTimestamp,
    params: MtpParams,
    drift: DriftBound | None,
    beacon_ids: Sequence[str] = (),
) -> bytes:
    """CBOR evidence package for an adjudicator (chain embedded as ``.pottc`` bytes)."""
    window = [drift.first_height, drift.last_height] if drift is not None else None
    bundle = {
        "chain": encode_chain(chain),
        "verdict": {"decision": decision.decision.value, "rationale": decision.rationale},
        "t_star": t_star.to_cbor(),
        "t_star_utc": decision.t_star_utc,
        "tip_height": decision.tip_height,
        "mtp": decision.tip_mtp,
        "window_range": window,
        "drift_bound": drift.bound_seconds if drift is not None else None,
        "params": {
            "delta": params.delta_seconds,
            "delta_mtp": params.delta_mtp_seconds,
            "kappa": params.kappa_blocks,
            "h_expiry": params.h_expiry,
        },
        "beacon_ids": list(beacon_ids),
    }
    return cbor.dumps(bundle)
