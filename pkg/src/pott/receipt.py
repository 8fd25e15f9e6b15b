"""Receipt and chain types, the canonical wire encoding, and chain construction.

Wire layout of one receipt (a CBOR map, keys ascending)::

    0: h     bstr(32)   payload digest
    1: nu    bstr(16)   per-origination nonce
    2: node  bstr(32)   relay x-only public key
    3: tin   uint, always 8-byte argument (0x1B)
    4: tout  uint, always 8-byte argument (0x1B)
    5: prev  bstr(32)   SHA-256 of the previous receipt without key 6
    6: sig   bstr(64)   BIP-340 over the receipt without key 6
    7: tin_frac   uint, 4-byte argument (0x1A)   optional, paired with 8
    8: tout_frac  uint, 4-byte argument (0x1A)   optional, paired with 7

Timestamps are TAI seconds since 1958-01-01 with an optional 1/2**32 s
fraction.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator

from . import cbor
from .errors import (
    ClockError,
    DecodeError,
    DigestError,
    EmptyChain,
    MissingKey,
    MonotonicityError,
    NonCanonicalEncoding,
    UnknownKey,
    WrongLength,
)
from .signing import RelayKeypair, double_sha256, sha256, sign_receipt

ZERO_HASH = bytes(32)

K_H, K_NU, K_NODE, K_TIN, K_TOUT, K_PREV, K_SIG, K_TIN_FRAC, K_TOUT_FRAC = range(9)
_BSTR_LENGTHS = {K_H: 32, K_NU: 16, K_NODE: 32, K_PREV: 32, K_SIG: 64}
_BASE_KEYS = (K_H, K_NU, K_NODE, K_TIN, K_TOUT, K_PREV, K_SIG)
_FRAC_KEYS = (K_TIN_FRAC, K_TOUT_FRAC)


class DigestKind(enum.Enum):
    BITCOIN_TX = "BitcoinTx"
    BITCOIN_HEADER = "BitcoinHeader"
    BIP157_FILTER = "Bip157Filter"
    GENERIC = "Generic"


@dataclass(frozen=True)
class PayloadDigest:
    value: bytes
    kind: DigestKind = DigestKind.GENERIC

    def __post_init__(self):
        if len(self.value) != 32:
            raise WrongLength("payload digest must be 32 bytes")


def _read_compact_size(data: bytes) -> tuple[int, int]:
    if not data:
        raise DigestError("empty filter")
    first = data[0]
    width = {0xFD: 2, 0xFE: 4, 0xFF: 8}.get(first, 0)
    if len(data) < 1 + width:
        raise DigestError("truncated CompactSize in filter")
    if width == 0:
        return first, 1
    value = int.from_bytes(data[1:1 + width], "little")
    if value < {2: 0xFD, 4: 0x10000, 8: 0x100000000}[width]:
        raise DigestError("non-minimal CompactSize in filter")
    return value, 1 + width


def compute_payload_digest(payload: bytes, kind: DigestKind | str = DigestKind.GENERIC) -> PayloadDigest:
    """Content identifier for ``payload``.

    Bitcoin transactions and headers use double SHA-256 (internal byte order).
    Compact filters use the BIP-157 filter hash, double SHA-256 of the
    serialized filter ``N || GCS``. Anything else is plain SHA-256.
    """
    kind = DigestKind(kind)
    if kind in (DigestKind.BITCOIN_TX, DigestKind.BITCOIN_HEADER):
        if kind is DigestKind.BITCOIN_HEADER and len(payload) != 80:
            raise DigestError("bitcoin block header must be 80 bytes")
        return PayloadDigest(double_sha256(payload), kind)
    if kind is DigestKind.BIP157_FILTER:
        n, off = _read_compact_size(payload)
        if n == 0 and len(payload) != off:
            raise DigestError("empty filter carries trailing bytes")
        if n > 0 and len(payload) == off:
            raise DigestError(f"filter declares {n} element(s) but has no GCS data")
        return PayloadDigest(double_sha256(payload), kind)
    return PayloadDigest(sha256(payload), kind)


@dataclass(frozen=True)
class TaiTimestamp:
    """TAI seconds since 1958-01-01 plus an optional fraction (frac / 2**32 s)."""

    seconds: int
    frac: int | None = None

    def __post_init__(self):
        if not 0 <= self.seconds <= 0xFFFFFFFFFFFFFFFF:
            raise ValueError("TAI seconds must fit in an unsigned 64-bit integer")
        if self.frac is not None and not 0 <= self.frac <= 0xFFFFFFFF:
            raise ValueError("fractional field must fit in 32 bits")

    @property
    def key(self) -> tuple[int, int]:
        """Ordering key; a missing fraction compares as zero."""
        return (self.seconds, self.frac or 0)

    def __lt__(self, other: TaiTimestamp) -> bool:
        return self.key < other.key

    def __le__(self, other: TaiTimestamp) -> bool:
        return self.key <= other.key

    def __gt__(self, other: TaiTimestamp) -> bool:
        return self.key > other.key

    def __ge__(self, other: TaiTimestamp) -> bool:
        return self.key >= other.key

    def as_seconds(self):
        """Exact value in seconds as a Fraction (int when no fraction)."""
        from fractions import Fraction

        if not self.frac:
            return self.seconds
        return self.seconds + Fraction(self.frac, 1 << 32)

    def shifted(self, seconds: int) -> TaiTimestamp:
        return replace(self, seconds=self.seconds + seconds)

    def to_cbor(self):
        return self.seconds if self.frac is None else [self.seconds, self.frac]

    @classmethod
    def from_cbor(cls, obj) -> TaiTimestamp:
        if isinstance(obj, int) and not isinstance(obj, bool):
            return cls(obj)
        if isinstance(obj, list) and len(obj) == 2 and all(isinstance(x, int) for x in obj):
            return cls(obj[0], obj[1])
        raise DecodeError("timestamp must be an integer or [seconds, frac]")


@dataclass(frozen=True)
class Receipt:
    """One hop's signed custody attestation.

    Field sizes are validated here; ordering and linkage are the verifier's
    business, so adversarial receipts remain representable.
    """

    h: bytes
    nu: bytes
    node: bytes
    t_in: TaiTimestamp
    t_out: TaiTimestamp
    prev: bytes
    sig: bytes = bytes(64)

    def __post_init__(self):
        for name, key in (("h", K_H), ("nu", K_NU), ("node", K_NODE), ("prev", K_PREV), ("sig", K_SIG)):
            if len(getattr(self, name)) != _BSTR_LENGTHS[key]:
                raise WrongLength(f"{name} must be {_BSTR_LENGTHS[key]} bytes")
        if (self.t_in.frac is None) != (self.t_out.frac is None):
            raise ValueError("fractional timestamps must be present on both t_in and t_out or neither")

    @property
    def has_frac(self) -> bool:
        return self.t_in.frac is not None

    def _items(self, with_sig: bool) -> list[tuple[int, bytes]]:
        items = [
            (K_H, cbor.head(cbor.MAJOR_BSTR, 32) + self.h),
            (K_NU, cbor.head(cbor.MAJOR_BSTR, 16) + self.nu),
            (K_NODE, cbor.head(cbor.MAJOR_BSTR, 32) + self.node),
            (K_TIN, cbor.uint64_fixed(self.t_in.seconds)),
            (K_TOUT, cbor.uint64_fixed(self.t_out.seconds)),
            (K_PREV, cbor.head(cbor.MAJOR_BSTR, 32) + self.prev),
        ]
        if with_sig:
            items.append((K_SIG, cbor.head(cbor.MAJOR_BSTR, 64) + self.sig))
        if self.has_frac:
            items.append((K_TIN_FRAC, cbor.uint32_fixed(self.t_in.frac)))
            items.append((K_TOUT_FRAC, cbor.uint32_fixed(self.t_out.frac)))
        return items

    def encode(self) -> bytes:
        return encode_receipt(self)

    def with_sig(self, sig: bytes) -> Receipt:
        return replace(self, sig=sig)


def _encode_items(items: list[tuple[int, bytes]]) -> bytes:
    out = bytearray(cbor.head(cbor.MAJOR_MAP, len(items)))
    for key, value in items:
        out += cbor.head(cbor.MAJOR_UINT, key)
        out += value
    return bytes(out)


def encode_receipt(r: Receipt) -> bytes:
    """Canonical CBOR bytes of the full receipt (keys 0-6, plus 7-8 with fractions)."""
    return _encode_items(r._items(with_sig=True))


def signing_message(r: Receipt) -> bytes:
    """Canonical CBOR of the receipt with key 6 removed; the bytes each relay signs."""
    return _encode_items(r._items(with_sig=False))


def link_hash(r: Receipt) -> bytes:
    """SHA-256 of the receipt without its signature; the next hop's ``prev``."""
    return sha256(signing_message(r))


def _read_receipt(reader: cbor.Reader) -> Receipt:
    start = reader.pos
    major, count, width = reader.read_head()
    if major != cbor.MAJOR_MAP:
        raise DecodeError(f"receipt must be a CBOR map (offset {start})")
    cbor.check_shortest(count, width, start)
    values: dict[int, object] = {}
    last_key = -1
    for _ in range(count):
        k_off = reader.pos
        kmajor, key, kwidth = reader.read_head()
        if kmajor != cbor.MAJOR_UINT:
            raise UnknownKey(f"non-integer map key at offset {k_off}")
        cbor.check_shortest(key, kwidth, k_off)
        if key <= last_key:
            raise NonCanonicalEncoding(f"map key {key} out of order at offset {k_off}")
        last_key = key
        if key not in _BSTR_LENGTHS and key not in (K_TIN, K_TOUT, K_TIN_FRAC, K_TOUT_FRAC):
            raise UnknownKey(f"unknown receipt key {key}")
        if key in _FRAC_KEYS and count != len(_BASE_KEYS) + len(_FRAC_KEYS):
            # a lone 7 or 8 is not part of any receipt layout
            raise UnknownKey(f"unknown receipt key {key} (fractional keys 7 and 8 travel together)")
        v_off = reader.pos
        vmajor, arg, vwidth = reader.read_head()
        if key in _BSTR_LENGTHS:
            if vmajor != cbor.MAJOR_BSTR:
                raise DecodeError(f"key {key} must be a byte string")
            cbor.check_shortest(arg, vwidth, v_off)
            if arg != _BSTR_LENGTHS[key]:
                raise WrongLength(f"key {key} must be {_BSTR_LENGTHS[key]} bytes, got {arg}")
            values[key] = reader._take(arg)
        else:
            if vmajor != cbor.MAJOR_UINT:
                raise DecodeError(f"key {key} must be an unsigned integer")
            required = 8 if key in (K_TIN, K_TOUT) else 4
            if vwidth != required:
                raise NonCanonicalEncoding(
                    f"key {key} must use a {required}-byte integer argument (offset {v_off})"
                )
            values[key] = arg
    present = set(values)
    missing = [k for k in _BASE_KEYS if k not in present]
    if missing:
        raise MissingKey(f"receipt missing key(s) {missing}")
    tin_frac = values.get(K_TIN_FRAC)
    tout_frac = values.get(K_TOUT_FRAC)
    return Receipt(
        h=values[K_H],
        nu=values[K_NU],
        node=values[K_NODE],
        t_in=TaiTimestamp(values[K_TIN], tin_frac),
        t_out=TaiTimestamp(values[K_TOUT], tout_frac),
        prev=values[K_PREV],
        sig=values[K_SIG],
    )


def decode_receipt(data: bytes) -> Receipt:
    """Parse one canonical receipt; anything else raises a DecodeError subclass."""
    reader = cbor.Reader(data)
    r = _read_receipt(reader)
    reader.expect_end()
    return r


@dataclass(frozen=True)
class ReceiptChain:
    """Ordered receipts, index 0 being the originating hop. Immutable."""

    receipts: tuple[Receipt, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "receipts", tuple(self.receipts))

    def __len__(self) -> int:
        return len(self.receipts)

    def __iter__(self) -> Iterator[Receipt]:
        return iter(self.receipts)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return ReceiptChain(self.receipts[idx])
        return self.receipts[idx]

    @property
    def last(self) -> Receipt:
        if not self.receipts:
            raise EmptyChain("chain has no receipts")
        return self.receipts[-1]

    def receipt_bytes(self) -> int:
        """Total size of the individual receipt encodings."""
        return sum(len(encode_receipt(r)) for r in self.receipts)

    def encode(self) -> bytes:
        return encode_chain(self)


def encode_chain(chain: ReceiptChain) -> bytes:
    """``.pottc`` bytes: a CBOR array of canonical receipt maps."""
    out = bytearray(cbor.head(cbor.MAJOR_ARRAY, len(chain.receipts)))
    for r in chain.receipts:
        out += encode_receipt(r)
    return bytes(out)


def decode_chain(data: bytes) -> ReceiptChain:
    reader = cbor.Reader(data)
    start = reader.pos
    major, count, width = reader.read_head()
    if major != cbor.MAJOR_ARRAY:
        raise DecodeError("chain must be a CBOR array")
    cbor.check_shortest(count, width, start)
    receipts = [_read_receipt(reader) for _ in range(count)]
    reader.expect_end()
    return ReceiptChain(tuple(receipts))


def _sign(r: Receipt, key: RelayKeypair, aux_rand: bytes) -> Receipt:
    return r.with_sig(sign_receipt(signing_message(r), key, aux_rand))


def originate_chain(
    h: PayloadDigest | bytes,
    node_key: RelayKeypair,
    t_in: TaiTimestamp,
    t_out: TaiTimestamp,
    rng: Callable[[int], bytes] = os.urandom,
    aux_rand: bytes = bytes(32),
) -> ReceiptChain:
    """Start a chain: mint a fresh 16-byte nonce and sign the origin receipt."""
    if t_in > t_out:
        raise ClockError("t_in is later than t_out")
    digest = h.value if isinstance(h, PayloadDigest) else bytes(h)
    nu = rng(16)
    r = Receipt(digest, nu, node_key.public, t_in, t_out, ZERO_HASH)
    return ReceiptChain((_sign(r, node_key, aux_rand),))


def append_hop(
    chain: ReceiptChain,
    node_key: RelayKeypair,
    t_in: TaiTimestamp,
    t_out: TaiTimestamp,
    aux_rand: bytes = bytes(32),
) -> ReceiptChain:
    """Return a new chain with one more hop; ``(h, nu)`` are echoed unchanged."""
    if not chain.receipts:
        raise EmptyChain("cannot append to an empty chain")
    last = chain.receipts[-1]
    if t_in > t_out:
        raise ClockError("t_in is later than t_out")
    if t_in <= last.t_out:
        raise MonotonicityError("t_in must be strictly later than the previous hop's t_out")
    r = Receipt(last.h, last.nu, node_key.public, t_in, t_out, link_hash(last))
    return ReceiptChain(chain.receipts + (_sign(r, node_key, aux_rand),))


# --- file and hex helpers ---

def receipt_from_hex(text: str) -> Receipt:
    return decode_receipt(bytes.fromhex("".join(text.split())))


def receipt_to_hex(r: Receipt) -> str:
    return encode_receipt(r).hex()


def write_receipt(r: Receipt, path: str | Path) -> None:
    Path(path).write_bytes(encode_receipt(r))


def read_receipt(path: str | Path) -> Receipt:
    return decode_receipt(Path(path).read_bytes())


def write_chain(chain: ReceiptChain, path: str | Path) -> None:
    Path(path).write_bytes(encode_chain(chain))


def read_chain(path: str | Path) -> ReceiptChain:
    return decode_chain(Path(path).read_bytes())


def chain_of(receipts: Iterable[Receipt]) -> ReceiptChain:
    return ReceiptChain(tuple(receipts))
