"""Proof-of-transit timestamping: signed, hash-linked custody receipts for relayed payloads."""

from .errors import PottError
from .receipt import (
    DigestKind,
    PayloadDigest,
    Receipt,
    ReceiptChain,
    TaiTimestamp,
    append_hop,
    compute_payload_digest,
    decode_chain,
    decode_receipt,
    encode_chain,
    encode_receipt,
    link_hash,
    originate_chain,
    signing_message,
)
from .signing import RelayKeypair, sign_receipt, verify_signature
from .verifier import VerificationReport, verify_structure
from .policy import AllowlistManifest, Assurance, PolicyProfile, PolicyVerdict, check_high_stakes, check_profile

__all__ = [
    "AllowlistManifest",
    "Assurance",
    "DigestKind",
    "PayloadDigest",
    "PolicyProfile",
    "PolicyVerdict",
    "PottError",
    "Receipt",
    "ReceiptChain",
    "RelayKeypair",
    "TaiTimestamp",
    "VerificationReport",
    "append_hop",
    "check_high_stakes",
    "check_profile",
    "compute_payload_digest",
    "decode_chain",
    "decode_receipt",
    "encode_chain",
    "encode_receipt",
    "link_hash",
    "originate_chain",
    "sign_receipt",
    "signing_message",
    "verify_signature",
    "verify_structure",
]

__version__ = "0.1.0"
