"""BIP-340 Schnorr signatures over arbitrary-length messages, plus hash helpers.

The curve arithmetic is delegated to libsecp256k1 through coincurve's cffi
bindings. coincurve's high-level ``sign_schnorr`` only accepts 32-byte
messages, so signing calls ``secp256k1_schnorrsig_sign_custom`` directly;
receipt signing messages are ~140 bytes of CBOR and are signed as-is.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import coincurve
from coincurve._libsecp256k1 import ffi, lib
from coincurve.context import GLOBAL_CONTEXT

from .errors import InvalidKey

CURVE_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_EXTRAPARAMS_MAGIC = bytes([0xDA, 0x6F, 0xB3, 0x8C])


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def double_sha256(data: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def tagged_hash(tag: str, data: bytes) -> bytes:
    t = hashlib.sha256(tag.encode()).digest()
    return hashlib.sha256(t + t + data).digest()


@dataclass(frozen=True)
class RelayKeypair:
    """A relay signing key. ``public`` is the x-only key used as NodeID."""

    secret: bytes
    public: bytes

    def __repr__(self) -> str:
        return f"RelayKeypair(public={self.public.hex()})"

    @classmethod
    def from_secret(cls, secret: bytes) -> RelayKeypair:
        if len(secret) != 32:
            raise InvalidKey("secret key must be 32 bytes")
        d = int.from_bytes(secret, "big")
        if not 0 < d < CURVE_ORDER:
            raise InvalidKey("secret key out of range [1, n-1]")
        pub = coincurve.PrivateKey(secret).public_key_xonly.format()
        return cls(bytes(secret), pub)

    @classmethod
    def generate(cls, rng: Callable[[int], bytes] = os.urandom) -> RelayKeypair:
        while True:
            try:
                return cls.from_secret(rng(32))
            except InvalidKey:
                continue

    @classmethod
    def load(cls, path: str | Path) -> RelayKeypair:
        return cls.from_secret(bytes.fromhex(Path(path).read_text().strip()))


def sign_receipt(msg: bytes, key: RelayKeypair, aux_rand: bytes = bytes(32)) -> bytes:
    """BIP-340 signature of ``msg`` under ``key``; ``aux_rand`` must be 32 bytes."""
    if len(aux_rand) != 32:
        raise ValueError("aux_rand must be 32 bytes")
    ctx = GLOBAL_CONTEXT.ctx
    keypair = ffi.new("secp256k1_keypair *")
    if not lib.secp256k1_keypair_create(ctx, keypair, key.secret):
        raise InvalidKey("secret key rejected by libsecp256k1")
    params = ffi.new("secp256k1_schnorrsig_extraparams *")
    params.magic = _EXTRAPARAMS_MAGIC
    aux = ffi.new("unsigned char[32]", aux_rand)
    params.ndata = aux
    sig = ffi.new("unsigned char[64]")
    if not lib.secp256k1_schnorrsig_sign_custom(ctx, sig, msg, len(msg), keypair, params):
        raise InvalidKey("signing failed")
    return bytes(ffi.buffer(sig, 64))


def verify_signature(msg: bytes, sig: bytes, node: bytes) -> bool:
    """True iff ``sig`` is a valid BIP-340 signature of ``msg`` under x-only ``node``.

    Malformed keys or signatures yield False rather than raising.
    """
    if len(sig) != 64 or len(node) != 32:
        return False
    try:
        pub = coincurve.PublicKeyXOnly(node)
    except ValueError:
        return False
    return pub.verify(sig, msg)


def write_keypair(key: RelayKeypair, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>`` (secret hex) and ``<path>.pub`` (x-only hex); never overwrites."""
    secret_path = Path(path)
    public_path = secret_path.with_name(secret_path.name + ".pub")
    for p in (secret_path, public_path):
        if p.exists():
            raise FileExistsError(p)
    with open(secret_path, "x") as fh:
        fh.write(key.secret.hex() + "\n")
    os.chmod(secret_path, 0o600)
    with open(public_path, "x") as fh:
        fh.write(key.public.hex() + "\n")
    return secret_path, public_path
