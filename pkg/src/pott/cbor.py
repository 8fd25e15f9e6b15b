"""Deterministic CBOR subset (RFC 8949 section 4.2) with strict decoding.

Supported items: unsigned and negative integers, byte strings, text strings,
arrays, maps, ``true``/``false``/``null``. Floats, tags and indefinite
lengths are rejected on decode and never produced on encode.

Fixed-width unsigned integers (``U32``/``U64``) are the one escape from
shortest-form arguments; the receipt wire format pins timestamps to an
8-byte argument.
"""

from __future__ import annotations

import struct
from typing import Any

from .errors import DecodeError, NonCanonicalEncoding, Truncated

MAJOR_UINT = 0
MAJOR_NINT = 1
MAJOR_BSTR = 2
MAJOR_TSTR = 3
MAJOR_ARRAY = 4
MAJOR_MAP = 5
MAJOR_TAG = 6
MAJOR_SIMPLE = 7

_WIDTH_BY_AI = {24: 1, 25: 2, 26: 4, 27: 8}


class U32(int):
    """Unsigned integer always encoded with a 4-byte argument (0x1A)."""


class U64(int):
    """Unsigned integer always encoded with an 8-byte argument (0x1B)."""


def head(major: int, arg: int) -> bytes:
    """Shortest-form initial byte(s) for ``major`` with argument ``arg``."""
    if arg < 0:
        raise ValueError("CBOR argument must be non-negative")
    mt = major << 5
    if arg < 24:
        return bytes([mt | arg])
    if arg <= 0xFF:
        return bytes([mt | 24, arg])
    if arg <= 0xFFFF:
        return bytes([mt | 25]) + struct.pack(">H", arg)
    if arg <= 0xFFFFFFFF:
        return bytes([mt | 26]) + struct.pack(">I", arg)
    if arg <= 0xFFFFFFFFFFFFFFFF:
        return bytes([mt | 27]) + struct.pack(">Q", arg)
    raise ValueError("CBOR argument exceeds 64 bits")


def uint32_fixed(value: int) -> bytes:
    if not 0 <= value <= 0xFFFFFFFF:
        raise ValueError("value does not fit in 32 bits")
    return b"\x1a" + struct.pack(">I", value)


def uint64_fixed(value: int) -> bytes:
    if not 0 <= value <= 0xFFFFFFFFFFFFFFFF:
        raise ValueError("value does not fit in 64 bits")
    return b"\x1b" + struct.pack(">Q", value)


def dumps(obj: Any) -> bytes:
    """Encode ``obj`` deterministically."""
    out = bytearray()
    _encode(obj, out)
    return bytes(out)


def _encode(obj: Any, out: bytearray) -> None:
    if obj is True:
        out.append(0xF5)
    elif obj is False:
        out.append(0xF4)
    elif obj is None:
        out.append(0xF6)
    elif isinstance(obj, U64):
        out += uint64_fixed(int(obj))
    elif isinstance(obj, U32):
        out += uint32_fixed(int(obj))
    elif isinstance(obj, int):
        if obj >= 0:
            out += head(MAJOR_UINT, obj)
        else:
            out += head(MAJOR_NINT, -1 - obj)
    elif isinstance(obj, (bytes, bytearray, memoryview)):
        b = bytes(obj)
        out += head(MAJOR_BSTR, len(b))
        out += b
    elif isinstance(obj, str):
        b = obj.encode("utf-8")
        out += head(MAJOR_TSTR, len(b))
        out += b
    elif isinstance(obj, (list, tuple)):
        out += head(MAJOR_ARRAY, len(obj))
        for item in obj:
            _encode(item, out)
    elif isinstance(obj, dict):
        pairs = sorted((dumps(k), dumps(v)) for k, v in obj.items())
        for a, b in zip(pairs, pairs[1:]):
            if a[0] == b[0]:
                raise ValueError("duplicate map key after encoding")
        out += head(MAJOR_MAP, len(pairs))
        for k, v in pairs:
            out += k
            out += v
    else:
        raise TypeError(f"cannot CBOR-encode {type(obj).__name__}")


class Reader:
    """Cursor over a CBOR byte string.

    ``read_head`` returns the raw argument together with the width it was
    encoded in, so callers that accept fixed-width arguments can decide for
    themselves. Everything else goes through ``read_item`` which enforces
    shortest form.
    """

    def __init__(self, data: bytes, pos: int = 0):
        self.data = bytes(data)
        self.pos = pos

    @property
    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Truncated(f"need {n} byte(s) at offset {self.pos}, have {len(self.data) - self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def read_head(self) -> tuple[int, int, int]:
        """Return ``(major, argument, argument_width)``; width 0 means inline."""
        ib = self._take(1)[0]
        major, ai = ib >> 5, ib & 0x1F
        if ai < 24:
            return major, ai, 0
        if ai in _WIDTH_BY_AI:
            width = _WIDTH_BY_AI[ai]
            return major, int.from_bytes(self._take(width), "big"), width
        if ai == 31:
            raise NonCanonicalEncoding(f"indefinite-length item at offset {self.pos - 1}")
        raise DecodeError(f"reserved additional-info value {ai} at offset {self.pos - 1}")

    def expect_end(self) -> None:
        if not self.at_end:
            raise DecodeError(f"{len(self.data) - self.pos} trailing byte(s) after item")

    def read_item(self) -> Any:
        start = self.pos
        major, arg, width = self.read_head()
        if major != MAJOR_SIMPLE:
            check_shortest(arg, width, start)
        if major == MAJOR_UINT:
            return arg
        if major == MAJOR_NINT:
            return -1 - arg
        if major == MAJOR_BSTR:
            return self._take(arg)
        if major == MAJOR_TSTR:
            raw = self._take(arg)
            try:
                return raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DecodeError(f"invalid UTF-8 in text string at offset {start}") from exc
        if major == MAJOR_ARRAY:
            return [self.read_item() for _ in range(arg)]
        if major == MAJOR_MAP:
            result: dict = {}
            prev_key: bytes | None = None
            for _ in range(arg):
                k_start = self.pos
                key = self.read_item()
                key_bytes = self.data[k_start:self.pos]
                if prev_key is not None and key_bytes <= prev_key:
                    kind = "duplicate" if key_bytes == prev_key else "out-of-order"
                    raise NonCanonicalEncoding(f"{kind} map key at offset {k_start}")
                prev_key = key_bytes
                if isinstance(key, (list, dict)):
                    raise DecodeError("container map keys are not supported")
                result[key] = self.read_item()
            return result
        if major == MAJOR_TAG:
            raise DecodeError(f"tags are not supported (offset {start})")
        # major 7
        if width == 0 and arg == 20:
            return False
        if width == 0 and arg == 21:
            return True
        if width == 0 and arg == 22:
            return None
        raise DecodeError(f"unsupported simple/float item at offset {start}")


def check_shortest(arg: int, width: int, offset: int) -> None:
    minimal = 0 if arg < 24 else 1 if arg <= 0xFF else 2 if arg <= 0xFFFF else 4 if arg <= 0xFFFFFFFF else 8
    if width != minimal:
        raise NonCanonicalEncoding(f"non-shortest integer argument at offset {offset}")


def loads(data: bytes) -> Any:
    """Decode exactly one deterministic CBOR item; trailing bytes are an error."""
    r = Reader(data)
    obj = r.read_item()
    r.expect_end()
    return obj
