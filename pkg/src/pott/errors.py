"""Exception hierarchy shared by every pott module."""


class PottError(Exception):
    """Base class for all pott errors."""


# --- wire / decoding ---
class DecodeError(PottError, ValueError):
    """Bytes could not be decoded into the requested structure."""


class NonCanonicalEncoding(DecodeError):
    pass


class UnknownKey(DecodeError):
    pass


class MissingKey(DecodeError):
    pass


class WrongLength(DecodeError):
    pass


class Truncated(DecodeError):
    pass


class DigestError(PottError, ValueError):
    pass


# --- chain construction ---
class ClockError(PottError, ValueError):
    pass


class MonotonicityError(PottError, ValueError):
    pass


class EmptyChain(PottError, ValueError):
    pass


class InvalidKey(PottError, ValueError):
    pass


# --- time ---
class TableGap(PottError, LookupError):
    pass


class WindowNotCovered(PottError, LookupError):
    pass


# --- policy ---
class ManifestSignatureInvalid(PottError):
    pass


class ManifestStale(PottError):
    pass


class MixedPayload(PottError, ValueError):
    pass


# --- bitcoin anchor ---
class EmptyInput(PottError, ValueError):
    pass


class WindowTooShort(PottError, ValueError):
    pass


# --- simulator ---
class ScenarioInvalid(PottError, ValueError):
    pass
