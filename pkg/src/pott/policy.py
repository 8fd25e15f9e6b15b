"""PoTT-M2 policy evaluation: allowlist manifests, diversity, anchors, timing, caps.

Checks emitted by ``check_profile``:

P1  chain passed structural verification
P2  at least ``min_hops`` receipts
P3  at least ``min_operator_domains`` distinct operators
P4  an acceptable beacon reading from every planetary domain
P5  dwell within J at every hop; cross-domain transits inside the OWLT envelope
P6  hop cap and receipt byte cap
P7  every node listed and not revoked
P8  no other origination reuses this chain's (h, nu)
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

from . import cbor
from .errors import DecodeError, ManifestSignatureInvalid, ManifestStale, MixedPayload
from .receipt import ReceiptChain
from .signing import RelayKeypair, sign_receipt, verify_signature
from .timebase import (
    BeaconReading,
    OwltEnvelope,
    PlanetaryDomain,
    default_slack,
    within_owlt_envelope,
)
from .errors import WindowNotCovered
from .verifier import VerificationReport, nonce_reused


@dataclass(frozen=True)
class ManifestEntry:
    node: bytes
    operator_domain: str
    planetary_domain: PlanetaryDomain


@dataclass(frozen=True)
class AllowlistManifest:
    version: int
    entries: tuple[ManifestEntry, ...]
    revoked: frozenset[bytes]
    signer: bytes
    signature: bytes = bytes(64)
    issued_at: int = 0
    ttl_hours: int = 72

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.node)))
        object.__setattr__(self, "revoked", frozenset(self.revoked))

    def _body(self) -> dict:
        return {
            0: self.version,
            1: [[e.node, e.operator_domain, e.planetary_domain.value] for e in self.entries],
            2: sorted(self.revoked),
            3: self.issued_at,
            4: self.ttl_hours,
            5: self.signer,
        }

    def signing_bytes(self) -> bytes:
        return cbor.dumps(self._body())

    def encode(self) -> bytes:
        body = self._body()
        body[6] = self.signature
        return cbor.dumps(body)

    @classmethod
    def build(
        cls,
        version: int,
        entries: Sequence[ManifestEntry],
        signer: RelayKeypair,
        revoked: Sequence[bytes] = (),
        issued_at: int = 0,
        ttl_hours: int = 72,
    ) -> AllowlistManifest:
        unsigned = cls(version, tuple(entries), frozenset(revoked), signer.public, bytes(64), issued_at, ttl_hours)
        return dataclasses.replace(unsigned, signature=sign_receipt(unsigned.signing_bytes(), signer))

    def signature_valid(self) -> bool:
        return verify_signature(self.signing_bytes(), self.signature, self.signer)

    def entry_for(self, node: bytes) -> ManifestEntry | None:
        for e in self.entries:
            if e.node == node:
                return e
        return None

    @property
    def active_nodes(self) -> set[bytes]:
        return {e.node for e in self.entries} - self.revoked


def load_manifest(
    data: bytes,
    now: int | None = None,
    trusted_signers: Sequence[bytes] | None = None,
) -> AllowlistManifest:
    """Decode and verify a ``.pottm`` manifest.

    ``now`` is Unix seconds; staleness is only checked when it is given.
    ``trusted_signers`` restricts which governance keys may sign.
    """
    obj = cbor.loads(data)
    if not isinstance(obj, dict) or set(obj) != set(range(7)):
        raise DecodeError("manifest must be a map with keys 0-6")
    try:
        entries = tuple(
            ManifestEntry(bytes(node), str(op), PlanetaryDomain(dom)) for node, op, dom in obj[1]
        )
        m = AllowlistManifest(
            version=int(obj[0]),
            entries=entries,
            revoked=frozenset(bytes(n) for n in obj[2]),
            signer=bytes(obj[5]),
            signature=bytes(obj[6]),
            issued_at=int(obj[3]),
            ttl_hours=int(obj[4]),
        )
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"malformed manifest: {exc}") from exc
    if m.encode() != bytes(data):
        raise DecodeError("manifest is not in canonical form")
    if trusted_signers is not None and m.signer not in set(trusted_signers):
        raise ManifestSignatureInvalid("manifest signer is not a trusted governance key")
    if not m.signature_valid():
        raise ManifestSignatureInvalid("manifest signature does not verify")
    if now is not None and now - m.issued_at > m.ttl_hours * 3600:
        raise ManifestStale(f"manifest issued at {m.issued_at} exceeds its {m.ttl_hours} h TTL at {now}")
    return m


@dataclass(frozen=True)
class PolicyProfile:
    min_hops: int = 3
    min_operator_domains: int = 2
    require_anchor_per_planetary_domain: bool = True
    J_seconds: int = 3600
    max_hops: int = 32
    max_chain_bytes: int = 8192
    high_stakes_min_diverse_chains: int = 2
    retention_days: int = 90
    max_sigma_t_seconds: float = 60
    owlt_slack_seconds: float | None = None

    def __post_init__(self):
        if self.min_hops < 1 or self.max_hops < self.min_hops:
            raise ValueError("need 1 <= min_hops <= max_hops")
        for name in ("min_operator_domains", "J_seconds", "max_chain_bytes",
                     "high_stakes_min_diverse_chains", "retention_days"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def parse(cls, text: str) -> PolicyProfile:
        """Read ``key=value`` lines; names match the dataclass fields."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = (s.strip() for s in line.partition("="))
            if key not in types:
                raise ValueError(f"unknown profile knob {key!r}")
            kwargs[key] = _coerce(value, types[key])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> PolicyProfile:
        return cls.parse(Path(path).read_text())

    def dump(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name}={str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"


def _coerce(value: str, typ: str):
    if typ == "bool":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {value!r}")
        return value.lower() in ("true", "1", "yes")
    if typ == "int":
        return int(value)
    if value.lower() == "none":
        return None
    return float(value)


class Assurance(enum.Enum):
    FULL = "Full"
    DOWNGRADED = "Downgraded"
    NON_PROBATIVE = "NonProbative"
    REJECTED = "Rejected"


_RANK = {Assurance.REJECTED: 0, Assurance.NON_PROBATIVE: 1, Assurance.DOWNGRADED: 2, Assurance.FULL: 3}
DIVERSITY_CHECKS = frozenset({"P3", "P4"})


def assurance_rank(a: Assurance) -> int:
    return _RANK[a]


class Violation(NamedTuple):
    check: str
    detail: str


@dataclass(frozen=True)
class PolicyVerdict:
    assurance: Assurance
    violations: tuple[Violation, ...] = ()

    @property
    def compliant(self) -> bool:
        return not self.violations

    @property
    def checks_failed(self) -> set[str]:
        return {v.check for v in self.violations}

    def to_json(self) -> dict:
        return {
            "compliant": self.compliant,
            "assurance": self.assurance.value,
            "violations": [v._asdict() for v in self.violations],
        }


def anchor_acceptable(b: BeaconReading, report: VerificationReport, profile: PolicyProfile) -> bool:
    """Beacon is precise enough and its reading falls inside the chain's time span."""
    if b.sigma_t_seconds > profile.max_sigma_t_seconds:
        return False
    margin = Fraction(str(2 * b.sigma_t_seconds))
    t = Fraction(b.tai.as_seconds())
    return Fraction(report.t_first_in.as_seconds()) - margin <= t <= Fraction(report.t_last_out.as_seconds()) + margin


def check_profile(
    report: VerificationReport,
    chain: ReceiptChain,
    manifest: AllowlistManifest,
    profile: PolicyProfile,
    env: OwltEnvelope,
    beacons: Sequence[BeaconReading],
    peers: Sequence[ReceiptChain] = (),
) -> PolicyVerdict:
    """Evaluate P1-P8 and grade assurance.

    ``peers`` are other chains presented in the same evidence bundle; any
    of them sharing this chain's (h, nu) from a different origination
    triggers P8.
    """
    if not manifest.signature_valid():
        raise ManifestSignatureInvalid("manifest signature does not verify")
    receipts = chain.receipts
    v: list[Violation] = []

    if not report.structural_ok:
        rules = ",".join(sorted(report.rules_failed))
        v.append(Violation("P1", f"structural verification failed ({rules})"))

    if report.hop_count < profile.min_hops:
        v.append(Violation("P2", f"{report.hop_count} hop(s) < minimum {profile.min_hops}"))

    entries = [manifest.entry_for(r.node) for r in receipts]
    operators = {e.operator_domain for e in entries if e is not None}
    if len(operators) < profile.min_operator_domains:
        v.append(Violation("P3", f"{len(operators)} operator domain(s) < minimum {profile.min_operator_domains}"))

    anchored: set[PlanetaryDomain] = set()
    for b in beacons:
        if anchor_acceptable(b, report, profile):
            anchored.add(b.domain)
    no_anchor_at_all = not anchored
    if profile.require_anchor_per_planetary_domain:
        missing = [d.value for d in PlanetaryDomain if d not in anchored]
        if missing:
            v.append(Violation("P4", f"no acceptable time anchor from {', '.join(missing)}"))

    J = Fraction(profile.J_seconds)
    slack = profile.owlt_slack_seconds if profile.owlt_slack_seconds is not None else default_slack(beacons)
    for i, r in enumerate(receipts):
        dwell = Fraction(r.t_out.as_seconds()) - Fraction(r.t_in.as_seconds())
        if abs(dwell) > J:
            v.append(Violation("P5", f"hop {i} dwell {float(dwell):g} s exceeds J={profile.J_seconds} s"))
        if i == 0:
            continue
        a, b = entries[i - 1], entries[i]
        if a is None or b is None or a.planetary_domain == b.planetary_domain:
            continue
        try:
            ok = within_owlt_envelope(receipts[i - 1].t_out, r.t_in, env, slack)
        except WindowNotCovered as exc:
            v.append(Violation("P5", f"hop {i - 1}->{i}: {exc}"))
            continue
        if not ok:
            transit = Fraction(r.t_in.as_seconds()) - Fraction(receipts[i - 1].t_out.as_seconds())
            v.append(Violation("P5", f"hop {i - 1}->{i} transit {float(transit):g} s outside OWLT envelope"))

    if report.hop_count > profile.max_hops:
        v.append(Violation("P6", f"{report.hop_count} hops exceeds cap {profile.max_hops}"))
    size = chain.receipt_bytes()
    if size > profile.max_chain_bytes:
        v.append(Violation("P6", f"{size} receipt bytes exceeds cap {profile.max_chain_bytes}"))

    for i, r in enumerate(receipts):
        if r.node in manifest.revoked:
            v.append(Violation("P7", f"hop {i} node {r.node.hex()} is revoked"))
        elif entries[i] is None:
            v.append(Violation("P7", f"hop {i} node {r.node.hex()} is not on the allowlist"))

    key = report.evidence_key
    same_set = [p for p in peers if p.receipts and (p.receipts[0].h, p.receipts[0].nu) == key]
    if same_set and nonce_reused([chain, *same_set]):
        v.append(Violation("P8", "nonce reused by a different origination of the same payload"))

    failed = {x.check for x in v}
    if not failed:
        assurance = Assurance.FULL
    elif not failed <= DIVERSITY_CHECKS:
        assurance = Assurance.REJECTED
    elif no_anchor_at_all and len(operators) <= 1:
        assurance = Assurance.NON_PROBATIVE
    else:
        assurance = Assurance.DOWNGRADED
    return PolicyVerdict(assurance, tuple(v))


def chain_operators(chain: ReceiptChain, manifest: AllowlistManifest) -> frozenset[str]:
    ops = set()
    for r in chain.receipts:
        e = manifest.entry_for(r.node)
        ops.add(e.operator_domain if e is not None else f"unlisted:{r.node.hex()}")
    return frozenset(ops)


def check_high_stakes(
    sets: Sequence[tuple[ReceiptChain, PolicyVerdict]],
    manifest: AllowlistManifest,
    min_chains: int = 2,
    beacon_sets: Sequence[Sequence[BeaconReading]] | None = None,
) -> bool:
    """True iff ``min_chains`` compliant chains have pairwise-disjoint operators.

    When ``beacon_sets`` is supplied (aligned with ``sets``) the chosen chains
    must also use pairwise-disjoint beacon ids. A single compliant chain is
    enough for routine settlement but never satisfies this check when
    ``min_chains >= 2``.
    """
    heads = {c.receipts[0].h for c, _ in sets if c.receipts}
    if len(heads) > 1:
        raise MixedPayload("high-stakes evidence must concern a single payload digest")
    candidates = []
    for idx, (chain, verdict) in enumerate(sets):
        if not verdict.compliant:
            continue
        regimes = frozenset(b.beacon_id for b in beacon_sets[idx]) if beacon_sets is not None else frozenset()
        candidates.append((chain_operators(chain, manifest), regimes))
    if len(candidates) < min_chains:
        return False
    for combo in itertools.combinations(candidates, min_chains):
        if all(a[0].isdisjoint(b[0]) and a[1].isdisjoint(b[1]) for a, b in itertools.combinations(combo, 2)):
            return True
    return False
