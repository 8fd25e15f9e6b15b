"""Deterministic relay-path scenarios with honest and adversarial receipt chains.

A scenario is a JSON object::

    {
      "name": "honest",
      "seed": 7,                          # unsigned 64-bit
      "start_tai": 2145916837,            # optional; TAI seconds since 1958
      "relays": [{"operator": "op-a", "domain": "Earth"}, ...],
      "paths": [[0, 1, 2]],               # relay indices; default one path over all relays
      "owlt_envelope": [[start, end, min_s, max_s], ...],
      "jitter": {"model": "uniform", "low": 1, "high": 3600},
      "intra_domain_transit": [1, 5],
      "beacons": [{"id": "dsn", "domain": "Earth", "sigma_t": 1.0}],
      "beacon_excursion_seconds": 0,
      "payload_kind": "Generic",
      "profile": {"min_hops": 3},         # PolicyProfile overrides
      "headers": {"count": 24, "mean_interval": 600, "start_height": 840000},
      "adversary": [{"action": "Backdate", "chain": 0, "hop": 1, "seconds": -7200}]
    }

Relays may carry ``"listed": false`` (absent from the manifest) or
``"revoked": true``. Each path yields one chain; adversary actions rewrite
the chain they name. Honest chains are built with ``originate_chain`` and
``append_hop`` only. Adversarial chains are produced by editing receipt
fields or wire bytes directly.

Randomness comes from one xoshiro256** stream (see ``pott.rng``) seeded
with ``seed``; header synthesis uses a second stream seeded with
``seed ^ HEADER_SEED_SALT``.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .anchor import BlockHeader, write_headers
from .errors import DigestError, ScenarioInvalid, TableGap, WindowNotCovered
from .policy import (
    DIVERSITY_CHECKS,
    AllowlistManifest,
    Assurance,
    ManifestEntry,
    PolicyProfile,
    PolicyVerdict,
    check_profile,
)
from .privacy import commit_transcript
from .receipt import (
    DigestKind,
    Receipt,
    ReceiptChain,
    TaiTimestamp,
    append_hop,
    compute_payload_digest,
    decode_receipt,
    encode_receipt,
    link_hash,
    originate_chain,
    signing_message,
    write_chain,
)
from .rng import MASK64, Xoshiro256
from .signing import RelayKeypair, double_sha256, sign_receipt
from .timebase import (
    BeaconReading,
    LeapSecondTable,
    OwltEnvelope,
    OwltWindow,
    PlanetaryDomain,
    dump_beacons,
    tai_to_unix_utc,
)
from .verifier import VerificationReport, verify_structure

DEFAULT_START_TAI = 2_145_916_837  # 2026-01-01T00:00:00Z
HEADER_SEED_SALT = 0x5A5A_1234_C0DE_0042
RECEIPT_WIRE_BYTES = 211  # a7 map, six fixed-width fields, 64-byte signature
ACTIONS = ("Honest", "Splice", "Backdate", "Truncate", "SybilInsert", "NonceReuse", "Drop")


@dataclass(frozen=True)
class Relay:
    operator: str
    domain: PlanetaryDomain
    listed: bool = True
    revoked: bool = False


@dataclass(frozen=True)
class BeaconSpec:
    beacon_id: str
    domain: PlanetaryDomain
    sigma_t: float


@dataclass(frozen=True)
class Action:
    kind: str
    params: dict = field(default_factory=dict)

    def get(self, name: str, default=None):
        return self.params.get(name, default)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    relays: tuple[Relay, ...]
    paths: tuple[tuple[int, ...], ...]
    envelope: OwltEnvelope
    jitter: tuple[int, int]
    intra_transit: tuple[int, int] = (1, 5)
    beacons: tuple[BeaconSpec, ...] = ()
    beacon_excursion_seconds: int = 0
    payload_kind: DigestKind = DigestKind.GENERIC
    payload_size: int = 256
    start_tai: int = DEFAULT_START_TAI
    profile: PolicyProfile = PolicyProfile()
    headers: dict = field(default_factory=lambda: {"count": 24, "mean_interval": 600, "start_height": 840000})
    adversary: tuple[Action, ...] = ()

    @classmethod
    def from_json(cls, obj: Any) -> Scenario:
        try:
            return _parse_scenario(obj)
        except ScenarioInvalid:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalid(f"malformed scenario: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioInvalid(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_json(obj)


def _parse_scenario(obj: dict) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioInvalid("scenario must be a JSON object")
    seed = obj["seed"]
    if not isinstance(seed, int) or not 0 <= seed <= MASK64:
        raise ScenarioInvalid("seed must be an unsigned 64-bit integer")
    relays = tuple(
        Relay(str(r["operator"]), PlanetaryDomain(r["domain"]), bool(r.get("listed", True)), bool(r.get("revoked", False)))
        for r in obj["relays"]
    )
    if not relays:
        raise ScenarioInvalid("scenario needs at least one relay")
    paths = tuple(tuple(int(i) for i in p) for p in obj.get("paths", [list(range(len(relays)))]))
    if not paths:
        raise ScenarioInvalid("scenario needs at least one path")
    for p in paths:
        if not p:
            raise ScenarioInvalid("paths must be non-empty")
        if any(not 0 <= i < len(relays) for i in p):
            raise ScenarioInvalid(f"path {list(p)} references a relay outside 0..{len(relays) - 1}")
    env_rows = obj.get("owlt_envelope", [[0, 2**64, 180, 1320]])
    envelope = OwltEnvelope(tuple(OwltWindow(*(int(x) for x in row)) for row in env_rows))
    profile = PolicyProfile(**obj.get("profile", {}))
    jit = obj.get("jitter", {})
    if jit.get("model", "uniform") != "uniform":
        raise ScenarioInvalid(f"unsupported jitter model {jit.get('model')!r}")
    jitter = (int(jit.get("low", 1)), int(jit.get("high", profile.J_seconds)))
    intra = tuple(int(x) for x in obj.get("intra_domain_transit", [1, 5]))
    if jitter[0] < 0 or jitter[1] < jitter[0] or len(intra) != 2 or intra[0] < 1 or intra[1] < intra[0]:
        raise ScenarioInvalid("jitter and transit ranges must be ordered, non-negative intervals")
    beacons = tuple(
        BeaconSpec(str(b["id"]), PlanetaryDomain(b["domain"]), float(b["sigma_t"])) for b in obj.get("beacons", [])
    )
    if any(b.sigma_t < 0 for b in beacons):
        raise ScenarioInvalid("beacon sigma_t must be non-negative")
    kind = DigestKind(obj.get("payload_kind", "Generic"))
    actions = []
    for a in obj.get("adversary", []):
        a = dict(a)
        kind_name = a.pop("action")
        if kind_name not in ACTIONS:
            raise ScenarioInvalid(f"unknown adversary action {kind_name!r}")
        actions.append(Action(kind_name, a))
    headers = dict(obj.get("headers", {"count": 24, "mean_interval": 600, "start_height": 840000}))
    if int(headers.get("count", 0)) < 1:
        raise ScenarioInvalid("header count must be at least 1")
    s = Scenario(
        name=str(obj.get("name", "scenario")),
        seed=seed,
        relays=relays,
        paths=paths,
        envelope=envelope,
        jitter=jitter,
        intra_transit=(intra[0], intra[1]),
        beacons=beacons,
        beacon_excursion_seconds=int(obj.get("beacon_excursion_seconds", 0)),
        payload_kind=kind,
        payload_size=int(obj.get("payload_size", 256)),
        start_tai=int(obj.get("start_tai", DEFAULT_START_TAI)),
        profile=profile,
        headers=headers,
        adversary=tuple(actions),
    )
    _validate_actions(s)
    return s


def _validate_actions(s: Scenario) -> None:
    n = len(s.paths)

    def chain_idx(a: Action, name: str = "chain") -> int:
        i = int(a.get(name, 0))
        if not 0 <= i < n:
            raise ScenarioInvalid(f"{a.kind}: {name} index {i} outside 0..{n - 1}")
        return i

    def hop_idx(a: Action, c: int, name: str, extra: int = 0) -> int:
        k = a.get(name)
        if not isinstance(k, int) or not 0 <= k < len(s.paths[c]) + extra:
            raise ScenarioInvalid(f"{a.kind}: {name}={k!r} outside chain {c}")
        return k

    for a in s.adversary:
        if a.kind == "Splice":
            ca, cb = chain_idx(a, "a"), chain_idx(a, "b")
            if ca == cb:
                raise ScenarioInvalid("Splice needs two distinct chains")
            cut = a.get("cut")
            if not isinstance(cut, int) or not 1 <= cut < len(s.paths[cb]) or cut > len(s.paths[ca]):
                raise ScenarioInvalid("Splice cut must leave receipts from both chains")
            if a.get("flavor", "unsigned") != "unsigned":
                raise ScenarioInvalid("only the unsigned Splice flavor is modelled")
        elif a.kind == "Backdate":
            c = chain_idx(a)
            k = hop_idx(a, c, "hop")
            if not isinstance(a.get("seconds"), int):
                raise ScenarioInvalid("Backdate seconds must be an integer")
            if a.get("flavor", "resigned") not in ("resigned", "unsigned"):
                raise ScenarioInvalid("Backdate flavor must be 'resigned' or 'unsigned'")
            if a.get("flavor", "resigned") == "resigned" and k == len(s.paths[c]) - 1:
                raise ScenarioInvalid("resigned Backdate needs a later honest hop to expose the shift")
        elif a.kind in ("Truncate", "Drop"):
            c = chain_idx(a)
            hop_idx(a, c, "after_hop")
        elif a.kind == "SybilInsert":
            c = chain_idx(a)
            hop_idx(a, c, "hop", extra=1)
        elif a.kind == "NonceReuse":
            if chain_idx(a, "a") == chain_idx(a, "b"):
                raise ScenarioInvalid("NonceReuse needs two distinct chains")


@dataclass(frozen=True)
class ExpectedVerdict:
    delivered: bool
    compliant: bool | None = None
    assurance: str | None = None
    flags: tuple[str, ...] = ()
    note: str = ""

    def to_json(self) -> dict:
        return {
            "delivered": self.delivered,
            "compliant": self.compliant,
            "assurance": self.assurance,
            "flags": list(self.flags),
            "note": self.note,
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExpectedVerdict:
        return cls(obj["delivered"], obj.get("compliant"), obj.get("assurance"), tuple(obj.get("flags", ())), obj.get("note", ""))


@dataclass(frozen=True)
class ActualVerdict:
    report: VerificationReport
    verdict: PolicyVerdict

    @property
    def flags(self) -> set[str]:
        return self.report.rules_failed | self.verdict.checks_failed


def label_matches(expected: ExpectedVerdict, actual: ActualVerdict | None) -> bool:
    if not expected.delivered:
        return actual is None
    if actual is None:
        return False
    return (
        expected.compliant == actual.verdict.compliant
        and expected.assurance == actual.verdict.assurance.value
        and set(expected.flags) <= actual.flags
    )


@dataclass
class SimOutput:
    scenario: Scenario
    chains: list[ReceiptChain | None]
    beacons: list[BeaconReading]
    expected: dict[int, ExpectedVerdict]
    manifest: AllowlistManifest
    envelope: OwltEnvelope
    profile: PolicyProfile
    headers: list[BlockHeader]
    payload: bytes

    @property
    def delivered(self) -> dict[int, ReceiptChain]:
        return {i: c for i, c in enumerate(self.chains) if c is not None}


# --- hop facts used both to build chains and to derive labels ---

@dataclass(frozen=True)
class _Hop:
    relay: Relay
    key: RelayKeypair
    t_in: int
    t_out: int


def _keys_for(rng: Xoshiro256, n: int) -> list[RelayKeypair]:
    return [RelayKeypair.generate(rng.bytes) for _ in range(n)]


def _payload(rng: Xoshiro256, kind: DigestKind, size: int) -> bytes:
    if kind is DigestKind.BITCOIN_HEADER:
        return rng.bytes(80)
    if kind is DigestKind.BIP157_FILTER:
        body = rng.bytes(max(size - 1, 0))
        return bytes([min(len(body), 0xFC)]) + body
    return rng.bytes(size)


def _timeline(rng: Xoshiro256, s: Scenario, hop_relays: Sequence[tuple[Relay, RelayKeypair]]) -> list[_Hop]:
    hops = []
    t = s.start_tai
    for k, (relay, key) in enumerate(hop_relays):
        if k > 0:
            prev = hops[-1].relay
            if prev.domain != relay.domain:
                w = s.envelope.window_at(t)
                t += rng.integers(w.min_owlt, w.max_owlt)
            else:
                t += rng.integers(*s.intra_transit)
        dwell = rng.integers(*s.jitter)
        hops.append(_Hop(relay, key, t, t + dwell))
        t += dwell
    return hops


def _build_honest(h: bytes, nonce: bytes, hops: Sequence[_Hop]) -> ReceiptChain:
    first = hops[0]
    chain = originate_chain(h, first.key, TaiTimestamp(first.t_in), TaiTimestamp(first.t_out), rng=lambda _n: nonce)
    for hop in hops[1:]:
        chain = append_hop(chain, hop.key, TaiTimestamp(hop.t_in), TaiTimestamp(hop.t_out))
    return chain


def _relink_and_sign(receipts: Sequence[Receipt], keys: Sequence[RelayKeypair]) -> ReceiptChain:
    """Recompute every prev link and signature in order, bypassing the builder's checks."""
    out: list[Receipt] = []
    for i, (r, key) in enumerate(zip(receipts, keys)):
        prev = bytes(32) if i == 0 else link_hash(out[-1])
        r = dataclasses.replace(r, prev=prev)
        out.append(r.with_sig(sign_receipt(signing_message(r), key)))
    return ReceiptChain(tuple(out))


def _patch_time(raw: bytes, key: int, value: int) -> bytes:
    """Overwrite the fixed 8-byte timestamp under integer map key ``key`` (3 or 4)."""
    marker = bytes([key, 0x1B])
    pos = raw.index(marker)
    return raw[:pos + 2] + struct.pack(">Q", value) + raw[pos + 10:]


def _beacon_readings(rng: Xoshiro256, s: Scenario, timelines: Sequence[Sequence[_Hop]]) -> list[BeaconReading]:
    readings = []
    for b in s.beacons:
        ingress = [h.t_in for tl in timelines for h in tl if h.relay.domain is b.domain]
        true_t = min(ingress) if ingress else s.start_tai
        spread = int(b.sigma_t)
        offset = rng.integers(-spread, spread) + s.beacon_excursion_seconds
        readings.append(BeaconReading(b.beacon_id, b.domain, TaiTimestamp(true_t + offset), b.sigma_t))
    return readings


def _label(
    hops: Sequence[_Hop],
    s: Scenario,
    beacons: Sequence[BeaconReading],
    structural: set[str],
    extra: set[str] = frozenset(),
    note: str = "",
) -> ExpectedVerdict:
    """Expected verdict derived from the ground-truth hop facts of a delivered chain."""
    p = s.profile
    flags = set(structural) | set(extra)
    if structural:
        flags.add("P1")
    if len(hops) < p.min_hops:
        flags.add("P2")
    ops = {h.relay.operator for h in hops if h.relay.listed}
    if len(ops) < p.min_operator_domains:
        flags.add("P3")
    first_in, last_out = hops[0].t_in, hops[-1].t_out
    anchored = {
        b.domain for b in beacons
        if b.sigma_t_seconds <= p.max_sigma_t_seconds
        and first_in - Fraction(str(2 * b.sigma_t_seconds)) <= b.tai.seconds <= last_out + Fraction(str(2 * b.sigma_t_seconds))
    }
    if p.require_anchor_per_planetary_domain and anchored != set(PlanetaryDomain):
        flags.add("P4")
    slack = Fraction(str(p.owlt_slack_seconds if p.owlt_slack_seconds is not None
                         else 2 * max((b.sigma_t_seconds for b in beacons), default=0)))
    for i, h in enumerate(hops):
        if abs(h.t_out - h.t_in) > p.J_seconds:
            flags.add("P5")
        if i and h.relay.listed and hops[i - 1].relay.listed and h.relay.domain != hops[i - 1].relay.domain:
            try:
                w = s.envelope.window_at(hops[i - 1].t_out)
            except WindowNotCovered:
                flags.add("P5")
                continue
            transit = h.t_in - hops[i - 1].t_out
            if not w.min_owlt - slack <= transit <= w.max_owlt + slack:
                flags.add("P5")
    if len(hops) > p.max_hops or len(hops) * RECEIPT_WIRE_BYTES > p.max_chain_bytes:
        flags.add("P6")
    if any(not h.relay.listed or h.relay.revoked for h in hops):
        flags.add("P7")
    if not flags:
        assurance = Assurance.FULL
    elif not flags <= DIVERSITY_CHECKS:
        assurance = Assurance.REJECTED
    elif not anchored and len(ops) <= 1:
        assurance = Assurance.NON_PROBATIVE
    else:
        assurance = Assurance.DOWNGRADED
    return ExpectedVerdict(True, not flags, assurance.value, tuple(sorted(flags)), note)


def run_scenario(s: Scenario) -> SimOutput:
    rng = Xoshiro256(s.seed)
    keys = _keys_for(rng, len(s.relays))
    governance = RelayKeypair.generate(rng.bytes)
    payload = _payload(rng, s.payload_kind, s.payload_size)
    try:
        h = compute_payload_digest(payload, s.payload_kind).value
    except DigestError as exc:
        raise ScenarioInvalid(f"payload generation failed: {exc}") from exc

    # path layout, with Sybil relays spliced in before any timing is drawn
    layouts: list[list[tuple[Relay, RelayKeypair]]] = [[(s.relays[i], keys[i]) for i in p] for p in s.paths]
    sybil_notes: dict[int, str] = {}
    for a in s.adversary:
        if a.kind != "SybilInsert":
            continue
        c, k = int(a.get("chain", 0)), int(a.get("hop"))
        secret = a.get("unlisted_key")
        sk = RelayKeypair.from_secret(bytes.fromhex(secret)) if secret else RelayKeypair.generate(rng.bytes)
        neighbour = layouts[c][k - 1][0] if k > 0 else layouts[c][0][0]
        layouts[c].insert(k, (Relay("sybil", neighbour.domain, listed=False), sk))
        sybil_notes[c] = f"unlisted relay inserted at hop {k}"

    nonces = [rng.bytes(16) for _ in s.paths]
    reuse: dict[int, int] = {}
    for a in s.adversary:
        if a.kind == "NonceReuse":
            reuse[int(a.get("b"))] = int(a.get("a"))
    for b_idx, a_idx in reuse.items():
        nonces[b_idx] = nonces[a_idx]

    try:
        timelines = [_timeline(rng, s, layout) for layout in layouts]
    except WindowNotCovered as exc:
        raise ScenarioInvalid(f"cannot draw a timeline: {exc}") from exc
    beacons = _beacon_readings(rng, s, timelines)

    chains: list[ReceiptChain | None] = [_build_honest(h, nonces[i], tl) for i, tl in enumerate(timelines)]
    hops_of: list[list[_Hop] | None] = [list(tl) for tl in timelines]
    structural: list[set[str]] = [{"R1"} if i in sybil_notes else set() for i in range(len(chains))]
    extra: list[set[str]] = [set() for _ in chains]
    notes: list[str] = [sybil_notes.get(i, "honest") for i in range(len(chains))]

    for i in reuse:
        extra[i].add("P8")
        extra[reuse[i]].add("P8")
        notes[i] = notes[reuse[i]] = "nonce reused across originations"

    for a in s.adversary:
        if a.kind in ("Honest", "SybilInsert", "NonceReuse"):
            continue
        if a.kind == "Splice":
            ca, cb, cut = int(a.get("a")), int(a.get("b")), int(a.get("cut"))
            if chains[ca] is None or chains[cb] is None:
                raise ScenarioInvalid("Splice references a dropped chain")
            left, right = chains[ca].receipts[:cut], chains[cb].receipts[cut:]
            raw = [encode_receipt(r) for r in left + right]
            chains[ca] = ReceiptChain(tuple(decode_receipt(b) for b in raw))
            hops_of[ca] = hops_of[ca][:cut] + hops_of[cb][cut:]
            structural[ca] |= {"R4"} | ({"R2"} if nonces[ca] != nonces[cb] else set())
            if not _ordered(hops_of[ca]):
                structural[ca].add("R3")
            notes[ca] = f"spliced with chain {cb} at hop {cut}"
        elif a.kind == "Backdate":
            c, k, secs = int(a.get("chain", 0)), int(a.get("hop")), int(a.get("seconds"))
            chain = chains[c]
            if chain is None:
                raise ScenarioInvalid("Backdate references a dropped chain")
            if a.get("flavor", "resigned") == "resigned":
                hops_of[c] = [
                    dataclasses.replace(hp, t_in=hp.t_in + secs, t_out=hp.t_out + secs) if j <= k else hp
                    for j, hp in enumerate(hops_of[c])
                ]
                shifted = [
                    dataclasses.replace(r, t_in=r.t_in.shifted(secs), t_out=r.t_out.shifted(secs)) if j <= k else r
                    for j, r in enumerate(chain.receipts)
                ]
                chains[c] = _relink_and_sign(shifted, [hp.key for hp in hops_of[c]])
                if not _ordered(hops_of[c]):
                    structural[c].add("R3")
                notes[c] = f"hops 0..{k} re-signed {secs:+d} s"
            else:
                raw = encode_receipt(chain.receipts[k])
                r = chain.receipts[k]
                raw = _patch_time(_patch_time(raw, 3, r.t_in.seconds + secs), 4, r.t_out.seconds + secs)
                receipts = list(chain.receipts)
                receipts[k] = decode_receipt(raw)
                chains[c] = ReceiptChain(tuple(receipts))
                hp = hops_of[c][k]
                hops_of[c][k] = dataclasses.replace(hp, t_in=hp.t_in + secs, t_out=hp.t_out + secs)
                structural[c] |= {"R1"} | ({"R4"} if k + 1 < len(receipts) else set())
                if not _ordered(hops_of[c]):
                    structural[c].add("R3")
                notes[c] = f"hop {k} timestamps edited {secs:+d} s without re-signing"
        elif a.kind == "Truncate":
            c, k = int(a.get("chain", 0)), int(a.get("after_hop"))
            if chains[c] is None:
                raise ScenarioInvalid("Truncate references a dropped chain")
            chains[c] = ReceiptChain(chains[c].receipts[:k + 1])
            hops_of[c] = hops_of[c][:k + 1]
            notes[c] = f"truncated after hop {k}"
        elif a.kind == "Drop":
            c = int(a.get("chain", 0))
            chains[c] = None
            hops_of[c] = None
            notes[c] = f"dropped after hop {int(a.get('after_hop'))}"

    expected: dict[int, ExpectedVerdict] = {}
    for i, hops in enumerate(hops_of):
        if hops is None:
            expected[i] = ExpectedVerdict(False, note=notes[i])
        else:
            expected[i] = _label(hops, s, beacons, structural[i], extra[i], notes[i])

    entries = [
        ManifestEntry(keys[i].public, r.operator, r.domain) for i, r in enumerate(s.relays) if r.listed
    ]
    revoked = [keys[i].public for i, r in enumerate(s.relays) if r.revoked]
    issued = _unix(s.start_tai)
    manifest = AllowlistManifest.build(1, entries, governance, revoked=revoked, issued_at=issued)

    hdr = s.headers
    count, interval = int(hdr.get("count", 24)), float(hdr.get("mean_interval", 600))
    headers = synth_header_chain(
        s.seed ^ HEADER_SEED_SALT,
        count,
        interval,
        start_time=int(hdr.get("start_time", issued)),
        start_height=int(hdr.get("start_height", 840000)),
    )
    return SimOutput(s, chains, beacons, expected, manifest, s.envelope, s.profile, headers, payload)


def _ordered(hops: Sequence[_Hop]) -> bool:
    return all(h.t_in <= h.t_out for h in hops) and all(a.t_out < b.t_in for a, b in zip(hops, hops[1:]))


def _unix(tai_seconds: int) -> int:
    try:
        return tai_to_unix_utc(TaiTimestamp(tai_seconds), LeapSecondTable.bundled(), extrapolate=True)
    except TableGap as exc:
        raise ScenarioInvalid(f"start_tai outside the leap-second table: {exc}") from exc


def synth_header_chain(
    seed: int,
    count: int,
    mean_interval_seconds: float,
    start_time: int = 1_700_000_000,
    start_height: int = 0,
    constant: bool = False,
) -> list[BlockHeader]:
    """Linked 80-byte headers with exponential (or constant) inter-block times.

    Timestamps strictly increase; the proof-of-work field is not meaningful.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = Xoshiro256(seed & MASK64)
    headers = []
    prev = bytes(32)
    t = start_time
    for i in range(count):
        if i:
            step = mean_interval_seconds if constant else rng.exponential(mean_interval_seconds)
            t += max(1, round(step))
        raw = struct.pack("<I", 0x20000000) + prev + rng.bytes(32) + struct.pack("<III", t, 0x1D00FFFF, rng.next_u64() & 0xFFFFFFFF)
        header = BlockHeader(raw, start_height + i)
        headers.append(header)
        prev = double_sha256(raw)
    return headers


def evaluate(out: SimOutput) -> dict[int, ActualVerdict | None]:
    """Run structural verification and the policy profile over every delivered chain."""
    delivered = out.delivered
    allow = out.manifest.active_nodes
    results: dict[int, ActualVerdict | None] = {}
    for i in range(len(out.chains)):
        chain = delivered.get(i)
        if chain is None:
            results[i] = None
            continue
        report = verify_structure(chain, allow)
        peers = [c for j, c in delivered.items() if j != i]
        verdict = check_profile(report, chain, out.manifest, out.profile, out.envelope, out.beacons, peers)
        results[i] = ActualVerdict(report, verdict)
    return results


def write_corpus(out: SimOutput, directory: str | Path) -> list[Path]:
    """Write the fixture corpus; returns the files written in a stable order."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, data: bytes | str) -> None:
        p = d / name
        p.write_bytes(data if isinstance(data, bytes) else data.encode())
        written.append(p)

    for i, chain in enumerate(out.chains):
        if chain is None:
            continue
        write_chain(chain, d / f"chain_{i:02d}.pottc")
        written.append(d / f"chain_{i:02d}.pottc")
        put(f"commitment_{i:02d}.pottp", commit_transcript(chain).encode())
    put("manifest.pottm", out.manifest.encode())
    put("envelope.csv", out.envelope.to_csv())
    put("beacons.json", dump_beacons(out.beacons))
    put("profile.txt", out.profile.dump())
    write_headers(out.headers, d / "headers.bin")
    written += [d / "headers.bin", d / "headers.bin.height"]
    labels = {
        "scenario": out.scenario.name,
        "seed": out.scenario.seed,
        "governance_key": out.manifest.signer.hex(),
        "chains": {str(i): v.to_json() for i, v in sorted(out.expected.items())},
    }
    put("expected.json", json.dumps(labels, indent=2, sort_keys=True) + "\n")
    return written


def load_expected(path: str | Path) -> dict[int, ExpectedVerdict]:
    obj = json.loads(Path(path).read_text())
    return {int(k): ExpectedVerdict.from_json(v) for k, v in obj["chains"].items()}


def bundled_scenarios() -> dict[str, Scenario]:
    """The scenario corpus shipped with the package, keyed by file stem."""
    from importlib import resources

    root = resources.files("pott") / "data" / "scenarios"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = Scenario.from_json(json.loads(entry.read_text()))
    return out


def evaluate_corpus(directory: str | Path) -> tuple[dict[int, ExpectedVerdict], dict[int, ActualVerdict | None]]:
    """Re-verify a corpus written by ``write_corpus`` from its files alone."""
    from .policy import load_manifest
    from .receipt import read_chain
    from .timebase import load_beacons

    d = Path(directory)
    expected = load_expected(d / "expected.json")
    manifest = load_manifest((d / "manifest.pottm").read_bytes())
    profile = PolicyProfile.load(d / "profile.txt")
    env = OwltEnvelope.load(d / "envelope.csv")
    beacons = load_beacons(d / "beacons.json")
    chains = {i: read_chain(d / f"chain_{i:02d}.pottc") for i in expected if (d / f"chain_{i:02d}.pottc").exists()}
    results: dict[int, ActualVerdict | None] = {}
    for i in expected:
        chain = chains.get(i)
        if chain is None:
            results[i] = None
            continue
        report = verify_structure(chain, manifest.active_nodes)
        peers = [c for j, c in chains.items() if j != i]
        results[i] = ActualVerdict(report, check_profile(report, chain, manifest, profile, env, beacons, peers))
    return expected, results
