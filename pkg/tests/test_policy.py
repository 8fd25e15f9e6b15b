import dataclasses

import pytest

from conftest import make_keys
from pott.errors import DecodeError, ManifestSignatureInvalid, ManifestStale, MixedPayload
from pott.policy import (
    AllowlistManifest,
    Assurance,
    ManifestEntry,
    PolicyProfile,
    assurance_rank,
    check_high_stakes,
    check_profile,
    load_manifest,
)
from pott.receipt import ReceiptChain, TaiTimestamp, append_hop, originate_chain
from pott.timebase import BeaconReading, OwltEnvelope, PlanetaryDomain
from pott.verifier import verify_structure

E, M = PlanetaryDomain.EARTH, PlanetaryDomain.MARS
KEYS = make_keys(40)
GOV = make_keys(1, offset=500)[0]
ENV = OwltEnvelope.single(180, 1320)
PROFILE = PolicyProfile()
T0 = 2_000_000_000


def manifest(layout, revoked=(), **kw):
    entries = [ManifestEntry(KEYS[i].public, op, dom) for i, (op, dom) in layout.items()]
    return AllowlistManifest.build(1, entries, GOV, revoked=revoked, issued_at=1000, **kw)


def chain_over(idx, domains, nonce=b"\x01" * 16, h=b"\x11" * 32, dwell=60, transit=600):
    t = T0
    chain = originate_chain(h, KEYS[idx[0]], TaiTimestamp(t), TaiTimestamp(t + dwell), rng=lambda _: nonce)
    t += dwell
    for j, i in enumerate(idx[1:], start=1):
        t += transit if domains[j] != domains[j - 1] else 2
        chain = append_hop(chain, KEYS[i], TaiTimestamp(t), TaiTimestamp(t + dwell))
        t += dwell
    return chain


def beacons(t_e=T0 + 10, t_m=T0 + 700, sigma=1.0):
    return [BeaconReading("dsn", E, TaiTimestamp(t_e), sigma), BeaconReading("mars", M, TaiTimestamp(t_m), sigma)]


def evaluate(chain, man, profile=PROFILE, bs=None, peers=()):
    report = verify_structure(chain, man.active_nodes)
    return check_profile(report, chain, man, profile, ENV, beacons() if bs is None else bs, peers)


LAYOUT = {0: ("op-a", E), 1: ("op-b", E), 2: ("op-b", M)}


def test_table_defaults():
    p = PolicyProfile()
    assert (p.min_hops, p.min_operator_domains, p.max_hops, p.max_chain_bytes, p.retention_days) == (3, 2, 32, 8192, 90)
    assert p.require_anchor_per_planetary_domain and p.high_stakes_min_diverse_chains == 2


def test_compliant_three_hop_two_operator():
    chain = chain_over([0, 1, 2], [E, E, M])
    assert chain.receipt_bytes() <= 700
    v = evaluate(chain, manifest(LAYOUT))
    assert v.compliant and v.assurance is Assurance.FULL


def test_two_hops_flags_p2():
    v = evaluate(chain_over([0, 2], [E, M]), manifest(LAYOUT))
    assert v.checks_failed == {"P2"}
    assert v.assurance is Assurance.REJECTED


def test_thirty_three_hops_flags_p6():
    idx = list(range(33))
    layout = {i: (f"op-{i % 3}", E) for i in idx}
    v = evaluate(chain_over(idx, [E] * 33), manifest(layout), bs=beacons(t_m=T0 + 100))
    assert "P6" in v.checks_failed


def test_byte_cap_independent_of_hop_cap():
    profile = dataclasses.replace(PROFILE, max_chain_bytes=600)
    v = evaluate(chain_over([0, 1, 2], [E, E, M]), manifest(LAYOUT), profile)
    assert v.checks_failed == {"P6"}


def test_single_operator_no_beacon_is_non_probative():
    layout = {0: ("op-a", E), 1: ("op-a", E), 2: ("op-a", M)}
    v = evaluate(chain_over([0, 1, 2], [E, E, M]), manifest(layout), bs=[])
    assert v.checks_failed == {"P3", "P4"}
    assert v.assurance is Assurance.NON_PROBATIVE


def test_single_operator_with_anchors_is_downgraded():
    layout = {0: ("op-a", E), 1: ("op-a", E), 2: ("op-a", M)}
    v = evaluate(chain_over([0, 1, 2], [E, E, M]), manifest(layout))
    assert v.checks_failed == {"P3"} and v.assurance is Assurance.DOWNGRADED


def test_missing_mars_anchor_downgrades():
    v = evaluate(chain_over([0, 1, 2], [E, E, M]), manifest(LAYOUT), bs=beacons()[:1])
    assert v.checks_failed == {"P4"} and v.assurance is Assurance.DOWNGRADED


@pytest.mark.parametrize("sigma,when,ok", [(60, T0 + 10, True), (61, T0 + 10, False), (1, T0 - 2, True), (1, T0 - 3, False)])
def test_beacon_sigma_and_span(sigma, when, ok):
    bs = [BeaconReading("dsn", E, TaiTimestamp(when), sigma), beacons()[1]]
    profile = dataclasses.replace(PROFILE, owlt_slack_seconds=0)
    v = evaluate(chain_over([0, 1, 2], [E, E, M]), manifest(LAYOUT), profile, bs=bs)
    assert ("P4" not in v.checks_failed) is ok


def test_dwell_over_j_flags_p5():
    v = evaluate(chain_over([0, 1, 2], [E, E, M], dwell=3601), manifest(LAYOUT), bs=beacons(t_m=T0 + 8000))
    assert "P5" in v.checks_failed


def test_dwell_exactly_j_allowed():
    v = evaluate(chain_over([0, 1, 2], [E, E, M], dwell=3600), manifest(LAYOUT), bs=beacons(t_m=T0 + 8000))
    assert "P5" not in v.checks_failed


@pytest.mark.parametrize("transit,flag", [(1320, False), (1323, True), (178, False), (177, True)])
def test_owlt_transit_with_default_slack(transit, flag):
    # default slack is 2 * max sigma = 2 s
    v = evaluate(chain_over([0, 1, 2], [E, E, M], transit=transit), manifest(LAYOUT), bs=beacons(t_m=T0 + 200))
    assert ("P5" in v.checks_failed) is flag


def test_revoked_and_unlisted_nodes():
    chain = chain_over([0, 1, 2], [E, E, M])
    v = evaluate(chain, manifest(LAYOUT, revoked=[KEYS[1].public]))
    assert {"P1", "P7"} <= v.checks_failed and v.assurance is Assurance.REJECTED
    v = evaluate(chain, manifest({0: LAYOUT[0], 2: LAYOUT[2]}))
    assert "P7" in v.checks_failed


def test_nonce_reuse_across_originations():
    a = chain_over([0, 1, 2], [E, E, M])
    b = chain_over([0, 1, 2], [E, E, M], dwell=61)
    v = evaluate(a, manifest(LAYOUT), peers=[b])
    assert v.checks_failed == {"P8"}
    assert evaluate(a, manifest(LAYOUT), peers=[a]).compliant


def test_assurance_monotone_when_adding_operator():
    layout = {0: ("op-a", E), 1: ("op-a", E), 2: ("op-a", M), 3: ("op-z", M)}
    man = manifest(layout)
    before = evaluate(chain_over([0, 1, 2], [E, E, M]), man)
    after = evaluate(chain_over([0, 1, 2, 3], [E, E, M, M]), man, bs=beacons(t_m=T0 + 700))
    assert assurance_rank(after.assurance) >= assurance_rank(before.assurance)


def test_manifest_roundtrip_tamper_and_ttl():
    man = manifest(LAYOUT)
    assert load_manifest(man.encode()) == man
    raw = bytearray(man.encode())
    raw[-1] ^= 1
    with pytest.raises(ManifestSignatureInvalid):
        load_manifest(bytes(raw))
    with pytest.raises(ManifestStale):
        load_manifest(man.encode(), now=1000 + 72 * 3600 + 1)
    assert load_manifest(man.encode(), now=1000 + 72 * 3600)
    with pytest.raises(ManifestSignatureInvalid):
        load_manifest(man.encode(), trusted_signers=[KEYS[0].public])
    with pytest.raises(DecodeError):
        load_manifest(man.encode() + b"\x00")


def test_check_profile_refuses_unsigned_manifest():
    man = dataclasses.replace(manifest(LAYOUT), signature=bytes(64))
    chain = chain_over([0, 1, 2], [E, E, M])
    with pytest.raises(ManifestSignatureInvalid):
        check_profile(verify_structure(chain, man.active_nodes), chain, man, PROFILE, ENV, beacons())


def test_profile_text_roundtrip():
    p = dataclasses.replace(PROFILE, min_hops=4, owlt_slack_seconds=2.5)
    assert PolicyProfile.parse(p.dump()) == p
    with pytest.raises(ValueError):
        PolicyProfile.parse("bogus=1")
    with pytest.raises(ValueError):
        PolicyProfile(min_hops=5, max_hops=4)


HS_LAYOUT = {0: ("op-a", E), 1: ("op-b", E), 2: ("op-b", M), 3: ("op-c", E), 4: ("op-d", E), 5: ("op-d", M)}


def _hs_sets(second):
    man = manifest(HS_LAYOUT)
    a = chain_over([0, 1, 2], [E, E, M], nonce=b"\x01" * 16)
    b = chain_over(second, [E, E, M], nonce=b"\x02" * 16)
    return man, [(a, evaluate(a, man)), (b, evaluate(b, man))]


def test_high_stakes_disjoint_operators():
    man, sets = _hs_sets([3, 4, 5])
    assert all(v.compliant for _, v in sets)
    assert check_high_stakes(sets, man)


def test_high_stakes_shared_operator_fails():
    man, sets = _hs_sets([3, 1, 5])
    assert not check_high_stakes(sets, man)


def test_high_stakes_single_chain_fails():
    man, sets = _hs_sets([3, 4, 5])
    assert not check_high_stakes(sets[:1], man)


def test_high_stakes_beacon_regimes():
    man, sets = _hs_sets([3, 4, 5])
    shared = [beacons(), beacons()]
    assert not check_high_stakes(sets, man, beacon_sets=shared)
    distinct = [beacons(), [dataclasses.replace(b, beacon_id=b.beacon_id + "-2") for b in beacons()]]
    assert check_high_stakes(sets, man, beacon_sets=distinct)


def test_high_stakes_mixed_payload():
    man, sets = _hs_sets([3, 4, 5])
    other = chain_over([3, 4, 5], [E, E, M], h=b"\x22" * 32)
    with pytest.raises(MixedPayload):
        check_high_stakes([sets[0], (other, sets[1][1])], man)
