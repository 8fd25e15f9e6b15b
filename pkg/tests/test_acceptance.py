"""One PASS/FAIL line per acceptance criterion, printed even when pytest captures output."""

import dataclasses
import math
import random
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import make_keys
from oracles import minicbor
from pott.anchor import BlockHeader, MtpParams, arrived_before_expiry, median_time_past
from pott.cli import main
from pott.errors import DecodeError
from pott.latency import (
    StaleBoundInputs,
    TimelockInputs,
    cltv_extra_blocks,
    cltv_step_table,
    cltv_total_blocks,
    link_budget,
    stale_fair_interval,
    stale_probability,
)
from pott.privacy import commit_transcript, verify_opening
from pott.receipt import (
    Receipt,
    ReceiptChain,
    TaiTimestamp,
    append_hop,
    decode_receipt,
    encode_chain,
    encode_receipt,
    originate_chain,
    read_chain,
    signing_message,
)
from pott.signing import verify_signature
from pott.simulator import Scenario, bundled_scenarios, evaluate, evaluate_corpus, label_matches, run_scenario
from pott.timebase import SECONDS_1958_TO_1970, LeapSecondTable
from pott.verifier import verify_structure

CORPUS = Path(__file__).parent / "fixtures" / "corpus"
SCENARIO_DIR = Path(__file__).parents[1] / "src" / "pott" / "data" / "scenarios"
TABLE = LeapSecondTable.bundled()


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


# 1 ------------------------------------------------------------------------

def test_criterion_1_golden_vector(report, golden_bytes):
    t0 = time.perf_counter()
    r = decode_receipt(golden_bytes)
    fields_ok = (
        r.h.hex() == "83a012ac612c83f689177387353465fb961356e81bcd8ada4ba0d657da1c2685"
        and r.nu.hex() == "2219c646c0c353d187efb2cab9ef615b"
        and r.node.hex() == "d4063aea170381cecaf4d43b1e8dd32ec1349fac78edc075ce08fb364d604043"
        and r.t_in == TaiTimestamp(0x65B9B8A0) and r.t_out == TaiTimestamp(0x65B9BD40)
        and r.prev.hex() == "2c770e008083e62afd137698ce196db65cb406eb2b4c506cb6fa0c546f95d855"
        and r.sig == golden_bytes[-64:]
    )
    reencoded = encode_receipt(r) == golden_bytes
    oracle = minicbor.receipt_map(r.h, r.nu, r.node, 0x65B9B8A0, 0x65B9BD40, r.prev, r.sig) == golden_bytes
    sig_fails = not verify_signature(signing_message(r), r.sig, r.node)
    elapsed = time.perf_counter() - t0
    report(1, fields_ok and reencoded and oracle and sig_fails and elapsed < 1.0,
           f"fields={fields_ok} reencode_identical={reencoded} oracle_identical={oracle} "
           f"dummy_sig_rejected={sig_fails} runtime={elapsed:.4f}s")


# 2 ------------------------------------------------------------------------

def _ten_hop_honest_chain():
    relays = [{"operator": f"op-{i}", "domain": "Earth" if i < 9 else "Mars"} for i in range(10)]
    s = Scenario.from_json({
        "name": "ten-hop", "seed": 77, "relays": relays,
        "beacons": [{"id": "e", "domain": "Earth", "sigma_t": 1}, {"id": "m", "domain": "Mars", "sigma_t": 5}],
    })
    out = run_scenario(s)
    verdict = evaluate(out)[0]
    assert verdict.verdict.compliant
    return out.chains[0]


def test_criterion_2_overhead(report):
    sizes = set()
    for name in ("honest", "single-operator-anchored"):
        for p in sorted((CORPUS / name).glob("chain_*.pottc")):
            sizes |= {len(encode_receipt(r)) for r in read_chain(p).receipts}
    chain = _ten_hop_honest_chain()
    per_hop = [len(encode_receipt(r)) for r in chain.receipts]
    sizes |= set(per_hop)
    total_receipts = sum(per_hop)
    total_array = len(encode_chain(chain))
    ok = all(200 <= s <= 205 for s in sizes) and 2000 <= total_receipts <= 2050
    report(2, ok, f"receipt_bytes={sorted(sizes)} (target 200-205) ten_hop_receipts_total={total_receipts} "
                  f"ten_hop_with_array_header={total_array} (target 2000-2050); timestamps use fixed 0x1B "
                  f"uint64 items, so each receipt is 211 bytes")


# 3 ------------------------------------------------------------------------

def test_criterion_3_cltv(report):
    inputs = TimelockInputs(22, 60, 10, 144, 2)
    delta, total = cltv_extra_blocks(inputs), cltv_total_blocks(inputs)
    rows = cltv_step_table((0, 30, 60), 22, "0.1")
    mismatches = steps_checked = 0
    for owlt, j, d in rows:
        tenths = int(owlt * 10)
        demand = 2 * tenths + 10 * int(j)  # RTT + J in tenths of a minute
        oracle = -(-demand // 100)
        mismatches += d != oracle
        if demand % 100 == 0:
            steps_checked += 1
            mismatches += d != demand // 100
    complete = len(rows) == 3 * 221
    ok = delta == 11 and total == 157 and mismatches == 0 and complete
    report(3, ok, f"delta={delta} total={total} table_rows={len(rows)} equality_points={steps_checked} "
                  f"mismatches={mismatches}")


# 4 ------------------------------------------------------------------------

def test_criterion_4_budgets(report):
    small_y, small_bps = (float(x) for x in link_budget(52_560, 80))
    big_y, big_bps = (float(x) for x in link_budget(52_560, 20_000))
    checks = [(small_y, 4.2e6), (small_bps, 1.07), (big_y, 1.05e9), (big_bps, 267)]
    worst = max(abs(v - ref) / ref for v, ref in checks)
    report(4, worst <= 0.01, f"80B: {small_y:.0f} B/yr {small_bps:.4f} bps; 20kB: {big_y:.0f} B/yr "
                             f"{big_bps:.2f} bps; worst_rel_err={worst:.4%}")


# 5 ------------------------------------------------------------------------

def test_criterion_5_observation_bound(report):
    b = stale_fair_interval(StaleBoundInputs(22, 0, 0.05))
    p = stale_probability(880, 44)
    report(5, b == 880 and p <= 0.05, f"b_min={b} min p_stale(880,44)={p:.6f}")


# 6 ------------------------------------------------------------------------

KEYS = make_keys(8, offset=500)
ALLOW = {k.public for k in KEYS}
# value spans of map keys 0-5 inside a 211-byte receipt
SPANS = {0: (4, 36), 1: (38, 54), 2: (57, 89), 3: (91, 99), 4: (101, 109), 5: (112, 144)}


def _chain(rnd, n, nonce):
    t = rnd.randrange(1, 2**40)
    c = originate_chain(rnd.randbytes(32), KEYS[0], TaiTimestamp(t), TaiTimestamp(t + 1), rng=lambda _: nonce)
    for i in range(1, n):
        t_in = c.last.t_out.shifted(rnd.randrange(1, 3000))
        c = append_hop(c, KEYS[i % len(KEYS)], t_in, t_in.shifted(rnd.randrange(1, 3600)))
    return c


def _tampers(rnd, chain):
    n = len(chain.receipts)
    for key in range(6):
        hop = rnd.randrange(n)
        raw = bytearray(encode_receipt(chain.receipts[hop]))
        lo, hi = SPANS[key]
        raw[rnd.randrange(lo, hi)] ^= 1 << rnd.randrange(8)
        rs = list(chain.receipts)
        rs[hop] = decode_receipt(bytes(raw))
        yield f"flip{key}", ReceiptChain(tuple(rs))
    # deleting the last hop leaves a genuine prefix (truncation), so only earlier hops are cut
    for k in sorted({0, *rnd.sample(range(n - 1), min(3, n - 1))}) if n > 1 else ():
        yield "delete", ReceiptChain(chain.receipts[:k] + chain.receipts[k + 1:])
    if n >= 2:
        i = rnd.randrange(n - 1)
        rs = list(chain.receipts)
        rs[i], rs[i + 1] = rs[i + 1], rs[i]
        yield "reorder", ReceiptChain(tuple(rs))
        nonce = bytes(x ^ 0x5A for x in chain.receipts[0].nu)
        other = _chain(rnd, n, nonce)
        cut = rnd.randrange(1, n)
        yield "splice", ReceiptChain(chain.receipts[:cut] + other.receipts[cut:])


def test_criterion_6_splice_resistance(report):
    rnd = random.Random(0x5EED)
    t0 = time.perf_counter()
    chains = tampered = false_accepts = false_rejects = 0
    by_kind: dict[str, int] = {}
    for _ in range(1000):
        chain = _chain(rnd, rnd.randint(1, 32), rnd.randbytes(16))
        chains += 1
        false_rejects += not verify_structure(chain, ALLOW).structural_ok
        for kind, t in _tampers(rnd, chain):
            tampered += 1
            by_kind[kind.rstrip("012345")] = by_kind.get(kind.rstrip("012345"), 0) + 1
            false_accepts += verify_structure(t, ALLOW).structural_ok
    elapsed = time.perf_counter() - t0
    ok = chains >= 1000 and false_accepts == 0 and false_rejects == 0 and elapsed < 60
    report(6, ok, f"chains={chains} tampered={tampered} {dict(sorted(by_kind.items()))} "
                  f"false_accepts={false_accepts} false_rejects={false_rejects} runtime={elapsed:.1f}s")


# 7 ------------------------------------------------------------------------

REQUIRED = ("honest", "backdate", "truncate", "sybil", "nonce-reuse", "single-operator-no-beacon")


def test_criterion_7_fixture_labels(report):
    scenarios = bundled_scenarios()
    missing = [n for n in REQUIRED if n not in scenarios]
    results = []
    for name in sorted(scenarios):
        expected, actual = evaluate_corpus(CORPUS / name)
        for i in sorted(expected):
            results.append((name, i, label_matches(expected[i], actual[i]), expected[i].assurance))
    bad = [(n, i) for n, i, ok, _ in results if not ok]
    nonprobative = any(n == "single-operator-no-beacon" and a == "NonProbative" and ok
                       for n, _, ok, a in results)
    ok = not missing and not bad and nonprobative
    report(7, ok, f"labels_checked={len(results)} mismatches={bad} missing={missing} "
                  f"no_beacon_nonprobative={nonprobative}")


# 8 ------------------------------------------------------------------------

def _header(ts: int, height: int) -> BlockHeader:
    return BlockHeader(bytes(68) + ts.to_bytes(4, "little") + bytes(8), height)


def test_criterion_8_mtp(report):
    rnd = random.Random(113)
    median_bad = 0
    for _ in range(10_000):
        stamps = [rnd.randrange(0, 2**32) for _ in range(11)]
        median_bad += median_time_past([_header(t, i) for i, t in enumerate(stamps)]) != sorted(stamps)[5]

    mtp, delta, delta_mtp, h_expiry, kappa = 1_700_000_000, 120, 3600, 900_000, 6
    params = MtpParams(delta, h_expiry, delta_mtp, kappa)

    def accepted(t_utc, height):
        tai = TaiTimestamp(t_utc + 37 + SECONDS_1958_TO_1970)
        return arrived_before_expiry(tai, _header(mtp, height), mtp, params, TABLE).accepted

    edge_t = mtp + delta_mtp - delta
    limit = h_expiry - kappa
    time_flip = [accepted(edge_t - 1, limit), accepted(edge_t, limit), accepted(edge_t + 1, limit)]
    height_flip = [accepted(edge_t, limit - 1), accepted(edge_t, limit), accepted(edge_t, limit + 1)]
    ok = median_bad == 0 and time_flip == [True, True, False] and height_flip == [True, True, False]
    report(8, ok, f"median_sets=10000 mismatches={median_bad} time(-1,0,+1)={time_flip} "
                  f"height(-1,0,+1)={height_flip}")


# 9 ------------------------------------------------------------------------

def test_criterion_9_privacy(report):
    chains = [read_chain(p) for p in sorted((CORPUS / "honest").glob("chain_*.pottc"))]
    roundtrip = all(verify_opening(commit_transcript(c), c).ok for c in chains)
    mutations = accepted_mutations = 0
    aggregate_fakes = accepted_fakes = 0
    leaks = 0
    for c in chains:
        com = commit_transcript(c)
        for hop, r in enumerate(c.receipts):
            raw = encode_receipt(r)
            for pos in range(len(raw)):
                m = bytearray(raw)
                m[pos] ^= 0xFF
                mutations += 1
                try:
                    mr = decode_receipt(bytes(m))
                except DecodeError:
                    continue
                rs = list(c.receipts)
                rs[hop] = mr
                accepted_mutations += verify_opening(com, ReceiptChain(tuple(rs))).ok
        fakes = [
            dataclasses.replace(com, t_min_in=com.t_min_in.shifted(-1)),
            dataclasses.replace(com, t_min_in=com.t_min_in.shifted(1)),
            dataclasses.replace(com, t_max_out=com.t_max_out.shifted(1)),
            dataclasses.replace(com, t_max_out=com.t_max_out.shifted(-1)),
            dataclasses.replace(com, hop_count=com.hop_count + 1),
            dataclasses.replace(com, hop_count=com.hop_count - 1) if com.hop_count > 1 else None,
            dataclasses.replace(com, h_txpt=bytes([com.h_txpt[0] ^ 1]) + com.h_txpt[1:]),
        ]
        for f in filter(None, fakes):
            aggregate_fakes += 1
            accepted_fakes += verify_opening(f, c).ok
        blob = com.encode()
        leaks += sum(r.node in blob for r in c.receipts)
    ok = roundtrip and accepted_mutations == 0 and accepted_fakes == 0 and leaks == 0
    report(9, ok, f"roundtrip={roundtrip} byte_mutations={mutations} accepted={accepted_mutations} "
                  f"aggregate_fakes={aggregate_fakes} accepted={accepted_fakes} node_id_leaks={leaks}")


# 10 -----------------------------------------------------------------------

def test_criterion_10_determinism(report, tmp_path):
    runner = CliRunner()
    identical = True
    files = 0
    for name in sorted(bundled_scenarios()):
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        for d in (a, b):
            res = runner.invoke(main, ["simulate", str(SCENARIO_DIR / f"{name}.json"), str(d)])
            identical &= res.exit_code == 0
        names = sorted(p.name for p in a.iterdir())
        identical &= names == sorted(p.name for p in b.iterdir())
        identical &= all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
        identical &= names == sorted(p.name for p in (CORPUS / name).iterdir())
        identical &= all((a / n).read_bytes() == (CORPUS / name / n).read_bytes() for n in names)
        files += len(names)
    static_ok = all(all(label_matches(e[i], a[i]) for i in e)
                    for e, a in (evaluate_corpus(CORPUS / n) for n in sorted(bundled_scenarios())))
    report(10, identical and static_ok, f"files_compared={files} byte_identical={identical} "
                                        f"static_corpus_verifies={static_ok}")
