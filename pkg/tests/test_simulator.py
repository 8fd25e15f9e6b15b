import filecmp
import json
from pathlib import Path

import pytest

from pott.errors import ScenarioInvalid
from pott.receipt import decode_receipt, encode_receipt
from pott.simulator import (
    RECEIPT_WIRE_BYTES,
    Scenario,
    bundled_scenarios,
    evaluate,
    evaluate_corpus,
    label_matches,
    run_scenario,
    write_corpus,
)

CORPUS = Path(__file__).parent / "fixtures" / "corpus"
SCENARIOS = bundled_scenarios()


def base(**overrides):
    obj = {
        "name": "t",
        "seed": 5,
        "relays": [{"operator": "a", "domain": "Earth"}, {"operator": "b", "domain": "Earth"},
                   {"operator": "b", "domain": "Mars"}],
        "beacons": [{"id": "e", "domain": "Earth", "sigma_t": 1}, {"id": "m", "domain": "Mars", "sigma_t": 2}],
    }
    obj.update(overrides)
    return Scenario.from_json(obj)


def test_shipped_corpus_covers_required_cases():
    assert {"honest", "backdate", "truncate", "sybil", "nonce-reuse", "single-operator-no-beacon"} <= set(SCENARIOS)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_label_soundness_generated(name):
    out = run_scenario(SCENARIOS[name])
    actual = evaluate(out)
    for i, exp in out.expected.items():
        assert label_matches(exp, actual[i]), (name, i, exp, actual[i] and sorted(actual[i].flags))


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_label_soundness_static_files(name):
    expected, actual = evaluate_corpus(CORPUS / name)
    assert all(label_matches(expected[i], actual[i]) for i in expected)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_regenerated_corpus_matches_static_bytes(name, tmp_path):
    write_corpus(run_scenario(SCENARIOS[name]), tmp_path)
    static = sorted(p.name for p in (CORPUS / name).iterdir())
    assert sorted(p.name for p in tmp_path.iterdir()) == static
    match, mismatch, errors = filecmp.cmpfiles(CORPUS / name, tmp_path, static, shallow=False)
    assert not mismatch and not errors


def test_honest_scenario_is_compliant():
    out = run_scenario(SCENARIOS["honest"])
    assert all(e.compliant and e.assurance == "Full" for e in out.expected.values())


def test_honest_three_hop_two_operator_default_profile():
    out = run_scenario(base())
    assert out.expected[0].compliant
    assert evaluate(out)[0].verdict.compliant


def test_backdate_resigned_flags_owlt():
    out = run_scenario(SCENARIOS["backdate"])
    assert out.expected[0].flags == ("P5",)
    assert "P5" in evaluate(out)[0].flags
    assert {"R1", "R4"} <= set(out.expected[1].flags)


def test_truncate_flags_hop_minimum():
    out = run_scenario(SCENARIOS["truncate"])
    assert "P2" in out.expected[0].flags and len(out.chains[0]) == 2


def test_drop_yields_no_chain():
    out = run_scenario(SCENARIOS["drop"])
    assert out.chains[1] is None and not out.expected[1].delivered
    assert evaluate(out)[1] is None


def test_non_probative_case():
    out = run_scenario(SCENARIOS["single-operator-no-beacon"])
    assert out.expected[0].assurance == "NonProbative"


def test_honest_receipts_use_api_layout():
    out = run_scenario(SCENARIOS["honest"])
    for chain in out.chains:
        for r in chain:
            raw = encode_receipt(r)
            assert len(raw) == RECEIPT_WIRE_BYTES
            assert decode_receipt(raw) == r


def test_same_seed_same_bytes_different_seed_differs(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    write_corpus(run_scenario(base()), a)
    write_corpus(run_scenario(base()), b)
    write_corpus(run_scenario(base(seed=6)), c)
    names = sorted(p.name for p in a.iterdir())
    assert filecmp.cmpfiles(a, b, names, shallow=False)[1] == []
    assert filecmp.cmpfiles(a, c, names, shallow=False)[1] != []


def test_expected_json_shape(tmp_path):
    write_corpus(run_scenario(SCENARIOS["drop"]), tmp_path)
    labels = json.loads((tmp_path / "expected.json").read_text())
    assert labels["chains"]["1"]["delivered"] is False
    assert labels["chains"]["0"]["assurance"] == "Full"


def test_payload_kinds():
    for kind in ("BitcoinTx", "BitcoinHeader", "Bip157Filter", "Generic"):
        assert run_scenario(base(payload_kind=kind)).expected[0].compliant


def test_beacon_excursion_knob_breaks_anchor():
    out = run_scenario(base(beacon_excursion_seconds=-100_000))
    assert "P4" in out.expected[0].flags
    assert label_matches(out.expected[0], evaluate(out)[0])


@pytest.mark.parametrize("bad", [
    {"relays": []},
    {"seed": -1},
    {"seed": 2**64},
    {"paths": [[0, 5]]},
    {"paths": [[]]},
    {"adversary": [{"action": "Teleport"}]},
    {"adversary": [{"action": "Truncate", "after_hop": 3}]},
    {"adversary": [{"action": "Splice", "a": 0, "b": 0, "cut": 1}]},
    {"adversary": [{"action": "Backdate", "hop": 2, "seconds": -5}]},
    {"adversary": [{"action": "NonceReuse", "a": 0, "b": 0}]},
    {"jitter": {"model": "pareto"}},
    {"relays": [{"operator": "a", "domain": "Venus"}]},
])
def test_invalid_scenarios(bad):
    with pytest.raises(ScenarioInvalid):
        base(**bad)


def test_sybil_key_can_be_supplied():
    secret = "11" * 32
    out = run_scenario(base(adversary=[{"action": "SybilInsert", "hop": 1, "unlisted_key": secret}]))
    from pott.signing import RelayKeypair

    assert out.chains[0].receipts[1].node == RelayKeypair.from_secret(bytes.fromhex(secret)).public
    assert {"R1", "P7"} <= set(out.expected[0].flags)
