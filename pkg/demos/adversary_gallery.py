"""Run every bundled scenario and compare the verifier's verdicts with the labels.

Each scenario is a seeded JSON description of relays, paths, beacons and an
adversary action. The simulator derives the expected verdict from what it did
to the chain; the verifier only sees bytes. A mismatch would print MISMATCH.
"""

from pott.simulator import bundled_scenarios, evaluate, label_matches, run_scenario

for name, scenario in sorted(bundled_scenarios().items()):
    out = run_scenario(scenario)
    actual = evaluate(out)
    print(f"{name}  (seed {scenario.seed}, actions: {', '.join(a.kind for a in scenario.adversary) or 'none'})")
    for i, expected in sorted(out.expected.items()):
        got = actual[i]
        if got is None:
            summary = "not delivered"
        else:
            flags = ",".join(sorted(got.flags)) or "-"
            summary = f"{got.verdict.assurance.value:<12} compliant={got.verdict.compliant!s:<5} flags={flags}"
        status = "ok" if label_matches(expected, got) else "MISMATCH"
        print(f"  chain {i}: {summary}  [{status}] {expected.note}")
