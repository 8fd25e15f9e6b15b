"""``pott`` command line.

Every command prints JSON lines (``--format json``, the default) or short
human-readable text, and exits 0 on success, 1 on a verification or policy
failure, 2 on a usage error and 3 on unreadable or malformed input.
"""

from __future__ import annotations

import functools
import json
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import latency
from .anchor import (
    MTP_SPAN,
    MtpParams,
    arrived_before_expiry,
    dispute_bundle,
    median_time_past,
    mtp_drift_bound,
    read_headers,
)
from .errors import DecodeError, EmptyChain, EmptyInput, ManifestSignatureInvalid, ManifestStale, PottError, ScenarioInvalid
from .policy import PolicyProfile, check_high_stakes, check_profile, load_manifest
from .privacy import TranscriptCommitment, commit_transcript, verify_opening
from .receipt import read_chain
from .signing import RelayKeypair, write_keypair
from .simulator import Scenario, evaluate, label_matches, run_scenario, write_corpus
from .timebase import LeapSecondTable, OwltEnvelope, load_beacons
from .verifier import verify_structure

OK, FAIL, USAGE, IO_ERROR = 0, 1, 2, 3


class Reporter:
    def __init__(self, fmt: str):
        self.fmt = fmt

    def emit(self, obj: dict, text: str | None = None) -> None:
        if self.fmt == "json":
            click.echo(json.dumps(obj, sort_keys=True))
        else:
            click.echo(text if text is not None else _as_text(obj))


def _as_text(obj: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in obj.items())


def format_option(f):
    return click.option(
        "--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True,
        help="Report format.",
    )(f)


def command(f):
    """Map library errors onto exit codes and report them in the chosen format."""

    @functools.wraps(f)
    def wrapper(*args, fmt: str, **kwargs):
        out = Reporter(fmt)
        try:
            code = f(out, *args, **kwargs)
        except ScenarioInvalid as exc:
            out.emit({"error": "ScenarioInvalid", "detail": str(exc)})
            code = USAGE
        except (ManifestSignatureInvalid, ManifestStale) as exc:
            out.emit({"error": type(exc).__name__, "detail": str(exc)})
            code = FAIL
        except FileExistsError as exc:
            out.emit({"error": "FileExists", "detail": str(exc)})
            code = IO_ERROR
        except (OSError, DecodeError, EmptyChain, EmptyInput, PottError, ValueError) as exc:
            out.emit({"error": type(exc).__name__, "detail": str(exc)})
            code = IO_ERROR
        sys.exit(code)

    return format_option(wrapper)


@click.group()
def main():
    """Proof-of-transit timestamping tools."""


@main.command()
@click.argument("out_path", type=click.Path(dir_okay=False))
@command
def keygen(out: Reporter, out_path: str) -> int:
    """Write a fresh relay secret to OUT_PATH and its x-only public key to OUT_PATH.pub."""
    key = RelayKeypair.generate()
    secret_path, public_path = write_keypair(key, out_path)
    out.emit(
        {"command": "keygen", "public": key.public.hex(), "secret_path": str(secret_path), "public_path": str(public_path)},
        f"public key {key.public.hex()} written to {public_path}",
    )
    return OK


@main.command()
@click.argument("chain_path", type=click.Path(dir_okay=False))
@click.argument("manifest_path", type=click.Path(dir_okay=False))
@click.argument("profile_path", type=click.Path(dir_okay=False))
@click.argument("envelope_path", type=click.Path(dir_okay=False))
@click.argument("beacons_path", type=click.Path(dir_okay=False))
@click.argument("extra_chains", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--high-stakes", is_flag=True, help="Also require path-diverse compliant chains.")
@click.option("--now", type=int, default=None, help="Current Unix time for the manifest TTL check.")
@click.option("--trusted-signer", multiple=True, help="Hex governance key allowed to sign the manifest.")
@command
def verify(out, chain_path, manifest_path, profile_path, envelope_path, beacons_path, extra_chains,
           high_stakes, now, trusted_signer) -> int:
    """Verify CHAIN_PATH (and any EXTRA_CHAINS) against a manifest and policy profile."""
    trusted = [bytes.fromhex(k) for k in trusted_signer] or None
    manifest = load_manifest(Path(manifest_path).read_bytes(), now=now, trusted_signers=trusted)
    profile = PolicyProfile.load(profile_path)
    env = OwltEnvelope.load(envelope_path)
    beacons = load_beacons(beacons_path)
    paths = [chain_path, *extra_chains]
    chains = [read_chain(p) for p in paths]
    code = OK
    results = []
    for i, (path, chain) in enumerate(zip(paths, chains)):
        report = verify_structure(chain, manifest.active_nodes)
        peers = [c for j, c in enumerate(chains) if j != i]
        verdict = check_profile(report, chain, manifest, profile, env, beacons, peers)
        results.append((chain, verdict))
        if not verdict.compliant:
            code = FAIL
        findings = [f"{f.rule} hop {f.hop}: {f.detail}" for f in report.failures]
        findings += [f"{v.check}: {v.detail}" for v in verdict.violations]
        text = f"{path}: {'compliant' if verdict.compliant else 'NOT compliant'} ({verdict.assurance.value})"
        if findings:
            text += "\n  " + "\n  ".join(findings)
        out.emit({"chain": path, "structural": report.to_json(), "policy": verdict.to_json()}, text)
    if high_stakes:
        satisfied = check_high_stakes(results, manifest, profile.high_stakes_min_diverse_chains)
        compliant = sum(v.compliant for _, v in results)
        note = "" if satisfied else (
            f"need {profile.high_stakes_min_diverse_chains} compliant chains with disjoint operators; "
            f"have {compliant} compliant of {len(results)} (one chain may serve routine settlement only)"
        )
        out.emit(
            {"high_stakes": satisfied, "chains": len(results), "compliant": compliant, "note": note},
            f"high-stakes: {'satisfied' if satisfied else 'NOT satisfied'} {note}".rstrip(),
        )
        if not satisfied:
            code = FAIL
    return code


@main.command()
@click.argument("chain_path", type=click.Path(dir_okay=False))
@click.argument("headers_path", type=click.Path(dir_okay=False))
@click.option("--h-expiry", type=int, required=True, help="Expiry height of the contract.")
@click.option("--delta", type=int, default=None, help="Safety allowance delta in seconds (default J + 2 sigma).")
@click.option("--delta-mtp", type=int, default=3600, show_default=True, help="MTP tolerance in seconds.")
@click.option("--kappa", type=int, default=0, show_default=True, help="Confirmation margin in blocks.")
@click.option("--jitter", "jitter_min", type=float, default=60, show_default=True, help="J in minutes.")
@click.option("--sigma", type=int, default=60, show_default=True, help="Clock uncertainty in seconds.")
@click.option("--start-height", type=int, default=None, help="Height of the first header (else HEADERS.height sidecar).")
@click.option("--leap-seconds", type=click.Path(dir_okay=False), default=None, help="Leap-second table file.")
@click.option("--bundle", "bundle_path", type=click.Path(dir_okay=False), default=None, help="Write the dispute bundle here.")
@command
def adjudicate(out, chain_path, headers_path, h_expiry, delta, delta_mtp, kappa, jitter_min, sigma,
               start_height, leap_seconds, bundle_path) -> int:
    """Decide whether CHAIN_PATH arrived before expiry, using the MTP of HEADERS_PATH."""
    chain = read_chain(chain_path)
    headers = read_headers(headers_path, start_height)
    if not headers:
        raise EmptyInput("headers file is empty")
    report = verify_structure(chain, {r.node for r in chain.receipts})
    if not report.structural_ok:
        out.emit({"decision": None, "structural": report.to_json()}, "chain failed structural verification")
        return FAIL
    table = LeapSecondTable.load(leap_seconds) if leap_seconds else LeapSecondTable.bundled()
    J_s = int(Fraction(str(jitter_min)) * 60)
    if delta is None:
        params = MtpParams.from_policy(J_s, sigma, h_expiry, delta_mtp_seconds=delta_mtp, kappa_blocks=kappa)
    else:
        params = MtpParams(delta, h_expiry, delta_mtp, kappa)
    tip = headers[-1]
    tip_mtp = median_time_past(headers)
    t_star = chain.last.t_out
    decision = arrived_before_expiry(t_star, tip, tip_mtp, params, table)
    window = headers[-params.mtp_window_blocks:]
    drift = mtp_drift_bound(window) if len(window) >= MTP_SPAN else None
    bundle = dispute_bundle(chain, decision, t_star, params, drift)
    if bundle_path:
        Path(bundle_path).write_bytes(bundle)
    out.emit(
        {
            "decision": decision.decision.value,
            "rationale": decision.rationale,
            "t_star_tai": t_star.seconds,
            "t_star_utc": decision.t_star_utc,
            "mtp": tip_mtp,
            "tip_height": tip.height,
            "delta_s": params.delta_seconds,
            "delta_mtp_s": params.delta_mtp_seconds,
            "window_range": [drift.first_height, drift.last_height] if drift else None,
            "drift_bound_s": drift.bound_seconds if drift else None,
            "bundle": bundle_path if bundle_path else bundle.hex(),
        },
        f"{decision.decision.value}: {decision.rationale}",
    )
    return OK if decision.accepted else FAIL


@main.command()
@click.option("--owlt", type=float, default=None, help="One-way light time in minutes.")
@click.option("--jitter", type=float, default=None, help="J in minutes.")
@click.option("--base", type=int, default=144, show_default=True, help="B_base in blocks.")
@click.option("--mop", type=int, default=2, show_default=True, help="Operational margin in blocks.")
@click.option("--btarget", type=float, default=10, show_default=True, help="Block target in minutes.")
@click.option("--table", is_flag=True, help="Emit the step table for J in {0, 30, 60} minutes.")
@click.option("--owlt-max", type=float, default=22, show_default=True, help="Table OWLT upper bound in minutes.")
@click.option("--step", type=float, default=0.1, show_default=True, help="Table OWLT resolution in minutes.")
@command
def cltv(out, owlt, jitter, base, mop, btarget, table, owlt_max, step) -> int:
    """CLTV margin Delta = ceil((2 OWLT + J) / b_target) and the total timelock."""
    if table:
        rows = latency.cltv_step_table((0, 30, 60), owlt_max, step, btarget)
        if out.fmt == "text":
            click.echo(latency.step_table_csv(rows), nl=False)
        else:
            for o, j, d in rows:
                out.emit({"owlt_min": float(o), "J": float(j), "delta_blocks": d})
        return OK
    if owlt is None or jitter is None:
        raise click.UsageError("--owlt and --jitter are required unless --table is given")
    inputs = latency.TimelockInputs(owlt, jitter, btarget, base, mop)
    delta = latency.cltv_extra_blocks(inputs)
    total = latency.cltv_total_blocks(inputs)
    out.emit(
        {"delta_blocks": delta, "total_blocks": total, "owlt_min": owlt, "J_min": jitter,
         "base_blocks": base, "mop_blocks": mop, "btarget_min": btarget},
        f"delta={delta} total={total}",
    )
    return OK


@main.command()
@click.option("--blocks-per-year", type=int, default=52560, show_default=True)
@click.option("--bytes-per-block", type=float, required=True)
@command
def budget(out, blocks_per_year, bytes_per_block) -> int:
    """Sustained header-relay link budget over a 365-day year."""
    per_year, bps = latency.link_budget(blocks_per_year, bytes_per_block)
    text = f"{latency.format_bytes(per_year)}/yr, {float(bps):.3g} bps"
    out.emit({"bytes_per_year": float(per_year), "bps": float(bps), "summary": text}, text)
    return OK


@main.command()
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@command
def simulate(out, scenario_path, out_dir) -> int:
    """Run a scenario and write its fixture corpus to OUT_DIR."""
    scenario = Scenario.load(scenario_path)
    sim = run_scenario(scenario)
    files = write_corpus(sim, out_dir)
    actual = evaluate(sim)
    for i, exp in sorted(sim.expected.items()):
        a = actual[i]
        out.emit(
            {
                "chain": i,
                "expected": exp.to_json(),
                "matches": label_matches(exp, a),
                "actual": None if a is None else {"flags": sorted(a.flags), **a.verdict.to_json()},
            },
            f"chain {i}: {exp.note}; expected "
            + ("not delivered" if not exp.delivered else f"{exp.assurance} {','.join(exp.flags) or 'no flags'}"),
        )
    out.emit({"scenario": scenario.name, "files": [p.name for p in files]}, f"wrote {len(files)} files to {out_dir}")
    return OK


@main.command()
@click.argument("chain_path", type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write the .pottp commitment here.")
@command
def commit(out, chain_path, out_path) -> int:
    """Commit to the full receipt transcript of CHAIN_PATH."""
    c = commit_transcript(read_chain(chain_path))
    if out_path:
        c.write(out_path)
    out.emit(
        {"h_txpt": c.h_txpt.hex(), "t_min_in": c.t_min_in.seconds, "t_max_out": c.t_max_out.seconds,
         "hop_count": c.hop_count, "commitment": out_path if out_path else c.encode().hex()},
        f"h_txpt={c.h_txpt.hex()} hops={c.hop_count}",
    )
    return OK


@main.command(name="open")
@click.argument("commitment_path", type=click.Path(dir_okay=False))
@click.argument("chain_path", type=click.Path(dir_okay=False))
@click.option("--manifest", "manifest_path", type=click.Path(dir_okay=False), default=None,
              help="Check relay keys against this manifest's active nodes.")
@command
def open_(out, commitment_path, chain_path, manifest_path) -> int:
    """Open COMMITMENT_PATH against the revealed CHAIN_PATH."""
    commitment = TranscriptCommitment.read(commitment_path)
    chain = read_chain(chain_path)
    allow = load_manifest(Path(manifest_path).read_bytes()).active_nodes if manifest_path else None
    result = verify_opening(commitment, chain, allow)
    out.emit(
        {"ok": result.ok, "violations": list(result.violations)},
        "opening ok" if result.ok else "opening FAILED\n  " + "\n  ".join(result.violations),
    )
    return OK if result.ok else FAIL


if __name__ == "__main__":  # pragma: no cover
    main()
