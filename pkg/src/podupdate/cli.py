"""``podupdate`` command line: run, suite, bench, keygen-demo.

Exit codes: 0 when every outcome matches its expectation, 1 on a mismatch,
2 on bad input (config, policy grammar).  On failure the last stdout line is
a JSON object with a ``reason`` key.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, PolicyError
from .protocol_actors import ADVERSARIES
from .runner import (
    bench_sign,
    format_bench,
    keygen_demo,
    load_config,
    run_scenario,
    run_suite,
    verify_vectors,
)


def _fail(reason: str, code: int, **extra) -> int:
    print(json.dumps({"status": "error", "reason": reason, **extra}, sort_keys=True))
    return code


def _cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed, adversary=args.adversary)
    report = run_scenario(cfg)
    if args.out:
        report.write(args.out)
    if args.json:
        print(report.to_json())
    else:
        print(f"seed {cfg.seed}  adversary {cfg.adversary}  devices {cfg.devices}")
        for d in report.deliveries:
            status = d["claim_reason"] or d["aborted"] or "ok"
            print(f"  {d['device_id']:<10} via {d['node']:<8} paid {d['paid']:>4}  "
                  f"delivered {str(d['delivered']):<5}  {status}")
        print(f"refund {report.refund}  payouts {report.payouts}  conserved {report.conserved}")
        print(f"outcome {report.outcome} (expected {report.expected})")
    if not report.matches:
        return _fail("outcome-mismatch", 1, outcome=report.outcome, expected=report.expected)
    return 0


def _cmd_suite(args) -> int:
    base = load_config(args.config)
    reports = run_suite(range(args.first_seed, args.first_seed + args.seeds), base)
    bad = [r for r in reports if not r.matches]
    print(f"{'adversary':<24}{'seed':>6}  {'outcome':<22}{'refund':>7}")
    for r in reports:
        mark = "" if r.matches else "  MISMATCH"
        print(f"{r.config['adversary']:<24}{r.config['seed']:>6}  {r.outcome:<22}{r.refund:>7}{mark}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite.jsonl").write_text("".join(
            json.dumps({"adversary": r.config["adversary"], "seed": r.config["seed"],
                        "outcome": r.outcome, "expected": r.expected, "refund": r.refund,
                        "state_digest": r.state_digest}, sort_keys=True) + "\n"
            for r in reports))
    print(f"{len(reports) - len(bad)}/{len(reports)} runs match")
    if bad:
        return _fail("outcome-mismatch", 1, mismatches=len(bad))
    return 0


def _cmd_bench(args) -> int:
    try:
        counts = [int(c) for c in args.counts.split(",")]
    except ValueError:
        raise ConfigError("counts", f"expected comma-separated integers, got {args.counts!r}") from None
    rows = bench_sign(counts, args.iterations, args.seed if args.seed is not None else 0)
    print(format_bench(rows))
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
    sign = [r["mean_ms"] for r in rows if r["name"].startswith("oabs-sign")]
    if any(b <= a for a, b in zip(sign, sign[1:])):
        return _fail("sign-time-not-increasing", 1)
    return 0


def _cmd_keygen_demo(args) -> int:
    if args.verify:
        vectors = json.loads(Path(args.verify).read_text())
        ok = verify_vectors(vectors)
        print("vectors verify" if ok else "vectors do NOT verify")
        return 0 if ok else _fail("vectors-rejected", 1)
    if not args.policy:
        raise ConfigError("policy", "give a policy formula or --verify FILE")
    vectors = keygen_demo(args.policy, seed=args.seed if args.seed is not None else 0)
    print(f"policy: {vectors['policy']}")
    print(f"rows:   {len(vectors['matrix'])}")
    for label, row in zip(vectors["rho"], vectors["matrix"]):
        print(f"  {label:<16} {row}")
    for key in ("access_structure", "outsourcing_key", "signing_key", "signature"):
        print(f"{key}: {len(vectors[key]) // 2} bytes")
    if args.out:
        Path(args.out).write_text(json.dumps(vectors, indent=2, sort_keys=True) + "\n")
        print(f"written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="podupdate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one end-to-end scenario")
    run.add_argument("--config")
    run.add_argument("--seed", type=int)
    run.add_argument("--adversary", choices=ADVERSARIES)
    run.add_argument("--out", help="directory for report.json, events.jsonl, trace.jsonl")
    run.add_argument("--json", action="store_true", help="print the deterministic report")
    run.set_defaults(func=_cmd_run)

    suite = sub.add_parser("suite", help="every adversary across a range of seeds")
    suite.add_argument("--config")
    suite.add_argument("--seeds", type=int, default=5)
    suite.add_argument("--first-seed", type=int, default=0)
    suite.add_argument("--out")
    suite.set_defaults(func=_cmd_suite)

    bench = sub.add_parser("bench", help="signing and primitive timings")
    bench.add_argument("--counts", default="10,20,50")
    bench.add_argument("--iterations", type=int, default=30)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", help="JSON file for the timing rows")
    bench.set_defaults(func=_cmd_bench)

    demo = sub.add_parser("keygen-demo", help="key material and test vectors for a policy")
    demo.add_argument("policy", nargs="?")
    demo.add_argument("--seed", type=int)
    demo.add_argument("--out", help="JSON vector file")
    demo.add_argument("--verify", metavar="FILE", help="re-check a vector file")
    demo.set_defaults(func=_cmd_keygen_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _fail("config", 2, field=exc.field)
    except PolicyError as exc:
        print(f"policy error: {exc}", file=sys.stderr)
        return _fail("policy", 2)


if __name__ == "__main__":
    sys.exit(main())
