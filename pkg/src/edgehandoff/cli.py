"""Command-line front end.

    edgehandoff run <scenario> [--mode migration|baseline] [--seed N] [--out DIR]
    edgehandoff compare <scenario> [--out DIR]
    edgehandoff validate <scenario>

Exit status: 0 clean, 2 an invariant checker fired, 3 the scenario is invalid.
The output directory is --out if given, else $EDGEHANDOFF_OUT, else ./out.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ScenarioInvalid
from .scenario import load_scenario
from .simnet import RunResult, compare_modes, run

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_INVALID = 3
OUT_ENV = "EDGEHANDOFF_OUT"


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or "out")


def write_run(result: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "transcript.txt").write_text(result.transcript_text, encoding="utf-8")
    (out / "metrics.jsonl").write_text(result.metrics.to_jsonl(), encoding="utf-8")
    (out / "registry.tsv").write_text(result.world.ns.registry.dump(), encoding="utf-8")


def _report_violations(label: str, result: RunResult) -> bool:
    for v in result.violations:
        print(f"invariant violated ({label}): {v}", file=sys.stderr)
    return bool(result.violations)


def cmd_run(args) -> int:
    spec = load_scenario(args.scenario)
    if args.mode:
        spec = spec.with_mode(args.mode)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    result = run(spec)
    out = _out_dir(args.out)
    write_run(result, out)
    s = result.metrics.summary
    print(f"mode {s['mode']} seed {s['seed']}: {s['events']} events, {s['frames_sent']} frames, "
          f"energy_proxy total {s['energy_proxy_total']:.2f} (nodes {s['energy_proxy_nodes']:.2f})")
    print(f"wrote {out / 'transcript.txt'} and {out / 'metrics.jsonl'}")
    return EXIT_INVARIANT if _report_violations(s["mode"], result) else EXIT_OK


def cmd_compare(args) -> int:
    spec = load_scenario(args.scenario)
    report, mig, base = compare_modes(spec)
    out = _out_dir(args.out)
    write_run(mig, out / "migration")
    write_run(base, out / "baseline")
    text = "\n".join(report.lines) + "\n"
    (out / "compare.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    bad = _report_violations("migration", mig) | _report_violations("baseline", base)
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_validate(args) -> int:
    spec = load_scenario(args.scenario)
    print(f"{args.scenario}: ok ({len(spec.edges)} edges, {len(spec.nodes)} nodes, "
          f"{len(spec.adversary)} adversary actions, mode {spec.mode})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgehandoff", description="Edge handoff protocol simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("scenario")
    r.add_argument("--mode", choices=["migration", "baseline"])
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run migration and baseline with one seed and compare")
    c.add_argument("scenario")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be in [0, 2**64)", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ScenarioInvalid as exc:
        for line in exc.diagnostics or [str(exc)]:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
