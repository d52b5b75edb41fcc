"""Command-line entry point.

    qndspin run --scenario NAME [--config PATH] [--trials N] [--seed S]
                [--out DIR] [--verify MANIFEST] [--threads K]

Exit codes: 0 success, 2 configuration/validation error, 3 runtime or
fit error, 4 reproducibility mismatch under --verify.  --threads changes
wall time only; results are bitwise independent of it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import tempfile
from pathlib import Path

from .config import ConfigError, load_and_validate
from .scenarios import SCENARIO_NAMES, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VERIFY = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qndspin",
        description="Desk-scale QND spin-squeezing simulation scenarios",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a named scenario")
    run.add_argument("--config", type=Path, default=None,
                     help="JSON config; omitted keys fall back to defaults")
    run.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    run.add_argument("--trials", type=int, default=None,
                     help="override n_trials from the config")
    run.add_argument("--seed", type=int, default=None,
                     help="override master_seed from the config")
    run.add_argument("--out", type=Path, default=None,
                     help="output directory (default from config)")
    run.add_argument("--verify", type=Path, default=None, metavar="MANIFEST",
                     help="re-run and compare output hashes against a manifest")
    run.add_argument("--threads", type=int, default=1)
    return parser


def _verify(manifest_path: Path, args) -> int:
    try:
        recorded = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        print(f"error: cannot read manifest: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_and_validate(args.config)
    except ConfigError as err:
        for v in err.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    if recorded.get("config_hash") != cfg.config_hash():
        print("verify: configuration hash differs from the manifest",
              file=sys.stderr)
        return EXIT_VERIFY
    with tempfile.TemporaryDirectory() as tmp:
        try:
            run_scenario(
                recorded["scenario"], cfg, Path(tmp),
                n_trials=recorded.get("n_trials") or None,
                seed=recorded.get("seed"),
                threads=args.threads,
            )
        except Exception as err:  # noqa: BLE001 - reported as exit code
            print(f"runtime error during verify: {err}", file=sys.stderr)
            return EXIT_RUNTIME
        for name, digest in recorded.get("outputs", {}).items():
            if name == "resolved_config.json":
                continue
            candidate = Path(tmp) / name
            if not candidate.exists():
                print(f"verify: missing output {name}", file=sys.stderr)
                return EXIT_VERIFY
            fresh = hashlib.sha256(candidate.read_bytes()).hexdigest()
            if fresh != digest:
                print(f"verify: {name} differs from the manifest",
                      file=sys.stderr)
                return EXIT_VERIFY
    print("verify: outputs reproduce byte-identically")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verify is not None:
        return _verify(args.verify, args)

    try:
        cfg = load_and_validate(args.config)
    except ConfigError as err:
        for v in err.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG

    if args.trials is not None and args.trials < 2:
        print("config error: n_trials: must be >= 2", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or Path(cfg.output_dir)
    try:
        artifact, manifest = run_scenario(
            args.scenario, cfg, out_dir,
            n_trials=args.trials, seed=args.seed, threads=args.threads,
        )
    except (ValueError, RuntimeError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {artifact}")
    print(f"manifest {manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
