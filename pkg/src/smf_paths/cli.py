"""``smf-paths`` command line.

Exit codes: 0 pass, 1 invariant violation, 2 invalid spec, 3 resource guard.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from smf_paths import harness
from smf_paths.errors import InvalidArgument, ResourceLimit

log = logging.getLogger("smf_paths")

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID, EXIT_RESOURCE = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()] if text.strip() else []


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()] if text.strip() else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smf-paths", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in harness.COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with ExperimentSpec fields; flags override it")
        p.add_argument("--n", type=int)
        p.add_argument("--eta", type=float)
        p.add_argument("--lam", type=float)
        p.add_argument("--lambdas", type=_floats, help="comma-separated lambda grid")
        p.add_argument("--length", type=int)
        p.add_argument("--C", type=float)
        p.add_argument("--a-k-C", dest="a_k_C", type=float)
        p.add_argument("--zeta1", type=float)
        p.add_argument("--zeta2", type=float)
        p.add_argument("--nu", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--seeds", type=_ints, help="explicit comma-separated seeds")
        p.add_argument("--base-seed", dest="base_seed", type=int)
        p.add_argument("--seed-count", dest="seed_count", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--mode", choices=["exhaustive", "sampled"])
        p.add_argument("--anchors", type=int)
        p.add_argument("--per-anchor", dest="per_anchor", type=int)
        p.add_argument("--totals", type=_ints)
        p.add_argument("--blocks", type=_ints)
        p.add_argument("--a-k-Cs", dest="a_k_Cs", type=_floats)
        p.add_argument("--eta-primes", dest="eta_primes", type=_floats)
        p.add_argument("--slack", type=float)
        p.add_argument("--oracle-max-n", dest="oracle_max_n", type=int)
        p.add_argument("--output", "-o")
        p.add_argument("--workers", type=int, help=f"default from ${harness.WORKERS_ENV} or 1")
        if name == "verify-bounds":
            p.add_argument("--corrupt-bound-factor", dest="corrupt", type=float, default=1.0,
                           help=argparse.SUPPRESS)
    return parser


def spec_from_args(args: argparse.Namespace) -> harness.ExperimentSpec:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    skip = {"config", "corrupt"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            data[key] = value
    return harness.ExperimentSpec.from_mapping(data)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args: argparse.Namespace) -> int:
    spec = spec_from_args(args)
    cmd = spec.command
    if cmd == "oracle-sweep":
        header, rows = harness.cmd_oracle_sweep(spec)
        _emit(harness.render_csv(header, rows, spec), spec.output)
        return EXIT_VIOLATION if harness.sweep_monotone_violations(rows) else EXIT_OK
    if cmd == "light-count":
        header, rows = harness.cmd_light_count(spec)
        _emit(harness.render_csv(header, rows, spec), spec.output)
        return EXIT_OK
    if cmd == "verify-bounds":
        report = harness.cmd_verify_bounds(spec, corrupt=args.corrupt)
        _emit(harness.render_json(report, spec), spec.output)
        return EXIT_OK if report["pass"] else EXIT_VIOLATION
    if cmd == "bridge-pipeline":
        report = harness.cmd_bridge_pipeline(spec)
        _emit(harness.render_json(report, spec), spec.output)
        return EXIT_OK if report["pass"] else EXIT_VIOLATION
    header, rows = harness.cmd_downcross_study(spec)
    _emit(harness.render_csv(header, rows, spec), spec.output)
    for row in rows:
        if row[0] == "domination" and "unobservable" in row[-1]:
            log.warning("a_k_C=%s: A_k events essentially never occur at this scale", row[3])
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ResourceLimit as exc:
        log.error("resource guard: %s", exc)
        return EXIT_RESOURCE
    except (InvalidArgument, TypeError, ValueError) as exc:
        log.error("invalid spec: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
