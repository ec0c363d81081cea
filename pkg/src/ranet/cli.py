"""Command-line entry point.

Exit codes: 0 success, 1 verification failure or violated simulation
invariant, 2 usage or configuration error. Diagnostics go to stderr with a
stable ``error:`` / ``rejected:`` / ``violation:`` prefix; stdout carries
only results so record streams stay machine-readable.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

import yaml

from . import ibsc, keyfile
from .bilinear import DecodeError, GroupParams, InvalidParamsError, default_params, load_params
from .planning import InvalidPlanError, plan_chain
from .scenario import Scenario, ScenarioError
from .selftest import run_selftest

DEFAULT_SEED = 1

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _params(args) -> GroupParams:
    return load_params(Path(args.params)) if args.params else default_params()


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_setup(args) -> int:
    master = ibsc.setup(_params(args), random.Random(args.seed))
    _write(args.out, keyfile.dump_master(master))
    return EXIT_OK


def cmd_extract(args) -> int:
    master = keyfile.load_master(keyfile.read(args.master))
    keys = ibsc.extract(master, args.id)
    _write(args.out, keyfile.dump_identity(keys, master.public))
    return EXIT_OK


def cmd_signcrypt(args) -> int:
    sender, master_public = keyfile.load_identity(keyfile.read(args.key))
    m = Path(args.input).read_bytes() if args.input != "-" else sys.stdin.buffer.read()
    sigma = ibsc.signcrypt(sender, args.to, m, master_public, random.Random(args.seed))
    _write(args.out, ibsc.pack_wire(sender.id, sigma).hex() + "\n")
    return EXIT_OK


def cmd_unsigncrypt(args) -> int:
    receiver, master_public = keyfile.load_identity(keyfile.read(args.key))
    text = Path(args.input).read_text() if args.input != "-" else sys.stdin.read()
    try:
        sender_id, sigma = ibsc.unpack_wire(master_public.params, bytes.fromhex(text.strip()))
    except (ValueError, DecodeError) as exc:
        print(f"rejected: MalformedSigma ({exc})", file=sys.stderr)
        return EXIT_REJECTED
    if args.sender is not None and args.sender.encode() != sender_id:
        print(f"rejected: sender {sender_id!r} is not {args.sender!r}", file=sys.stderr)
        return EXIT_REJECTED
    result = ibsc.unsigncrypt(receiver, sender_id, sigma, master_public)
    if not result.ok:
        print(f"rejected: {result.rejection.value}", file=sys.stderr)
        return EXIT_REJECTED
    if args.out in (None, "-"):
        sys.stdout.buffer.write(result.plaintext)
        sys.stdout.flush()
    else:
        Path(args.out).write_bytes(result.plaintext)
    return EXIT_OK


def cmd_plan(args) -> int:
    plan = plan_chain(args.distance, args.range)
    if args.output == "records":
        print(json.dumps({"distance": plan.target_distance, "range": plan.radio_range,
                          "nodes": plan.node_count, "positions": list(plan.node_positions)}, sort_keys=True))
    else:
        print(f"nodes: {plan.node_count}")
        print("positions: " + ", ".join(f"{p:g}" for p in plan.node_positions))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = Scenario.load(args.scenario)
    seed = scenario.seed if args.seed_given is None else args.seed_given
    print(f"seed: {seed}", file=sys.stderr)
    report = scenario.run(seed)
    if args.output == "records":
        sys.stdout.write(report.to_jsonl())
    else:
        for r in report.records:
            if r["event"] == "Pose":
                continue
            print(f"{r['time']:>8} ms  {r['event']:<8} {r['sender']} -> {r['receiver']}  hops={r['hops']}  {r['outcome']}")
        print(f"delivered={report.deliveries} drops={report.drops} "
              f"verify_failures={report.verification_failures} relay_leaks={report.relay_leaks}")
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_REJECTED if report.violations else EXIT_OK


def cmd_selftest(args) -> int:
    failed = 0
    for name, ok in run_selftest(_params(args)):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += not ok
    return EXIT_REJECTED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ranet", description="Identity-based signcryption tools and robot-chain simulator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default {DEFAULT_SEED}; simulate defaults to the scenario's)")
    common.add_argument("--params", help="group parameter file (key = value lines); default q=101, p=607")
    common.add_argument("--output", choices=("human", "records"), default="human")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="generate base-station master keys")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("extract", parents=[common], help="derive an identity key pair")
    p.add_argument("--master", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("signcrypt", parents=[common], help="signcrypt a file for a receiver identity")
    p.add_argument("--key", required=True, help="sender identity key file")
    p.add_argument("--to", required=True, help="receiver identity")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_signcrypt)

    p = sub.add_parser("unsigncrypt", parents=[common], help="verify and decrypt a hex signcryptext")
    p.add_argument("--key", required=True, help="receiver identity key file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--from", dest="sender", help="expected sender identity")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_unsigncrypt)

    p = sub.add_parser("plan", parents=[common], help="size a relay chain")
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--range", type=float, default=100.0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="run a YAML scenario")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", parents=[common], help="exhaustive algebra checks at desk scale")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s", stream=sys.stderr)
    args.seed_given = args.seed
    if args.seed is None:
        args.seed = DEFAULT_SEED
    if args.command != "simulate":
        print(f"seed: {args.seed}", file=sys.stderr)
    try:
        return args.func(args)
    except (InvalidParamsError, InvalidPlanError, ScenarioError, keyfile.KeyFileError,
            ibsc.InvalidIdentityError, ibsc.InvalidMessageError, yaml.YAMLError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
