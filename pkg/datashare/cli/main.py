"""
Command line entry point: datashare mech|mpc|puzzle|scenario.

Exit codes: 0 success, 1 infeasible or violated verdict, 2 usage or
input error, 3 internal error.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import sentry_sdk
from pydantic import ValidationError

from datashare.cli.scenarios import SCENARIOS, scenario_run
from datashare.config import config
from datashare.delay.service import dummy_verdict, run_dummy_delay, run_timelock_delay
from datashare.errors import DataShareError, InvalidInputError, ParameterError
from datashare.logging import configure_logger
from datashare.mechanism.models import FasInstance
from datashare.mechanism.service import (
    brute_force_equilibrium,
    decide_nsq,
    fas_to_instance,
    min_feedback_arc_weight,
    solve,
)
from datashare.mechanism.sweep import agreement_sweep
from datashare.model.models import Instance, LearningCharge
from datashare.ordered.models import OrderedSpec, ThresholdMode
from datashare.ordered.service import ordered_verdict, run_ordered
from datashare.simnet.models import AdversaryConfig, SimConfig, canonical_json
from datashare.timed.models import PuzzleScheme, TimeLinePuzzle, TimeLockPuzzle
from datashare.timed.service import complete_unlock, lock, lock_bytes, lock_line, solve_line
from datashare.utils.randomness import substream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main can map the exit code."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def load_json(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidInputError(f"Cannot read {path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e


def int_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{value}'") from e


def str_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_param(value: str) -> tuple[str, Any]:
    key, sep, raw = value.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got '{value}'")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def hex_value(value: str) -> str:
    value = value.removeprefix("0x")
    if not value:
        raise argparse.ArgumentTypeError("empty hex value")
    try:
        bytes.fromhex(value if len(value) % 2 == 0 else "0" + value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"'{value}' is not hex") from e
    return value


# mech


def _charge(args: argparse.Namespace) -> LearningCharge:
    return LearningCharge(args.charge)


def mech_solve(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    instance = Instance.model_validate(load_json(args.instance))
    verdict = solve(instance, _charge(args))
    return verdict.to_json_dict(), EXIT_OK if verdict.feasible else EXIT_VERDICT


def mech_brute(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    if args.sweep is not None:
        report = agreement_sweep(args.sweep, args.seed, args.max_n, _charge(args))
        return report.model_dump(), EXIT_VERDICT if report.disagreements else EXIT_OK
    if args.instance is None:
        raise UsageError("mech brute needs an instance file or --sweep N")
    instance = Instance.model_validate(load_json(args.instance))
    outcome = brute_force_equilibrium(instance, _charge(args))
    if outcome is None:
        return {"feasible": False}, EXIT_VERDICT
    return {"feasible": True, **outcome.to_json_dict()}, EXIT_OK


def mech_nsq(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    instance = Instance.model_validate(load_json(args.instance))
    decision = decide_nsq(instance, _charge(args))
    return decision.model_dump(), EXIT_OK if decision.feasible else EXIT_VERDICT


def mech_fas(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    fas = FasInstance.model_validate({**load_json(args.graph), "gamma": args.gamma})
    decision = decide_nsq(fas_to_instance(fas), LearningCharge.FULL)
    weight, ordering = min_feedback_arc_weight(fas)
    data = {
        **decision.model_dump(),
        "gamma": fas.gamma,
        "min_weight": weight,
        "min_ordering": list(ordering),
    }
    return data, EXIT_OK if decision.feasible else EXIT_VERDICT


# mpc


def _ordered_inputs(args: argparse.Namespace) -> tuple[OrderedSpec, tuple[int, ...], SimConfig]:
    data = load_json(args.spec)
    if not isinstance(data, dict):
        raise InvalidInputError(f"{args.spec} must hold a JSON object")
    if args.mode is not None:
        data["mode"] = args.mode
    spec = OrderedSpec.model_validate(data)
    inputs = load_json(args.inputs)
    if not isinstance(inputs, list) or not all(isinstance(v, int) for v in inputs):
        raise InvalidInputError(f"{args.inputs} must hold a JSON list of integers")
    abort_at = (args.abort_phase, args.abort_round) if args.abort_phase is not None else None
    speeds = getattr(args, "speeds", None)
    sim = SimConfig(
        n=spec.n,
        seed=args.seed,
        adversary=AdversaryConfig(
            corrupt=frozenset(args.corrupt or ()), abort_at=abort_at, rushing=args.rushing
        ),
        speeds=tuple(speeds) if speeds else None,
    )
    return spec, tuple(inputs), sim


def _write_transcript(args: argparse.Namespace, transcript) -> None:
    if args.transcript:
        Path(args.transcript).write_text(transcript.to_jsonl())


def mpc_ordered(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    spec, inputs, sim = _ordered_inputs(args)
    result = run_ordered(spec, inputs, sim)
    _write_transcript(args, result.transcript)
    verdict = ordered_verdict(result)
    ok = verdict["prefix_fair"] and verdict["ordered_delivery"]
    return verdict, EXIT_OK if ok else EXIT_VERDICT


def mpc_dummy(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    spec, inputs, sim = _ordered_inputs(args)
    result = run_dummy_delay(spec, inputs, sim, args.G)
    _write_transcript(args, result.transcript)
    verdict = dummy_verdict(result, sim)
    ok = verdict.order_ok and verdict.gaps_ok
    return verdict.to_json_dict(), EXIT_OK if ok else EXIT_VERDICT


def mpc_timelock(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    spec, inputs, sim = _ordered_inputs(args)
    result = run_timelock_delay(
        spec, inputs, sim, args.B, args.G, PuzzleScheme(args.scheme), args.kappa, args.line
    )
    _write_transcript(args, result.transcript)
    verdict = result.verdict
    return verdict.to_json_dict(), EXIT_OK if verdict.order_ok and verdict.gaps_ok else EXIT_VERDICT


# puzzle


def _write_or_return(args: argparse.Namespace, data: dict[str, Any]) -> dict[str, Any]:
    if args.out:
        Path(args.out).write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return data


def puzzle_lock(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    rng = substream(args.seed, "cli/puzzle")
    scheme = PuzzleScheme(args.scheme)
    try:
        puzzle = lock(int(args.data, 16), args.t, rng, scheme, args.kappa)
    except ParameterError:
        if args.t < 1:
            raise
        data = bytes.fromhex(args.data if len(args.data) % 2 == 0 else "0" + args.data)
        puzzle = lock_bytes(data, args.t, rng, scheme, args.kappa)
    return _write_or_return(args, puzzle.to_json_dict()), EXIT_OK


def puzzle_solve(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    data = load_json(args.file)
    if "t_vec" in data:
        line = TimeLinePuzzle.from_json_dict(data)
        items = [
            {"index": index, "step": step, "item": format(item, "x")}
            for index, step, item in solve_line(line)
        ]
        return {"items": items}, EXIT_OK
    value = complete_unlock(TimeLockPuzzle.from_json_dict(data))
    if value is None:
        return {"error": "ciphertext does not open under the unlocked key"}, EXIT_VERDICT
    if isinstance(value, bytes):
        return {"data": value.hex()}, EXIT_OK
    return {"data": format(value, "x")}, EXIT_OK


def puzzle_line(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    raw = load_json(args.items)
    if not isinstance(raw, list):
        raise InvalidInputError(f"{args.items} must hold a JSON list of items")
    items = [int(item, 16) if isinstance(item, str) else int(item) for item in raw]
    rng = substream(args.seed, "cli/puzzle")
    puzzle = lock_line(items, args.delays, rng, PuzzleScheme(args.scheme), args.kappa)
    return _write_or_return(args, puzzle.to_json_dict()), EXIT_OK


# scenario


def scenario(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    report = scenario_run(args.name, dict(args.param or ()), args.seed, _charge(args))
    if report.transcript is not None:
        _write_transcript(args, report.transcript)
    ok = report.feasible and (
        report.protocol is None
        or (report.protocol["ordered_delivery"] and report.protocol["prefix_fair"])
    )
    return report.to_json_dict(), EXIT_OK if ok else EXIT_VERDICT


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="datashare", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--seed", type=int, default=config.seed, help="Root random seed")
    parser.add_argument("--json", action="store_true", help="Compact machine-readable output")
    parser.add_argument(
        "--tolerance", type=float, default=None, help="Absolute tolerance for real comparisons"
    )
    groups = parser.add_subparsers(dest="group", required=True, parser_class=ArgumentParser)

    mech = groups.add_parser("mech", help="Collaborative equilibrium mechanism")
    mech_commands = mech.add_subparsers(dest="command", required=True)
    charge = ArgumentParser(add_help=False)
    charge.add_argument(
        "--charge", choices=[c.value for c in LearningCharge], default=LearningCharge.FULL.value
    )
    command = mech_commands.add_parser("solve", parents=[charge])
    command.add_argument("instance")
    command.set_defaults(handler=mech_solve)
    command = mech_commands.add_parser("brute", parents=[charge])
    command.add_argument("instance", nargs="?")
    command.add_argument("--sweep", type=int, help="Compare with the mechanism on N random instances")
    command.add_argument("--max-n", type=int, default=7)
    command.set_defaults(handler=mech_brute)
    command = mech_commands.add_parser("nsq", parents=[charge])
    command.add_argument("instance")
    command.set_defaults(handler=mech_nsq)
    command = mech_commands.add_parser("fas")
    command.add_argument("graph")
    command.add_argument("--gamma", type=float, required=True)
    command.set_defaults(handler=mech_fas)

    mpc = groups.add_parser("mpc", help="Ordered and timed-delay protocol simulations")
    mpc_commands = mpc.add_subparsers(dest="command", required=True)
    run_options = ArgumentParser(add_help=False)
    run_options.add_argument("--spec", required=True)
    run_options.add_argument("--inputs", required=True)
    run_options.add_argument("--corrupt", type=int_list)
    run_options.add_argument("--abort-phase", type=int)
    run_options.add_argument("--abort-round", type=int, default=0)
    run_options.add_argument("--rushing", action="store_true")
    run_options.add_argument("--mode", choices=[m.value for m in ThresholdMode])
    run_options.add_argument("--transcript", help="Write the JSON-lines transcript here")
    command = mpc_commands.add_parser("ordered", parents=[run_options])
    command.set_defaults(handler=mpc_ordered)
    command = mpc_commands.add_parser("dummy", parents=[run_options])
    command.add_argument("--G", type=int, required=True)
    command.set_defaults(handler=mpc_dummy)
    command = mpc_commands.add_parser("timelock", parents=[run_options])
    command.add_argument("--B", type=int, required=True)
    command.add_argument("--G", type=int, required=True)
    command.add_argument("--speeds", type=str_list)
    command.add_argument("--scheme", choices=[s.value for s in PuzzleScheme], default="hash")
    command.add_argument("--kappa", type=int)
    command.add_argument("--line", action="store_true", help="Release through one time-line puzzle")
    command.set_defaults(handler=mpc_timelock)

    puzzle = groups.add_parser("puzzle", help="Time-lock and time-line puzzles")
    puzzle_commands = puzzle.add_subparsers(dest="command", required=True)
    lock_options = ArgumentParser(add_help=False)
    lock_options.add_argument("--scheme", choices=[s.value for s in PuzzleScheme], default="square")
    lock_options.add_argument("--kappa", type=int)
    lock_options.add_argument("--out", help="Also write the puzzle file here")
    command = puzzle_commands.add_parser("lock", parents=[lock_options])
    command.add_argument("--data", type=hex_value, required=True)
    command.add_argument("--t", type=int, required=True)
    command.set_defaults(handler=puzzle_lock)
    command = puzzle_commands.add_parser("solve")
    command.add_argument("file")
    command.set_defaults(handler=puzzle_solve)
    command = puzzle_commands.add_parser("line", parents=[lock_options])
    command.add_argument("--items", required=True)
    command.add_argument("--delays", type=int_list, required=True)
    command.set_defaults(handler=puzzle_line)

    command = groups.add_parser("scenario", parents=[charge], help="Shipped end-to-end scenarios")
    command.add_argument("name", choices=SCENARIOS)
    command.add_argument("--param", type=parse_param, action="append", metavar="KEY=VALUE")
    command.add_argument("--transcript", help="Write the JSON-lines transcript here")
    command.set_defaults(handler=scenario)
    return parser


def emit(data: dict[str, Any], machine: bool) -> None:
    if machine:
        print(canonical_json(data))
    else:
        print(json.dumps(data, sort_keys=True, indent=2))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE

    tolerance = config.mechanism.tolerance
    if args.tolerance is not None:
        config.mechanism.tolerance = args.tolerance
    try:
        data, code = args.handler(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"Invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataShareError as e:
        logger.info("%s failed: %s", args.group, e.detail)
        print(e.detail, file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected error")
        sentry_sdk.capture_exception(e)
        return EXIT_INTERNAL
    finally:
        config.mechanism.tolerance = tolerance
    emit(data, args.json)
    return code


def run() -> None:
    """Poetry script entry point."""
    configure_logger()
    if config.sentry_dsn:
        sentry_sdk.init(dsn=config.sentry_dsn, environment=config.environment)
    sys.exit(main())
