"""
Timed-delay MPC: ordered output release with a minimum amount of
sequential work between consecutive outputs.

Two ways to enforce the gap. Dummy rounds pad every output phase of the
ordered protocol with G challenge/response rounds. Time-lock release hands
every party, all at once, a puzzle over its masked output whose delay grows
geometrically with its position, so that solver speeds differing by at most
a factor B still finish in order.
"""

import hashlib
import logging
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from datashare.config import config
from datashare.delay.models import DelayRun, DelaySchedule, DelayVerdict, SolverProfile
from datashare.errors import InvalidInputError, ParameterError, ProtocolAbort
from datashare.ordered.models import LeakageRecord, OrderedRun, OrderedSpec
from datashare.ordered.service import MpcBackend, run_ordered, verify_ordered_delivery
from datashare.simnet.models import (
    NODE,
    PartyMachine,
    PhaseSchedule,
    Protocol,
    SimConfig,
    StepContext,
    StepResult,
    Transcript,
)
from datashare.simnet.service import clock_window_counts, run, steps_between
from datashare.timed.models import PuzzleScheme, TimeLockPuzzle
from datashare.timed.service import ChainSolver, lock, lock_line, public_work
from datashare.utils.randomness import random_bits, substream

logger = logging.getLogger(__name__)


def delay_schedule(n: int, B: int, G: int) -> DelaySchedule:
    if n < 1:
        raise ParameterError("A delay schedule needs at least one party")
    if B < 1 or G < 1:
        raise ParameterError(f"B = {B} and G = {G} must both be at least 1")
    t = [1]
    for _ in range(n - 1):
        t.append((B * G + 1) * t[-1])
    return DelaySchedule(n=n, B=B, G=G, t=tuple(t))


def guaranteed_gaps(schedule: DelaySchedule) -> tuple[Fraction, ...]:
    """(t_{i+1} - t_i) / B for each consecutive pair of positions."""
    return tuple(Fraction(b - a, schedule.B) for a, b in zip(schedule.t, schedule.t[1:]))


def run_dummy_delay(
    spec: OrderedSpec,
    inputs: Sequence[int],
    sim: SimConfig,
    G: int,
    backend: MpcBackend | None = None,
) -> OrderedRun:
    """The ordered protocol with G dummy rounds opening every output phase."""
    return run_ordered(spec, inputs, sim, backend, dummy_rounds=G)


def dummy_verdict(result: OrderedRun, sim: SimConfig) -> DelayVerdict:
    """Every honest party must log at least G clock evaluations between consecutive outputs."""
    honest = [j for j in range(len(result.pi)) if not sim.is_corrupt(j)]
    try:
        windows = clock_window_counts(result.transcript, honest)
        gaps_ok = all(
            count >= result.dummy_rounds for window in windows for count in window.values()
        )
    except InvalidInputError:
        gaps_ok = False
    return DelayVerdict(
        order_ok=verify_ordered_delivery(result.transcript, result.pi),
        gaps_ok=gaps_ok,
        unlock_ticks={party: event.tick for party, event in result.transcript.received().items()},
    )


def seed_bits(scheme: PuzzleScheme, kappa: int | None = None) -> int:
    """How many rounds the time-line seed takes to release, one bit per round."""
    if scheme is PuzzleScheme.SQUARE:
        return 2 * (kappa or config.puzzle.kappa)
    return 8 * hashlib.new(config.puzzle.hash_name).digest_size


class TimelockParty(PartyMachine):
    """
    Hands the node its input and a fresh mask, then solves whatever puzzle
    comes back, spending each tick's compute budget on chain steps. The
    tick a puzzle arrives already counts.
    """

    def __init__(
        self,
        party: int,
        spec: OrderedSpec,
        value: int,
        rng: np.random.Generator,
    ):
        super().__init__(party)
        self.spec = spec
        self.value = value
        self.mask = random_bits(rng, spec.output_length)
        self.solver: ChainSolver | None = None
        self.target = 0
        self.b = 0
        self.header: dict | None = None
        self.bits: list[int] = []

    def _begin(self, scheme: PuzzleScheme, a: int, x: int, t: int, b: int) -> None:
        self.solver = ChainSolver(public_work(scheme, a), x)
        self.target = t
        self.b = b

    def _solve(self, budget: int, result: StepResult) -> None:
        steps = min(budget, self.target - self.solver.steps)
        if steps > 0:
            self.solver.advance(steps)
            result.clock_evaluations = steps
        if self.solver.steps == self.target:
            value = self.solver.state ^ self.b ^ self.mask
            result.deliver(format(value, "x"))
            result.checkpoint = True
            result.halted = True

    def step(self, ctx: StepContext) -> StepResult:
        result = StepResult()
        for message in ctx.inbox:
            if message.sender != NODE:
                continue
            payload = message.payload
            if payload["type"] == "abort":
                result.halted = True
                return result
            if payload["type"] == "puzzle":
                puzzle = TimeLockPuzzle.from_json_dict(payload["puzzle"])
                self._begin(puzzle.scheme, puzzle.a, puzzle.x, puzzle.t, puzzle.b)
            elif payload["type"] == "line":
                self.header = payload
            elif payload["type"] == "seed_bit":
                self.bits.append(payload["bit"])
                if len(self.bits) == self.header["bits"]:
                    x = int("".join(map(str, self.bits)), 2)
                    header = self.header
                    scheme = PuzzleScheme(header["scheme"])
                    self._begin(scheme, header["a"], x, header["t"], header["b"])
        if ctx.round == 0:
            result.send(self.party, NODE, {"type": "input", "value": self.value, "mask": self.mask})
        if self.solver is not None:
            self._solve(ctx.compute_budget, result)
        return result


class TimelockNode(PartyMachine):
    """Evaluates f and p, then issues every puzzle in the same round."""

    def __init__(
        self,
        spec: OrderedSpec,
        schedule: DelaySchedule,
        scheme: PuzzleScheme,
        kappa: int | None,
        line: bool,
        corrupt: frozenset[int],
        rng: np.random.Generator,
    ):
        super().__init__(NODE)
        self.spec = spec
        self.schedule = schedule
        self.scheme = scheme
        self.kappa = kappa
        self.line = line
        self.corrupt = corrupt
        self.rng = rng
        self.seed: list[int] = []
        self.leakage: list[LeakageRecord] = []

    def _leak(self, party: int, item: str, value: int) -> None:
        if party in self.corrupt:
            self.leakage.append(
                LeakageRecord(phase=0, party=party, item=item, subject=party, value=value)
            )

    def _issue(self, inbox, result: StepResult) -> None:
        received = {
            m.sender: (m.payload["value"], m.payload["mask"])
            for m in inbox
            if m.payload.get("type") == "input"
        }
        missing = sorted(set(range(self.spec.n)) - set(received))
        if missing:
            raise ProtocolAbort(f"No input from parties {missing}")
        pi, y = self.spec.evaluate(tuple(received[j][0] for j in range(self.spec.n)))
        delays = [self.schedule.delay_at(pi.index(j) + 1) for j in range(self.spec.n)]
        items = [y[j] ^ received[j][1] for j in range(self.spec.n)]
        for j in range(self.spec.n):
            self._leak(j, "input", received[j][0])
            self._leak(j, "position", pi.index(j) + 1)
            self._leak(j, "output", y[j])

        if not self.line:
            for j in range(self.spec.n):
                puzzle = lock(items[j], delays[j], self.rng, self.scheme, self.kappa)
                result.send(NODE, j, {"type": "puzzle", "puzzle": puzzle.to_json_dict()})
            result.halted = True
            return
        puzzle = lock_line(items, delays, self.rng, self.scheme, self.kappa)
        width = seed_bits(self.scheme, self.kappa)
        self.seed = [int(bit) for bit in format(puzzle.x, f"0{width}b")]
        for j in range(self.spec.n):
            result.send(
                NODE,
                j,
                {
                    "type": "line",
                    "scheme": puzzle.scheme.value,
                    "a": puzzle.a,
                    "t": puzzle.t[j],
                    "b": puzzle.b[j],
                    "bits": width,
                },
            )

    def step(self, ctx: StepContext) -> StepResult:
        result = StepResult()
        if ctx.round == 1:
            try:
                self._issue(ctx.inbox, result)
            except ProtocolAbort as e:
                logger.info(
                    "Time-lock release aborted: %s",
                    e.detail,
                    extra={"protocol": TimelockProtocol.name, "tick": ctx.round},
                )
                for party in range(self.spec.n):
                    result.send(NODE, party, {"type": "abort"})
                result.abort = e.detail
                result.halted = True
        elif ctx.round >= 2:
            index = ctx.round - 2
            for party in range(self.spec.n):
                result.send(
                    NODE, party, {"type": "seed_bit", "index": index, "bit": self.seed[index]}
                )
            result.halted = index == len(self.seed) - 1
        return result


class TimelockProtocol(Protocol):
    name = "timelock-delay"

    def __init__(
        self,
        spec: OrderedSpec,
        inputs: Sequence[int],
        schedule: DelaySchedule,
        scheme: PuzzleScheme,
        kappa: int | None,
        line: bool,
    ):
        self.spec = spec
        self.inputs = tuple(inputs)
        self.delays = schedule
        self.scheme = scheme
        self.kappa = kappa
        self.line = line
        self.node: TimelockNode | None = None

    @property
    def solve_start(self) -> int:
        return 2 + (seed_bits(self.scheme, self.kappa) if self.line else 0)

    def machines(self, config: SimConfig) -> dict[int, PartyMachine]:
        machines: dict[int, PartyMachine] = {
            j: TimelockParty(
                j, self.spec, self.inputs[j], substream(config.seed, f"party/{j}/masks")
            )
            for j in range(self.spec.n)
        }
        self.node = TimelockNode(
            self.spec,
            self.delays,
            self.scheme,
            self.kappa,
            self.line,
            config.adversary.corrupt,
            substream(config.seed, "node/puzzles"),
        )
        machines[NODE] = self.node
        return machines

    def schedule(self, config: SimConfig) -> PhaseSchedule:
        if self.line:
            return PhaseSchedule(starts=(0, 1, 2, self.solve_start))
        return PhaseSchedule(starts=(0, 1, self.solve_start))


def run_timelock_delay(
    spec: OrderedSpec,
    inputs: Sequence[int],
    sim: SimConfig,
    B: int,
    G: int,
    scheme: PuzzleScheme = PuzzleScheme.HASH,
    kappa: int | None = None,
    line: bool = False,
) -> DelayRun:
    """
    Issue every masked output as a puzzle at one tick; party pi[i - 1]
    gets delay t_i. With line set, one time-line puzzle carries every
    output and its seed is then broadcast a bit per round.
    """
    if sim.n != spec.n:
        raise InvalidInputError(f"Simulation has {sim.n} parties, protocol expects {spec.n}")
    schedule = delay_schedule(spec.n, B, G)
    profile = SolverProfile(speeds=sim.speeds or (Fraction(1),) * spec.n)
    if not profile.compliant(B):
        logger.info(
            "Solver speed ratio %s exceeds B = %d; ordering is not guaranteed", profile.ratio, B
        )
    if min(profile.speeds) < 1:
        logger.info("The slowest solver does under one step per tick; gaps may fall short of G")
    pi, y = spec.evaluate(tuple(inputs))
    protocol = TimelockProtocol(spec, inputs, schedule, scheme, kappa, line)
    transcript = run(sim, protocol)
    received = {
        party: int(event.value, 16)
        for party, event in transcript.received().items()
        if event.value is not None
    }
    verdict = timelock_verdict(transcript, pi, schedule, profile)
    if not verdict.order_ok and len(received) == spec.n:
        logger.warning("Outputs were not learned in order %s: %s", pi, verdict.unlock_ticks)
    logger.info("Time-lock release over %d parties: %s", spec.n, verdict.to_json_dict())
    return DelayRun(
        transcript=transcript,
        pi=pi,
        y=y,
        received=received,
        schedule=schedule,
        profile=profile,
        solve_start=protocol.solve_start,
        line=line,
        leakage=tuple(protocol.node.leakage),
        verdict=verdict,
    )


def verify_delay_gaps(
    transcript: Transcript, G: int, schedule: DelaySchedule, profile: SolverProfile
) -> bool:
    """
    Every window between consecutive checkpoints leaves the slowest solver
    at least G clock evaluations, counted with its per-tick budget over the
    ticks after one checkpoint up to and including the next.
    """
    checkpoints = transcript.checkpoints()
    if not checkpoints:
        raise InvalidInputError("Transcript has no checkpoints")
    if len(checkpoints) > schedule.n:
        raise InvalidInputError(f"{len(checkpoints)} checkpoints for {schedule.n} parties")
    slowest = min(profile.speeds)
    return all(
        steps_between(slowest, a.tick + 1, b.tick + 1) >= G
        for a, b in zip(checkpoints, checkpoints[1:])
    )


def timelock_verdict(
    transcript: Transcript,
    pi: Sequence[int],
    schedule: DelaySchedule,
    profile: SolverProfile,
) -> DelayVerdict:
    try:
        gaps_ok = verify_delay_gaps(transcript, schedule.G, schedule, profile)
    except InvalidInputError:
        gaps_ok = False
    return DelayVerdict(
        order_ok=verify_ordered_delivery(transcript, pi),
        gaps_ok=gaps_ok,
        unlock_ticks={party: event.tick for party, event in transcript.received().items()},
    )
