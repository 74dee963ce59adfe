"""
Time-lock and time-line puzzles over a sequential work function, plus the
hiding experiment used to calibrate them against baseline adversaries.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence

import numpy as np

from datashare.config import config
from datashare.errors import InvalidInputError, ParameterError, SizeLimitError
from datashare.timed.models import (
    HidingReport,
    HidingVariant,
    HidingView,
    PuzzleScheme,
    TimeLinePuzzle,
    TimeLockPuzzle,
)
from datashare.timed.work import HashChainWork, SquaringWork, WorkFunction
from datashare.utils.crypto import AESCipher
from datashare.utils.randomness import random_bits, random_below, substream

logger = logging.getLogger(__name__)


def new_work(
    scheme: PuzzleScheme, rng: np.random.Generator, kappa: int | None = None
) -> WorkFunction:
    """A fresh work function; for squaring it still holds the trapdoor."""
    if scheme is PuzzleScheme.SQUARE:
        return SquaringWork.generate(kappa or config.puzzle.kappa, rng)
    return HashChainWork.generate(rng, config.puzzle.hash_name)


def public_work(scheme: PuzzleScheme, aux: int) -> WorkFunction:
    if scheme is PuzzleScheme.SQUARE:
        return SquaringWork(aux)
    return HashChainWork.from_aux(aux, config.puzzle.hash_name)


def _check_data(data: int, work: WorkFunction) -> None:
    if data < 0 or data >> work.element_bits:
        raise ParameterError(
            f"Data does not fit one {work.element_bits}-bit mask; lock it as bytes instead"
        )


def _kappa(scheme: PuzzleScheme, kappa: int | None) -> int | None:
    if scheme is PuzzleScheme.SQUARE:
        return kappa or config.puzzle.kappa
    return None


def lock(
    data: int,
    t: int,
    rng: np.random.Generator,
    scheme: PuzzleScheme = PuzzleScheme.SQUARE,
    kappa: int | None = None,
    work: WorkFunction | None = None,
) -> TimeLockPuzzle:
    """
    Lock data for t sequential steps. A supplied work function is used as
    is, trapdoor included; otherwise a fresh one is sampled and its trapdoor
    never leaves this call.
    """
    if t < 1:
        raise ParameterError("A puzzle needs at least one step")
    if work is None:
        kappa = _kappa(scheme, kappa)
        work = new_work(scheme, rng, kappa)
    _check_data(data, work)
    x = work.sample_seed(rng)
    return TimeLockPuzzle(
        scheme=work.scheme,
        x=x,
        t=t,
        b=data ^ work.fast_power(x, t),
        a=work.aux,
        kappa=kappa,
    )


def lock_bytes(
    data: bytes,
    t: int,
    rng: np.random.Generator,
    scheme: PuzzleScheme = PuzzleScheme.SQUARE,
    kappa: int | None = None,
) -> TimeLockPuzzle:
    """Hybrid lock: a fresh key element is locked and the data travels AES-encrypted under it."""
    kappa = _kappa(scheme, kappa)
    work = new_work(scheme, rng, kappa)
    key = random_bits(rng, work.element_bits)
    puzzle = lock(key, t, rng, scheme, kappa, work)
    ciphertext = AESCipher(_key_bytes(key, work)).encrypt(data, iv=rng.bytes(16))
    return puzzle.model_copy(update={"ciphertext": ciphertext})


def _key_bytes(key: int, work: WorkFunction) -> bytes:
    return key.to_bytes((work.element_bits + 7) // 8, "big")


def time_step(x: int, a: int, scheme: PuzzleScheme = PuzzleScheme.SQUARE) -> int:
    return public_work(scheme, a).step(x)


class ChainSolver:
    """Reference sequential solver; `steps` counts every work-function call it made."""

    def __init__(self, work: WorkFunction, x: int):
        work.check_seed(x)
        self.work = work
        self.state = x
        self.steps = 0

    def advance(self, count: int = 1) -> int:
        for _ in range(count):
            self.state = self.work.step(self.state)
        self.steps += count
        return self.state

    def run_to(self, target: int) -> int:
        if target < self.steps:
            raise InvalidInputError(f"Chain is already at step {self.steps}, past {target}")
        return self.advance(target - self.steps)


def complete_unlock(puzzle: TimeLockPuzzle) -> int | bytes | None:
    """
    Walk the chain t steps and strip the mask. Hybrid puzzles return the
    decrypted bytes, or None when the ciphertext does not open.
    """
    work = public_work(puzzle.scheme, puzzle.a)
    solver = ChainSolver(work, puzzle.x)
    value = solver.run_to(puzzle.t) ^ puzzle.b
    if puzzle.ciphertext is None:
        return value
    return AESCipher(_key_bytes(value, work)).decrypt(puzzle.ciphertext)


def lock_line(
    items: Sequence[int],
    delays: Sequence[int],
    rng: np.random.Generator,
    scheme: PuzzleScheme = PuzzleScheme.SQUARE,
    kappa: int | None = None,
    work: WorkFunction | None = None,
) -> TimeLinePuzzle:
    if len(items) != len(delays):
        raise ParameterError(f"{len(items)} items for {len(delays)} delays")
    if not items:
        raise ParameterError("A time-line puzzle locks at least one item")
    if len(items) > config.puzzle.line_max_items:
        raise SizeLimitError(f"At most {config.puzzle.line_max_items} items per time-line")
    if any(t < 1 for t in delays):
        raise ParameterError("Every delay must be at least one step")
    if work is None:
        kappa = _kappa(scheme, kappa)
        work = new_work(scheme, rng, kappa)
    for item in items:
        _check_data(item, work)
    x = work.sample_seed(rng)
    note = None
    if list(delays) != sorted(delays):
        note = "delays are not sorted; items unlock in order of delay, not index"
        logger.info("Time-line locked with unsorted delays %s", list(delays))
    masks = work.masks(x, delays)
    return TimeLinePuzzle(
        scheme=work.scheme,
        x=x,
        t=tuple(delays),
        b=tuple(item ^ mask for item, mask in zip(items, masks)),
        a=work.aux,
        kappa=kappa,
        note=note,
    )


def unlock_line_at(puzzle: TimeLinePuzzle, index: int, chain_state: int) -> int:
    """Item index, given the chain value at step t[index]."""
    if not 0 <= index < puzzle.m:
        raise InvalidInputError(f"Item {index} is outside 0..{puzzle.m - 1}")
    return chain_state ^ puzzle.b[index]


def solve_line(puzzle: TimeLinePuzzle) -> list[tuple[int, int, int]]:
    """
    Recover every item in one pass along the chain. Returns
    (index, step at which it became available, item) in unlock order.
    """
    solver = ChainSolver(public_work(puzzle.scheme, puzzle.a), puzzle.x)
    recovered = []
    for index in sorted(range(puzzle.m), key=lambda i: (puzzle.t[i], i)):
        state = solver.run_to(puzzle.t[index])
        recovered.append((index, solver.steps, unlock_line_at(puzzle, index, state)))
    return recovered


MaskOracle = Callable[[int], int]


class HidingAdversary(ABC):
    """Plays the hiding game: sees a view, maybe queries masks, names an index and a bit."""

    steps: int = 0

    @abstractmethod
    def guess(
        self, view: HidingView, oracle: MaskOracle | None, rng: np.random.Generator
    ) -> tuple[int, int]: ...


class RandomGuessAdversary(HidingAdversary):
    def guess(self, view, oracle, rng):
        return random_below(rng, len(view.t)), random_bits(rng, 1)


class ChainSolverAdversary(HidingAdversary):
    """
    Solves the chain to the shallowest item within its step budget and
    compares the unmasked value with both candidates. With the mask oracle
    it may only use masks it has queried, so it names an unqueried item and
    guesses.
    """

    def __init__(self, budget: int | None = None):
        self.budget = budget
        self.steps = 0

    def guess(self, view, oracle, rng):
        target = min(range(len(view.t)), key=lambda i: (view.t[i], i))
        if view.b is None or (self.budget is not None and view.t[target] > self.budget):
            if oracle is not None:
                for index in range(len(view.t)):
                    if index != target:
                        oracle(index)
            return target, random_bits(rng, 1)
        solver = ChainSolver(public_work(view.scheme, view.a), view.x)
        value = solver.run_to(view.t[target]) ^ view.b[target]
        self.steps += solver.steps
        if value == view.d0[target]:
            return target, 0
        if value == view.d1[target]:
            return target, 1
        return target, random_bits(rng, 1)


def hiding_experiment(
    adversary: HidingAdversary,
    d0: Sequence[int],
    d1: Sequence[int],
    delays: Sequence[int],
    trials: int,
    seed: int = 0,
    scheme: PuzzleScheme = PuzzleScheme.HASH,
    variant: HidingVariant = HidingVariant.STANDARD,
    kappa: int | None = None,
) -> HidingReport:
    m = len(delays)
    if not m or len(d0) != m or len(d1) != m:
        raise ParameterError("Data vectors and delays must have the same non-zero length")
    wins = 0
    for trial in range(trials):
        rng = substream(seed, f"hiding/{trial}")
        beta = [random_bits(rng, 1) for _ in range(m)]
        items = [(d1 if bit else d0)[i] for i, bit in enumerate(beta)]
        puzzle = lock_line(items, delays, rng, scheme, kappa)
        queried: set[int] = set()

        def oracle(index: int) -> int:
            queried.add(index)
            return puzzle.b[index]

        strong = variant is HidingVariant.STRONG
        view = HidingView(
            scheme=puzzle.scheme,
            x=puzzle.x,
            a=puzzle.a,
            t=puzzle.t,
            b=puzzle.b if strong else None,
            d0=tuple(d0),
            d1=tuple(d1),
        )
        index, bit = adversary.guess(
            view, None if strong else oracle, substream(seed, f"adversary/{trial}")
        )
        if len(queried) < m and index not in queried and 0 <= index < m and bit == beta[index]:
            wins += 1
    report = HidingReport(variant=variant, trials=trials, wins=wins, steps=adversary.steps)
    logger.info(
        "Hiding experiment (%s) with %s: %d / %d wins",
        variant.value,
        type(adversary).__name__,
        wins,
        trials,
    )
    return report
