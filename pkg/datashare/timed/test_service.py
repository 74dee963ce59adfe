import pytest

from datashare.errors import InvalidInputError, ParameterError, SizeLimitError
from datashare.timed.models import HidingVariant, PuzzleScheme, TimeLinePuzzle, TimeLockPuzzle
from datashare.timed.service import (
    ChainSolver,
    ChainSolverAdversary,
    RandomGuessAdversary,
    complete_unlock,
    hiding_experiment,
    lock,
    lock_bytes,
    lock_line,
    public_work,
    solve_line,
    time_step,
    unlock_line_at,
)
from datashare.timed.work import HashChainWork, SquaringWork
from datashare.utils.randomness import random_below, random_between, substream

TOY = 16


@pytest.fixture
def rng():
    return substream(0, "timed/test")


@pytest.fixture
def toy_work():
    return SquaringWork.from_primes(11, 23)


class TestWork:
    @pytest.mark.parametrize("x,expected", [(2, 4), (16, 3)])
    def test_one_squaring_step(self, x, expected):
        assert time_step(x, 253) == expected

    def test_toy_fast_power(self, toy_work):
        assert toy_work.fast_power(2, 5) == pow(2, pow(2, 5, 220), 253)
        assert toy_work.fast_power(2, 5) == toy_work.iterate(2, 5)

    def test_fast_path_matches_sequential_squaring(self, rng):
        for _ in range(200):
            work = SquaringWork.generate(TOY, rng)
            x = work.sample_seed(rng)
            t = random_between(rng, 1, 1000)
            assert work.fast_power(x, t) == work.public().iterate(x, t)

    def test_hash_step_is_deterministic(self):
        work = HashChainWork(b"\x07" * 32)
        assert work.step(5) == HashChainWork(b"\x07" * 32).step(5)
        assert work.step(5) != HashChainWork(b"\x08" * 32).step(5)

    def test_line_masks_walk_the_chain(self, toy_work):
        public = toy_work.public()
        assert public.masks(2, (4, 1, 2)) == [public.iterate(2, t) for t in (4, 1, 2)]
        assert toy_work.masks(2, (4, 1, 2)) == public.masks(2, (4, 1, 2))

    def test_equal_primes_rejected(self):
        with pytest.raises(ParameterError):
            SquaringWork.from_primes(11, 11)

    def test_unknown_hash_rejected(self):
        with pytest.raises(ParameterError):
            HashChainWork(b"k", "no-such-hash")


class TestTimeLock:
    def test_single_step_round_trip(self, rng):
        puzzle = lock(1234, 1, rng, kappa=TOY)
        assert complete_unlock(puzzle) == 1234

    def test_hash_chain_round_trip(self, rng):
        puzzle = lock(2**200 + 7, 100, rng, PuzzleScheme.HASH)
        assert complete_unlock(puzzle) == 2**200 + 7

    @pytest.mark.parametrize("scheme", list(PuzzleScheme))
    def test_random_round_trips(self, rng, scheme):
        for _ in range(100):
            data = random_below(rng, 2**20)
            t = random_between(rng, 1, 500)
            assert complete_unlock(lock(data, t, rng, scheme, TOY)) == data

    def test_one_step_short_does_not_unlock(self, rng):
        for _ in range(100):
            data = random_below(rng, 2**64)
            puzzle = lock(data, random_between(rng, 2, 200), rng, PuzzleScheme.HASH)
            solver = ChainSolver(public_work(puzzle.scheme, puzzle.a), puzzle.x)
            assert solver.run_to(puzzle.t - 1) ^ puzzle.b != data

    def test_trapdoor_is_not_published(self, rng, toy_work):
        puzzle = lock(9, 40, rng, work=toy_work)
        assert puzzle.a == 253
        assert set(puzzle.model_dump()) == {"scheme", "x", "t", "b", "a", "kappa", "ciphertext"}
        assert complete_unlock(puzzle) == 9

    def test_data_must_fit_one_mask(self, rng, toy_work):
        with pytest.raises(ParameterError):
            lock(2**10, 3, rng, work=toy_work)

    def test_zero_steps_rejected(self, rng):
        with pytest.raises(ParameterError):
            lock(1, 0, rng, PuzzleScheme.HASH)

    @pytest.mark.parametrize("scheme", list(PuzzleScheme))
    def test_hybrid_lock_of_long_data(self, rng, scheme):
        data = b"a much longer message than any single mask element" * 4
        puzzle = lock_bytes(data, 25, rng, scheme, TOY)
        assert puzzle.ciphertext is not None
        assert complete_unlock(puzzle) == data

    def test_json_round_trip(self, rng):
        puzzle = lock_bytes(b"payload", 3, rng, kappa=TOY)
        assert TimeLockPuzzle.from_json_dict(puzzle.to_json_dict()) == puzzle

    def test_json_needs_every_field(self):
        with pytest.raises(InvalidInputError):
            TimeLockPuzzle.from_json_dict({"scheme": "hash", "t": 3})


class TestTimeLine:
    def test_single_item_reduces_to_lock(self, rng):
        puzzle = lock_line([77], [9], rng, PuzzleScheme.HASH)
        assert complete_unlock(puzzle.item(0)) == 77

    def test_items_unlock_along_one_chain(self, rng):
        puzzle = lock_line([10, 20, 30], [1, 2, 4], rng, kappa=TOY)
        assert solve_line(puzzle) == [(0, 1, 10), (1, 2, 20), (2, 4, 30)]

    def test_solving_everything_costs_the_deepest_delay(self, rng):
        delays = [2**i for i in range(8)]
        items = list(range(100, 108))
        puzzle = lock_line(items, delays, rng, PuzzleScheme.HASH)
        solver = ChainSolver(public_work(puzzle.scheme, puzzle.a), puzzle.x)
        for index in range(8):
            assert unlock_line_at(puzzle, index, solver.run_to(delays[index])) == items[index]
        assert solver.steps == 128
        assert sum(delays) == 255

    def test_resuming_the_chain_unlocks_the_next_item(self, rng):
        puzzle = lock_line([5, 6], [3, 10], rng, kappa=TOY)
        solver = ChainSolver(public_work(puzzle.scheme, puzzle.a), puzzle.x)
        state = solver.run_to(3)
        assert unlock_line_at(puzzle, 0, state) == 5
        assert unlock_line_at(puzzle, 1, state) != 6
        assert unlock_line_at(puzzle, 1, solver.run_to(10)) == 6

    def test_unsorted_delays_are_noted(self, rng):
        puzzle = lock_line([1, 2], [5, 2], rng, PuzzleScheme.HASH)
        assert puzzle.note is not None
        assert [index for index, _, _ in solve_line(puzzle)] == [1, 0]

    def test_item_cap(self, rng, mocker):
        mocker.patch("datashare.timed.service.config.puzzle.line_max_items", 2)
        with pytest.raises(SizeLimitError):
            lock_line([1, 2, 3], [1, 2, 3], rng, PuzzleScheme.HASH)

    def test_mismatched_lengths(self, rng):
        with pytest.raises(ParameterError):
            lock_line([1, 2], [1], rng, PuzzleScheme.HASH)

    def test_index_out_of_range(self, rng):
        puzzle = lock_line([1], [1], rng, PuzzleScheme.HASH)
        with pytest.raises(InvalidInputError):
            unlock_line_at(puzzle, 1, 0)

    def test_json_round_trip(self, rng):
        puzzle = lock_line([1, 2, 3], [1, 7, 49], rng, kappa=TOY)
        assert TimeLinePuzzle.from_json_dict(puzzle.to_json_dict()) == puzzle


def within_three_sigma(rate, trials):
    sigma = (0.25 / trials) ** 0.5
    return abs(rate - 0.5) <= 3 * sigma


class TestHiding:
    d0 = (11, 12, 13)
    d1 = (21, 22, 23)
    delays = (1, 2, 4)

    def test_random_guess_is_a_coin_flip(self):
        report = hiding_experiment(RandomGuessAdversary(), self.d0, self.d1, self.delays, 10_000)
        assert within_three_sigma(report.rate, 10_000)

    def test_unbounded_solver_wins_the_strong_game(self):
        adversary = ChainSolverAdversary()
        report = hiding_experiment(
            adversary, self.d0, self.d1, self.delays, 200, variant=HidingVariant.STRONG
        )
        assert report.rate >= 0.99
        assert report.steps == 200 * 1

    def test_budget_below_shallowest_delay_is_a_coin_flip(self):
        report = hiding_experiment(
            ChainSolverAdversary(budget=0),
            self.d0,
            self.d1,
            self.delays,
            2000,
            variant=HidingVariant.STRONG,
        )
        assert report.steps == 0
        assert within_three_sigma(report.rate, 2000)

    def test_queried_masks_do_not_reveal_the_rest(self):
        report = hiding_experiment(ChainSolverAdversary(), self.d0, self.d1, self.delays, 2000)
        assert within_three_sigma(report.rate, 2000)

    def test_querying_every_mask_loses(self):
        class Greedy(RandomGuessAdversary):
            def guess(self, view, oracle, rng):
                for index in range(len(view.t)):
                    oracle(index)
                return 0, 0

        report = hiding_experiment(Greedy(), self.d0, self.d1, self.delays, 50)
        assert report.wins == 0

    def test_squaring_scheme(self):
        report = hiding_experiment(
            ChainSolverAdversary(),
            self.d0,
            self.d1,
            self.delays,
            20,
            scheme=PuzzleScheme.SQUARE,
            variant=HidingVariant.STRONG,
            kappa=TOY,
        )
        assert report.rate == 1.0

    def test_vectors_must_match(self):
        with pytest.raises(ParameterError):
            hiding_experiment(RandomGuessAdversary(), (1,), (2, 3), (1, 2), 1)
