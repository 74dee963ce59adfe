"""
Inherently sequential work functions. One call to `step` is one unit of
logical time; the puzzles and the timed-delay protocols count nothing else.
"""

import hashlib
import hmac
from abc import ABC, abstractmethod
from collections.abc import Sequence
from math import gcd

import numpy as np
from Crypto.Util.number import getPrime

from datashare.errors import ParameterError
from datashare.timed.models import PuzzleScheme
from datashare.utils.randomness import random_between, random_bits


class WorkFunction(ABC):
    scheme: PuzzleScheme

    @property
    @abstractmethod
    def aux(self) -> int:
        """The public auxiliary value a stored in the puzzle."""

    @property
    @abstractmethod
    def element_bits(self) -> int:
        """Widest data item a single mask can cover."""

    @abstractmethod
    def step(self, x: int) -> int: ...

    @abstractmethod
    def sample_seed(self, rng: np.random.Generator) -> int: ...

    def check_seed(self, x: int) -> None:
        pass

    def iterate(self, x: int, t: int) -> int:
        for _ in range(t):
            x = self.step(x)
        return x

    def fast_power(self, x: int, t: int) -> int:
        """x after t steps; only a trapdoor makes this cheaper than iterating."""
        return self.iterate(x, t)

    def masks(self, x: int, delays: Sequence[int]) -> list[int]:
        """Chain values at each delay, walking the chain once up to the largest."""
        values: dict[int, int] = {}
        state, at = x, 0
        for delay in sorted(set(delays)):
            state = self.iterate(state, delay - at)
            at = delay
            values[delay] = state
        return [values[delay] for delay in delays]


class SquaringWork(WorkFunction):
    """h_N(x) = x^2 mod N. Holding phi(N) lets the locker jump t steps at once."""

    scheme = PuzzleScheme.SQUARE

    def __init__(self, modulus: int, phi: int | None = None):
        if modulus < 4:
            raise ParameterError(f"Modulus {modulus} is too small")
        self.modulus = modulus
        self.phi = phi

    @classmethod
    def from_primes(cls, p: int, q: int) -> "SquaringWork":
        if p == q:
            raise ParameterError("The two primes must differ")
        return cls(p * q, (p - 1) * (q - 1))

    @classmethod
    def generate(cls, kappa: int, rng: np.random.Generator) -> "SquaringWork":
        if kappa < 4:
            raise ParameterError(f"kappa = {kappa} is below the 4-bit minimum")
        p = getPrime(kappa, randfunc=rng.bytes)
        q = getPrime(kappa, randfunc=rng.bytes)
        while q == p:
            q = getPrime(kappa, randfunc=rng.bytes)
        return cls.from_primes(p, q)

    def public(self) -> "SquaringWork":
        return SquaringWork(self.modulus)

    @property
    def aux(self) -> int:
        return self.modulus

    @property
    def element_bits(self) -> int:
        return self.modulus.bit_length() - 1

    def step(self, x: int) -> int:
        return x * x % self.modulus

    def sample_seed(self, rng: np.random.Generator) -> int:
        while True:
            x = random_between(rng, 2, self.modulus - 1)
            if gcd(x, self.modulus) == 1:
                return x

    def check_seed(self, x: int) -> None:
        if not 1 < x < self.modulus or gcd(x, self.modulus) != 1:
            raise ParameterError(f"Seed {x} is not a unit modulo {self.modulus}")

    def fast_power(self, x: int, t: int) -> int:
        if self.phi is None:
            return self.iterate(x, t)
        return pow(x, pow(2, t, self.phi), self.modulus)

    def masks(self, x: int, delays: Sequence[int]) -> list[int]:
        if self.phi is None:
            return super().masks(x, delays)
        return [self.fast_power(x, delay) for delay in delays]


class HashChainWork(WorkFunction):
    """Iterated keyed hash: h_s(x) = HMAC(s, x)."""

    scheme = PuzzleScheme.HASH

    def __init__(self, key: bytes, hash_name: str = "sha256"):
        try:
            self.digest_size = hashlib.new(hash_name).digest_size
        except ValueError as e:
            raise ParameterError(f"Unknown hash '{hash_name}'") from e
        self.key = key
        self.hash_name = hash_name

    @classmethod
    def generate(cls, rng: np.random.Generator, hash_name: str = "sha256") -> "HashChainWork":
        size = hashlib.new(hash_name).digest_size
        return cls(rng.bytes(size), hash_name)

    @classmethod
    def from_aux(cls, aux: int, hash_name: str = "sha256") -> "HashChainWork":
        size = hashlib.new(hash_name).digest_size
        return cls(aux.to_bytes(size, "big"), hash_name)

    @property
    def aux(self) -> int:
        return int.from_bytes(self.key, "big")

    @property
    def element_bits(self) -> int:
        return 8 * self.digest_size

    def step(self, x: int) -> int:
        digest = hmac.new(self.key, x.to_bytes(self.digest_size, "big"), self.hash_name).digest()
        return int.from_bytes(digest, "big")

    def sample_seed(self, rng: np.random.Generator) -> int:
        return random_bits(rng, self.element_bits)

    def check_seed(self, x: int) -> None:
        if x >> self.element_bits:
            raise ParameterError(f"Seed does not fit in {self.element_bits} bits")
