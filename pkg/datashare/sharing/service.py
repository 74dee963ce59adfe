"""k-out-of-n polynomial secret sharing over a prime field."""

import logging
from collections.abc import Sequence
from functools import lru_cache

import galois
import numpy as np
from Crypto.Util.number import isPrime

from datashare.config import config
from datashare.errors import InvalidInputError, ParameterError
from datashare.sharing.models import ByteShare, FieldElement, Share
from datashare.utils.randomness import random_below

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def _is_prime(modulus: int) -> bool:
    return bool(isPrime(modulus))


def check_modulus(modulus: int) -> None:
    if not _is_prime(modulus):
        raise ParameterError(f"Sharing modulus {modulus} is not prime")


def limb_bytes(modulus: int) -> int:
    """Bytes per limb: the widest whole-byte integer still below the modulus."""
    size = (modulus.bit_length() - 1) // 8
    if size < 1:
        raise ParameterError(f"Modulus {modulus} is too small to carry a byte")
    return size


@lru_cache(maxsize=32)
def prime_field(modulus: int) -> type[galois.FieldArray]:
    check_modulus(modulus)
    return galois.GF(modulus, verify=False)


def share(
    secret: FieldElement,
    k: int,
    n: int,
    rng: np.random.Generator,
    coefficients: Sequence[int] | None = None,
) -> tuple[Share, ...]:
    """
    Evaluate secret + c1 x + ... + c_{k-1} x^{k-1} at x = 1..n.

    coefficients pins c1..c_{k-1} instead of drawing them from rng.
    """
    p = secret.modulus
    field = prime_field(p)
    if not 1 <= k <= n:
        raise ParameterError(f"Threshold {k} must lie in 1..{n}")
    if n >= p:
        raise ParameterError(f"{n} parties need a modulus above {n}, got {p}")
    if coefficients is None:
        coefficients = [random_below(rng, p) for _ in range(k - 1)]
    elif len(coefficients) != k - 1:
        raise ParameterError(f"Threshold {k} needs {k - 1} coefficients")
    # galois wants the highest degree first
    polynomial = galois.Poly(
        field([*(c % p for c in reversed(coefficients)), secret.value]), field=field
    )
    values = polynomial(field(list(range(1, n + 1))))
    return tuple(
        Share(index=x, value=FieldElement(value=int(value), modulus=p))
        for x, value in zip(range(1, n + 1), values)
    )


def reconstruct(shares: Sequence[Share], k: int) -> FieldElement | None:
    """Lagrange interpolation at zero; None when fewer than k shares are given."""
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise InvalidInputError(f"Duplicate share indices in {indices}")
    moduli = {s.value.modulus for s in shares}
    if len(moduli) > 1:
        raise InvalidInputError("Shares come from different fields")
    if len(shares) < k or not shares:
        return None
    (p,) = moduli
    used = shares[:k]
    if k == 1:
        return used[0].value
    field = prime_field(p)
    xs = field([s.index % p for s in used])
    ys = field([s.value.value for s in used])
    secret = galois.lagrange_poly(xs, ys)(field(0))
    return FieldElement(value=int(secret), modulus=p)


def share_bytes(
    secret: bytes,
    k: int,
    n: int,
    rng: np.random.Generator,
    modulus: int | None = None,
) -> tuple[ByteShare, ...]:
    """Split into limbs below the modulus and share each limb independently."""
    p = modulus if modulus is not None else config.sharing.modulus
    size = limb_bytes(p)
    chunks = [secret[i : i + size] for i in range(0, len(secret), size)] or [b""]
    per_limb = [
        share(FieldElement(value=int.from_bytes(chunk, "big"), modulus=p), k, n, rng)
        for chunk in chunks
    ]
    return tuple(
        ByteShare(
            index=x,
            limbs=tuple(limb[x - 1].value.value for limb in per_limb),
            length=len(secret),
            modulus=p,
        )
        for x in range(1, n + 1)
    )


def reconstruct_bytes(shares: Sequence[ByteShare], k: int) -> bytes | None:
    if len(shares) < k or not shares:
        return None
    lengths = {(s.length, len(s.limbs), s.modulus) for s in shares}
    if len(lengths) > 1:
        raise InvalidInputError("Byte shares disagree on length or field")
    ((length, count, p),) = lengths
    size = limb_bytes(p)
    out = bytearray()
    for position in range(count):
        limb = reconstruct([s.limb_share(position) for s in shares], k)
        assert limb is not None
        width = min(size, length - position * size)
        if limb.value >= 1 << (8 * max(width, 0)):
            raise InvalidInputError("Reconstructed limb does not fit its width")
        out += limb.value.to_bytes(max(width, 0), "big")
    return bytes(out)
