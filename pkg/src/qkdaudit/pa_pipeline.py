"""Error correction plus privacy amplification as one known linear map over GF(2).

Bit conventions follow :mod:`qkdaudit.dist_core`: position 0 is the most
significant bit. Row ``i`` of a :class:`LinearHash` is an ``m``-bit mask whose
MSB multiplies input position 0; output bit ``i`` becomes position ``i`` of
the key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dist_core import KeyDistribution, guessing_probability

MAX_IN_BITS = 24
MAX_DRAWS = 64


def gf2_rank(rows: Sequence[int]) -> int:
    """Rank of a binary matrix given as integer row masks."""
    basis: list[int] = []
    for row in rows:
        for b in basis:
            row = min(row, row ^ b)
        if row:
            basis.append(row)
    return len(basis)


def _parity(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x) & 1


@dataclass(frozen=True)
class LinearHash:
    """Full-row-rank ``n x m`` binary matrix mapping ``m``-bit data to ``n``-bit keys."""

    m: int
    n: int
    rows: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if not 1 <= self.n <= self.m <= MAX_IN_BITS:
            raise ValueError(f"need 1 <= n <= m <= {MAX_IN_BITS}, got n={self.n}, m={self.m}")
        if len(rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(rows)}")
        if any(not 0 <= r < (1 << self.m) for r in rows):
            raise ValueError("row mask out of range")
        if gf2_rank(rows) != self.n:
            raise ValueError("hash matrix is not full row rank")
        object.__setattr__(self, "rows", rows)

    def matrix(self) -> np.ndarray:
        shifts = np.arange(self.m - 1, -1, -1)
        return ((np.array(self.rows)[:, None] >> shifts) & 1).astype(np.uint8)

    def apply(self, x) -> np.ndarray:
        """Hash data indices to key indices (vectorized)."""
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros(x.shape, dtype=np.int64)
        for r in self.rows:
            out = (out << 1) | _parity(x & r)
        return out

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "seed": self.seed, "rows": list(self.rows)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "LinearHash":
        return cls(int(obj["m"]), int(obj["n"]), tuple(obj["rows"]), obj.get("seed"))


def toeplitz_rows(diagonals: Sequence[int], m: int, n: int) -> tuple[int, ...]:
    """Row masks of the Toeplitz matrix ``T[i, j] = diagonals[i - j + m - 1]``."""
    rows = []
    for i in range(n):
        mask = 0
        for j in range(m):
            mask = (mask << 1) | int(diagonals[i - j + m - 1])
        rows.append(mask)
    return tuple(rows)


def random_toeplitz_hash(m: int, n: int, seed: int) -> LinearHash:
    """Seeded random Toeplitz hash, redrawn until it has full row rank."""
    if not 1 <= n <= m <= MAX_IN_BITS:
        raise ValueError(f"need 1 <= n <= m <= {MAX_IN_BITS}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_DRAWS):
        rows = toeplitz_rows(rng.integers(0, 2, size=m + n - 1), m, n)
        if gf2_rank(rows) == n:
            return LinearHash(m, n, rows, seed)
    raise RuntimeError(f"no full-rank Toeplitz matrix after {MAX_DRAWS} draws")


def pushforward(P_X: KeyDistribution, hash: LinearHash) -> KeyDistribution:
    """Key distribution induced by hashing data distributed as ``P_X`` (exact fiber sums)."""
    if P_X.n_bits != hash.m:
        raise ValueError(f"dimension mismatch: data has {P_X.n_bits} bits, hash expects {hash.m}")
    return KeyDistribution(hash.n, hash.apply(P_X.indices), P_X.values)


def pushforward_dense(probs: np.ndarray, hash: LinearHash) -> np.ndarray:
    """Batched fiber sums over the last axis of dense data distributions.

    ``probs`` has shape ``(..., 2**m)``; the result has shape ``(..., 2**n)``.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape[-1] != 1 << hash.m:
        raise ValueError(f"last axis must have length 2^{hash.m}")
    image = hash.apply(np.arange(1 << hash.m))
    onehot = np.zeros((1 << hash.m, 1 << hash.n))
    onehot[np.arange(1 << hash.m), image] = 1.0
    return probs @ onehot


def pa_invariance_check(P_X: KeyDistribution, hash: LinearHash) -> dict:
    """Compare the best guess of the data with the best guess of the hashed key.

    A deterministic map can only merge values, so ``p1 >= q1``. Equality holds
    when no other data value shares the most likely value's fiber with
    positive mass.
    """
    P_K = pushforward(P_X, hash)
    q1, x_star = guessing_probability(P_X)
    p1, k_star = guessing_probability(P_K)
    fiber_mass = P_K.prob(int(hash.apply(x_star)))
    return {
        "q1": q1,
        "p1": p1,
        "not_improved": bool(p1 >= q1 - 1e-15),
        "equal": bool(abs(p1 - q1) <= 1e-12),
        "spike_to_spike": bool(abs(fiber_mass - q1) <= 1e-12 and abs(p1 - q1) <= 1e-12),
        "data_argmax": x_star,
        "key_argmax": k_star,
    }


def extractable_bits(P: KeyDistribution) -> tuple[float, float]:
    """``l = -log2 p1`` secure bits and the exponent ``r = l / n_bits``."""
    p1, _ = guessing_probability(P)
    l = max(float(-np.log2(p1)), 0.0)
    return l, l / P.n_bits
