"""Finite distributions over bit strings and the classical security functionals.

A :class:`KeyDistribution` is an attacker's posterior over the ``2**n_bits``
values of a data block or a key. Bit strings are indexed by their integer
value with the most significant bit at position 0, so position ``p`` of index
``x`` is ``(x >> (n_bits - 1 - p)) & 1``.

Storage is sparse (sorted support indices plus weights); :meth:`KeyDistribution.dense`
materializes the full vector for ``n_bits <= 20``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_BITS = 30
MAX_DENSE_BITS = 20
NORM_TOL = 1e-12


class InconsistentRevelation(ValueError):
    """Revealed key bits have zero probability under the distribution."""


def _bits_at(indices: np.ndarray, n_bits: int, positions: Sequence[int]) -> np.ndarray:
    """Pack the bits of ``indices`` at ``positions`` into a sub-index (MSB first)."""
    out = np.zeros(indices.shape, dtype=np.int64)
    for p in positions:
        out = (out << 1) | ((indices >> (n_bits - 1 - p)) & 1)
    return out


def index_to_bits(index: int, n_bits: int) -> str:
    return format(int(index), f"0{n_bits}b") if n_bits else ""


def bits_to_index(bits: str) -> int:
    return int(bits, 2) if bits else 0


@dataclass(frozen=True)
class KeyDistribution:
    """Probability distribution over ``n_bits``-bit strings.

    Parameters
    ----------
    n_bits : int
        Length of the strings, ``1 <= n_bits <= 30``.
    indices : array_like of int
        Support indices in ``[0, 2**n_bits)``.
    values : array_like of float
        Probabilities aligned with ``indices``.

    Duplicate indices are summed and zero-mass entries dropped, so two
    distributions with the same mass function compare equal structurally.
    """

    n_bits: int
    indices: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n_bits)
        if not 1 <= n <= MAX_BITS:
            raise ValueError(f"n_bits must lie in [1, {MAX_BITS}], got {self.n_bits}")
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values must have the same length")
        if idx.size and (idx.min() < 0 or idx.max() >= (1 << n)):
            raise ValueError(f"index out of range for {n} bits")
        if not np.all(np.isfinite(val)) or np.any(val < 0):
            raise ValueError("probabilities must be finite and non-negative")
        total = float(val.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            idx, inverse = np.unique(idx, return_inverse=True)
            val = np.bincount(inverse, weights=val, minlength=idx.size)
        keep = val > 0
        idx, val = idx[keep], val[keep]
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "n_bits", n)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    # constructors

    @classmethod
    def from_dense(cls, probs: Iterable[float]) -> "KeyDistribution":
        p = np.asarray(probs, dtype=np.float64).ravel()
        n = int(round(np.log2(p.size))) if p.size else 0
        if p.size < 2 or (1 << n) != p.size:
            raise ValueError(f"dense vector length {p.size} is not a power of two >= 2")
        return cls(n, np.arange(p.size, dtype=np.int64), p)

    @classmethod
    def from_mapping(cls, n_bits: int, probs: Mapping[int, float]) -> "KeyDistribution":
        keys = np.fromiter(probs.keys(), dtype=np.int64, count=len(probs))
        vals = np.fromiter(probs.values(), dtype=np.float64, count=len(probs))
        return cls(n_bits, keys, vals)

    @classmethod
    def uniform(cls, n_bits: int) -> "KeyDistribution":
        if n_bits > MAX_DENSE_BITS:
            raise ValueError(f"uniform distribution is dense; n_bits capped at {MAX_DENSE_BITS}")
        size = 1 << n_bits
        return cls(n_bits, np.arange(size, dtype=np.int64), np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, n_bits: int, index: int) -> "KeyDistribution":
        return cls(n_bits, np.array([index]), np.array([1.0]))

    # views

    @property
    def size(self) -> int:
        """Number of possible strings, ``2**n_bits``."""
        return 1 << self.n_bits

    def dense(self) -> np.ndarray:
        if self.n_bits > MAX_DENSE_BITS:
            raise ValueError(f"dense view capped at {MAX_DENSE_BITS} bits")
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out

    def prob(self, index: int) -> float:
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return float(self.values[pos])
        return 0.0

    def to_json(self) -> dict:
        return {
            "n_bits": self.n_bits,
            "probs": [[int(i), float(v)] for i, v in zip(self.indices, self.values)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "KeyDistribution":
        try:
            pairs = obj["probs"]
            n_bits = int(obj["n_bits"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed KeyDistribution JSON: {exc}") from None
        if not pairs:
            raise ValueError("KeyDistribution JSON has an empty probs list")
        idx, val = zip(*((int(i), float(v)) for i, v in pairs))
        return cls(n_bits, np.array(idx), np.array(val))

    def __eq__(self, other):
        if not isinstance(other, KeyDistribution):
            return NotImplemented
        return (
            self.n_bits == other.n_bits
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class SubsetSpec:
    """A subset of key bit positions, optionally with revealed values.

    ``values`` is a bit string such as ``"101"``, one character per position.
    """

    positions: tuple[int, ...]
    values: str | None = None

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("positions must be strictly increasing")
        if pos and pos[0] < 0:
            raise ValueError("positions must be non-negative")
        if self.values is not None:
            if len(self.values) != len(pos) or set(self.values) - {"0", "1"}:
                raise ValueError("values must be a bit string with one bit per position")
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)

    def check_against(self, n_bits: int) -> None:
        if self.positions and self.positions[-1] >= n_bits:
            raise ValueError(f"position {self.positions[-1]} out of range for {n_bits} bits")


# functionals


def binary_entropy(p: float) -> float:
    """Binary entropy ``h(p)`` in bits, with ``h(0) = h(1) = 0``."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def shannon_entropy(P: KeyDistribution) -> float:
    v = P.values
    h = float(-(v * np.log2(v)).sum())
    return min(max(h, 0.0), float(P.n_bits))


def eve_information(P: KeyDistribution) -> float:
    """Information the posterior carries about the key: ``n_bits - H(P)``."""
    return max(P.n_bits - shannon_entropy(P), 0.0)


def _as_aligned(P, Q) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(P, KeyDistribution) and isinstance(Q, KeyDistribution):
        if P.n_bits != Q.n_bits:
            raise ValueError(f"dimension mismatch: {P.n_bits} vs {Q.n_bits} bits")
        idx = np.union1d(P.indices, Q.indices)
        p = np.zeros(idx.size)
        q = np.zeros(idx.size)
        p[np.searchsorted(idx, P.indices)] = P.values
        q[np.searchsorted(idx, Q.indices)] = Q.values
        return p, q
    if isinstance(P, KeyDistribution) or isinstance(Q, KeyDistribution):
        P = P.dense() if isinstance(P, KeyDistribution) else P
        Q = Q.dense() if isinstance(Q, KeyDistribution) else Q
    p = np.asarray(P, dtype=np.float64)
    q = np.asarray(Q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return p, q


def variational_distance(P, Q) -> float:
    """Half the L1 distance between two distributions.

    Accepts two :class:`KeyDistribution` objects of equal ``n_bits`` or two
    probability vectors of equal shape (e.g. measurement outcome statistics).
    """
    p, q = _as_aligned(P, Q)
    return min(0.5 * float(np.abs(p - q).sum()), 1.0)


def guessing_probability(P: KeyDistribution) -> tuple[float, int]:
    """Maximum probability and the smallest index attaining it."""
    p1 = P.values.max()
    return float(p1), int(P.indices[np.flatnonzero(P.values == p1)[0]])


def marginal(P: KeyDistribution, subset: SubsetSpec | Sequence[int]) -> KeyDistribution:
    positions = subset.positions if isinstance(subset, SubsetSpec) else tuple(subset)
    SubsetSpec(positions).check_against(P.n_bits)
    if not positions:
        raise ValueError("empty subset")
    k = len(positions)
    sub = _bits_at(P.indices, P.n_bits, positions)
    if k <= MAX_DENSE_BITS:
        # bincount avoids sorting 2^n entries when the subset is small
        dense = np.bincount(sub, weights=P.values, minlength=1 << k)
        return KeyDistribution(k, np.arange(1 << k), dense)
    return KeyDistribution(k, sub, P.values)


def subset_security_gap(P: KeyDistribution, subset: SubsetSpec) -> tuple[float, float]:
    """Gap between the best guess of the bits in ``subset`` and the uniform baseline.

    Returns ``(epsilon, p1_subset)`` with ``epsilon = |p1_subset - 2**-k|`` and
    ``k = len(subset)``.
    """
    if not len(subset):
        raise ValueError("empty subset")
    if subset.values is not None:
        raise ValueError("subset_security_gap takes a pure marginal subset (no values)")
    p1, _ = guessing_probability(marginal(P, subset))
    return abs(p1 - 2.0 ** -len(subset)), p1


def condition_on_revealed_bits(P: KeyDistribution, revealed: SubsetSpec) -> KeyDistribution:
    """Posterior after the bits at ``revealed.positions`` become known."""
    if revealed.values is None:
        raise ValueError("revealed subset must carry values")
    revealed.check_against(P.n_bits)
    if not len(revealed):
        return P
    target = bits_to_index(revealed.values)
    keep = _bits_at(P.indices, P.n_bits, revealed.positions) == target
    mass = float(P.values[keep].sum())
    if mass <= 0.0:
        raise InconsistentRevelation(
            f"revealed bits {revealed.values} at {revealed.positions} have probability 0"
        )
    return KeyDistribution(P.n_bits, P.indices[keep], P.values[keep] / mass)


def revealed_posterior_p1(P: KeyDistribution, positions: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Posterior guessing probability for every possible revelation of ``positions``.

    Returns ``(revealed_values, p1)`` for each revealed sub-index with positive
    mass; ``p1[i]`` equals the guessing probability of
    ``condition_on_revealed_bits`` on that revelation, computed in one pass.
    """
    positions = tuple(positions)
    SubsetSpec(positions).check_against(P.n_bits)
    keys = _bits_at(P.indices, P.n_bits, positions)
    uniq, inverse = np.unique(keys, return_inverse=True)
    mass = np.bincount(inverse, weights=P.values, minlength=uniq.size)
    top = np.zeros(uniq.size)
    np.maximum.at(top, inverse, P.values)
    return uniq, top / mass


def distance_to_uniform(P: KeyDistribution) -> float:
    """``variational_distance(P, U)`` without materializing the uniform vector."""
    u = 1.0 / P.size
    off_support = (P.size - P.indices.size) * u
    return min(0.5 * (float(np.abs(P.values - u).sum()) + off_support), 1.0)
