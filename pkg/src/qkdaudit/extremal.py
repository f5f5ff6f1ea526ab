"""Worst-case attacker distributions behind single-number security claims.

A bound on the attacker's information, or on the variational distance to the
uniform key, still admits distributions in which one key value is far more
likely than ``2**-n``. The constructions here build those distributions
explicitly and return the guessing probability they achieve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dist_core import (
    MAX_DENSE_BITS,
    KeyDistribution,
    SubsetSpec,
    binary_entropy,
    eve_information,
    guessing_probability,
    revealed_posterior_p1,
    variational_distance,
)

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class ExtremalResult:
    """Maximal guessing probability under a constraint, and a distribution attaining it."""

    p1_star: float
    witness: KeyDistribution = field(repr=False)
    l_exponent: float
    criterion: str
    constraint: float
    seed: int | None = None

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "constraint": self.constraint,
            "p1_star": self.p1_star,
            "l_exponent": self.l_exponent,
            "seed": self.seed,
            "witness": self.witness.to_json(),
        }


@dataclass(frozen=True)
class KpaWitness:
    """Key distribution whose first ``l_prime`` bits determine all the others."""

    distribution: KeyDistribution = field(repr=False)
    revealed: SubsetSpec
    p1_before: float
    p1_after: float
    l_prime: int
    seed: int

    def to_json(self) -> dict:
        return {
            "l_prime": self.l_prime,
            "seed": self.seed,
            "revealed_positions": list(self.revealed.positions),
            "p1_before": self.p1_before,
            "p1_after": self.p1_after,
            "distribution": self.distribution.to_json(),
        }


def spike_entropy(n_bits: int, p1: float) -> float:
    """Entropy of the spike distribution: ``h(p1) + (1 - p1) log2(2**n - 1)``."""
    return binary_entropy(p1) + (1.0 - p1) * float(np.log2((1 << n_bits) - 1))


def spike_distribution(n_bits: int, p1: float, spike_index: int = 0) -> KeyDistribution:
    """Mass ``p1`` on ``spike_index`` and the remainder spread evenly over the rest.

    For a fixed largest probability this is the highest-entropy distribution
    and the one closest to uniform, which makes it extremal for both criteria.
    """
    if not 1 <= n_bits <= MAX_DENSE_BITS:
        raise ValueError(f"n_bits must lie in [1, {MAX_DENSE_BITS}]")
    size = 1 << n_bits
    if not (1.0 / size - _RANGE_SLACK <= p1 <= 1.0 + _RANGE_SLACK):
        raise ValueError(f"p1={p1} outside [2^-{n_bits}, 1]")
    if not 0 <= spike_index < size:
        raise ValueError(f"spike_index {spike_index} out of range")
    p1 = min(max(p1, 1.0 / size), 1.0)
    tail = (1.0 - p1) / (size - 1)
    if tail >= p1:
        return KeyDistribution.uniform(n_bits)
    probs = np.full(size, tail)
    probs[spike_index] = p1
    return KeyDistribution.from_dense(probs)


def _bisect_decreasing(f, lo: float, hi: float) -> float:
    """Largest ``x`` in ``[lo, hi]`` with ``f(x) >= 0`` for decreasing ``f``."""
    for _ in range(BISECTION_MAX_ITER):
        if hi - lo <= BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def max_guess_given_information(n_bits: int, info_bits: float) -> ExtremalResult:
    """Largest guessing probability among distributions with information <= ``info_bits``.

    The constraint reads ``H(P) >= n_bits - info_bits``. The optimum lies on the
    spike family, whose entropy decreases in ``p1``, so the answer is the root
    of ``spike_entropy(n, p1) = n - info_bits`` found by bisection. The returned
    ``p1_star`` is the feasible end of the final bracket.
    """
    if not 0.0 <= info_bits <= n_bits:
        raise ValueError(f"info_bits={info_bits} outside [0, {n_bits}]")
    size = 1 << n_bits
    target = n_bits - info_bits
    if info_bits == 0.0:
        p1 = 1.0 / size
    elif info_bits == n_bits:
        p1 = 1.0
    else:
        p1 = _bisect_decreasing(lambda p: spike_entropy(n_bits, p) - target, 1.0 / size, 1.0)
    witness = spike_distribution(n_bits, p1)
    p1 = guessing_probability(witness)[0]
    return ExtremalResult(p1, witness, float(-np.log2(p1)), "info", float(info_bits))


def max_guess_given_vd(n_bits: int, epsilon: float) -> ExtremalResult:
    """Largest guessing probability with variational distance to uniform <= ``epsilon``.

    Moving mass ``epsilon`` onto one string is the most a half-L1 budget of
    ``epsilon`` buys, so ``p1_star = 2**-n + epsilon``.
    """
    size = 1 << n_bits
    if not 0.0 <= epsilon <= 1.0 - 1.0 / size + _RANGE_SLACK:
        raise ValueError(f"epsilon={epsilon} outside [0, 1 - 2^-{n_bits}]")
    p1 = min(1.0 / size + epsilon, 1.0)
    witness = spike_distribution(n_bits, p1)
    return ExtremalResult(p1, witness, float(-np.log2(p1)), "vd", float(epsilon))


def kpa_break_length(n_bits: int, l: float) -> float:
    """Number of revealed key bits after which the best guess becomes certain.

    ``l' = l + log2(n_bits)``.
    """
    if l < 0 or n_bits < 1:
        raise ValueError("need l >= 0 and n_bits >= 1")
    return l + float(np.log2(n_bits))


def kpa_witness_family(n_bits: int, l_prime: int, seed: int = 0) -> KpaWitness:
    """Uniform distribution over ``2**l_prime`` strings ``(b, f(b))``.

    ``f`` is a seeded pseudorandom map from the first ``l_prime`` bits to the
    remaining ``n_bits - l_prime``. Before any revelation the best guess
    succeeds with probability ``2**-l_prime``; once the first ``l_prime`` bits
    are known, the key is fixed.
    """
    if not 1 <= n_bits <= 30:
        raise ValueError("n_bits must lie in [1, 30]")
    if not 1 <= l_prime <= n_bits:
        raise ValueError(f"l_prime={l_prime} outside [1, {n_bits}]")
    if l_prime > MAX_DENSE_BITS:
        raise ValueError(f"witness support 2^{l_prime} exceeds the dense cap")
    rest = n_bits - l_prime
    prefixes = np.arange(1 << l_prime, dtype=np.int64)
    rng = np.random.default_rng(seed)
    tails = rng.integers(0, 1 << rest, size=prefixes.size, dtype=np.int64) if rest else 0
    dist = KeyDistribution(n_bits, (prefixes << rest) | tails, np.full(prefixes.size, 2.0**-l_prime))
    positions = tuple(range(l_prime))
    _, fiber_p1 = revealed_posterior_p1(dist, positions)
    return KpaWitness(
        distribution=dist,
        revealed=SubsetSpec(positions),
        p1_before=guessing_probability(dist)[0],
        p1_after=float(fiber_p1.min()),
        l_prime=l_prime,
        seed=seed,
    )


def markov_individual(epsilon_avg: float, confidence: float) -> float:
    """Individual bound ``epsilon_avg / confidence``, failing with probability <= ``confidence``."""
    if not 0.0 < confidence <= 1.0:
        raise ValueError("confidence must lie in (0, 1]")
    if epsilon_avg < 0:
        raise ValueError("epsilon_avg must be non-negative")
    return epsilon_avg / confidence


def check_witness(result: ExtremalResult, tol: float = 1e-9) -> bool:
    """Whether ``result.witness`` satisfies the constraint it was built for."""
    if result.criterion == "info":
        return eve_information(result.witness) <= result.constraint + tol
    if result.criterion == "vd":
        uniform = KeyDistribution.uniform(result.witness.n_bits)
        return variational_distance(result.witness, uniform) <= result.constraint + tol
    raise ValueError(f"unknown criterion {result.criterion!r}")
