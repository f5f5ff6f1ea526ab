"""Small density-operator calculus and the coupling reading of trace distance.

Dimensions are capped at 64, so every norm is a dense Hermitian
eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .dist_core import KeyDistribution, SubsetSpec, _as_aligned, subset_security_gap, variational_distance
from .extremal import max_guess_given_vd

MAX_DIM = 64
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


def _check_hermitian_psd(m: np.ndarray, what: str) -> np.ndarray:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError(f"{what} is not Hermitian")
    evals = np.linalg.eigvalsh(m)
    if evals.size and evals.min() < -PSD_TOL:
        raise ValueError(f"{what} has eigenvalue {evals.min():.3g} < 0")
    return evals


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix of dimension <= 64."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim == 2 and not 1 <= m.shape[0] <= MAX_DIM:
            raise ValueError(f"dimension must lie in [1, {MAX_DIM}]")
        _check_hermitian_psd(m, "density operator")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr!r} is not 1")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=np.complex128).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    def to_json(self) -> dict:
        return {"dim": self.dim, "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DensityOperator":
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        rho = cls(re + 1j * im)
        if "dim" in obj and int(obj["dim"]) != rho.dim:
            raise ValueError(f"declared dim {obj['dim']} does not match matrix {rho.dim}")
        return rho


@dataclass(frozen=True)
class Povm:
    """Positive operator-valued measure: PSD elements summing to the identity."""

    outcomes: tuple = field(repr=False)

    def __post_init__(self):
        elems = tuple(np.array(e, dtype=np.complex128) for e in self.outcomes)
        if not elems:
            raise ValueError("a POVM needs at least one element")
        dim = elems[0].shape[0]
        for i, e in enumerate(elems):
            if e.shape != (dim, dim):
                raise ValueError(f"POVM element {i} has shape {e.shape}, expected {(dim, dim)}")
            _check_hermitian_psd(e, f"POVM element {i}")
        if np.max(np.abs(sum(elems) - np.eye(dim))) > HERMITIAN_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "outcomes", elems)

    @property
    def dim(self) -> int:
        return self.outcomes[0].shape[0]

    def __len__(self):
        return len(self.outcomes)


@dataclass(frozen=True)
class CqEnsemble:
    """Key values ``k`` with weights ``w_k`` and the attacker's probe states."""

    weights: np.ndarray
    states: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        states = tuple(self.states)
        if not states:
            raise ValueError("empty ensemble")
        if w.size != len(states):
            raise ValueError("one weight per state required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must form a probability vector")
        if len({s.dim for s in states}) != 1:
            raise ValueError("all probe states must share a dimension")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", states)

    @classmethod
    def uniform(cls, states: Sequence[DensityOperator]) -> "CqEnsemble":
        return cls(np.full(len(states), 1.0 / len(states)), tuple(states))

    @property
    def average_state(self) -> np.ndarray:
        return sum(w * s.matrix for w, s in zip(self.weights, self.states))

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "states": [s.to_json() for s in self.states]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CqEnsemble":
        states = [DensityOperator.from_json(s) for s in obj["states"]]
        weights = obj.get("weights")
        if weights is None:
            return cls.uniform(states)
        return cls(np.asarray(weights, dtype=float), tuple(states))


@dataclass(frozen=True)
class JointDistribution:
    """Coupling of two distributions over ``n_bits`` strings; rows are X, columns Y."""

    n_bits: int
    joint: np.ndarray = field(repr=False)

    def __post_init__(self):
        j = np.asarray(self.joint, dtype=float)
        size = 1 << self.n_bits
        if j.shape != (size, size):
            raise ValueError(f"joint must be {size}x{size}")
        if np.any(j < 0) or abs(j.sum() - 1.0) > 1e-12:
            raise ValueError("joint must be a probability matrix")
        j.setflags(write=False)
        object.__setattr__(self, "joint", j)

    @property
    def first_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def second_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    @property
    def mismatch(self) -> float:
        """``Pr[X != Y]``."""
        return float(max(1.0 - np.trace(self.joint), 0.0))


def trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(m)).sum())


def trace_distance(rho1: DensityOperator, rho2: DensityOperator) -> float:
    if rho1.dim != rho2.dim:
        raise ValueError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    return min(0.5 * trace_norm(rho1.matrix - rho2.matrix), 1.0)


def measure(rho: DensityOperator, povm: Povm) -> np.ndarray:
    """Outcome probabilities ``Tr(E_i rho)``.

    Negative values down to ``-1e-12`` are floating-point noise and are
    clipped before renormalizing; anything more negative is an error.
    """
    if rho.dim != povm.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim} vs POVM {povm.dim}")
    probs = np.array([np.einsum("ij,ji->", e, rho.matrix) for e in povm.outcomes])
    if np.max(np.abs(probs.imag)) > TRACE_TOL:
        raise ValueError("outcome probabilities are not real")
    probs = probs.real
    if probs.min() < -1e-12:
        raise ValueError(f"negative outcome probability {probs.min():.3g}")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def cq_distance(ensemble: CqEnsemble) -> float:
    """Distance between the joint key-probe state and uniform key times average probe.

    The joint state is block diagonal in the key basis, so the trace norm
    splits into one ``dim x dim`` block per key value:
    ``0.5 * sum_k || w_k rho_k - rho_E / N ||_1``.
    """
    n_keys = len(ensemble.states)
    rho_e = ensemble.average_state
    return 0.5 * sum(
        trace_norm(w * s.matrix - rho_e / n_keys) for w, s in zip(ensemble.weights, ensemble.states)
    )


def measured_key_distance(ensemble: CqEnsemble, povm: Povm) -> float:
    """Variational distance after the attacker measures her probe.

    Compares the classical joint ``P(k, y) = w_k Tr(E_y rho_k)`` with
    ``P(y) / N``, i.e. the outcome-averaged distance of her key posterior from
    uniform. Never exceeds :func:`cq_distance`.
    """
    joint = np.array([w * measure(s, povm) for w, s in zip(ensemble.weights, ensemble.states)])
    reference = np.broadcast_to(joint.sum(axis=0) / len(ensemble.states), joint.shape)
    return variational_distance(joint, reference)


def maximal_coupling(P, Q) -> JointDistribution:
    """Coupling with ``Pr[X != Y] = variational_distance(P, Q)``.

    The diagonal carries ``min(p, q)``; the leftover masses ``p - min`` and
    ``q - min`` are coupled independently off the diagonal.
    """
    p, q, n_bits = _dense_pair(P, Q)
    overlap = np.minimum(p, q)
    delta = 1.0 - overlap.sum()
    joint = np.diag(overlap)
    if delta > 0:
        joint = joint + np.outer(p - overlap, q - overlap) / delta
    return JointDistribution(n_bits, joint)


def independent_coupling(P, Q) -> JointDistribution:
    p, q, n_bits = _dense_pair(P, Q)
    return JointDistribution(n_bits, np.outer(p, q))


def _dense_pair(P, Q) -> tuple[np.ndarray, np.ndarray, int]:
    if isinstance(P, KeyDistribution) and isinstance(Q, KeyDistribution):
        if P.n_bits != Q.n_bits:
            raise ValueError(f"dimension mismatch: {P.n_bits} vs {Q.n_bits} bits")
        return P.dense(), Q.dense(), P.n_bits
    p, q = _as_aligned(P, Q)
    n_bits = int(round(np.log2(p.size)))
    if (1 << n_bits) != p.size:
        raise ValueError("probability vectors must have power-of-two length")
    return p, q, n_bits


def interpretation_gap_report(epsilon: float, n_bits: int) -> dict:
    """Contrast the "uniform except with probability epsilon" reading with a witness.

    The witness is the distribution at distance ``epsilon`` from uniform that
    maximizes the guessing probability. Under the perceived reading the key is
    perfect, so the best guess succeeds with probability ``2**-n``, and even
    charging the whole failure event to the attacker gives at most
    ``epsilon + (1 - epsilon) 2**-n``. The witness reaches ``2**-n + epsilon``.
    Per-subset gaps cover every singleton and every pair of positions.
    """
    result = max_guess_given_vd(n_bits, epsilon)
    uniform_p1 = 2.0**-n_bits
    bound = epsilon + (1.0 - epsilon) * uniform_p1
    subsets = [(i,) for i in range(n_bits)] + list(combinations(range(n_bits), 2))
    gaps = []
    for positions in subsets:
        gap, p1_sub = subset_security_gap(result.witness, SubsetSpec(positions))
        gaps.append({"positions": list(positions), "p1": p1_sub, "epsilon": gap})
    return {
        "epsilon": float(epsilon),
        "n_bits": n_bits,
        "perceived_p1": uniform_p1,
        "perceived_failure_bound": bound,
        "actual_p1": result.p1_star,
        "dominance_factor": result.p1_star / uniform_p1,
        "exceeds_failure_bound": bool(result.p1_star > bound + 1e-15),
        "max_subset_gap": max(g["epsilon"] for g in gaps),
        "subset_gaps": gaps,
    }


def usd_povm(overlap: float) -> tuple[Povm, float]:
    """Optimal unambiguous discrimination of two real qubit states with overlap ``s``.

    The states are ``(cos t, +sin t)`` and ``(cos t, -sin t)`` with
    ``cos 2t = s``. Outcomes are (identify-0, identify-1, inconclusive); on
    equiprobable inputs the conclusive rate is ``1 - s`` and no state is ever
    misidentified.
    """
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must lie in [0, 1); equal states cannot be discriminated")
    psi0, psi1 = usd_states(overlap)
    perp0 = np.array([psi0[1], -psi0[0]])
    perp1 = np.array([psi1[1], -psi1[0]])
    c = 1.0 / (1.0 + overlap)
    e0 = c * np.outer(perp1, perp1)
    e1 = c * np.outer(perp0, perp0)
    inconclusive = np.eye(2) - e0 - e1
    inconclusive[np.abs(inconclusive) < 1e-15] = 0.0
    return Povm((e0, e1, inconclusive)), 1.0 - overlap


def usd_states(overlap: float) -> tuple[np.ndarray, np.ndarray]:
    """The two real signal vectors with inner product ``overlap``."""
    t = 0.5 * np.arccos(overlap)
    return np.array([np.cos(t), np.sin(t)]), np.array([np.cos(t), -np.sin(t)])
