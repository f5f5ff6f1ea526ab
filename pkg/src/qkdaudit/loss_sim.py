"""Seeded Monte Carlo of B92 and BB84 over a lossy line, with resend attacks.

Every pulse draws a fixed block of ``SLOTS_PER_PULSE`` uniforms from a Philox
stream keyed by the run seed, at counter offset proportional to the pulse
index. Any partition of the pulses into ranges therefore reproduces the
sequential run exactly once the partial tallies are added together
(:func:`simulate_range`, :func:`merge_counts`).

Modelling choices:

* Bob's B92 receiver is the optimal unambiguous discrimination measurement
  of the two signal states; a conclusive click is a sifted bit.
* Eve sits next to Alice and resends over a lossless line. Bob's
  pre-detection filter and detector efficiency act on her resent pulses
  exactly as on honest ones.
* A resend attempt that fails leaves the slot empty (vacuum); Bob sees a
  click only if a dark count fires.
* Eve's knowledge of a sifted bit is binary: known exactly, or posterior
  1/2 (inconclusive outcomes and wrong-basis results are symmetric).
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dist_core import binary_entropy
from .quantum import DensityOperator, Povm, measure, usd_povm, usd_states

log = logging.getLogger(__name__)

SLOTS_PER_PULSE = 16
_DOUBLES_PER_COUNTER = 4
BB84_OVERLAP = float(np.sqrt(0.5))
UNKNOWN_POSTERIOR = 0.5
PROTOCOLS = ("B92", "BB84")
ATTACKS = ("none", "intercept_resend", "usd_resend", "cloning_resend")

# uniform slots
_A_BIT, _A_BASIS, _E_MEAS, _E_AUX, _E_CLONE, _CHANNEL, _PRE, _DET = range(8)
_B_BASIS, _B_MEAS, _DARK, _DARK_BIT, _THROTTLE = range(8, 13)


class ConfigError(ValueError):
    """Invalid protocol configuration or attack specification."""


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str = "B92"
    overlap_s: float = 0.5
    transmittance_eta: float = 1.0
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    pre_detection_success: float = 1.0
    n_pulses: int = 100_000
    seed: int = 0
    bob_receiver: str = "usd_povm"

    def validate(self) -> "ProtocolConfig":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not 0.0 <= self.overlap_s < 1.0:
            raise ConfigError("overlap_s must lie in [0, 1)")
        for name in ("transmittance_eta", "detector_efficiency", "pre_detection_success"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {value}")
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise ConfigError("dark_count_prob must lie in [0, 1]")
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ConfigError("n_pulses must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.bob_receiver != "usd_povm":
            raise ConfigError("only the usd_povm receiver is modelled")
        if self.pre_detection_success < 1.0 and self.pre_detection_success > self.transmittance_eta:
            warnings.warn(
                "pre_detection_success exceeds the transmittance; a pre-detection stage "
                "cannot succeed more often than the signal survives",
                stacklevel=2,
            )
        return self

    @property
    def signal_overlap(self) -> float:
        return BB84_OVERLAP if self.protocol == "BB84" else self.overlap_s

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: Mapping) -> "ProtocolConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            cfg = cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return cfg.validate()


@dataclass(frozen=True)
class AttackStrategy:
    """Eve's strategy.

    ``parameters`` may hold ``match_honest_rate`` (bool): Eve thins her
    resends so that Bob's click rate matches the honest line at the configured
    transmittance instead of exceeding it.
    """

    kind: str = "none"
    parameters: Mapping = field(default_factory=dict)

    def validate(self, config: ProtocolConfig | None = None) -> "AttackStrategy":
        if self.kind not in ATTACKS:
            raise ConfigError(f"attack kind must be one of {ATTACKS}, got {self.kind!r}")
        unknown = set(self.parameters) - {"match_honest_rate"}
        if unknown:
            raise ConfigError(f"unknown attack parameters: {sorted(unknown)}")
        if config is not None and config.protocol == "BB84" and self.kind in ("usd_resend", "cloning_resend"):
            raise ConfigError(f"{self.kind} needs two signal states; it is defined for B92 only")
        return self

    def to_json(self) -> dict:
        return {"kind": self.kind, "parameters": dict(self.parameters)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "AttackStrategy":
        if "kind" not in obj:
            raise ConfigError("attack needs a 'kind'")
        return cls(obj["kind"], dict(obj.get("parameters", {}))).validate()


@dataclass(frozen=True)
class RunTallies:
    protocol: str
    attack: str
    eta: float
    seed: int
    pulses_sent: int
    pulses_detected: int
    sifted_bits: int
    error_bits: int
    eve_known_bits: int
    ab_counts: tuple[int, int, int, int]
    unknown_ones: int
    qber: float
    detection_rate: float
    eve_known_fraction: float
    perceived_rate: float
    informed_rate: float
    real_rate_exponent: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["ab_counts"] = list(self.ab_counts)
        return out


COUNT_FIELDS = (
    "pulses_sent",
    "pulses_detected",
    "sifted_bits",
    "error_bits",
    "eve_known_bits",
    "ab00",
    "ab01",
    "ab10",
    "ab11",
    "unknown_ones",
)

CSV_COLUMNS = (
    "eta",
    "protocol",
    "attack",
    "seed",
    "pulses_sent",
    "pulses_detected",
    "sifted_bits",
    "error_bits",
    "eve_known_bits",
    "qber",
    "detection_rate",
    "eve_known_fraction",
    "perceived_rate",
    "informed_rate",
    "real_rate_exponent",
)


def cloning_success(overlap_s: float) -> float:
    """Best success probability of exactly cloning one of two equiprobable pure states."""
    if not 0.0 <= overlap_s <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    return 1.0 / (1.0 + overlap_s)


def breach_threshold(overlap_s: float, config: ProtocolConfig) -> float:
    """Largest transmittance at which USD-resend still matches Bob's honest click rate.

    Eve identifies a B92 signal with probability ``1 - s`` and resends it
    losslessly; the honest line delivers it with probability ``eta``. For
    ``eta <= 1 - s`` she covers every slot Bob expects to fill without
    introducing a single error. ``s = 0`` gives 1: orthogonal signals are
    breachable at any transmittance.
    """
    if config.protocol != "B92":
        raise ConfigError("breach threshold is defined for B92")
    if not 0.0 <= overlap_s < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    return 1.0 - overlap_s


def _b92_tables(s: float) -> tuple[np.ndarray, float]:
    povm, _ = usd_povm(s)
    psi0, psi1 = usd_states(s)
    rows = [measure(DensityOperator.pure(psi), povm) for psi in (psi0, psi1)]
    return np.cumsum(rows, axis=1), 1.0 - s


def _bb84_table() -> np.ndarray:
    """``P(result = 0 | state, basis)`` with states |0>, |1>, |+>, |-> indexed basis*2 + bit."""
    h = np.sqrt(0.5)
    vecs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([h, h]), np.array([h, -h])]
    table = np.empty((4, 2))
    for basis in (0, 1):
        projectors = [np.outer(vecs[2 * basis + b], vecs[2 * basis + b]) for b in (0, 1)]
        povm = Povm(projectors)
        for state, v in enumerate(vecs):
            table[state, basis] = measure(DensityOperator.pure(v), povm)[0]
    return table


def _uniforms(seed: int, start: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance(start * SLOTS_PER_PULSE // _DOUBLES_PER_COUNTER)
    return np.random.Generator(bitgen).random((count, SLOTS_PER_PULSE))


def _resend_rate(attack: AttackStrategy, s: float) -> float:
    return {"intercept_resend": 1.0, "usd_resend": 1.0 - s, "cloning_resend": cloning_success(s)}[attack.kind]


def simulate_range(config: ProtocolConfig, attack: AttackStrategy, start: int, stop: int) -> dict:
    """Raw counters for pulses ``start <= i < stop``; see :func:`merge_counts`."""
    u = _uniforms(config.seed, start, stop - start)
    if config.protocol == "B92":
        return _simulate_b92(config, attack, u)
    return _simulate_bb84(config, attack, u)


def _eve_line(config: ProtocolConfig, attack: AttackStrategy, u: np.ndarray, sending: np.ndarray):
    """Which slots reach Bob's input when Eve resends; thinning if requested."""
    arrive = sending
    if attack.parameters.get("match_honest_rate"):
        keep = min(1.0, config.transmittance_eta / _resend_rate(attack, config.signal_overlap))
        arrive = arrive & (u[:, _THROTTLE] < keep)
    return arrive


def _detector(config: ProtocolConfig, u: np.ndarray, arrive: np.ndarray):
    registered = arrive & (u[:, _PRE] < config.pre_detection_success) & (u[:, _DET] < config.detector_efficiency)
    dark = ~registered & (u[:, _DARK] < config.dark_count_prob)
    return registered, dark


def _simulate_b92(config, attack, u):
    s = config.overlap_s
    cum, _ = _b92_tables(s)
    a = (u[:, _A_BIT] >= 0.5).astype(np.int64)
    known = np.zeros(a.size, dtype=bool)
    if attack.kind == "none":
        state = a
        arrive = u[:, _CHANNEL] < config.transmittance_eta
    else:
        eve_outcome = (u[:, _E_MEAS, None] >= cum[a]).sum(axis=1)
        conclusive = eve_outcome < 2
        if attack.kind == "intercept_resend":
            known = conclusive
            state = np.where(conclusive, eve_outcome, (u[:, _E_AUX] >= 0.5).astype(np.int64))
            sending = np.ones(a.size, dtype=bool)
        elif attack.kind == "usd_resend":
            known = conclusive
            state = a
            sending = conclusive
        else:
            cloned = u[:, _E_CLONE] < cloning_success(s)
            known = cloned & conclusive
            state = a
            sending = cloned
        arrive = _eve_line(config, attack, u, sending)
    registered, dark = _detector(config, u, arrive)
    bob_outcome = (u[:, _B_MEAS, None] >= cum[state]).sum(axis=1)
    click = (registered & (bob_outcome < 2)) | dark
    b = np.where(registered, bob_outcome, (u[:, _DARK_BIT] >= 0.5).astype(np.int64))
    return _count(a, b, known, click, click)


def _simulate_bb84(config, attack, u):
    table = _bb84_table()
    a = (u[:, _A_BIT] >= 0.5).astype(np.int64)
    alpha = (u[:, _A_BASIS] >= 0.5).astype(np.int64)
    beta = (u[:, _B_BASIS] >= 0.5).astype(np.int64)
    state = 2 * alpha + a
    known = np.zeros(a.size, dtype=bool)
    if attack.kind == "none":
        arrive = u[:, _CHANNEL] < config.transmittance_eta
    else:
        eve_basis = (u[:, _E_AUX] >= 0.5).astype(np.int64)
        eve_bit = (u[:, _E_MEAS] >= table[state, eve_basis]).astype(np.int64)
        known = eve_basis == alpha
        state = 2 * eve_basis + eve_bit
        arrive = _eve_line(config, attack, u, np.ones(a.size, dtype=bool))
    registered, dark = _detector(config, u, arrive)
    measured = (u[:, _B_MEAS] >= table[state, beta]).astype(np.int64)
    b = np.where(registered, measured, (u[:, _DARK_BIT] >= 0.5).astype(np.int64))
    click = registered | dark
    return _count(a, b, known, click, click & (alpha == beta))


def _count(a, b, known, click, sifted) -> dict:
    a_s, b_s, k_s = a[sifted], b[sifted], known[sifted]
    ab = np.bincount(2 * a_s + b_s, minlength=4)
    return {
        "pulses_sent": int(a.size),
        "pulses_detected": int(click.sum()),
        "sifted_bits": int(sifted.sum()),
        "error_bits": int((a_s != b_s).sum()),
        "eve_known_bits": int(k_s.sum()),
        "ab00": int(ab[0]),
        "ab01": int(ab[1]),
        "ab10": int(ab[2]),
        "ab11": int(ab[3]),
        "unknown_ones": int(a_s[~k_s].sum()),
    }


def merge_counts(parts: Sequence[dict]) -> dict:
    return {k: sum(p[k] for p in parts) for k in COUNT_FIELDS}


def _conditional_entropy_a_given_b(ab: Sequence[int]) -> float:
    total = sum(ab)
    h = 0.0
    for b in (0, 1):
        col = ab[b] + ab[2 + b]
        if col:
            h += col / total * binary_entropy(ab[2 + b] / col)
    return h


def _rates(counts: dict) -> dict:
    sifted = counts["sifted_bits"]
    if not sifted:
        return {
            "qber": 0.0,
            "eve_known_fraction": 0.0,
            "perceived_rate": 0.0,
            "informed_rate": 0.0,
            "real_rate_exponent": 0.0,
        }
    qber = counts["error_bits"] / sifted
    f = counts["eve_known_bits"] / sifted
    ab = [counts[k] for k in ("ab00", "ab01", "ab10", "ab11")]
    h_ab = _conditional_entropy_a_given_b(ab)
    unknown = sifted - counts["eve_known_bits"]
    h_ae = (1.0 - f) * binary_entropy(counts["unknown_ones"] / unknown) if unknown else 0.0
    p1_bit = f + (1.0 - f) * UNKNOWN_POSTERIOR
    return {
        "qber": qber,
        "eve_known_fraction": f,
        # users infer the attacker's ignorance from disturbance alone
        "perceived_rate": max(0.0, 1.0 - binary_entropy(qber) - h_ab),
        "informed_rate": max(0.0, h_ae - h_ab),
        "real_rate_exponent": max(0.0, float(-np.log2(p1_bit))),
    }


def tallies_from_counts(config: ProtocolConfig, attack: AttackStrategy, counts: dict) -> RunTallies:
    rates = _rates(counts)
    return RunTallies(
        protocol=config.protocol,
        attack=attack.kind,
        eta=config.transmittance_eta,
        seed=int(config.seed),
        pulses_sent=counts["pulses_sent"],
        pulses_detected=counts["pulses_detected"],
        sifted_bits=counts["sifted_bits"],
        error_bits=counts["error_bits"],
        eve_known_bits=counts["eve_known_bits"],
        ab_counts=tuple(counts[k] for k in ("ab00", "ab01", "ab10", "ab11")),
        unknown_ones=counts["unknown_ones"],
        detection_rate=counts["pulses_detected"] / counts["pulses_sent"],
        **rates,
    )


def run_protocol(config: ProtocolConfig, attack: AttackStrategy, chunk_size: int = 1 << 16) -> RunTallies:
    """Simulate ``config.n_pulses`` pulses under ``attack`` and tally the outcome."""
    config.validate()
    attack.validate(config)
    bounds = range(0, config.n_pulses, chunk_size)
    parts = [simulate_range(config, attack, lo, min(lo + chunk_size, config.n_pulses)) for lo in bounds]
    tallies = tallies_from_counts(config, attack, merge_counts(parts))
    log.debug("run %s/%s eta=%g: %s", config.protocol, attack.kind, config.transmittance_eta, tallies)
    return tallies


def loss_sweep(config: ProtocolConfig, attack: AttackStrategy, eta_grid: Sequence[float]) -> list[RunTallies]:
    """One run per transmittance; point ``i`` uses seed ``config.seed + i``."""
    out = []
    for i, eta in enumerate(eta_grid):
        point = ProtocolConfig(**{**config.to_json(), "transmittance_eta": float(eta), "seed": (int(config.seed) + i) % 2**64})
        try:
            out.append(run_protocol(point, attack))
        except ValueError as exc:
            raise ConfigError(f"grid point {i} (eta={eta}): {exc}") from exc
    return out


def perceived_vs_real_rates(tallies: RunTallies) -> dict:
    """Key rate the users would claim next to the attacker's per-bit guessing exponent.

    ``perceived`` uses ``H(A|B)`` from the sifted data and credits Eve only
    with what the error rate reveals (``1 - h(qber)`` bits of ignorance).
    ``informed`` replaces that with her actual knowledge state.
    ``real`` is ``-log2`` of her per-bit guessing probability.
    """
    if tallies.sifted_bits <= 0:
        raise ValueError("no sifted bits; rates are undefined")
    return {
        "protocol": tallies.protocol,
        "attack": tallies.attack,
        "eta": tallies.eta,
        "qber": tallies.qber,
        "eve_known_fraction": tallies.eve_known_fraction,
        "perceived_rate": tallies.perceived_rate,
        "informed_rate": tallies.informed_rate,
        "real_rate_exponent": tallies.real_rate_exponent,
        "overstatement": tallies.perceived_rate - tallies.real_rate_exponent,
    }


def tallies_to_csv(rows: Sequence[RunTallies]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in rows:
        d = t.to_json()
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()
