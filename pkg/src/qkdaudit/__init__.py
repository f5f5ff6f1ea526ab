"""Quantitative audits of QKD security criteria.

Worst-case attacker distributions under single-number bounds, trace-distance
and coupling calculus, privacy-amplification pushforwards and a lossy-channel
protocol simulator.
"""

from .dist_core import (
    InconsistentRevelation,
    KeyDistribution,
    SubsetSpec,
    condition_on_revealed_bits,
    distance_to_uniform,
    eve_information,
    guessing_probability,
    marginal,
    revealed_posterior_p1,
    shannon_entropy,
    subset_security_gap,
    variational_distance,
)
from .extremal import (
    ExtremalResult,
    KpaWitness,
    kpa_break_length,
    kpa_witness_family,
    markov_individual,
    max_guess_given_information,
    max_guess_given_vd,
    spike_distribution,
)
from .loss_sim import (
    AttackStrategy,
    ConfigError,
    ProtocolConfig,
    RunTallies,
    breach_threshold,
    cloning_success,
    loss_sweep,
    perceived_vs_real_rates,
    run_protocol,
)
from .pa_pipeline import LinearHash, extractable_bits, pa_invariance_check, pushforward, random_toeplitz_hash
from .quantum import (
    CqEnsemble,
    DensityOperator,
    JointDistribution,
    Povm,
    cq_distance,
    independent_coupling,
    interpretation_gap_report,
    maximal_coupling,
    measure,
    measured_key_distance,
    trace_distance,
    usd_povm,
)

__version__ = "0.1.0"
