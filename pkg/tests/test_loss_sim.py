import itertools
import math

import numpy as np
import pytest

from qkdaudit.loss_sim import (
    CSV_COLUMNS,
    AttackStrategy,
    ConfigError,
    ProtocolConfig,
    breach_threshold,
    cloning_success,
    loss_sweep,
    merge_counts,
    perceived_vs_real_rates,
    run_protocol,
    simulate_range,
    tallies_from_counts,
    tallies_to_csv,
)

N = 100_000
NONE = AttackStrategy("none")
USD = AttackStrategy("usd_resend")


def b92(eta=1.0, **kw):
    return ProtocolConfig(protocol="B92", transmittance_eta=eta, n_pulses=kw.pop("n_pulses", N), **kw)


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def bb84_intercept_resend_qber():
    """Enumerate Alice basis/bit, Eve basis, Eve outcome, Bob outcome over sifted events."""
    err = 0.0
    for alpha, a, e in itertools.product((0, 1), (0, 1), (0, 1)):
        weight = 1 / 8
        eve_outcomes = {a: 1.0} if e == alpha else {0: 0.5, 1: 0.5}
        for eb, pe in eve_outcomes.items():
            # Bob measures in alpha; Eve's state in basis e
            p_bob_wrong = 0.0 if e == alpha and eb == a else (1.0 if e == alpha else 0.5)
            err += weight * pe * p_bob_wrong
    return err


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ProtocolConfig(protocol="E91").validate()
        with pytest.raises(ConfigError):
            b92(eta=0.0).validate()
        with pytest.raises(ConfigError):
            b92(overlap_s=1.0).validate()
        with pytest.raises(ConfigError):
            ProtocolConfig(n_pulses=0).validate()
        with pytest.raises(ConfigError):
            ProtocolConfig.from_json({"protocol": "B92", "bogus": 1})

    def test_attack_validation(self):
        with pytest.raises(ConfigError):
            AttackStrategy("blinding").validate()
        with pytest.raises(ConfigError):
            run_protocol(ProtocolConfig(protocol="BB84", n_pulses=10), USD)

    def test_predetection_warning(self):
        with pytest.warns(UserWarning, match="pre_detection"):
            b92(eta=0.3, pre_detection_success=0.5).validate()

    def test_invalid_config_before_any_trial(self):
        with pytest.raises(ConfigError):
            run_protocol(b92(detector_efficiency=1.5), NONE)

    def test_json_roundtrip(self):
        cfg = b92(eta=0.4, seed=17)
        assert ProtocolConfig.from_json(cfg.to_json()) == cfg
        assert cfg.to_json()["bob_receiver"] == "usd_povm"


class TestDeterminism:
    def test_repeatable(self):
        cfg = b92(eta=0.7, seed=99, dark_count_prob=0.01, n_pulses=20_000)
        assert run_protocol(cfg, USD) == run_protocol(cfg, USD)

    @pytest.mark.parametrize("attack", ["none", "intercept_resend", "usd_resend", "cloning_resend"])
    def test_partition_invariance(self, attack):
        cfg = b92(eta=0.6, seed=5, dark_count_prob=0.02, n_pulses=10_001)
        strat = AttackStrategy(attack)
        whole = run_protocol(cfg, strat, chunk_size=10_001)
        assert run_protocol(cfg, strat, chunk_size=977) == whole
        cuts = [0, 13, 4000, 4001, 9000, 10_001]
        parts = [simulate_range(cfg, strat, lo, hi) for lo, hi in zip(cuts, cuts[1:])]
        assert tallies_from_counts(cfg, strat, merge_counts(parts[::-1])) == whole

    def test_seed_matters(self):
        assert run_protocol(b92(seed=1, n_pulses=5000), NONE) != run_protocol(b92(seed=2, n_pulses=5000), NONE)


class TestHonest:
    @pytest.mark.parametrize("s", [0.0, 0.3, 0.5, 0.8])
    def test_noiseless_b92(self, s):
        t = run_protocol(b92(overlap_s=s), NONE)
        assert t.qber == 0.0
        assert abs(t.detection_rate - (1 - s)) <= 3 * sigma(1 - s, N) + 1e-12
        assert t.sifted_bits == t.pulses_detected

    def test_noiseless_bb84(self):
        t = run_protocol(ProtocolConfig(protocol="BB84", n_pulses=N), NONE)
        assert t.qber == 0.0
        assert t.detection_rate == 1.0
        assert abs(t.sifted_bits / N - 0.5) <= 3 * sigma(0.5, N)

    def test_dark_counts_cause_errors(self):
        t = run_protocol(b92(eta=0.1, dark_count_prob=0.05), NONE)
        expected_rate = 0.1 * 0.5 + 0.05 * (1 - 0.1)
        assert abs(t.detection_rate - expected_rate) <= 3 * sigma(expected_rate, N)
        assert t.qber > 0

    def test_monotone_in_eta_and_efficiency(self):
        grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
        rates = [t.detection_rate for t in loss_sweep(b92(seed=3), NONE, grid)]
        assert rates == sorted(rates)
        eff = [run_protocol(b92(eta=0.8, detector_efficiency=e, seed=4), NONE).detection_rate for e in grid]
        assert eff == sorted(eff)

    def test_predetection_filter(self):
        with pytest.warns(UserWarning):
            t = run_protocol(b92(eta=0.5, pre_detection_success=0.6), NONE)
        expected = 0.5 * 0.6 * 0.5
        assert abs(t.detection_rate - expected) <= 3 * sigma(expected, N)


class TestAttacks:
    def test_bb84_intercept_resend(self):
        expected = bb84_intercept_resend_qber()
        assert expected == 0.25
        t = run_protocol(ProtocolConfig(protocol="BB84", n_pulses=N, seed=8), AttackStrategy("intercept_resend"))
        assert abs(t.qber - expected) <= 3 * sigma(expected, t.sifted_bits)
        assert abs(t.eve_known_fraction - 0.5) <= 3 * sigma(0.5, t.sifted_bits)

    def test_b92_usd_breach(self):
        attacked = run_protocol(b92(eta=0.4, seed=10), USD)
        honest = run_protocol(b92(eta=0.4, seed=10), NONE)
        assert attacked.qber == 0.0
        assert attacked.eve_known_fraction == 1.0
        assert attacked.detection_rate >= honest.detection_rate - 3 * sigma(0.2, N) * math.sqrt(2)

    @pytest.mark.parametrize("eta", [0.05, 0.3, 0.7, 1.0])
    def test_usd_never_errs(self, eta):
        assert run_protocol(b92(eta=eta, overlap_s=0.3, seed=int(eta * 100)), USD).error_bits == 0

    def test_b92_intercept_resend_disturbs(self):
        t = run_protocol(b92(seed=12), AttackStrategy("intercept_resend"))
        # Eve fails with prob s, resends a random state; Bob errs when that state is wrong and conclusive
        s = 0.5
        wrong_conclusive = s * 0.5 * (1 - s)
        expected = wrong_conclusive / ((1 - s) * (1 - s) + s * (1 - s))
        assert abs(t.qber - expected) <= 3 * sigma(expected, t.sifted_bits)

    def test_cloning(self):
        s = 0.5
        gamma = cloning_success(s)
        attacked = run_protocol(b92(eta=0.6, seed=13), AttackStrategy("cloning_resend"))
        honest = run_protocol(b92(eta=0.6, seed=13), NONE)
        assert attacked.qber == 0.0
        expected_rate = gamma * (1 - s)
        assert abs(attacked.detection_rate - expected_rate) <= 3 * sigma(expected_rate, N)
        assert attacked.detection_rate >= honest.detection_rate
        assert abs(attacked.eve_known_fraction - (1 - s)) <= 3 * sigma(1 - s, attacked.sifted_bits)

    def test_match_honest_rate(self):
        strat = AttackStrategy("usd_resend", {"match_honest_rate": True})
        attacked = run_protocol(b92(eta=0.3, seed=14), strat)
        honest = run_protocol(b92(eta=0.3, seed=15), NONE)
        assert abs(attacked.detection_rate - honest.detection_rate) <= 3 * math.sqrt(2) * sigma(0.15, N)
        assert attacked.eve_known_fraction == 1.0

    def test_information_without_disturbance_below_threshold(self):
        for eta in (0.1, 0.25, 0.45):
            t = run_protocol(b92(eta=eta, seed=16, n_pulses=20_000), USD)
            assert t.eve_known_fraction == 1.0 and t.qber == 0.0


class TestThreshold:
    def test_values(self):
        cfg = b92()
        assert breach_threshold(0.5, cfg) == 0.5
        assert breach_threshold(0.0, cfg) == 1.0
        assert breach_threshold(0.999999, cfg) == pytest.approx(0.0, abs=1e-5)

    def test_non_b92(self):
        with pytest.raises(ConfigError):
            breach_threshold(0.5, ProtocolConfig(protocol="BB84"))

    def test_monte_carlo_bracket(self):
        eta_star = breach_threshold(0.5, b92())
        below = eta_star - 0.01
        att = run_protocol(b92(eta=below, seed=20), USD)
        hon = run_protocol(b92(eta=below, seed=21), NONE)
        sd = math.sqrt(2) * sigma(0.25, N)
        assert att.qber == 0.0 and att.detection_rate >= hon.detection_rate - 3 * sd
        above = eta_star + 0.05
        att = run_protocol(b92(eta=above, seed=22), USD)
        hon = run_protocol(b92(eta=above, seed=23), NONE)
        assert hon.detection_rate - att.detection_rate > 3 * sd


class TestCloningSuccess:
    def test_values(self):
        assert cloning_success(0.0) == 1.0
        assert cloning_success(1.0) == 0.5
        assert cloning_success(0.5) == pytest.approx(2 / 3)


class TestSweep:
    def test_singleton_equals_direct(self):
        cfg = b92(eta=0.5, seed=31, n_pulses=20_000)
        assert loss_sweep(cfg, USD, [0.5]) == [run_protocol(cfg, USD)]

    def test_empty(self):
        assert loss_sweep(b92(), USD, []) == []

    def test_straddles_threshold(self):
        grid = [0.40, 0.45, 0.55, 0.60]
        att = loss_sweep(b92(seed=40), USD, grid)
        hon = loss_sweep(b92(seed=50), NONE, grid)
        sd = math.sqrt(2) * sigma(0.25, N)
        assert all(t.qber == 0.0 for t in att)
        deficit = [h.detection_rate - a.detection_rate > 3 * sd for a, h in zip(att, hon)]
        assert deficit == [False, False, True, True]

    def test_error_carries_index(self):
        with pytest.raises(ConfigError, match="grid point 1"):
            loss_sweep(b92(n_pulses=100), NONE, [0.5, 1.5])

    def test_csv(self):
        rows = loss_sweep(b92(n_pulses=1000), USD, np.linspace(0.1, 1.0, 11))
        text = tallies_to_csv(rows)
        lines = text.split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 13 and lines[-1] == ""
        assert [float(l.split(",")[0]) for l in lines[1:-1]] == [t.eta for t in rows]


class TestRates:
    def test_honest_noiseless(self):
        r = perceived_vs_real_rates(run_protocol(b92(), NONE))
        assert r["perceived_rate"] == 1.0
        assert r["real_rate_exponent"] == 1.0

    def test_breach(self):
        r = perceived_vs_real_rates(run_protocol(b92(eta=0.4), USD))
        assert r["real_rate_exponent"] == 0.0
        assert r["perceived_rate"] == 1.0
        assert r["informed_rate"] == 0.0

    def test_mixture_arithmetic(self):
        counts = dict(pulses_sent=100, pulses_detected=40, sifted_bits=40, error_bits=0, eve_known_bits=20,
                      ab00=20, ab01=0, ab10=0, ab11=20, unknown_ones=10)
        t = tallies_from_counts(b92(), NONE, counts)
        assert perceived_vs_real_rates(t)["real_rate_exponent"] == pytest.approx(-math.log2(0.75), abs=1e-15)
        assert t.informed_rate == pytest.approx(0.5)

    def test_zero_sifted(self):
        counts = dict(pulses_sent=10, pulses_detected=0, sifted_bits=0, error_bits=0, eve_known_bits=0,
                      ab00=0, ab01=0, ab10=0, ab11=0, unknown_ones=0)
        with pytest.raises(ValueError, match="sifted"):
            perceived_vs_real_rates(tallies_from_counts(b92(), NONE, counts))
