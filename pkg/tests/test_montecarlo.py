import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risfbl.channel import LinkGains, StreamKey, composite_gain, optimal_phases, quantize_phases, \
    sample_realization
from risfbl.config import ConfigError, ScenarioConfig
from risfbl.montecarlo import (
    PERFECT,
    UNADJUSTED,
    EmpiricalCdf,
    SimConfig,
    block_size,
    empirical_quantization_loss,
    gamma_inverse_sample,
    ks_critical,
    ks_distance,
    matched_gamma,
    mode_label,
    parse_phase_mode,
    run_simulation,
    simulate_gain,
    simulate_snr,
    sinc_loss_db,
    summarize,
)
from risfbl.snrstats import GammaParams, moments_x

GAINS = LinkGains(0.7, 1.3, 0.4)
SC = ScenarioConfig()


class TestModes:
    @pytest.mark.parametrize("text, mode", [("perfect", PERFECT), ("Unadjusted", UNADJUSTED),
                                            (2, 2), ("3", 3), ("b1", 1), ("2-bit", 2)])
    def test_parse(self, text, mode):
        assert parse_phase_mode(text) == mode

    @pytest.mark.parametrize("text", ["", "b0", 0, -1, True, "ideal", 1.5])
    def test_parse_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_phase_mode(text)

    def test_labels(self):
        assert [mode_label(m) for m in ("perfect", 2, UNADJUSTED)] == ["perfect", "b2", "unadjusted"]


class TestEngine:
    def test_block_size(self):
        assert block_size(1) == 2**18 and block_size(4096) == 64 and block_size(2**20) == 1

    def test_matches_reference_construction(self):
        # one block: the engine must agree with the explicit complex construction
        key = StreamKey(5, 0)
        r = sample_realization(GAINS, 6, key, count=40)
        out = simulate_gain(GAINS, 6, [PERFECT, 2], 40, 5)
        opt = optimal_phases(r)
        np.testing.assert_allclose(out[PERFECT], np.abs(composite_gain(r, opt)) ** 2, rtol=1e-12)
        np.testing.assert_allclose(out[2], np.abs(composite_gain(r, quantize_phases(opt, 2))) ** 2,
                                   rtol=1e-10)

    def test_unadjusted_uses_its_own_lane(self):
        key = StreamKey(5, 0)
        r = sample_realization(GAINS, 6, key, count=40)
        theta = 2 * math.pi * key.uniforms(6, (40, 6)) - math.pi
        out = simulate_gain(GAINS, 6, [UNADJUSTED], 40, 5)[UNADJUSTED]
        np.testing.assert_allclose(out, np.abs(composite_gain(r, theta)) ** 2, rtol=1e-10)

    def test_modes_are_paired_and_independent_of_selection(self):
        a = simulate_gain(GAINS, 8, [PERFECT], 300, 2)
        b = simulate_gain(GAINS, 8, [1, PERFECT, 3], 300, 2)
        np.testing.assert_array_equal(a[PERFECT], b[PERFECT])
        assert np.all(b[PERFECT] >= b[1] - 1e-12) and np.all(b[PERFECT] >= b[3] - 1e-12)

    def test_worker_count_does_not_change_results(self):
        # N = 4096 gives 64-sample blocks, so 2000 samples span 32 blocks
        one = simulate_gain(GAINS, 4096, [PERFECT, 2], 2000, 9, workers=1)
        for workers in (4, 16):
            other = simulate_gain(GAINS, 4096, [PERFECT, 2], 2000, 9, workers=workers)
            for m in one:
                np.testing.assert_array_equal(one[m], other[m])

    def test_single_sample_reproducible(self):
        a = simulate_gain(GAINS, 1, [PERFECT], 1, 77)[PERFECT]
        assert a.shape == (1,) and a[0] == simulate_gain(GAINS, 1, [PERFECT], 1, 77)[PERFECT][0]

    def test_sample_count_prefix(self):
        a = simulate_gain(GAINS, 4096, [PERFECT], 100, 9)[PERFECT]
        b = simulate_gain(GAINS, 4096, [PERFECT], 200, 9)[PERFECT]
        np.testing.assert_array_equal(a, b[:100])

    def test_amplitude_scales_reflection(self):
        g = LinkGains(0.0, 1.0, 1.0)
        full = simulate_gain(g, 8, [PERFECT], 50, 1)[PERFECT]
        half = simulate_gain(g, 8, [PERFECT], 50, 1, amplitude=0.5)[PERFECT]
        np.testing.assert_allclose(half, 0.25 * full, rtol=1e-14)

    def test_unadjusted_mean_is_incoherent_sum(self):
        n, samples = 32, 100_000
        x = simulate_gain(GAINS, n, [UNADJUSTED], samples, 4)[UNADJUSTED]
        expected = GAINS.varsigma + n * GAINS.varrho * GAINS.vartheta
        se = np.std(x, ddof=1) / math.sqrt(samples)
        assert abs(np.mean(x) - expected) <= 3.5 * se

    @pytest.mark.parametrize("n, samples", [(16, 40_000), (256, 20_000), (1024, 10_000),
                                            (4096, 4_000)])
    def test_mean_snr_matches_closed_form(self, n, samples):
        sc = SC.replace(n_elements=n)
        snr = simulate_snr(sc, [PERFECT], samples, 17)[PERFECT]
        m1 = sc.budget.rho * moments_x(sc.gains, n).m1
        se = np.std(snr, ddof=1) / math.sqrt(samples)
        assert abs(np.mean(snr) - m1) <= 3.5 * se

    def test_coherent_blocked_link_is_steadier_than_unadjusted_direct(self):
        # coefficient of variation: 0.049 against 0.99 at 20000 samples
        a = simulate_snr(SC, [PERFECT], 20_000, 5)[PERFECT]
        b = simulate_snr(SC.replace(direct_link=True), [UNADJUSTED], 20_000, 5)[UNADJUSTED]
        assert np.std(b) / np.mean(b) >= 5 * np.std(a) / np.mean(a)

    def test_relative_spread_shrinks_with_n(self):
        cv = {}
        for n in (16, 1024):
            x = simulate_gain(SC.gains, n, [PERFECT], 5000, 3)[PERFECT]
            cv[n] = np.std(x) / np.mean(x)
        # matched shapes 6.3 and 412 predict a ratio near 8
        assert cv[16] >= 5 * cv[1024]

    def test_quantization_loss_near_sinc(self):
        sc = SC.replace(n_elements=1024)
        for b in (1, 2, 3):
            pair = (SimConfig(sc, 3000, 8, phase_mode=b), SimConfig(sc, 3000, 8))
            assert empirical_quantization_loss(pair) == pytest.approx(sinc_loss_db(b), abs=0.1)

    def test_paired_configs_must_match(self):
        with pytest.raises(ConfigError):
            empirical_quantization_loss((SimConfig(SC, 100, 1, phase_mode=2), SimConfig(SC, 100, 2)))

    def test_sinc_values(self):
        np.testing.assert_allclose([sinc_loss_db(b) for b in (1, 2, 3)], [-3.9224, -0.9121, -0.2244],
                                   atol=1e-4)

    def test_sim_config(self):
        cfg = SimConfig.from_scenario(SC.replace(quant_bits=2), samples=7)
        assert (cfg.phase_mode, cfg.samples, cfg.seed) == (2, 7, SC.seed)
        with pytest.raises(ConfigError):
            SimConfig(SC, 0, 1)


class TestStatistics:
    def test_empirical_cdf(self):
        e = EmpiricalCdf.from_samples([3.0, 1.0, 2.0, 2.0])
        np.testing.assert_allclose(e([0.5, 1.0, 2.0, 5.0]), [0.0, 0.25, 0.75, 1.0])

    def test_summary_clamped_at_least_unclamped(self):
        sc = SC.replace(n_elements=64)
        snr = simulate_snr(sc, [PERFECT], 2000, 1)[PERFECT]
        _, s = summarize(snr, sc)
        assert s.mean_rate_unclamped < 0 <= s.mean_rate_clamped
        assert s.mean_rate_clamped >= s.mean_rate_unclamped

    def test_run_simulation(self):
        emp, s = run_simulation(SimConfig(SC.replace(n_elements=256), 5000, 3))
        assert emp.count == 5000
        assert s.ks_vs_gamma < 0.03

    def test_ks_single_atom_at_median(self):
        g = GammaParams(3.0, 2.0)
        med = float(gamma_inverse_sample(g, 0.5))
        assert ks_distance(EmpiricalCdf.from_samples(np.full(10, med)), g) == pytest.approx(0.5, abs=1e-12)

    def test_ks_large_sample_and_doubled_shape(self):
        g = matched_gamma(SC)
        emp = EmpiricalCdf.from_samples(gamma_inverse_sample(g, StreamKey(42).uniforms(0, 100_000)))
        assert ks_distance(emp, g) <= 0.006
        # doubling alpha doubles the mean of a law this concentrated: no overlap left
        assert ks_distance(emp, GammaParams(2 * g.alpha, g.beta)) == pytest.approx(1.0, abs=1e-9)

    def test_ks_needs_samples(self):
        with pytest.raises(ValueError):
            ks_distance(EmpiricalCdf.from_samples(np.ones(5)), GammaParams(1.0, 1.0))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.5, 500.0), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
    def test_ks_calibration_with_exact_draws(self, alpha, beta, seed):
        # draws from the law itself stay below a generous critical value
        g = GammaParams(alpha, beta)
        u = StreamKey(seed).uniforms(0, 4000)
        d = ks_distance(EmpiricalCdf.from_samples(gamma_inverse_sample(g, u)), g)
        assert d <= ks_critical(4000, 1e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.5, 500.0), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
    def test_ks_rejects_wrong_law(self, alpha, beta, seed):
        g = GammaParams(alpha, beta)
        u = StreamKey(seed).uniforms(0, 4000)
        wrong = GammaParams(alpha, 1.5 * beta)
        d = ks_distance(EmpiricalCdf.from_samples(gamma_inverse_sample(g, u)), wrong)
        assert d > ks_critical(4000, 1e-6)

    def test_simulated_snr_is_close_to_matched_gamma(self):
        sc = SC.replace(n_elements=1024)
        snr = simulate_snr(sc, [PERFECT], 5000, 100)[PERFECT]
        assert ks_distance(EmpiricalCdf.from_samples(snr), matched_gamma(sc)) <= 0.02
