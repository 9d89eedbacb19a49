"""Uplink model: fading statistics, rate/delay algebra, truncation, and
the Monte-Carlo expected delay."""

import math

import numpy as np
import pytest

from aoisim.radio import (RadioModel, calibrated_reference_gain, dbm_to_watts,
                          delay, draw_fading, expected_delay, rate)

TABLE_NOISE_W = dbm_to_watts(-95.0)


def make_model(n=2, bandwidth=180e3, power=0.5, noise=TABLE_NOISE_W,
               payload=10.0, distance=50.0, exponent=3.0, gain=1e-4, tau=1.0):
    return RadioModel(
        bandwidth_hz=bandwidth, tx_power_w=power, noise_w=noise, rb_count=1,
        payload_bits=np.full(n, payload), device_distance_m=np.full(n, distance),
        pathloss_exponent=exponent, reference_gain=gain, slot_duration_s=tau)


class _UnitFading:
    """Stub generator with degenerate (variance-free) fading."""

    def exponential(self, scale=1.0, size=None):
        return np.ones(size)


class TestConversionsAndCalibration:
    def test_dbm_to_watts_reference_point(self):
        assert dbm_to_watts(-95.0) == 10.0 ** ((-95.0 - 30.0) / 10.0)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)

    def test_calibrated_gain_hits_median_edge_snr(self):
        gain = calibrated_reference_gain(0.5, TABLE_NOISE_W, 100.0, 3.0,
                                         target_snr_db=20.0)
        median_g = math.log(2.0)
        snr = 0.5 * gain * 100.0 ** -3.0 * median_g / TABLE_NOISE_W
        assert snr == pytest.approx(100.0, rel=1e-12)


class TestFading:
    def test_law_of_large_numbers(self):
        model = make_model(n=100_000)
        g = draw_fading(model, np.random.default_rng(0))
        assert 0.99 < g.mean() < 1.01

    def test_pathloss_quartic_drop(self):
        near = make_model(distance=10.0, exponent=2.0)
        far = make_model(distance=20.0, exponent=2.0)
        assert near.pathloss(0) / far.pathloss(0) == pytest.approx(4.0)

    def test_identical_seed_identical_sequence(self):
        m1, m2 = make_model(), make_model()
        for _ in range(5):
            draw_fading(m1, np.random.default_rng(99))
        g1 = m1.fading_state
        draw_fading(m2, np.random.default_rng(99))
        np.testing.assert_array_equal(g1, m2.fading_state)  # fresh rng each call

    def test_gain_positive(self):
        model = make_model(n=1000)
        draw_fading(model, np.random.default_rng(1))
        assert np.all(model.fading_state > 0)


class TestRate:
    def test_unselected_rate_is_zero(self):
        model = make_model()
        draw_fading(model, np.random.default_rng(0))
        assert rate(model, 0, False) == 0.0

    def test_unit_snr_gives_bandwidth(self):
        model = make_model(bandwidth=180e3, power=0.5, noise=TABLE_NOISE_W,
                           distance=1.0, gain=1.0)
        # Choose fading so P_T * h / noise == 1.
        model.fading_state = np.full(2, TABLE_NOISE_W / 0.5)
        assert rate(model, 0, True) == pytest.approx(180e3, rel=1e-12)

    def test_reference_parameters_direct_evaluation(self):
        model = make_model(distance=1.0, gain=1.0)
        model.fading_state = np.full(2, 1e-9)
        expected = 180e3 * math.log2(1.0 + 0.5 * 1e-9 / TABLE_NOISE_W)
        assert rate(model, 0, True) == pytest.approx(expected, rel=1e-14)

    def test_monotone_in_gain_and_power(self):
        model = make_model()
        model.fading_state = np.array([1.0, 2.0])
        assert rate(model, 1, True) > rate(model, 0, True)
        boosted = make_model(power=1.0)
        boosted.fading_state = np.array([1.0, 2.0])
        assert rate(boosted, 0, True) > rate(model, 0, True)


class TestDelay:
    def test_division(self):
        model = make_model(bandwidth=180e3, distance=1.0, gain=1.0)
        model.fading_state = np.full(2, TABLE_NOISE_W / 0.5)  # rate == W
        assert delay(model, 0, True) == pytest.approx(10.0 / 180e3, rel=1e-12)

    def test_unselected_is_not_applicable(self):
        model = make_model()
        assert delay(model, 0, False) is None

    def test_matches_payload_over_rate(self):
        model = make_model()
        draw_fading(model, np.random.default_rng(4))
        r = rate(model, 1, True)
        assert delay(model, 1, True) == pytest.approx(10.0 / r, rel=1e-12)

    def test_deep_fade_truncates_and_counts(self):
        model = make_model(tau=1.0)
        model.fading_state = np.full(2, 1e-30)
        before = model.truncation_count
        assert delay(model, 0, True) == 1.0
        assert model.truncation_count == before + 1


class TestExpectedDelay:
    def test_degenerate_fading_equals_point_delay(self):
        model = make_model()
        est = expected_delay(model, 0, 1000, _UnitFading())
        model.fading_state = np.ones(2)
        assert est == pytest.approx(delay(model, 0, True), rel=1e-12)

    def test_deterministic_given_seed(self):
        model = make_model()
        a = expected_delay(model, 0, 100_000, np.random.default_rng(5))
        b = expected_delay(model, 0, 100_000, np.random.default_rng(5))
        assert a == b

    def test_monte_carlo_consistency(self):
        model = make_model()
        n_small = 50_000
        big = expected_delay(model, 0, 1_000_000, np.random.default_rng(6))
        small = expected_delay(model, 0, n_small, np.random.default_rng(7))
        # Standard error of the small estimate from an auxiliary draw.
        g = np.random.default_rng(8).exponential(size=500_000)
        snr = model.tx_power_w * model.pathloss(0) / model.noise_w * g
        d = np.minimum(model.payload_bits[0]
                       / (model.bandwidth_hz * np.log2(1 + snr)), 1.0)
        se = d.std() / np.sqrt(n_small)
        assert abs(big - small) < 3 * se

    def test_jensen_lower_bound(self):
        for dist in (20.0, 60.0, 100.0):
            model = make_model(distance=dist, gain=9e-5)
            est = expected_delay(model, 0, 200_000, np.random.default_rng(9))
            mean_h = model.pathloss(0)  # E[g] = 1
            bound = model.payload_bits[0] / (
                model.bandwidth_hz
                * np.log2(1 + model.tx_power_w * mean_h / model.noise_w))
            assert est >= bound

    def test_invalid_sample_count(self):
        with pytest.raises(ValueError):
            expected_delay(make_model(), 0, 0, np.random.default_rng(0))


class TestValidation:
    def test_mismatched_arrays_rejected(self):
        with pytest.raises(ValueError):
            RadioModel(bandwidth_hz=1e5, tx_power_w=0.5, noise_w=1e-12,
                       rb_count=1, payload_bits=np.ones(2),
                       device_distance_m=np.ones(3), pathloss_exponent=3.0,
                       reference_gain=1e-4)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            make_model(power=0.0)
        with pytest.raises(ValueError):
            make_model(distance=0.0)
