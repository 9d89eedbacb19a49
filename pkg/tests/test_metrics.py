"""Age recursions, energy accounting, ledger replay consistency, and the
fixed CSV schema."""

import numpy as np
import pytest

from aoisim.metrics import (LEDGER_COLUMNS, CostLedger, DeviceState,
                            queue_delay_s, reconstruction_error, slot_energy,
                            update_bs_aoi, update_device_aoi, weighted_cost)


def make_device(**kw):
    defaults = dict(slot_duration=1.0, device_aoi_cap=5.0, bs_aoi_cap=5.0)
    defaults.update(kw)
    return DeviceState(**defaults)


class TestDeviceAoi:
    def test_compliant_sample_resets_to_zero(self):
        d = make_device()
        assert update_device_aoi(d, sampled=1, delta_t=2.0, max_interval=5.0) == 0.0

    def test_no_sample_caps_at_maximum(self):
        d = make_device(device_aoi=4.5)
        assert update_device_aoi(d, sampled=0, delta_t=0.0, max_interval=5.0) == 5.0

    def test_late_sample_keeps_excess(self):
        d = make_device()
        assert update_device_aoi(d, sampled=1, delta_t=7.0, max_interval=5.0) == 2.0

    def test_exactly_one_branch_fires(self):
        for sampled in (0, 1):
            d = make_device(device_aoi=1.0)
            out = update_device_aoi(d, sampled, delta_t=3.0, max_interval=4.0)
            if sampled:
                assert out == 0.0          # within the interval
            else:
                assert out == 2.0          # aged by one slot

    def test_preconditions(self):
        d = make_device()
        with pytest.raises(ValueError):
            update_device_aoi(d, 1, -1.0, 5.0)
        with pytest.raises(ValueError):
            update_device_aoi(d, 1, 1.0, 0.0)


class TestBsAoi:
    def test_upload_sets_age_plus_delay(self):
        d = make_device()
        out = update_bs_aoi(d, selected=1, device_aoi=0.0, delay=5.6e-5)
        assert out == pytest.approx(5.6e-5)

    def test_no_upload_caps(self):
        d = make_device(bs_aoi=4.2)
        assert update_bs_aoi(d, 0, 0.0, None) == 5.0

    def test_no_upload_ages_one_slot(self):
        d = make_device(bs_aoi=1.0)
        assert update_bs_aoi(d, 0, 0.0, None) == 2.0

    def test_cap_never_exceeded_without_upload(self):
        d = make_device(bs_aoi=0.0)
        for _ in range(20):
            assert update_bs_aoi(d, 0, 0.0, None) <= 5.0

    def test_selected_needs_delay(self):
        d = make_device()
        with pytest.raises(ValueError):
            update_bs_aoi(d, 1, 0.0, None)


class TestEnergy:
    def test_sampling_only(self):
        led = CostLedger(sampling_cost_j=5e-4, tx_power_w=0.5)
        assert slot_energy(1, 0, None, led) == 5e-4

    def test_idle_is_free(self):
        led = CostLedger()
        assert slot_energy(0, 0, None, led) == 0.0

    def test_sample_and_transmit(self):
        led = CostLedger(sampling_cost_j=5e-4, tx_power_w=0.5)
        l = 5.556e-5
        assert slot_energy(1, 1, l, led) == pytest.approx(5e-4 + 0.5 * l)

    def test_additive_nonnegative_zero_iff_idle(self):
        led = CostLedger(sampling_cost_j=5e-4, tx_power_w=0.5)
        for s in (0, 1):
            for u in (0, 1):
                e = slot_energy(s, u, 1e-4, led)
                assert e >= 0.0
                assert (e == 0.0) == (s == 0 and u == 0)


class TestLedger:
    def _filled(self, slots=40, devices=3, seed=0):
        rng = np.random.default_rng(seed)
        led = CostLedger(gamma_a=0.5, gamma_e=0.5)
        for t in range(1, slots + 1):
            led.record_slot(
                t, rng.uniform(0, 5, devices), rng.uniform(0, 5, devices),
                rng.uniform(0, 1e-3, devices),
                np.where(rng.random(devices) < 0.5, rng.integers(0, 4, devices),
                         np.nan),
                rng.uniform(0, 1, devices), rng.integers(0, 2, devices),
                rng.integers(0, 2, devices))
        return led

    def test_weighted_cost_plugin(self):
        led = CostLedger(gamma_a=0.5, gamma_e=0.5)
        led.record_slot(1, [0, 0], [1.0, 1.0], [5e-4, 5e-4], [np.nan, np.nan],
                        [0, 0], [0, 0], [0, 0])
        assert weighted_cost(led, 0) == pytest.approx(0.5 * 2.0 + 0.5 * 1e-3)

    def test_degenerate_energy_weight(self):
        led = CostLedger(gamma_a=0.7, gamma_e=0.0)
        led.record_slot(1, [0], [3.0], [0.1], [np.nan], [0], [1], [1])
        assert weighted_cost(led, 0) == pytest.approx(0.7 * 3.0)

    def test_running_averages_replayable(self):
        led = self._filled()
        aoi_sums = np.array([b.sum() for b in led.bs_phi])
        energy_sums = np.array([e.sum() for e in led.energy])
        assert abs(led.sum_aoi_running - aoi_sums.mean()) < 1e-12
        assert abs(led.sum_energy_running - energy_sums.mean()) < 1e-12
        replayed = 0.5 * aoi_sums.mean() + 0.5 * energy_sums.mean()
        assert abs(led.running_objective() - replayed) < 1e-12

    def test_slot_costs_match_brute_recomputation(self):
        led = self._filled(seed=3)
        costs = led.slot_costs()
        for i in range(led.slots_recorded):
            brute = 0.5 * led.bs_phi[i].sum() + 0.5 * led.energy[i].sum()
            assert costs[i] == pytest.approx(brute, rel=1e-15)

    def test_csv_schema(self, tmp_path):
        led = CostLedger()
        led.record_slot(1, [0.5], [1.25], [5e-4], [0.0], [0.125], [1], [1])
        path = tmp_path / "ledger.csv"
        led.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == ",".join(LEDGER_COLUMNS)
        cells = lines[1].split(",")
        assert cells[0] == "1" and cells[1] == "0"
        assert float(cells[2]) == 0.5
        assert float(cells[3]) == 1.25
        assert float(cells[4]) == 5e-4
        assert float(cells[6]) == 0.125

    def test_summary_eval_window(self):
        led = CostLedger()
        for t in range(1, 11):
            led.record_slot(t, [0.0], [float(t)], [0.0], [np.nan], [0.0],
                            [0], [0])
        s = led.summary(eval_slots=2)
        assert s["mean_sum_aoi"] == pytest.approx((9 + 10) / 2)

    def test_queue_delay_helpers(self):
        assert queue_delay_s(3, 3, 1.0) == 0.0
        assert queue_delay_s(3, 5, 1.0) == 2.0
        with pytest.raises(ValueError):
            queue_delay_s(5, 3, 1.0)

    def test_mean_queue_delay_skips_undelivered(self):
        led = CostLedger()
        led.record_slot(1, [0, 0], [0, 0], [0, 0], [2.0, np.nan], [0, 0],
                        [1, 0], [1, 0])
        led.record_slot(2, [0, 0], [0, 0], [0, 0], [np.nan, 4.0], [0, 0],
                        [0, 1], [0, 1])
        assert led.mean_queue_delay() == pytest.approx(3.0)

    def test_mean_sample_interval(self):
        led = CostLedger(slot_duration=2.0)
        for t, s in enumerate([1, 0, 1, 0, 1], start=1):
            led.record_slot(t, [0], [0], [0], [np.nan], [0], [s], [0])
        # samples at slots 1, 3, 5 -> gaps of 2 slots = 4 seconds
        assert led.mean_sample_interval() == pytest.approx(4.0)


class TestReconstruction:
    def test_norm_of_difference(self):
        x = np.array([1.0, 2.0])
        est = np.array([1.0, 0.0])
        assert reconstruction_error(x, est) == pytest.approx(2.0)

    def test_zero_when_exact(self):
        x = np.array([0.3, -0.7])
        assert reconstruction_error(x, x.copy()) == 0.0
