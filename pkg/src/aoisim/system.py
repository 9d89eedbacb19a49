"""Per-slot environment pipeline: advance the monitored processes, refresh
the Nyquist analysis, apply sampling actions, run device selection and the
uplink, and settle the slot's freshness/energy accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from . import metrics, radio as radio_mod, selector
from .dynamics import (PhysicalProcess, RollingEstimator, eigenvalues,
                       jacobian, step_process, variation_frequency_from_parts)
from .metrics import CostLedger, DeviceState
from .radio import RadioModel


@dataclass
class SlotResult:
    """Everything the training loop needs from one settled slot."""

    slot: int
    sampled: np.ndarray
    selected: np.ndarray
    rewards: np.ndarray
    device_aoi: np.ndarray
    bs_aoi: np.ndarray
    energy: np.ndarray
    delays: np.ndarray           # NaN where unselected
    delivered: np.ndarray


class IoTSystem:
    """One base station, M monitored processes, I uplink resource blocks.

    Call ``begin_slot`` to advance the world and obtain the per-device
    observations, then ``complete_slot`` with the sampling action vector.
    All randomness (disturbances, fading, delay estimation) comes from
    streams spawned off the given seed and is consumed in a fixed order
    independent of the actions, so the environment realization is
    identical across policies run with the same seed.
    """

    def __init__(self, processes: Sequence[PhysicalProcess], radio: RadioModel,
                 *, gamma_a: float = 0.5, gamma_e: float = 0.5,
                 sampling_cost_j: float = 5e-4, slot_duration: float = 1.0,
                 device_aoi_cap: float = 5.0, bs_aoi_cap: float = 5.0,
                 mc_samples: int = 4096, seed: int = 0,
                 debug_traces: bool = False):
        if len(processes) != radio.n_devices:
            raise ValueError("process count and radio device count disagree")
        self.processes = list(processes)
        self.radio = radio
        self.n_devices = len(self.processes)
        self.slot_duration = slot_duration
        self.delta_cap = device_aoi_cap * slot_duration
        self.mc_samples = mc_samples

        self.ledger = CostLedger(gamma_a=gamma_a, gamma_e=gamma_e,
                                 sampling_cost_j=sampling_cost_j,
                                 tx_power_w=radio.tx_power_w,
                                 slot_duration=slot_duration)
        self.devices: List[DeviceState] = [
            DeviceState(slot_duration=slot_duration,
                        device_aoi_cap=device_aoi_cap, bs_aoi_cap=bs_aoi_cap)
            for _ in range(self.n_devices)]

        # Devices know their initial condition; the station starts from a
        # zero prior until the first packet arrives.
        self.slot = 0
        for p in self.processes:
            if p.latest_sample is None:
                p.latest_sample = (p.true_state.copy(), 0)
        self.device_estimators = [
            RollingEstimator(p.a_matrix, p.nonlinearity, p.latest_sample[0],
                             p.latest_sample[1])
            for p in self.processes]
        self.bs_estimators = [
            RollingEstimator(p.a_matrix, p.nonlinearity, np.zeros(p.dim), 0)
            for p in self.processes]

        root = (seed if isinstance(seed, np.random.SeedSequence)
                else np.random.SeedSequence(seed))
        dist_ss, fade_ss, delay_ss = root.spawn(3)
        self.rng_disturbance = np.random.default_rng(dist_ss)
        self.rng_fading = np.random.default_rng(fade_ss)
        # Expected delay depends only on static channel statistics, so one
        # seeded estimate per device serves every slot.
        self.expected_delays = np.array([
            radio_mod.expected_delay(radio, m, mc_samples,
                                     np.random.default_rng(ss))
            for m, ss in enumerate(delay_ss.spawn(self.n_devices))])

        self.current_frequency = np.zeros(self.n_devices)
        self.current_interval = np.full(self.n_devices, self.delta_cap)
        self._in_slot = False
        self.debug = {"states": [], "fading": []} if debug_traces else None

    # -- pipeline ----------------------------------------------------------

    def observations(self) -> np.ndarray:
        return np.stack([d.observation() for d in self.devices])

    def begin_slot(self) -> np.ndarray:
        """Advance the world by one slot; returns the (M, 4) observations."""
        if self._in_slot:
            raise RuntimeError("complete_slot must be called before the next begin_slot")
        self.slot += 1
        for m, p in enumerate(self.processes):
            step_process(p, self.rng_disturbance, slot=self.slot)
            est = self.device_estimators[m].advance(self.slot)
            self.bs_estimators[m].advance(self.slot)
            eigs = eigenvalues(jacobian(p, est))
            omega = variation_frequency_from_parts(
                eigs, float(np.linalg.norm(est - p.true_state)),
                p.disturbance_bound, p.min_frequency)
            if omega == 0.0:
                self.current_interval[m] = self.delta_cap
                self.current_frequency[m] = 1.0 / self.delta_cap
            else:
                self.current_frequency[m] = omega / np.pi
                self.current_interval[m] = np.pi / omega
            self.devices[m].sampling_frequency = self.current_frequency[m]
        if self.debug is not None:
            self.debug["states"].append(
                np.concatenate([p.true_state for p in self.processes]))
        self._in_slot = True
        return self.observations()

    def complete_slot(self, actions: Sequence[int]) -> SlotResult:
        """Apply sampling actions, run selection and the uplink, settle costs."""
        if not self._in_slot:
            raise RuntimeError("begin_slot must run first")
        actions = np.asarray(actions, dtype=int)
        if actions.shape != (self.n_devices,):
            raise ValueError(f"need {self.n_devices} actions")
        t, tau = self.slot, self.slot_duration
        led = self.ledger

        phi = np.zeros(self.n_devices)
        for m, (p, d) in enumerate(zip(self.processes, self.devices)):
            staleness_s = (t - p.latest_sample[1]) * tau
            phi[m] = metrics.update_device_aoi(
                d, int(actions[m]), staleness_s, self.current_interval[m])
            if actions[m]:
                if d.pending_packet is not None:
                    led.overwrite_count += 1
                sample = p.record_sample(t)
                d.pending_packet = (sample, t)
                self.device_estimators[m].reset(sample, t, t)

        has_packet = np.array([d.pending_packet is not None for d in self.devices])
        c1 = np.zeros(self.n_devices)
        c2 = np.zeros(self.n_devices)
        for m, d in enumerate(self.devices):
            c1[m], c2[m] = selector.coefficients(
                phi[m], d.bs_aoi, int(actions[m]), self.expected_delays[m],
                led.gamma_a, led.gamma_e, self.radio.tx_power_w,
                led.sampling_cost_j, tau)
        chosen = selector.select(selector.SelectionProblem(
            c1=c1, c2=c2, rb_budget=self.radio.rb_count, has_packet=has_packet))

        radio_mod.draw_fading(self.radio, self.rng_fading)
        if self.debug is not None:
            self.debug["fading"].append(self.radio.fading_state.copy())

        delays = np.full(self.n_devices, np.nan)
        queue_delays = np.full(self.n_devices, np.nan)
        delivered = np.zeros(self.n_devices, dtype=bool)
        energy = np.zeros(self.n_devices)
        bs_aoi = np.zeros(self.n_devices)
        recon = np.zeros(self.n_devices)
        rewards = np.zeros(self.n_devices)
        for m, d in enumerate(self.devices):
            l = radio_mod.delay(self.radio, m, bool(chosen[m]))
            if chosen[m]:
                delays[m] = l
                packet, gen_slot = d.pending_packet
                queue_delays[m] = metrics.queue_delay_s(gen_slot, t, tau)
                self.bs_estimators[m].reset(packet, gen_slot, t)
                d.pending_packet = None
                delivered[m] = True
            bs_aoi[m] = metrics.update_bs_aoi(d, int(chosen[m]), phi[m], l)
            energy[m] = metrics.slot_energy(int(actions[m]), int(chosen[m]), l, led)
            recon[m] = metrics.reconstruction_error(
                self.processes[m].true_state, self.bs_estimators[m].estimate)
            rewards[m] = -(led.gamma_a * bs_aoi[m] + led.gamma_e * energy[m])
            d.last_sample_action = int(actions[m])
            d.last_selection = int(chosen[m])

        led.record_slot(t, phi, bs_aoi, energy, queue_delays, recon,
                        actions, chosen)
        self._in_slot = False
        return SlotResult(slot=t, sampled=actions.copy(), selected=chosen,
                          rewards=rewards, device_aoi=phi, bs_aoi=bs_aoi,
                          energy=energy, delays=delays, delivered=delivered)
