"""Freshness and energy accounting: per-device and base-station age
recursions, the weighted objective, and the per-slot ledger with its CSV
and JSON export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

LEDGER_COLUMNS = ("slot", "device", "phi", "Phi", "energy_j",
                  "queue_delay_s", "recon_err")


@dataclass
class DeviceState:
    """Per-device bookkeeping that doubles as the local observation.

    The observation exposed to the sampling policy is
    [device_aoi, sampling_frequency, last_sample_action, last_selection].
    ``pending_packet`` is a one-deep queue: a device may hold at most one
    sampled state awaiting upload.
    """

    device_aoi: float = 0.0
    bs_aoi: float = 0.0
    sampling_frequency: float = 0.0
    last_sample_action: int = 0
    last_selection: int = 0
    pending_packet: Optional[Tuple[np.ndarray, int]] = None
    slot_duration: float = 1.0
    device_aoi_cap: float = 5.0
    bs_aoi_cap: float = 5.0

    def observation(self) -> np.ndarray:
        return np.array([self.device_aoi, self.sampling_frequency,
                         float(self.last_sample_action),
                         float(self.last_selection)])


def update_device_aoi(d: DeviceState, sampled: int, delta_t: float,
                      max_interval: float) -> float:
    """Age at the device after this slot's sampling decision.

    Sampling within the Nyquist interval resets the age to zero; sampling
    late leaves the excess; not sampling ages by one slot up to the cap.
    """
    if delta_t < 0:
        raise ValueError("elapsed time since last sample must be >= 0")
    if max_interval <= 0:
        raise ValueError("max_interval must be positive")
    if sampled:
        d.device_aoi = max(0.0, delta_t - max_interval)
    else:
        d.device_aoi = min(d.device_aoi + d.slot_duration, d.device_aoi_cap)
    return d.device_aoi


def update_bs_aoi(d: DeviceState, selected: int, device_aoi: float,
                  delay: Optional[float]) -> float:
    """Age at the base station after this slot's upload decision."""
    if selected:
        if delay is None or not np.isfinite(delay):
            raise ValueError("selected device needs a finite delay")
        d.bs_aoi = device_aoi + delay
    else:
        d.bs_aoi = min(d.bs_aoi + d.slot_duration, d.bs_aoi_cap)
    return d.bs_aoi


@dataclass
class CostLedger:
    """Append-only per-slot records plus running objective averages."""

    gamma_a: float = 0.5
    gamma_e: float = 0.5
    sampling_cost_j: float = 5e-4
    tx_power_w: float = 0.5
    slot_duration: float = 1.0
    sum_aoi_running: float = 0.0
    sum_energy_running: float = 0.0
    slots_recorded: int = 0
    # parallel per-slot arrays, each entry shaped (n_devices,)
    slots: List[int] = field(default_factory=list)
    phi: List[np.ndarray] = field(default_factory=list)
    bs_phi: List[np.ndarray] = field(default_factory=list)
    energy: List[np.ndarray] = field(default_factory=list)
    queue_delay_s: List[np.ndarray] = field(default_factory=list)
    recon_err: List[np.ndarray] = field(default_factory=list)
    sampled: List[np.ndarray] = field(default_factory=list)
    selected: List[np.ndarray] = field(default_factory=list)
    overwrite_count: int = 0

    def record_slot(self, slot: int, phi, bs_phi, energy, queue_delay_s,
                    recon_err, sampled, selected) -> None:
        self.slots.append(int(slot))
        self.phi.append(np.asarray(phi, dtype=float))
        self.bs_phi.append(np.asarray(bs_phi, dtype=float))
        self.energy.append(np.asarray(energy, dtype=float))
        self.queue_delay_s.append(np.asarray(queue_delay_s, dtype=float))
        self.recon_err.append(np.asarray(recon_err, dtype=float))
        self.sampled.append(np.asarray(sampled, dtype=int))
        self.selected.append(np.asarray(selected, dtype=int))
        n = self.slots_recorded
        self.sum_aoi_running = (self.sum_aoi_running * n
                                + float(self.bs_phi[-1].sum())) / (n + 1)
        self.sum_energy_running = (self.sum_energy_running * n
                                   + float(self.energy[-1].sum())) / (n + 1)
        self.slots_recorded = n + 1

    # -- objective -----------------------------------------------------

    def weighted_cost(self, slot_index: int) -> float:
        """gamma_a * sum Phi + gamma_e * sum e for one recorded slot."""
        return (self.gamma_a * float(self.bs_phi[slot_index].sum())
                + self.gamma_e * float(self.energy[slot_index].sum()))

    def running_objective(self) -> float:
        """Time-averaged weighted objective over all recorded slots."""
        return (self.gamma_a * self.sum_aoi_running
                + self.gamma_e * self.sum_energy_running)

    def slot_costs(self) -> np.ndarray:
        bs = np.asarray(self.bs_phi)
        en = np.asarray(self.energy)
        if bs.size == 0:
            return np.zeros(0)
        return self.gamma_a * bs.sum(axis=1) + self.gamma_e * en.sum(axis=1)

    # -- summary statistics ---------------------------------------------

    def mean_queue_delay(self) -> float:
        """Average upload delay over delivered packets (NaN entries skipped)."""
        if not self.queue_delay_s:
            return float("nan")
        all_q = np.concatenate(self.queue_delay_s)
        delivered = all_q[np.isfinite(all_q)]
        return float(delivered.mean()) if delivered.size else float("nan")

    def mean_sample_interval(self) -> float:
        """Mean gap (seconds) between consecutive samples, over devices."""
        if not self.sampled:
            return float("nan")
        s = np.asarray(self.sampled)           # (slots, devices)
        slot_ids = np.asarray(self.slots, dtype=float)
        gaps = []
        for m in range(s.shape[1]):
            at = slot_ids[s[:, m] > 0]
            if at.size >= 2:
                gaps.append(np.diff(at))
        if not gaps:
            return float("nan")
        return float(np.concatenate(gaps).mean() * self.slot_duration)

    def summary(self, eval_slots: int = 0) -> dict:
        """Aggregate metrics; the eval window is the trailing slice."""
        costs = self.slot_costs()
        bs = np.asarray(self.bs_phi) if self.bs_phi else np.zeros((0, 0))
        en = np.asarray(self.energy) if self.energy else np.zeros((0, 0))
        rc = np.asarray(self.recon_err) if self.recon_err else np.zeros((0, 0))
        window = slice(-eval_slots, None) if eval_slots else slice(None)
        out = {
            "slots": self.slots_recorded,
            "running_objective": self.running_objective(),
            "mean_weighted_cost": float(costs[window].mean()) if costs.size else float("nan"),
            "mean_sum_aoi": float(bs[window].sum(axis=1).mean()) if bs.size else float("nan"),
            "mean_sum_energy_j": float(en[window].sum(axis=1).mean()) if en.size else float("nan"),
            "mean_recon_err": float(rc[window].mean()) if rc.size else float("nan"),
            "mean_queue_delay_s": self.mean_queue_delay(),
            "mean_sample_interval_s": self.mean_sample_interval(),
            "overwrite_count": self.overwrite_count,
        }
        return out

    # -- export ----------------------------------------------------------

    def to_csv(self, path) -> None:
        """Fixed-schema per-slot, per-device records."""
        with open(path, "w") as fh:
            fh.write(",".join(LEDGER_COLUMNS) + "\n")
            for i, slot in enumerate(self.slots):
                for m in range(self.phi[i].shape[0]):
                    fh.write("%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                        slot, m, self.phi[i][m], self.bs_phi[i][m],
                        self.energy[i][m], self.queue_delay_s[i][m],
                        self.recon_err[i][m]))

    def to_summary_json(self, path, extra: Optional[dict] = None,
                        eval_slots: int = 0) -> None:
        payload = self.summary(eval_slots=eval_slots)
        if extra:
            payload.update(extra)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def slot_energy(sampled: int, selected: int, delay: Optional[float],
                ledger: CostLedger) -> float:
    """Sampling cost plus transmit energy for one device-slot."""
    energy = float(sampled) * ledger.sampling_cost_j
    if selected:
        if delay is None:
            raise ValueError("selected device needs a delay for energy accounting")
        energy += ledger.tx_power_w * delay
    return energy


def weighted_cost(ledger: CostLedger, slot_index: int) -> float:
    return ledger.weighted_cost(slot_index)


def reconstruction_error(true_state: np.ndarray,
                         bs_estimate: np.ndarray) -> float:
    """L2 distance between the station's model estimate and the truth."""
    return float(np.linalg.norm(np.asarray(bs_estimate) - np.asarray(true_state)))


def queue_delay_s(generation_slot: int, upload_slot: int,
                  slot_duration: float) -> float:
    """Seconds a packet waited between sampling and upload."""
    if upload_slot < generation_slot:
        raise ValueError("upload before generation")
    return (upload_slot - generation_slot) * slot_duration
