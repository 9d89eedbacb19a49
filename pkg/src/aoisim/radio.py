"""OFDMA uplink model: Rayleigh-faded channel gains, per-resource-block
data rate, transmission delay, and the Monte-Carlo expected delay the
device-selection rule needs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def calibrated_reference_gain(tx_power_w: float, noise_w: float,
                              radius_m: float, pathloss_exponent: float,
                              target_snr_db: float = 20.0) -> float:
    """Path gain at 1 m such that the median cell-edge SNR hits the target.

    The median of a unit-mean exponential fading power is ln 2.
    """
    target = 10.0 ** (target_snr_db / 10.0)
    return target * noise_w * radius_m ** pathloss_exponent / (tx_power_w * np.log(2.0))


@dataclass
class RadioModel:
    """Static uplink parameters plus the per-device fading state."""

    bandwidth_hz: float
    tx_power_w: float
    noise_w: float
    rb_count: int
    payload_bits: np.ndarray          # per device
    device_distance_m: np.ndarray     # per device
    pathloss_exponent: float
    reference_gain: float
    slot_duration_s: float = 1.0
    fading_state: Optional[np.ndarray] = None
    truncation_count: int = 0

    def __post_init__(self):
        self.payload_bits = np.atleast_1d(np.asarray(self.payload_bits, dtype=float))
        self.device_distance_m = np.atleast_1d(
            np.asarray(self.device_distance_m, dtype=float))
        if self.payload_bits.shape != self.device_distance_m.shape:
            raise ValueError("payload_bits and device_distance_m must align")
        for name in ("bandwidth_hz", "tx_power_w", "noise_w", "reference_gain"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if np.any(self.device_distance_m <= 0):
            raise ValueError("device distances must be positive")
        if self.rb_count < 1:
            raise ValueError("rb_count must be >= 1")

    @property
    def n_devices(self) -> int:
        return self.payload_bits.shape[0]

    def pathloss(self, m: Optional[int] = None) -> np.ndarray | float:
        d = self.device_distance_m if m is None else self.device_distance_m[m]
        return self.reference_gain * d ** (-self.pathloss_exponent)

    def channel_gain(self, m: int) -> float:
        if self.fading_state is None:
            raise ValueError("fading not drawn for this slot")
        return float(self.pathloss(m) * self.fading_state[m])


def draw_fading(model: RadioModel, rng: np.random.Generator) -> np.ndarray:
    """Redraw all devices' fading powers (i.i.d. unit-mean exponential)."""
    model.fading_state = rng.exponential(1.0, size=model.n_devices)
    return model.fading_state


def rate(model: RadioModel, m: int, selected: bool) -> float:
    """Uplink rate in bit/s; zero when the device holds no resource block."""
    if not selected:
        return 0.0
    snr = model.tx_power_w * model.channel_gain(m) / model.noise_w
    return model.bandwidth_hz * np.log2(1.0 + snr)


def delay(model: RadioModel, m: int, selected: bool) -> Optional[float]:
    """Transmission delay in seconds, or None when unselected.

    Deep fades can push payload/rate past the slot; the delay is then
    truncated to one slot and the event counted, keeping the update
    recursion within-slot as the accounting assumes.
    """
    if not selected:
        return None
    r = rate(model, m, True)
    raw = model.payload_bits[m] / r if r > 0 else np.inf
    if raw > model.slot_duration_s:
        model.truncation_count += 1
        return model.slot_duration_s
    return float(raw)


def expected_delay(model: RadioModel, m: int, mc_samples: int,
                   rng: np.random.Generator) -> float:
    """Monte-Carlo mean of the selected-case delay over fresh fading draws.

    Truncation at the slot boundary is included so the value matches the
    delay actually charged. Deterministic for a given generator state.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    g = rng.exponential(1.0, size=mc_samples)
    snr = model.tx_power_w * model.pathloss(m) / model.noise_w * g
    rates = model.bandwidth_hz * np.log2(1.0 + snr)
    with np.errstate(divide="ignore"):
        delays = np.where(rates > 0, model.payload_bits[m] / rates, np.inf)
    return float(np.minimum(delays, model.slot_duration_s).mean())
