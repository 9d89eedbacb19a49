"""Nonlinear process models, stale-sample state estimation, and the
estimation-error-driven maximum variation frequency that sets each
device's Nyquist sampling interval."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


class DivergenceError(RuntimeError):
    """A process or estimator produced a non-finite state."""


class EigendecompositionError(RuntimeError):
    """The eigenvalue iteration failed to converge."""


# ---------------------------------------------------------------------------
# Nonlinearity catalog
# ---------------------------------------------------------------------------

class Nonlinearity:
    """Named nonlinear map f with f(0) = 0 and a closed-form Jacobian.

    Supported kinds:
      * ``zero``        f(x) = 0
      * ``tanh_gain``   f(x) = B @ tanh(x), B a gain matrix
      * ``cubic_damp``  f(x) = -c * x**3, elementwise with scalar c
    """

    KINDS = ("zero", "tanh_gain", "cubic_damp")

    def __init__(self, kind: str, gain: Optional[np.ndarray] = None,
                 coeff: float = 0.0):
        if kind not in self.KINDS:
            raise ValueError(f"unknown nonlinearity kind {kind!r}")
        self.kind = kind
        self.gain = None if gain is None else np.asarray(gain, dtype=float)
        self.coeff = float(coeff)
        if kind == "tanh_gain" and self.gain is None:
            raise ValueError("tanh_gain requires a gain matrix")

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls("zero")

    @classmethod
    def tanh_gain(cls, gain) -> "Nonlinearity":
        return cls("tanh_gain", gain=np.atleast_2d(np.asarray(gain, float)))

    @classmethod
    def cubic_damp(cls, coeff: float) -> "Nonlinearity":
        return cls("cubic_damp", coeff=coeff)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "tanh_gain":
            return self.gain @ np.tanh(x)
        return -self.coeff * x ** 3

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.shape[0]
        if self.kind == "zero":
            return np.zeros((d, d))
        if self.kind == "tanh_gain":
            # d/dx [B tanh(x)] = B diag(1 - tanh(x)^2)
            return self.gain * (1.0 - np.tanh(x) ** 2)[None, :]
        return np.diag(-3.0 * self.coeff * x ** 2)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.gain is not None:
            out["gain"] = self.gain.tolist()
        if self.kind == "cubic_damp":
            out["coeff"] = self.coeff
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Nonlinearity":
        kind = d["kind"]
        if kind == "tanh_gain":
            return cls.tanh_gain(np.asarray(d["gain"], float))
        if kind == "cubic_damp":
            return cls.cubic_damp(float(d["coeff"]))
        return cls.zero()


# ---------------------------------------------------------------------------
# Process state
# ---------------------------------------------------------------------------

@dataclass
class PhysicalProcess:
    """One monitored process: x' = A x + f(x) + eps, ||eps|| <= bound.

    ``latest_sample`` is the most recent locally sampled state together
    with the slot index it was generated in; it is what the model-based
    estimator extrapolates from.
    """

    dim: int
    a_matrix: np.ndarray
    nonlinearity: Nonlinearity
    disturbance_bound: float
    true_state: np.ndarray
    min_frequency: float
    latest_sample: Optional[Tuple[np.ndarray, int]] = None
    device_id: int = 0

    def __post_init__(self):
        self.a_matrix = np.asarray(self.a_matrix, dtype=float).reshape(self.dim, self.dim)
        self.true_state = np.asarray(self.true_state, dtype=float).reshape(self.dim)
        if self.disturbance_bound < 0:
            raise ValueError("disturbance_bound must be nonnegative")
        if self.min_frequency <= 0:
            raise ValueError("min_frequency must be positive")

    def record_sample(self, slot: int) -> np.ndarray:
        """Sample the current true state; returns the sampled vector."""
        sample = self.true_state.copy()
        self.latest_sample = (sample, slot)
        return sample


def draw_disturbance(dim: int, bound: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the closed L2 ball of the given radius."""
    if bound == 0.0:
        return np.zeros(dim)
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction = np.ones(dim)
        norm = np.sqrt(dim)
    radius = bound * rng.random() ** (1.0 / dim)
    return direction * (radius / norm)


def step_process(p: PhysicalProcess, rng: np.random.Generator,
                 slot: Optional[int] = None) -> np.ndarray:
    """Advance the true state by one slot and return the new state."""
    eps = draw_disturbance(p.dim, p.disturbance_bound, rng)
    with np.errstate(over="ignore", invalid="ignore"):
        nxt = p.a_matrix @ p.true_state + p.nonlinearity.value(p.true_state) + eps
    if not np.all(np.isfinite(nxt)):
        where = "" if slot is None else f" at slot {slot}"
        raise DivergenceError(
            f"device {p.device_id}: process state diverged{where}")
    p.true_state = nxt
    return nxt


def matrix_power_f64(a: np.ndarray, k: int) -> np.ndarray:
    """A**k by repeated squaring in float64."""
    if k < 0:
        raise ValueError("negative matrix power")
    result = np.eye(a.shape[0])
    base = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        # Overflow surfaces as non-finite entries, which callers reject.
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
    return result


def noiseless_rollout(a_matrix: np.ndarray, nonlinearity: Nonlinearity,
                      start: np.ndarray, steps: int) -> np.ndarray:
    """Iterate x <- A x + f(x) with zero disturbance for ``steps`` slots."""
    x = np.asarray(start, dtype=float).copy()
    for _ in range(steps):
        x = a_matrix @ x + nonlinearity.value(x)
    return x


def estimate_state(p: PhysicalProcess, now: int) -> np.ndarray:
    """Model-based estimate of the current state from the latest sample.

    Evaluates A^d x_sample + sum_q A^(q-1) f(z_q), where the intermediate
    states z_q come from the zero-disturbance rollout of the model (the
    only information causally available to the estimator). d = 0 returns
    the sample itself.
    """
    if p.latest_sample is None:
        raise ValueError(f"device {p.device_id}: no sample recorded")
    sample, sample_slot = p.latest_sample
    delta = now - sample_slot
    if delta < 0:
        raise ValueError(
            f"device {p.device_id}: sample slot {sample_slot} is after now={now}")
    if delta == 0:
        return sample.copy()

    # Intermediate states for the nonlinear terms.
    z = sample.copy()
    acc = np.zeros(p.dim)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(delta):
            # Horner accumulation: after the loop, acc = sum_q A^(q-1) f(z_{d-q}).
            fz = p.nonlinearity.value(z)
            acc = p.a_matrix @ acc + fz
            z = p.a_matrix @ z + fz
        est = matrix_power_f64(p.a_matrix, delta) @ sample + acc
    if not np.all(np.isfinite(est)):
        raise DivergenceError(
            f"device {p.device_id}: estimator overflow at staleness {delta}")
    return est


def estimation_error(p: PhysicalProcess, now: int) -> np.ndarray:
    """Estimate minus truth for the current slot."""
    return estimate_state(p, now) - p.true_state


def jacobian(p: PhysicalProcess, x: np.ndarray) -> np.ndarray:
    """Linearization A + J_f(x) of the one-step map at x."""
    return p.a_matrix + p.nonlinearity.jacobian(np.asarray(x, dtype=float))


def eigenvalues(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a real square matrix (complex dtype)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionError(
            f"eigenvalue iteration did not converge: {exc}") from exc


@dataclass
class FrequencyAnalysis:
    """Spectrum-derived variation frequency and the Nyquist interval."""

    eigenvalues: np.ndarray
    max_variation_frequency: float   # rad/s
    sampling_frequency: float        # Hz
    max_sampling_interval: float     # s


def variation_frequency_from_parts(eigs: np.ndarray, error_norm: float,
                                   disturbance_norm: float,
                                   min_frequency: float) -> float:
    """max|Im| + sqrt(clamp((||y||^2 + ||eps||^2)/xi^2 - min Re^2))."""
    arg = ((error_norm ** 2 + disturbance_norm ** 2) / min_frequency ** 2
           - float(np.min(eigs.real ** 2)))
    return float(np.max(np.abs(eigs.imag))) + np.sqrt(max(arg, 0.0))


def max_variation_frequency(p: PhysicalProcess, now: int,
                            delta_cap: float = 5.0) -> FrequencyAnalysis:
    """Variation frequency of the linearized error dynamics at the estimate.

    The disturbance norm term uses the (known) bound, since realized
    disturbances are unobservable. A zero frequency would give an infinite
    interval, so the interval is capped at ``delta_cap`` in that case and
    the reported sampling frequency keeps interval * frequency = 1.
    """
    est = estimate_state(p, now)
    err_norm = float(np.linalg.norm(est - p.true_state))
    eigs = eigenvalues(jacobian(p, est))
    omega = variation_frequency_from_parts(
        eigs, err_norm, p.disturbance_bound, p.min_frequency)
    if omega == 0.0:
        interval = delta_cap
        freq = 1.0 / delta_cap
    else:
        freq = omega / np.pi
        interval = np.pi / omega
    return FrequencyAnalysis(eigenvalues=eigs,
                             max_variation_frequency=omega,
                             sampling_frequency=freq,
                             max_sampling_interval=interval)


class RollingEstimator:
    """Incremental version of :func:`estimate_state`.

    Advances the noiseless model one slot at a time so the per-slot cost is
    O(1) instead of re-rolling from the sample. ``reset`` re-anchors on a
    fresh sample (rolling it forward if the sample is already stale).
    """

    def __init__(self, a_matrix: np.ndarray, nonlinearity: Nonlinearity,
                 start: np.ndarray, slot: int):
        self.a_matrix = np.asarray(a_matrix, dtype=float)
        self.nonlinearity = nonlinearity
        self.estimate = np.asarray(start, dtype=float).copy()
        self.slot = slot

    def advance(self, to_slot: int) -> np.ndarray:
        while self.slot < to_slot:
            self.estimate = (self.a_matrix @ self.estimate
                             + self.nonlinearity.value(self.estimate))
            self.slot += 1
        return self.estimate

    def reset(self, sample: np.ndarray, sample_slot: int, now: int) -> np.ndarray:
        self.estimate = noiseless_rollout(
            self.a_matrix, self.nonlinearity, sample, now - sample_slot)
        self.slot = now
        return self.estimate
