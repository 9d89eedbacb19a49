"""Base-station device selection: the closed-form per-slot rule (pick
requesting devices whose marginal cost coefficient is negative, capped by
the resource-block budget) and an exhaustive oracle for verifying it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Tuple

import numpy as np

BRUTE_FORCE_LIMIT = 20


@dataclass
class SelectionProblem:
    """One slot's selection inputs.

    ``c1[m]`` is the marginal cost of granting device m a resource block;
    ``c2[m]`` the selection-independent remainder. ``has_packet`` marks
    devices that actually requested an upload (sampled this slot or still
    holding an undelivered packet); others are never selectable.
    """

    c1: np.ndarray
    c2: np.ndarray
    rb_budget: int
    has_packet: np.ndarray

    def __post_init__(self):
        self.c1 = np.atleast_1d(np.asarray(self.c1, dtype=float))
        self.c2 = np.atleast_1d(np.asarray(self.c2, dtype=float))
        self.has_packet = np.atleast_1d(np.asarray(self.has_packet, dtype=bool))
        if not (self.c1.shape == self.c2.shape == self.has_packet.shape):
            raise ValueError("c1, c2 and has_packet must have equal length")
        if not np.all(np.isfinite(self.c1)) or not np.all(np.isfinite(self.c2)):
            raise ValueError("selection coefficients must be finite")
        if self.rb_budget < 1:
            raise ValueError("rb_budget must be >= 1")

    @property
    def n_devices(self) -> int:
        return self.c1.shape[0]


def coefficients(device_aoi: float, bs_aoi_prev: float, sampled: int,
                 expected_delay: float, gamma_a: float, gamma_e: float,
                 tx_power_w: float, sampling_cost_j: float,
                 slot_duration: float) -> Tuple[float, float]:
    """Per-device marginal and constant cost terms for one slot.

    c1 compares the cost of uploading now (expected delay plus the
    device-side age) against letting the station-side age grow by one
    slot; c2 collects the terms selection cannot change.
    """
    c1 = (gamma_a * (expected_delay + device_aoi - bs_aoi_prev - slot_duration)
          + gamma_e * tx_power_w * expected_delay)
    c2 = gamma_e * sampled * sampling_cost_j + gamma_a * (bs_aoi_prev + slot_duration)
    return c1, c2


def objective(problem: SelectionProblem, u: np.ndarray) -> float:
    """sum(c1 * u) + sum(c2); the quantity both solvers minimize."""
    u = np.asarray(u, dtype=float)
    return float(np.dot(u, problem.c1) + problem.c2.sum())


def select(problem: SelectionProblem) -> np.ndarray:
    """Optimal selection vector.

    Grants a block to every requesting device with c1 < 0 when they fit
    within the budget; otherwise the budget goes to the most negative
    coefficients (the objective is separable and linear in u, so sorting
    is exact). Ties at equal c1 break toward the lowest device index, and
    c1 == 0 is never selected.
    """
    c1, budget = problem.c1, problem.rb_budget
    candidates = np.flatnonzero(problem.has_packet & (c1 < 0.0))
    u = np.zeros(problem.n_devices, dtype=int)
    if candidates.size <= budget:
        u[candidates] = 1
        return u
    order = candidates[np.argsort(c1[candidates], kind="stable")]
    u[order[:budget]] = 1
    return u


@lru_cache(maxsize=64)
def _candidate_matrix(n: int, budget: int) -> np.ndarray:
    """All selection vectors with <= budget ones, sets in lexicographic order."""
    rows = []
    for k in range(min(n, budget) + 1):
        for idxs in combinations(range(n), k):
            row = np.zeros(n)
            row[list(idxs)] = 1.0
            rows.append(row)
    return np.asarray(rows)


def brute_force_select(problem: SelectionProblem) -> np.ndarray:
    """Exact argmin by enumeration; verification oracle for :func:`select`.

    Ties break to the lexicographically smallest index set (the first
    optimum in enumeration order).
    """
    n = problem.n_devices
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force refused for {n} devices (limit {BRUTE_FORCE_LIMIT})")
    cand = _candidate_matrix(n, problem.rb_budget)
    feasible = ~np.any(cand * ~problem.has_packet, axis=1)
    values = cand[feasible] @ problem.c1
    winner = np.flatnonzero(feasible)[np.argmin(values)]
    return cand[winner].astype(int)
