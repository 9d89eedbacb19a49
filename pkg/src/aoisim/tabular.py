"""Tabular MDP machinery for numerically exercising the contraction of the
one-step lookahead operator behind the mixed-value training target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TabularMDP:
    """Finite MDP: transitions (states, actions, states), rewards (states, actions)."""

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=float)
        self.rewards = np.asarray(self.rewards, dtype=float)
        if self.transitions.ndim != 3:
            raise ValueError("transitions must be (states, actions, states)")
        n_s, n_a, n_s2 = self.transitions.shape
        if n_s != n_s2 or self.rewards.shape != (n_s, n_a):
            raise ValueError("transition/reward shapes disagree")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must be in [0, 1)")
        if np.any(self.transitions < 0):
            raise ValueError("transition probabilities must be nonnegative")
        sums = self.transitions.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError("each transition row must sum to 1")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]


def random_mdp(n_states: int, n_actions: int, discount: float,
               rng: np.random.Generator) -> TabularMDP:
    """Dirichlet-ish random transitions with uniform rewards in [-1, 1]."""
    raw = rng.random((n_states, n_actions, n_states)) + 1e-3
    transitions = raw / raw.sum(axis=2, keepdims=True)
    rewards = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return TabularMDP(transitions, rewards, discount)


def bellman_apply(mdp: TabularMDP, q: np.ndarray) -> np.ndarray:
    """One sweep of the optimality operator:
    (HQ)(o, a) = sum_o' P(o, a, o') * [R(o, a) + g * max_a' Q(o', a')].
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"Q table must be {(mdp.n_states, mdp.n_actions)}")
    best_next = q.max(axis=1)
    return mdp.rewards + mdp.discount * (mdp.transitions @ best_next)


def value_iteration(mdp: TabularMDP, q0: np.ndarray = None,
                    tol: float = 1e-12, max_iters: int = 100_000):
    """Iterate the operator to its fixed point.

    Returns (q_star, sup-norm error per iteration measured against the
    final table).
    """
    q = (np.zeros((mdp.n_states, mdp.n_actions)) if q0 is None
         else np.asarray(q0, dtype=float).copy())
    iterates = [q.copy()]
    for _ in range(max_iters):
        q_next = bellman_apply(mdp, q)
        delta = float(np.max(np.abs(q_next - q)))
        q = q_next
        iterates.append(q.copy())
        if delta <= tol:
            break
    q_star = q
    errors = np.array([float(np.max(np.abs(it - q_star))) for it in iterates])
    return q_star, errors


def contraction_ratio(mdp: TabularMDP, q1: np.ndarray, q2: np.ndarray) -> float:
    """||HQ1 - HQ2||_inf / ||Q1 - Q2||_inf for one probe pair."""
    num = float(np.max(np.abs(bellman_apply(mdp, q1) - bellman_apply(mdp, q2))))
    den = float(np.max(np.abs(np.asarray(q1) - np.asarray(q2))))
    if den == 0.0:
        return 0.0
    return num / den
