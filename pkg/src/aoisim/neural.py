"""Small dense networks with hand-coded exact backpropagation, plain SGD,
parameter (de)serialization, and the seeded replay buffer used by the
training loops. Everything runs in float64."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

ACTIVATIONS = ("relu", "identity", "absolute")


def _apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "absolute":
        return np.abs(z)
    return z


def _activation_grad(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(float)
    if kind == "absolute":
        return np.sign(z)
    return np.ones_like(z)


class DenseNet:
    """Fully connected net: affine layers with per-layer activations.

    Weights are stored as (in_dim, out_dim) and inputs may be a single
    vector or a (batch, in_dim) array. ``backward`` consumes the cache
    produced by ``forward_cached`` and returns exact gradients for every
    parameter plus the gradient with respect to the input.
    """

    def __init__(self, layer_dims: Sequence[int], activations: Sequence[str],
                 rng: Optional[np.random.Generator] = None):
        if len(layer_dims) < 2:
            raise ValueError("need at least one layer")
        if len(activations) != len(layer_dims) - 1:
            raise ValueError("one activation per layer required")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.activations = tuple(activations)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        rng = rng if rng is not None else np.random.default_rng(0)
        for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self.skipped_updates = 0

    # -- introspection ---------------------------------------------------

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "DenseNet":
        clone = DenseNet.__new__(DenseNet)
        clone.layer_dims = self.layer_dims
        clone.activations = self.activations
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone.skipped_updates = 0
        return clone

    def sync_from(self, other: "DenseNet") -> None:
        for w, ow in zip(self.weights, other.weights):
            w[...] = ow
        for b, ob in zip(self.biases, other.biases):
            b[...] = ob

    # -- forward/backward -------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cached(x)[0]

    def forward_cached(self, x: np.ndarray) -> Tuple[np.ndarray, list]:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.layer_dims[0]:
            raise ValueError(
                f"input width {h.shape[1]} != first layer {self.layer_dims[0]}")
        cache = []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = h @ w + b
            cache.append((h, z))
            h = _apply_activation(act, z)
        return (h[0] if squeeze else h), cache

    def backward(self, cache: list, upstream: np.ndarray
                 ) -> Tuple[List[Tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Reverse pass; returns ([(dW, db) per layer], d_input)."""
        g = np.asarray(upstream, dtype=float)
        squeeze = g.ndim == 1
        if squeeze:
            g = g[None, :]
        grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            h_in, z = cache[i]
            gz = g * _activation_grad(self.activations[i], z)
            grads[i] = (h_in.T @ gz, gz.sum(axis=0))
            g = gz @ self.weights[i].T
        return grads, (g[0] if squeeze else g)

    def sgd_step(self, grads, learning_rate: float) -> bool:
        """theta <- theta - lr * grad. Skips (and counts) non-finite grads."""
        for dw, db in grads:
            if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
                self.skipped_updates += 1
                return False
        for (dw, db), w, b in zip(grads, self.weights, self.biases):
            w -= learning_rate * dw
            b -= learning_rate * db
        return True

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        """Flat little-endian float64 parameters plus a JSON shape header."""
        path = Path(path)
        header = {"layer_dims": list(self.layer_dims),
                  "activations": list(self.activations)}
        path.with_suffix(".json").write_text(json.dumps(header, sort_keys=True))
        flat = np.concatenate([w.ravel() for w in self.weights]
                              + [b.ravel() for b in self.biases])
        flat.astype("<f8").tofile(path.with_suffix(".bin"))

    @classmethod
    def load(cls, path) -> "DenseNet":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        net = cls(header["layer_dims"], header["activations"],
                  rng=np.random.default_rng(0))
        flat = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
        if flat.size != net.param_count:
            raise ValueError(
                f"parameter file holds {flat.size} values, net needs {net.param_count}")
        pos = 0
        for w in net.weights:
            w[...] = flat[pos:pos + w.size].reshape(w.shape)
            pos += w.size
        for b in net.biases:
            b[...] = flat[pos:pos + b.size]
            pos += b.size
        return net


# ---------------------------------------------------------------------------
# Experience replay
# ---------------------------------------------------------------------------

@dataclass
class Experience:
    """One device's transition record."""

    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    selected: int

    def __post_init__(self):
        if self.action not in (0, 1):
            raise ValueError("action must be 0 or 1")
        if not np.isfinite(self.reward):
            raise ValueError("reward must be finite")


class ReplayBuffer:
    """Seeded ring buffer with uniform without-replacement batch sampling."""

    def __init__(self, capacity: int, rng: np.random.Generator):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng
        self._items: list = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int) -> list:
        """Uniform batch without replacement; empty list while underfilled."""
        if len(self._items) < batch_size:
            return []
        idx = self.rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]
