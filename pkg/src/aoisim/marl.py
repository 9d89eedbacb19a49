"""Cooperative sampling-policy training: per-device Q-networks, the
station-side hypernetwork mixer, TD-loss updates gated by device selection,
and the episode loop tying agents to the slot pipeline. Includes the
independent-DQN and uniform-sampling baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .neural import DenseNet, Experience, ReplayBuffer

OBS_DIM = 4
FREQ_FEATURE_CLIP = 4.0  # sampling frequencies are normalized against this


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def encode_features(obs: np.ndarray, aoi_cap: float = 5.0,
                    slot_duration: float = 1.0) -> np.ndarray:
    """Scale raw observations [aoi, freq, s, u] into [0, 1]-ish features.

    Bounded inputs keep the plain-SGD value nets well conditioned; the
    stored observations themselves stay in physical units.
    """
    obs = np.asarray(obs, dtype=float)
    out = obs.copy()
    out[..., 0] = obs[..., 0] / aoi_cap
    out[..., 1] = np.minimum(obs[..., 1] * slot_duration,
                             FREQ_FEATURE_CLIP) / FREQ_FEATURE_CLIP
    return out


def device_reward(bs_aoi: float, energy_j: float, gamma_a: float,
                  gamma_e: float) -> float:
    """Per-device slot reward: negative weighted freshness/energy cost."""
    return -(gamma_a * bs_aoi + gamma_e * energy_j)


def act(qnet: DenseNet, features: np.ndarray, exploit_prob: float,
        rng: np.random.Generator) -> int:
    """Greedy action with the given exploitation probability.

    Greedy ties resolve to action 0 (do not sample); the explore branch
    draws uniformly over both actions.
    """
    if rng.random() < exploit_prob:
        return int(np.argmax(qnet.forward(features)))
    return int(rng.integers(2))


# ---------------------------------------------------------------------------
# Mixing network
# ---------------------------------------------------------------------------

class MixingNetwork:
    """State-conditioned linear mixer with nonnegative weights.

    Two hypernetworks map the global state to per-device weights and
    biases; the weight head ends in an absolute-value activation so the
    mixed value is monotone in every device's Q. ``vdn`` degenerates to
    plain summation (weights one, biases zero).
    """

    MODES = ("partial", "global", "vdn")

    def __init__(self, state_dim: int, n_agents: int, hidden: int = 32,
                 mode: str = "partial",
                 rng: Optional[np.random.Generator] = None):
        if mode not in self.MODES:
            raise ValueError(f"unknown mixer mode {mode!r}")
        self.mode = mode
        self.n_agents = n_agents
        self.state_dim = state_dim
        if mode == "vdn":
            self.hyper_w = None
            self.hyper_b = None
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            self.hyper_w = DenseNet([state_dim, hidden, n_agents],
                                    ["relu", "absolute"], rng)
            self.hyper_b = DenseNet([state_dim, hidden, n_agents],
                                    ["relu", "identity"], rng)

    def copy(self) -> "MixingNetwork":
        clone = MixingNetwork.__new__(MixingNetwork)
        clone.mode = self.mode
        clone.n_agents = self.n_agents
        clone.state_dim = self.state_dim
        clone.hyper_w = None if self.hyper_w is None else self.hyper_w.copy()
        clone.hyper_b = None if self.hyper_b is None else self.hyper_b.copy()
        return clone

    def sync_from(self, other: "MixingNetwork") -> None:
        if self.hyper_w is not None:
            self.hyper_w.sync_from(other.hyper_w)
            self.hyper_b.sync_from(other.hyper_b)

    def participation(self, selection: np.ndarray) -> np.ndarray:
        """Which devices' values enter the mix (all of them in global mode)."""
        selection = np.asarray(selection, dtype=float)
        if self.mode == "global":
            return np.ones_like(selection)
        return selection

    def weights_and_biases(self, state: np.ndarray
                           ) -> Tuple[np.ndarray, np.ndarray]:
        state = np.asarray(state, dtype=float)
        if self.mode == "vdn":
            shape = state.shape[:-1] + (self.n_agents,)
            return np.ones(shape), np.zeros(shape)
        return self.hyper_w.forward(state), self.hyper_b.forward(state)


def mix(mixer: MixingNetwork, q_values: np.ndarray, selection: np.ndarray,
        state: np.ndarray) -> float | np.ndarray:
    """Mixed value sum_m mask_m * (w_m(state) * Q_m + b_m(state)).

    Every device participating in the mix must supply a finite Q value.
    """
    q_values = np.asarray(q_values, dtype=float)
    mask = mixer.participation(selection)
    if np.any((mask > 0) & ~np.isfinite(q_values)):
        raise ValueError("missing Q value for a device entering the mix")
    w, b = mixer.weights_and_biases(state)
    mixed = (mask * (w * np.nan_to_num(q_values) + b)).sum(axis=-1)
    return float(mixed) if mixed.ndim == 0 else mixed


def td_target(device_targets: Sequence[DenseNet], target_mixer: MixingNetwork,
              next_features: np.ndarray, selection: np.ndarray,
              rewards: np.ndarray, discount: float) -> np.ndarray:
    """Bootstrapped target R_t + g * max_a' Q_mix(next).

    Nonnegative mixing weights let the joint maximization decompose into
    per-device maxima of the target nets. The slot reward aggregates the
    same devices that enter the mix.
    """
    next_features = np.asarray(next_features, dtype=float)
    squeeze = next_features.ndim == 2
    if squeeze:
        next_features = next_features[None]
        selection = np.asarray(selection)[None]
        rewards = np.asarray(rewards)[None]
    n_batch, n_agents, _ = next_features.shape
    q_best = np.empty((n_batch, n_agents))
    for m in range(n_agents):
        q_best[:, m] = device_targets[m].forward(next_features[:, m]).max(axis=1)
    mask = target_mixer.participation(selection)
    next_state = next_features.reshape(n_batch, -1)
    w, b = target_mixer.weights_and_biases(next_state)
    r_tot = (mask * rewards).sum(axis=1)
    target = r_tot + discount * (mask * (w * q_best + b)).sum(axis=1)
    return target[0] if squeeze else target


# ---------------------------------------------------------------------------
# Trainers
# ---------------------------------------------------------------------------

@dataclass
class TrainerConfig:
    mode: str = "qmix_partial"
    discount: float = 0.9
    exploit_start: float = 0.05
    exploit_end: float = 0.95
    anneal_fraction: float = 0.5
    lr_device: float = 2e-3
    lr_mixer: float = 5e-4
    replay_capacity: int = 10_000
    batch_size: int = 64
    target_sync_period: int = 200
    train_period: int = 1
    net_hidden: Tuple[int, ...] = (64, 64)
    mixer_hidden: int = 32
    # Pessimistic value initialization: rewards are negative costs, so a
    # zero-centered init makes never-updated actions look best and, under
    # selection-gated updates, freezes the system in the empty-selection
    # fixed point (zero loss, zero gradients). Starting the Q heads below
    # any achievable return keeps greedy devices on the actions training
    # has actually vetted.
    q_init_offset: float = 8.0

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must be in [0, 1)")
        for name in ("exploit_start", "exploit_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    def exploitation_at(self, slot: int, train_slots: int) -> float:
        """Linear anneal over the first anneal_fraction of training slots."""
        horizon = max(1, int(self.anneal_fraction * train_slots))
        frac = min(1.0, slot / horizon)
        return self.exploit_start + frac * (self.exploit_end - self.exploit_start)


class QmixTrainer:
    """Per-device Q nets plus the station mixer, trained on a joint replay.

    Only devices whose values entered the mix receive gradient (the
    selection mask rides through the chain rule), mirroring the fact that
    unselected devices never hear the mixed value back.
    """

    def __init__(self, n_agents: int, cfg: TrainerConfig, seed=0,
                 mixer_mode: Optional[str] = None):
        self.cfg = cfg
        self.n_agents = n_agents
        if mixer_mode is None:
            mixer_mode = {"qmix_partial": "partial", "qmix_global": "global",
                          "vdn": "vdn"}.get(cfg.mode, "partial")
        root = _seed_sequence(seed)
        init_ss, policy_ss, replay_ss = root.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        dims = [OBS_DIM, *cfg.net_hidden, 2]
        acts = ["relu"] * len(cfg.net_hidden) + ["identity"]
        self.nets = [DenseNet(dims, acts, init_rng) for _ in range(n_agents)]
        for net in self.nets:
            net.biases[-1] -= cfg.q_init_offset
        self.target_nets = [net.copy() for net in self.nets]
        state_dim = OBS_DIM * n_agents
        self.mixer = MixingNetwork(state_dim, n_agents, cfg.mixer_hidden,
                                   mixer_mode, init_rng)
        self.target_mixer = self.mixer.copy()
        self.policy_rng = np.random.default_rng(policy_ss)
        self.buffer = ReplayBuffer(cfg.replay_capacity,
                                   np.random.default_rng(replay_ss))
        self.train_steps = 0
        self.skipped_steps = 0

    def act_all(self, features: np.ndarray, exploit_prob: float,
                slot: int) -> np.ndarray:
        return np.array([act(self.nets[m], features[m], exploit_prob,
                             self.policy_rng)
                         for m in range(self.n_agents)], dtype=int)

    def store(self, features, actions, rewards, selection, next_features) -> None:
        self.buffer.push((np.asarray(features, dtype=float),
                          np.asarray(actions, dtype=int),
                          np.asarray(rewards, dtype=float),
                          np.asarray(selection, dtype=int),
                          np.asarray(next_features, dtype=float)))

    def _sync_targets(self) -> None:
        for net, tgt in zip(self.nets, self.target_nets):
            tgt.sync_from(net)
        self.target_mixer.sync_from(self.mixer)

    def train_step(self) -> Optional[float]:
        batch = self.buffer.sample(self.cfg.batch_size)
        if not batch:
            return None
        feats = np.stack([b[0] for b in batch])          # (B, M, F)
        actions = np.stack([b[1] for b in batch])        # (B, M)
        rewards = np.stack([b[2] for b in batch])
        selection = np.stack([b[3] for b in batch])
        next_feats = np.stack([b[4] for b in batch])
        n_batch = feats.shape[0]
        rows = np.arange(n_batch)

        q_taken = np.empty((n_batch, self.n_agents))
        caches = []
        for m in range(self.n_agents):
            q_all, cache = self.nets[m].forward_cached(feats[:, m])
            caches.append((q_all, cache))
            q_taken[:, m] = q_all[rows, actions[:, m]]

        mask = self.mixer.participation(selection)
        state = feats.reshape(n_batch, -1)
        if self.mixer.mode == "vdn":
            w = np.ones_like(mask)
            b = np.zeros_like(mask)
            w_cache = b_cache = None
        else:
            w, w_cache = self.mixer.hyper_w.forward_cached(state)
            b, b_cache = self.mixer.hyper_b.forward_cached(state)
        q_tot = (mask * (w * q_taken + b)).sum(axis=1)

        target = td_target(self.target_nets, self.target_mixer, next_feats,
                           selection, rewards, self.cfg.discount)
        td_err = q_tot - target
        loss = float(np.mean(td_err ** 2))
        if not np.isfinite(loss):
            self.skipped_steps += 1
            return None

        d_qtot = 2.0 * td_err / n_batch                  # (B,)
        for m in range(self.n_agents):
            q_all, cache = caches[m]
            upstream = np.zeros_like(q_all)
            upstream[rows, actions[:, m]] = d_qtot * mask[:, m] * w[:, m]
            grads, _ = self.nets[m].backward(cache, upstream)
            self.nets[m].sgd_step(grads, self.cfg.lr_device)
        if self.mixer.mode != "vdn":
            gw, _ = self.mixer.hyper_w.backward(
                w_cache, d_qtot[:, None] * mask * q_taken)
            self.mixer.hyper_w.sgd_step(gw, self.cfg.lr_mixer)
            gb, _ = self.mixer.hyper_b.backward(b_cache, d_qtot[:, None] * mask)
            self.mixer.hyper_b.sgd_step(gb, self.cfg.lr_mixer)

        self.train_steps += 1
        if self.train_steps % self.cfg.target_sync_period == 0:
            self._sync_targets()
        return loss

    def save_checkpoint(self, out_dir, manifest: dict) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for m, net in enumerate(self.nets):
            net.save(out / f"device_{m}")
        if self.mixer.hyper_w is not None:
            self.mixer.hyper_w.save(out / "hyper_w")
            self.mixer.hyper_b.save(out / "hyper_b")
        payload = dict(manifest)
        payload["train_steps"] = self.train_steps
        (out / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")


class DqnTrainer:
    """Fully distributed baseline: every device learns on its own reward."""

    def __init__(self, n_agents: int, cfg: TrainerConfig, seed=0):
        self.cfg = cfg
        self.n_agents = n_agents
        root = _seed_sequence(seed)
        init_ss, policy_ss, replay_ss = root.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        dims = [OBS_DIM, *cfg.net_hidden, 2]
        acts = ["relu"] * len(cfg.net_hidden) + ["identity"]
        self.nets = [DenseNet(dims, acts, init_rng) for _ in range(n_agents)]
        for net in self.nets:
            net.biases[-1] -= cfg.q_init_offset
        self.target_nets = [net.copy() for net in self.nets]
        self.policy_rng = np.random.default_rng(policy_ss)
        self.buffers = [ReplayBuffer(cfg.replay_capacity, np.random.default_rng(ss))
                        for ss in replay_ss.spawn(n_agents)]
        self.train_steps = 0
        self.skipped_steps = 0

    def act_all(self, features: np.ndarray, exploit_prob: float,
                slot: int) -> np.ndarray:
        return np.array([act(self.nets[m], features[m], exploit_prob,
                             self.policy_rng)
                         for m in range(self.n_agents)], dtype=int)

    def store(self, features, actions, rewards, selection, next_features) -> None:
        for m in range(self.n_agents):
            self.buffers[m].push(Experience(
                observation=np.asarray(features[m], dtype=float),
                action=int(actions[m]), reward=float(rewards[m]),
                next_observation=np.asarray(next_features[m], dtype=float),
                selected=int(selection[m])))

    def train_step(self) -> Optional[float]:
        losses = []
        for m in range(self.n_agents):
            batch = self.buffers[m].sample(self.cfg.batch_size)
            if not batch:
                continue
            obs = np.stack([e.observation for e in batch])
            acts = np.array([e.action for e in batch])
            rews = np.array([e.reward for e in batch])
            nxt = np.stack([e.next_observation for e in batch])
            rows = np.arange(len(batch))
            q_all, cache = self.nets[m].forward_cached(obs)
            q_taken = q_all[rows, acts]
            target = rews + self.cfg.discount * self.target_nets[m].forward(nxt).max(axis=1)
            td_err = q_taken - target
            loss = float(np.mean(td_err ** 2))
            if not np.isfinite(loss):
                self.skipped_steps += 1
                continue
            upstream = np.zeros_like(q_all)
            upstream[rows, acts] = 2.0 * td_err / len(batch)
            grads, _ = self.nets[m].backward(cache, upstream)
            self.nets[m].sgd_step(grads, self.cfg.lr_device)
            losses.append(loss)
        if not losses:
            return None
        self.train_steps += 1
        if self.train_steps % self.cfg.target_sync_period == 0:
            for net, tgt in zip(self.nets, self.target_nets):
                tgt.sync_from(net)
        return float(np.mean(losses))

    def save_checkpoint(self, out_dir, manifest: dict) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for m, net in enumerate(self.nets):
            net.save(out / f"device_{m}")
        payload = dict(manifest)
        payload["train_steps"] = self.train_steps
        (out / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")


class UniformPolicy:
    """Non-learning baseline: sample every k-th slot, phases staggered so
    the per-slot request load matches the resource-block budget."""

    def __init__(self, n_agents: int, rb_count: int):
        self.n_agents = n_agents
        self.period = max(1, int(np.ceil(n_agents / rb_count)))

    def act_all(self, features: np.ndarray, exploit_prob: float,
                slot: int) -> np.ndarray:
        return np.array([1 if slot % self.period == m % self.period else 0
                         for m in range(self.n_agents)], dtype=int)

    def store(self, *args) -> None:
        pass

    def train_step(self) -> Optional[float]:
        return None

    def save_checkpoint(self, out_dir, manifest: dict) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = dict(manifest)
        payload["period"] = self.period
        (out / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")


def make_agent(mode: str, n_agents: int, rb_count: int, cfg: TrainerConfig,
               seed=0):
    mixer_modes = {"qmix_partial": "partial", "qmix_global": "global",
                   "vdn": "vdn"}
    if mode in mixer_modes:
        return QmixTrainer(n_agents, cfg, seed=seed,
                           mixer_mode=mixer_modes[mode])
    if mode == "dqn":
        return DqnTrainer(n_agents, cfg, seed=seed)
    if mode == "uniform":
        return UniformPolicy(n_agents, rb_count)
    raise ValueError(f"unknown trainer mode {mode!r}")


# ---------------------------------------------------------------------------
# Episode loop
# ---------------------------------------------------------------------------

@dataclass
class LossTrace:
    iterations: List[int] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    mean_rewards: List[float] = field(default_factory=list)
    epsilons: List[float] = field(default_factory=list)

    def append(self, iteration: int, loss: float, mean_reward: float,
               epsilon: float) -> None:
        self.iterations.append(iteration)
        self.losses.append(loss)
        self.mean_rewards.append(mean_reward)
        self.epsilons.append(epsilon)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,loss,mean_reward,epsilon\n")
            for it, lo, mr, ep in zip(self.iterations, self.losses,
                                      self.mean_rewards, self.epsilons):
                fh.write("%d,%.17g,%.17g,%.17g\n" % (it, lo, mr, ep))


def run_episode(system, agent, slots: int, *, eval_slots: int = 0,
                cfg: Optional[TrainerConfig] = None) -> LossTrace:
    """Drive the slot pipeline for the given horizon.

    Training happens during the first ``slots - eval_slots`` slots with the
    annealed exploitation schedule; the trailing evaluation window acts
    greedily (exploitation probability 1) with learning frozen. Per-slot
    accounting accumulates in ``system.ledger``.
    """
    cfg = cfg if cfg is not None else getattr(agent, "cfg", TrainerConfig())
    if eval_slots > slots:
        raise ValueError("eval_slots cannot exceed slots")
    train_slots = slots - eval_slots
    trace = LossTrace()
    aoi_cap = system.devices[0].device_aoi_cap if system.devices else 5.0
    pending = None
    for t in range(1, slots + 1):
        try:
            obs = system.begin_slot()
        except Exception as exc:
            raise RuntimeError(f"slot {t}: {exc}") from exc
        feats = encode_features(obs, aoi_cap, system.slot_duration)
        if pending is not None:
            agent.store(*pending, feats)
        in_training = t <= train_slots
        exploit = cfg.exploitation_at(t, train_slots) if in_training else 1.0
        actions = agent.act_all(feats, exploit, t)
        result = system.complete_slot(actions)
        pending = (feats, actions, result.rewards, result.selected)
        if in_training and t % cfg.train_period == 0:
            loss = agent.train_step()
            if loss is not None:
                trace.append(getattr(agent, "train_steps", 0), loss,
                             float(result.rewards.mean()), exploit)
    return trace
