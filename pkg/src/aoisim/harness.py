"""Experiment orchestration: validated configuration with paper-scale
defaults, deterministic process catalogs and device placement, trace
fitting, single runs, axis sweeps, and the weight-grid frontier."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

logger = logging.getLogger("aoisim")
logger.setLevel(os.environ.get("AOISIM_LOG", "WARNING").upper())

from .dynamics import Nonlinearity, PhysicalProcess
from .marl import LossTrace, TrainerConfig, make_agent, run_episode
from .metrics import CostLedger
from .radio import RadioModel, calibrated_reference_gain, dbm_to_watts
from .system import IoTSystem


class ConfigError(ValueError):
    """Configuration file failed validation."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class RadioConfig:
    bandwidth_hz: float = 180e3
    tx_power_w: float = 0.5
    noise_dbm: float = -95.0
    payload_bits: int = 10
    pathloss_exponent: float = 3.0
    reference_gain: Optional[float] = None   # None -> calibrated at build time
    mc_samples: int = 4096
    cell_radius_m: float = 100.0


@dataclass
class CostConfig:
    gamma_aoi: float = 0.5
    gamma_energy: float = 0.5
    sampling_cost_j: float = 5e-4
    slot_s: float = 1.0
    device_aoi_cap: float = 5.0
    bs_aoi_cap: float = 5.0
    min_frequency_hz: float = 10.0


@dataclass
class RunConfig:
    mode: str = "qmix_partial"
    modes: Tuple[str, ...] = ("qmix_partial", "qmix_global", "dqn", "uniform")
    slots: int = 20_000
    eval_slots: int = 5_000
    seeds: Tuple[int, ...] = (0,)
    out_dir: str = "out"


MODES = ("qmix_partial", "qmix_global", "dqn", "uniform")


@dataclass
class ExperimentConfig:
    devices: int = 20
    rb_count: int = 10
    radio: RadioConfig = field(default_factory=RadioConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    run: RunConfig = field(default_factory=RunConfig)
    processes: object = "catalog"

    def validate(self) -> "ExperimentConfig":
        if self.devices < 1:
            raise ConfigError("devices must be >= 1")
        if self.rb_count < 1:
            raise ConfigError("rb_count must be >= 1")
        if self.costs.gamma_aoi < 0 or self.costs.gamma_energy < 0:
            raise ConfigError("objective weights must be nonnegative")
        if self.costs.gamma_aoi + self.costs.gamma_energy <= 0:
            raise ConfigError("objective weights must not both be zero")
        positive = {
            "radio.bandwidth_hz": self.radio.bandwidth_hz,
            "radio.tx_power_w": self.radio.tx_power_w,
            "radio.payload_bits": self.radio.payload_bits,
            "radio.pathloss_exponent": self.radio.pathloss_exponent,
            "radio.cell_radius_m": self.radio.cell_radius_m,
            "costs.sampling_cost_j": self.costs.sampling_cost_j,
            "costs.slot_s": self.costs.slot_s,
            "costs.device_aoi_cap": self.costs.device_aoi_cap,
            "costs.bs_aoi_cap": self.costs.bs_aoi_cap,
            "costs.min_frequency_hz": self.costs.min_frequency_hz,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.run.mode not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}")
        for mode in self.run.modes:
            if mode not in MODES:
                raise ConfigError(f"run.modes entry {mode!r} not in {MODES}")
        if self.run.eval_slots > self.run.slots:
            raise ConfigError("run.eval_slots cannot exceed run.slots")
        if self.radio.mc_samples < 1:
            raise ConfigError("radio.mc_samples must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["run"]["modes"] = list(self.run.modes)
        d["run"]["seeds"] = list(self.run.seeds)
        d["trainer"]["net_hidden"] = list(self.trainer.net_hidden)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _merge_section(section_cls, data: dict, path: str):
    known = {f.name: f for f in dataclasses.fields(section_cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {path}.{key!r} "
                              f"(known: {sorted(known)})")
        kwargs[key] = value
    return kwargs


def config_from_dict(data: Optional[dict]) -> ExperimentConfig:
    data = dict(data or {})
    cfg = ExperimentConfig()
    top_known = {"devices", "rb_count", "radio", "costs", "trainer", "run",
                 "processes"}
    for key in data:
        if key not in top_known:
            raise ConfigError(f"unknown top-level key {key!r} "
                              f"(known: {sorted(top_known)})")
    if "devices" in data:
        cfg.devices = int(data["devices"])
    if "rb_count" in data:
        cfg.rb_count = int(data["rb_count"])
    if "radio" in data:
        cfg.radio = RadioConfig(**_merge_section(RadioConfig, data["radio"], "radio"))
    if "costs" in data:
        cfg.costs = CostConfig(**_merge_section(CostConfig, data["costs"], "costs"))
    if "trainer" in data:
        kwargs = _merge_section(TrainerConfig, data["trainer"], "trainer")
        kwargs.pop("mode", None)  # the experiment mode lives under run
        if "net_hidden" in kwargs:
            kwargs["net_hidden"] = tuple(kwargs["net_hidden"])
        cfg.trainer = TrainerConfig(**kwargs)
    if "run" in data:
        kwargs = _merge_section(RunConfig, data["run"], "run")
        if "modes" in kwargs:
            kwargs["modes"] = tuple(kwargs["modes"])
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
        cfg.run = RunConfig(**kwargs)
    if "processes" in data:
        cfg.processes = data["processes"]
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML config; omitted keys take the defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    d = cfg.to_dict()
    d["trainer"].pop("mode", None)
    Path(path).write_text(yaml.safe_dump(d, sort_keys=True))


# ---------------------------------------------------------------------------
# Process catalog and placement
# ---------------------------------------------------------------------------

# Four archetypes cycled over device indices. Their distinguishable-
# frequency thresholds are tuned so the Nyquist interval sits between one
# and two slots at typical staleness: sampling every slot keeps the
# device-side age at zero, while any skipped slot leaves a real freshness
# deficit. That makes sampling cadence matter everywhere in the cell.
_CATALOG = (
    {"kind": "zero", "dim": 2,
     "a_matrix": [[0.55, -0.55], [0.55, 0.55]],
     "disturbance_bound": 0.5, "min_frequency_hz": 0.4,
     "x0": [1.0, 0.0]},
    {"kind": "tanh_gain", "dim": 2,
     "a_matrix": [[0.6, 0.1], [0.0, 0.5]],
     "gain": [[0.2, 0.0], [0.0, 0.2]],
     "disturbance_bound": 0.4, "min_frequency_hz": 0.25,
     "x0": [0.5, -0.5]},
    {"kind": "cubic_damp", "dim": 1,
     "a_matrix": [[0.8]], "coeff": 0.1,
     "disturbance_bound": 0.3, "min_frequency_hz": 0.2,
     "x0": [1.0]},
    {"kind": "zero", "dim": 2,
     "a_matrix": [[0.7, 0.2], [-0.1, 0.6]],
     "disturbance_bound": 0.3, "min_frequency_hz": 0.22,
     "x0": [0.8, -0.3]},
)


def process_from_spec(spec: dict, device_id: int,
                      default_min_freq: float) -> PhysicalProcess:
    kind = spec.get("kind", "zero")
    if kind == "tanh_gain":
        nl = Nonlinearity.tanh_gain(np.asarray(spec["gain"], dtype=float))
    elif kind == "cubic_damp":
        nl = Nonlinearity.cubic_damp(float(spec["coeff"]))
    elif kind == "zero":
        nl = Nonlinearity.zero()
    else:
        raise ConfigError(f"process {device_id}: unknown kind {kind!r}")
    a = np.asarray(spec["a_matrix"], dtype=float)
    dim = int(spec.get("dim", a.shape[0]))
    x0 = np.asarray(spec.get("x0", np.zeros(dim)), dtype=float)
    return PhysicalProcess(
        dim=dim, a_matrix=a, nonlinearity=nl,
        disturbance_bound=float(spec.get("disturbance_bound", 0.0)),
        true_state=x0,
        min_frequency=float(spec.get("min_frequency_hz", default_min_freq)),
        device_id=device_id)


def build_processes(cfg: ExperimentConfig) -> List[PhysicalProcess]:
    if cfg.processes == "catalog":
        specs = [_CATALOG[m % len(_CATALOG)] for m in range(cfg.devices)]
    else:
        specs = list(cfg.processes)
        if len(specs) != cfg.devices:
            raise ConfigError(
                f"{len(specs)} process specs for {cfg.devices} devices")
    return [process_from_spec(s, m, cfg.costs.min_frequency_hz)
            for m, s in enumerate(specs)]


def placement_distances(n_devices: int, radius_m: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Distances of devices dropped uniformly on the disc (sqrt-scaled)."""
    return np.maximum(radius_m * np.sqrt(rng.random(n_devices)), 1.0)


def build_radio(cfg: ExperimentConfig, distances: np.ndarray) -> RadioModel:
    noise_w = dbm_to_watts(cfg.radio.noise_dbm)
    gain = cfg.radio.reference_gain
    if gain is None:
        gain = calibrated_reference_gain(
            cfg.radio.tx_power_w, noise_w, cfg.radio.cell_radius_m,
            cfg.radio.pathloss_exponent)
    return RadioModel(
        bandwidth_hz=cfg.radio.bandwidth_hz,
        tx_power_w=cfg.radio.tx_power_w,
        noise_w=noise_w,
        rb_count=cfg.rb_count,
        payload_bits=np.full(cfg.devices, float(cfg.radio.payload_bits)),
        device_distance_m=distances,
        pathloss_exponent=cfg.radio.pathloss_exponent,
        reference_gain=gain,
        slot_duration_s=cfg.costs.slot_s)


def build_system(cfg: ExperimentConfig, seed, debug_traces: bool = False) -> IoTSystem:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    place_ss, sys_ss = root.spawn(2)
    distances = placement_distances(cfg.devices, cfg.radio.cell_radius_m,
                                    np.random.default_rng(place_ss))
    return IoTSystem(
        build_processes(cfg), build_radio(cfg, distances),
        gamma_a=cfg.costs.gamma_aoi, gamma_e=cfg.costs.gamma_energy,
        sampling_cost_j=cfg.costs.sampling_cost_j,
        slot_duration=cfg.costs.slot_s,
        device_aoi_cap=cfg.costs.device_aoi_cap,
        bs_aoi_cap=cfg.costs.bs_aoi_cap,
        mc_samples=cfg.radio.mc_samples,
        seed=sys_ss, debug_traces=debug_traces)


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    mode: str
    seed: int
    summary: dict
    ledger: CostLedger
    trace: LossTrace


def run_experiment(cfg: ExperimentConfig, mode: Optional[str] = None,
                   seed: Optional[int] = None, out_dir=None,
                   save_checkpoint: bool = False) -> RunResult:
    """Run one (mode, seed) experiment; optionally write its artifacts."""
    cfg.validate()
    mode = mode if mode is not None else cfg.run.mode
    seed = seed if seed is not None else cfg.run.seeds[0]
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")

    root = np.random.SeedSequence(seed)
    env_ss, agent_ss = root.spawn(2)
    system = build_system(cfg, env_ss)
    trainer_cfg = replace(cfg.trainer, mode=mode)
    agent = make_agent(mode, cfg.devices, cfg.rb_count, trainer_cfg,
                       seed=agent_ss)

    logger.info("run start: mode=%s seed=%s devices=%d slots=%d",
                mode, seed, cfg.devices, cfg.run.slots)
    started = time.perf_counter()
    trace = run_episode(system, agent, cfg.run.slots,
                        eval_slots=cfg.run.eval_slots, cfg=trainer_cfg)
    elapsed = time.perf_counter() - started
    logger.info("run done: mode=%s seed=%s %.1fs", mode, seed, elapsed)

    summary = system.ledger.summary(eval_slots=cfg.run.eval_slots)
    summary.update({
        "mode": mode,
        "seed": seed,
        "config_hash": cfg.config_hash(),
        "runtime_s": round(elapsed, 3),
        "delay_truncations": system.radio.truncation_count,
        "train_steps": getattr(agent, "train_steps", 0),
        "skipped_train_steps": getattr(agent, "skipped_steps", 0),
    })
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        system.ledger.to_csv(out / "ledger.csv")
        trace.to_csv(out / "loss.csv")
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
        if save_checkpoint:
            agent.save_checkpoint(out / "checkpoint", {
                "mode": mode, "seed": seed, "config_hash": cfg.config_hash()})
    return RunResult(mode=mode, seed=seed, summary=summary,
                     ledger=system.ledger, trace=trace)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("devices", "rb_count")

_AGG_METRICS = ("mean_sum_aoi", "mean_sum_energy_j", "mean_sample_interval_s",
                "mean_queue_delay_s", "mean_recon_err", "mean_weighted_cost")


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    out = replace(cfg)
    setattr(out, axis, int(value))
    return out


@dataclass
class SweepResult:
    rows: List[dict]
    errors: List[str]
    runs: List[RunResult]

    @property
    def ok(self) -> bool:
        return not self.errors


def _aggregate_rows(tag: dict, per_seed: List[dict]) -> dict:
    row = dict(tag)
    row["n_seeds"] = len(per_seed)
    for metric in _AGG_METRICS:
        vals = np.array([s[metric] for s in per_seed], dtype=float)
        row[f"{metric}_mean"] = float(np.nanmean(vals)) if vals.size else float("nan")
        row[f"{metric}_std"] = float(np.nanstd(vals)) if vals.size else float("nan")
    return row


def _write_rows_csv(rows: List[dict], path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    cols = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(row[c]) for c in cols) + "\n")


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _sweep_task(args):
    """Worker for the sweep pool; returns (task key, summary or error)."""
    cfg_v, mode, seed, run_out = args
    try:
        res = run_experiment(cfg_v, mode=mode, seed=seed, out_dir=run_out)
    except Exception as exc:
        return (mode, seed), None, str(exc)
    return (mode, seed), res.summary, None


def run_sweep(cfg: ExperimentConfig, axis: str, values: Sequence[int],
              modes: Optional[Sequence[str]] = None, out_dir=None,
              keep_ledgers: bool = False, max_workers: int = 1) -> SweepResult:
    """Run every (axis value, mode, seed) combination and aggregate.

    Individual run failures are recorded and the sweep continues; the
    result's ``ok`` flag reports whether everything succeeded. Runs are
    independent, so ``max_workers > 1`` fans them out over a process pool
    (aggregation stays a deterministic single-threaded reduce; ledgers are
    retained only in the serial path).
    """
    modes = list(modes if modes is not None else cfg.run.modes)
    rows: List[dict] = []
    errors: List[str] = []
    runs: List[RunResult] = []
    out = Path(out_dir) if out_dir is not None else None
    for value in values:
        cfg_v = _apply_axis(cfg, axis, value)
        tasks = []
        for mode in modes:
            for seed in cfg.run.seeds:
                run_out = (out / f"{axis}_{value}" / mode / f"seed_{seed}"
                           if out is not None else None)
                tasks.append((cfg_v, mode, seed, run_out))
        summaries = {}
        if max_workers > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=max_workers) as pool:
                outcomes = list(pool.map(_sweep_task, tasks))
        else:
            outcomes = []
            for cfg_t, mode, seed, run_out in tasks:
                try:
                    res = run_experiment(cfg_t, mode=mode, seed=seed,
                                         out_dir=run_out)
                except Exception as exc:
                    outcomes.append(((mode, seed), None, str(exc)))
                    continue
                if keep_ledgers:
                    runs.append(res)
                outcomes.append(((mode, seed), res.summary, None))
        for (mode, seed), summary, err in outcomes:
            if err is not None:
                errors.append(f"{axis}={value} mode={mode} seed={seed}: {err}")
            else:
                summaries.setdefault(mode, []).append(summary)
        for mode in modes:
            if summaries.get(mode):
                rows.append(_aggregate_rows(
                    {"axis": axis, "value": value, "mode": mode,
                     "config_hash": cfg_v.config_hash()}, summaries[mode]))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows_csv(rows, out / "sweep.csv")
    return SweepResult(rows=rows, errors=errors, runs=runs)


def pareto_sweep(cfg: ExperimentConfig, weight_grid: Sequence[Tuple[float, float]],
                 modes: Optional[Sequence[str]] = None, out_dir=None,
                 max_workers: int = 1) -> SweepResult:
    """Frontier of (age, energy) as the objective weights vary."""
    modes = list(modes if modes is not None else cfg.run.modes)
    rows: List[dict] = []
    errors: List[str] = []
    for gamma_a, gamma_e in weight_grid:
        cfg_w = replace(cfg, costs=replace(cfg.costs, gamma_aoi=float(gamma_a),
                                           gamma_energy=float(gamma_e)))
        cfg_w.validate()
        tasks = [(cfg_w, mode, seed, None)
                 for mode in modes for seed in cfg.run.seeds]
        if max_workers > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=max_workers) as pool:
                outcomes = list(pool.map(_sweep_task, tasks))
        else:
            outcomes = [_sweep_task(task) for task in tasks]
        summaries = {}
        for (mode, seed), summary, err in outcomes:
            if err is not None:
                errors.append(f"gammas=({gamma_a},{gamma_e}) mode={mode} "
                              f"seed={seed}: {err}")
            else:
                summaries.setdefault(mode, []).append(summary)
        for mode in modes:
            if summaries.get(mode):
                rows.append(_aggregate_rows(
                    {"gamma_a": gamma_a, "gamma_e": gamma_e, "mode": mode,
                     "config_hash": cfg_w.config_hash()}, summaries[mode]))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows_csv(rows, out / "pareto.csv")
    return SweepResult(rows=rows, errors=errors, runs=[])


# ---------------------------------------------------------------------------
# Trace fitting
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    kind: str
    a_matrix: np.ndarray
    nonlinearity: Nonlinearity
    disturbance_bound: float
    residuals: dict
    warnings: List[str]

    def process_spec(self) -> dict:
        spec = {"kind": self.kind if self.kind != "linear" else "zero",
                "dim": self.a_matrix.shape[0],
                "a_matrix": self.a_matrix.tolist(),
                "disturbance_bound": self.disturbance_bound}
        if self.kind == "tanh_gain":
            spec["gain"] = self.nonlinearity.gain.tolist()
        if self.kind == "cubic_damp":
            spec["coeff"] = self.nonlinearity.coeff
        return spec


def _fit_linear(x0: np.ndarray, x1: np.ndarray):
    sol, _, rank, _ = np.linalg.lstsq(x0, x1, rcond=None)
    return sol.T, rank


def _fit_tanh(x0: np.ndarray, x1: np.ndarray):
    design = np.hstack([x0, np.tanh(x0)])
    sol, _, rank, _ = np.linalg.lstsq(design, x1, rcond=None)
    d = x0.shape[1]
    return sol[:d].T, sol[d:].T, rank


def _fit_cubic(x0: np.ndarray, x1: np.ndarray):
    # Shared scalar damping coefficient across dimensions: for each output
    # dim i, x1[:, i] = A[i, :] @ x0 - c * x0[:, i]**3.
    n, d = x0.shape
    design = np.zeros((n * d, d * d + 1))
    target = np.zeros(n * d)
    for i in range(d):
        block = slice(i * n, (i + 1) * n)
        design[block, i * d:(i + 1) * d] = x0
        design[block, -1] = -x0[:, i] ** 3
        target[block] = x1[:, i]
    sol, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    a = sol[:-1].reshape(d, d)
    return a, float(sol[-1]), rank


def _sse(x0, x1, a, nl: Nonlinearity) -> Tuple[float, np.ndarray]:
    pred = x0 @ a.T + np.stack([nl.value(row) for row in x0])
    resid = x1 - pred
    return float(np.sum(resid ** 2)), resid


def fit_trace(csv_path, tie_tolerance: float = 1e-12) -> FitResult:
    """Least-squares one-step fit of a CSV time series over the catalog.

    The first column is a timestamp, the rest the state. Picks the
    nonlinearity kind with the lowest residual (ties break toward the
    simpler, earlier kind) and bounds the disturbance by the largest
    residual norm.
    """
    raw = np.genfromtxt(csv_path, delimiter=",", skip_header=1)
    raw = np.atleast_2d(raw)
    if raw.shape[0] < 10:
        raise ValueError(f"need at least 10 rows to fit, got {raw.shape[0]}")
    if np.any(~np.isfinite(raw)):
        raise ValueError("trace contains non-numeric entries")
    ts = raw[:, 0]
    if np.any(np.diff(ts) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    states = raw[:, 1:]
    x0, x1 = states[:-1], states[1:]
    d = x0.shape[1]
    warnings: List[str] = []

    fits = {}
    a_lin, rank = _fit_linear(x0, x1)
    if rank < d:
        # Degenerate trace: fall back to a pooled scalar AR(1).
        denom = float(np.sum(x0 ** 2))
        a_scalar = float(np.sum(x0 * x1) / denom) if denom > 0 else 0.0
        a_lin = a_scalar * np.eye(d)
        warnings.append(
            f"rank-deficient design (rank {rank} < {d}); "
            f"fell back to scalar AR(1) with a={a_scalar:.6g}")
        fits["linear"] = (a_lin, Nonlinearity.zero())
    else:
        fits["linear"] = (a_lin, Nonlinearity.zero())
        a_t, b_t, rank_t = _fit_tanh(x0, x1)
        if rank_t == 2 * d:
            fits["tanh_gain"] = (a_t, Nonlinearity.tanh_gain(b_t))
        a_c, coeff, rank_c = _fit_cubic(x0, x1)
        if rank_c == d * d + 1:
            fits["cubic_damp"] = (a_c, Nonlinearity.cubic_damp(coeff))

    residuals = {}
    resid_vectors = {}
    for kind, (a, nl) in fits.items():
        residuals[kind], resid_vectors[kind] = _sse(x0, x1, a, nl)
    best = min(residuals.values())
    for kind in ("linear", "tanh_gain", "cubic_damp"):  # simpler kinds first
        if kind in residuals and residuals[kind] <= best + tie_tolerance:
            chosen = kind
            break
    if len(residuals) > 1 and all(
            abs(residuals[k] - best) <= tie_tolerance for k in residuals):
        warnings.append("all kinds fit equally well; choice is ambiguous "
                        "and resolved toward the linear model")
    a, nl = fits[chosen]
    bound = float(np.max(np.linalg.norm(resid_vectors[chosen], axis=1)))
    return FitResult(kind=chosen, a_matrix=a, nonlinearity=nl,
                     disturbance_bound=bound, residuals=residuals,
                     warnings=warnings)
