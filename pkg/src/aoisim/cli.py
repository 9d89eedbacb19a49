"""Command-line entry points: single runs, axis sweeps, the weight-grid
frontier, trace fitting, and a quick self-test of the core invariants.
Flags override config-file values, which override the built-in defaults."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, selector, tabular
from .harness import ConfigError, ExperimentConfig, load_config
from .neural import DenseNet


def _base_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return ExperimentConfig()


def _cmd_run(args) -> int:
    cfg = _base_config(args)
    if args.slots is not None:
        cfg.run = replace(cfg.run, slots=args.slots)
    if args.eval_slots is not None:
        cfg.run = replace(cfg.run, eval_slots=args.eval_slots)
    cfg.validate()
    mode = args.mode or cfg.run.mode
    seed = args.seed if args.seed is not None else cfg.run.seeds[0]
    out = Path(args.out) if args.out else Path(cfg.run.out_dir) / mode / f"seed_{seed}"
    result = harness.run_experiment(cfg, mode=mode, seed=seed, out_dir=out,
                                    save_checkpoint=args.checkpoint)
    s = result.summary
    print(f"mode={mode} seed={seed} slots={s['slots']} "
          f"weighted_cost={s['mean_weighted_cost']:.4f} "
          f"sum_aoi={s['mean_sum_aoi']:.4f} "
          f"energy={s['mean_sum_energy_j']:.6f}")
    print(f"artifacts written to {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _base_config(args)
    values = [int(v) for v in args.values.split(",")]
    modes = args.modes.split(",") if args.modes else None
    out = Path(args.out) if args.out else Path(cfg.run.out_dir) / "sweep"
    result = harness.run_sweep(cfg, args.axis, values, modes=modes,
                               out_dir=out, max_workers=args.workers)
    for row in result.rows:
        print(f"{row['axis']}={row['value']} mode={row['mode']} "
              f"sum_aoi={row['mean_sum_aoi_mean']:.4f}"
              f"±{row['mean_sum_aoi_std']:.4f}")
    for err in result.errors:
        print(f"FAILED {err}", file=sys.stderr)
    print(f"aggregate written to {out / 'sweep.csv'}")
    return 0 if result.ok else 1


def _parse_grid(spec: str):
    start, stop, step = (float(x) for x in spec.split(":"))
    gammas = np.arange(start, stop + step / 2, step)
    return [(round(float(g), 10), round(float(1.0 - g), 10)) for g in gammas]


def _cmd_pareto(args) -> int:
    cfg = _base_config(args)
    grid = _parse_grid(args.grid)
    modes = args.modes.split(",") if args.modes else None
    out = Path(args.out) if args.out else Path(cfg.run.out_dir) / "pareto"
    result = harness.pareto_sweep(cfg, grid, modes=modes, out_dir=out,
                                  max_workers=args.workers)
    for row in result.rows:
        print(f"gamma_a={row['gamma_a']:.2f} mode={row['mode']} "
              f"aoi={row['mean_sum_aoi_mean']:.4f} "
              f"energy={row['mean_sum_energy_j_mean']:.6f}")
    for err in result.errors:
        print(f"FAILED {err}", file=sys.stderr)
    print(f"frontier written to {out / 'pareto.csv'}")
    return 0 if result.ok else 1


def _cmd_fit(args) -> int:
    result = harness.fit_trace(args.csv)
    print(f"kind={result.kind}")
    print(f"a_matrix={np.array2string(result.a_matrix, precision=6)}")
    print(f"disturbance_bound={result.disturbance_bound:.6g}")
    for kind, sse in sorted(result.residuals.items()):
        print(f"residual[{kind}]={sse:.6g}")
    for w in result.warnings:
        print(f"warning: {w}")
    return 0


def _cmd_selftest(args) -> int:
    """Abbreviated oracle/invariant checks; exits nonzero on any failure."""
    rng = np.random.default_rng(7)
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 9))
        problem = selector.SelectionProblem(
            c1=rng.normal(size=n), c2=rng.normal(size=n),
            rb_budget=int(rng.integers(1, 5)),
            has_packet=rng.random(n) < 0.8)
        fast = selector.select(problem)
        slow = selector.brute_force_select(problem)
        if selector.objective(problem, fast) != selector.objective(problem, slow):
            ok = False
            break
    check("selection rule matches exhaustive search (200 instances)", ok)

    ok = True
    for _ in range(10):
        dims = [int(rng.integers(1, 6)) for _ in range(3)]
        net = DenseNet(dims, ["relu", "identity"], rng)
        x = rng.normal(size=dims[0])
        out, cache = net.forward_cached(x)
        grads, _ = net.backward(cache, np.ones_like(out))
        h = 1e-6
        w = net.weights[0]
        i, j = 0, 0
        orig = w[i, j]
        w[i, j] = orig + h
        up = net.forward(x).sum()
        w[i, j] = orig - h
        dn = net.forward(x).sum()
        w[i, j] = orig
        fd = (up - dn) / (2 * h)
        if abs(fd - grads[0][0][i, j]) > 1e-5 * max(1.0, abs(fd)):
            ok = False
            break
    check("backprop matches finite differences (10 nets)", ok)

    ok = True
    for _ in range(50):
        mdp = tabular.random_mdp(int(rng.integers(2, 10)),
                                 int(rng.integers(1, 4)), 0.9, rng)
        q1 = rng.normal(size=(mdp.n_states, mdp.n_actions))
        q2 = rng.normal(size=(mdp.n_states, mdp.n_actions))
        if tabular.contraction_ratio(mdp, q1, q2) > 0.9 + 1e-12:
            ok = False
            break
    check("lookahead operator is a 0.9-contraction (50 MDPs)", ok)

    from .metrics import DeviceState, update_bs_aoi, update_device_aoi
    d = DeviceState(slot_duration=1.0, device_aoi_cap=5.0, bs_aoi_cap=5.0)
    ok = (update_device_aoi(d, 1, 2.0, 5.0) == 0.0)
    d.device_aoi = 4.5
    ok = ok and update_device_aoi(d, 0, 0.0, 5.0) == 5.0
    d.bs_aoi = 4.2
    ok = ok and update_bs_aoi(d, 0, 0.0, None) == 5.0
    check("aoi recursion branch semantics", ok)

    if failures:
        print(f"{len(failures)} selftest failure(s)")
        return 1
    print("all selftests passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoisim",
        description="Sampling-policy and device-selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--config", help="YAML config path")
    p_run.add_argument("--mode", choices=harness.MODES)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="artifact directory")
    p_run.add_argument("--slots", type=int)
    p_run.add_argument("--eval-slots", type=int, dest="eval_slots")
    p_run.add_argument("--checkpoint", action="store_true",
                       help="also save network parameters")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one config axis")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--axis", default="devices", choices=harness.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated integers, e.g. 10,20,30,40")
    p_sweep.add_argument("--modes", help="comma-separated mode subset")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="process-pool size for independent runs")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_pareto = sub.add_parser("pareto", help="objective-weight frontier")
    p_pareto.add_argument("--config")
    p_pareto.add_argument("--grid", default="0:1:0.1",
                          help="gamma_aoi grid start:stop:step")
    p_pareto.add_argument("--modes", help="comma-separated mode subset")
    p_pareto.add_argument("--out")
    p_pareto.add_argument("--workers", type=int, default=1,
                          help="process-pool size for independent runs")
    p_pareto.set_defaults(func=_cmd_pareto)

    p_fit = sub.add_parser("fit", help="fit process parameters to a CSV trace")
    p_fit.add_argument("--csv", required=True)
    p_fit.set_defaults(func=_cmd_fit)

    p_self = sub.add_parser("selftest", help="quick oracle/invariant checks")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
