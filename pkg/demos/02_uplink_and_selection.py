"""The uplink budget in action: faded rates, expected delays, and the
closed-form device selection versus exhaustive search.

Twenty devices request an upload but only ten resource blocks exist; the
selection rule picks the set with the most negative marginal cost, and an
exhaustive enumeration confirms the choice is optimal.
"""

import numpy as np

from aoisim.harness import ExperimentConfig, build_radio, placement_distances
from aoisim.radio import draw_fading, expected_delay, rate
from aoisim.selector import (SelectionProblem, brute_force_select,
                             coefficients, objective, select)


def main():
    cfg = ExperimentConfig()          # reference parameters, 20 devices
    rng = np.random.default_rng(3)
    distances = placement_distances(cfg.devices, cfg.radio.cell_radius_m, rng)
    radio = build_radio(cfg, distances)
    draw_fading(radio, rng)

    print(f"{'dev':>3} {'dist m':>7} {'rate Mb/s':>10} {'E[delay] us':>12} "
          f"{'c1':>9}")
    c1 = np.zeros(cfg.devices)
    c2 = np.zeros(cfg.devices)
    state = rng.uniform(0, 5, size=(cfg.devices, 2))   # ages (device, BS)
    for m in range(cfg.devices):
        el = expected_delay(radio, m, 4096, np.random.default_rng(100 + m))
        c1[m], c2[m] = coefficients(
            device_aoi=state[m, 0], bs_aoi_prev=state[m, 1], sampled=1,
            expected_delay=el, gamma_a=cfg.costs.gamma_aoi,
            gamma_e=cfg.costs.gamma_energy, tx_power_w=radio.tx_power_w,
            sampling_cost_j=cfg.costs.sampling_cost_j,
            slot_duration=cfg.costs.slot_s)
        print(f"{m:>3} {distances[m]:>7.1f} {rate(radio, m, True) / 1e6:>10.3f} "
              f"{el * 1e6:>12.3f} {c1[m]:>9.3f}")

    problem = SelectionProblem(c1=c1, c2=c2, rb_budget=radio.rb_count,
                               has_packet=np.ones(cfg.devices, bool))
    fast = select(problem)
    slow = brute_force_select(problem)
    print(f"\nselected (rule):        {np.flatnonzero(fast).tolist()}")
    print(f"selected (exhaustive):  {np.flatnonzero(slow).tolist()}")
    print(f"objective rule={objective(problem, fast):.6f} "
          f"exhaustive={objective(problem, slow):.6f}")


if __name__ == "__main__":
    main()
