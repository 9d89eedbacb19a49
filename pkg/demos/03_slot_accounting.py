"""A ten-slot tour of the per-slot pipeline with a scripted policy.

Two devices share one resource block. The printout shows, slot by slot,
how sampling decisions, selection, and delivery move the device-side and
station-side ages, the queue, and the energy meter.
"""

import numpy as np

from aoisim.dynamics import Nonlinearity, PhysicalProcess
from aoisim.radio import RadioModel
from aoisim.system import IoTSystem


def main():
    processes = [
        PhysicalProcess(dim=1, a_matrix=[[0.8]],
                        nonlinearity=Nonlinearity.zero(),
                        disturbance_bound=0.2, true_state=[1.0],
                        min_frequency=0.5, device_id=0),
        PhysicalProcess(dim=1, a_matrix=[[0.9]],
                        nonlinearity=Nonlinearity.cubic_damp(0.1),
                        disturbance_bound=0.2, true_state=[-1.0],
                        min_frequency=0.5, device_id=1),
    ]
    radio = RadioModel(bandwidth_hz=180e3, tx_power_w=0.5, noise_w=10 ** -12.5,
                       rb_count=1, payload_bits=np.array([10.0, 10.0]),
                       device_distance_m=np.array([40.0, 80.0]),
                       pathloss_exponent=3.0, reference_gain=9e-5)
    system = IoTSystem(processes, radio, seed=5)

    script = [(1, 1), (0, 0), (1, 1), (0, 1), (1, 0),
              (1, 1), (0, 0), (0, 0), (1, 1), (1, 1)]
    print(f"{'slot':>4} {'s':>6} {'u':>6} {'phi':>12} {'Phi':>12} "
          f"{'energy mJ':>10} {'cost':>7}")
    for actions in script:
        system.begin_slot()
        res = system.complete_slot(np.array(actions))
        cost = system.ledger.weighted_cost(len(system.ledger.slots) - 1)
        print(f"{res.slot:>4} {str(tuple(int(v) for v in res.sampled)):>6} "
              f"{str(tuple(int(v) for v in res.selected)):>6} "
              f"{np.array2string(res.device_aoi, precision=2):>12} "
              f"{np.array2string(res.bs_aoi, precision=2):>12} "
              f"{res.energy.sum() * 1e3:>10.3f} {cost:>7.3f}")

    summary = system.ledger.summary()
    print(f"\nrunning objective: {summary['running_objective']:.4f}")
    print(f"mean queue delay:  {summary['mean_queue_delay_s']:.2f} s")
    print(f"packet overwrites: {summary['overwrite_count']}")


if __name__ == "__main__":
    main()
