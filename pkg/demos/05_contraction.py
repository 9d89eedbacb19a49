"""Numerical check that the one-step lookahead operator is a contraction.

Random finite MDPs at discount 0.9: the sup-norm distance between two
value tables shrinks by at least the discount each sweep, and value
iteration tracks the geometric envelope all the way to its fixed point.
"""

import numpy as np

from aoisim.tabular import contraction_ratio, random_mdp, value_iteration


def main():
    rng = np.random.default_rng(12)
    gamma = 0.9

    ratios = []
    for _ in range(500):
        mdp = random_mdp(int(rng.integers(2, 21)), int(rng.integers(1, 5)),
                         gamma, rng)
        q1 = rng.normal(scale=5, size=(mdp.n_states, mdp.n_actions))
        q2 = rng.normal(scale=5, size=(mdp.n_states, mdp.n_actions))
        ratios.append(contraction_ratio(mdp, q1, q2))
    ratios = np.array(ratios)
    print(f"contraction ratios over 500 random MDPs (discount {gamma}):")
    print(f"  max={ratios.max():.6f}  mean={ratios.mean():.6f}  "
          f"all <= {gamma}: {bool(np.all(ratios <= gamma + 1e-12))}")

    mdp = random_mdp(12, 3, gamma, rng)
    q0 = rng.normal(scale=3, size=(12, 3))
    _, errors = value_iteration(mdp, q0, tol=1e-13)
    print(f"\nvalue iteration error vs the geometric envelope "
          f"({len(errors)} sweeps to fixed point):")
    print(f"{'sweep':>6} {'error':>12} {'gamma^k bound':>14}")
    for k in [0, 1, 2, 5, 10, 20, 40, 80]:
        if k < len(errors):
            print(f"{k:>6} {errors[k]:>12.3e} {gamma ** k * errors[0]:>14.3e}")


if __name__ == "__main__":
    main()
