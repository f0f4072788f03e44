"""Swap-generator flow on small periodic rings: speed, speed density and contraction.

For each ring size, runs a few random translation-invariant starting points
and reports the largest step-to-step increase of the speed (non-positive up
to rounding when the flow is monotone).
"""
import argparse

import numpy as np

from igrg.flow import flow_trajectory
from igrg.lattice import LatticeSpec, random_translation_invariant_state, swap_generator


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 6])
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--t-step", type=float, default=0.1)
    p.add_argument("--csv", action="store_true", help="print the first trajectory of each size")
    args = p.parse_args()

    times = np.round(np.arange(0.0, args.t_max + 1e-9, args.t_step), 10)
    for n in args.sizes:
        lat = LatticeSpec.ring(n)
        gen = swap_generator(lat)
        for seed in range(args.starts):
            traj = flow_trajectory(gen, random_translation_invariant_state(lat, seed), times, lat)
            if args.csv and seed == 0:
                print(traj.to_csv(), end="")
            print(f"N={n} seed={seed}: speed {traj.speed[0]:.4e} -> {traj.speed[-1]:.4e}, "
                  f"density {traj.speed_density[0]:.4e} -> {traj.speed_density[-1]:.4e}, "
                  f"max increase {np.max(np.diff(traj.speed)):.2e}")


if __name__ == "__main__":
    main()
