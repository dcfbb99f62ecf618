"""Node paths of the moving-mesh scheme started from two separated kernels,
against the trajectory ODE dx/dt = -2 u_x / u of the exact solution.

    python3 demos/superposition_trajectories.py [--plot out.png]
"""
import argparse

import numpy as np

from heatsym.exact_solutions import SuperposedKernels
from heatsym.studies import superposition_run, trajectory_error


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--plot")
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()

    sp = SuperposedKernels(1.0, 1.0, 10.0, 10.0, -8.0, 8.0)
    layers, X = superposition_run(sp, T=5.0, steps=args.steps)
    print(f"max relative node error {trajectory_error(layers, X):.2e} "
          f"({args.steps} steps, t in [0, 5])")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        t = np.array([l.t for l in layers])
        xn = np.array([l.x for l in layers])
        fig, ax = plt.subplots(figsize=(6, 4))
        for i in range(0, xn.shape[1], 5):
            ax.plot(xn[:, i], t, "b-", lw=0.8)
            ax.plot(X[::10, i], t[::10], "r.", ms=3)
        ax.set_xlim(-30, 30)
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        ax.set_title("scheme nodes (lines) and ODE oracle (dots)")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
