"""Integrate the linear heat equation on the dilating mesh that carries the
Gaussian kernel, and compare every layer with the closed form.

    python3 demos/kernel_moving_mesh.py [--plot out.png]
"""
import argparse

import numpy as np

from heatsym.exact_solutions import kernel_value
from heatsym.model_catalog import parse_key
from heatsym.studies import kernel_errors, kernel_moving_run, max_residual


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--plot")
    args = ap.parse_args()

    layers, k = kernel_moving_run(C=1.0, t0=1.0, nodes=101, tau=0.05, steps=100)
    eu, ex = kernel_errors(layers, k)
    res = max_residual("SH54E", parse_key("K=1,Q=0"), layers)
    print(f"layers {len(layers)}, final t {layers[-1].t:g}")
    print(f"max value error {eu:.2e}, max node error {ex:.2e}, max residual {res:.2e}")
    print(f"half-width grows from {layers[0].x[-1]:g} to {layers[-1].x[-1]:g}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        for lay in layers[::25]:
            ax.plot(lay.x, lay.u, "o", ms=2)
            xf = np.linspace(lay.x[0], lay.x[-1], 400)
            ax.plot(xf, kernel_value(k, lay.t, xf), "k-", lw=0.6)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.set_title("moving-mesh nodes (dots) and closed form (lines)")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
