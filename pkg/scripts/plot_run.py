"""Plot a run directory: xi_k and err_k over time, snapshots, eigenvalue spectra.

    python scripts/plot_run.py runs/paper-m100 [--out figure.png]

Needs matplotlib (``pip install .[plot]``); the package itself does not.
"""
import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=float)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("run_dir")
    parser.add_argument("--out", help="output image (default: <run_dir>/summary.png)")
    args = parser.parse_args(argv)

    traj = read_csv(os.path.join(args.run_dir, "trajectory.csv"))
    snaps = read_csv(os.path.join(args.run_dir, "snapshots.csv"))
    fig, axes = plt.subplots(1, 3, figsize=(15, 4))

    ax = axes[0]
    ax.plot(traj["t_k"], traj["xi_k"], label="xi_k")
    if np.all(np.isfinite(traj["err_k"])):
        ax.plot(traj["t_k"], traj["err_k"], label="err_k")
    ax.set_xlabel("t")
    ax.legend()

    ax = axes[1]
    for t in np.unique(snaps["t"]):
        sel = snaps["t"] == t
        line, = ax.plot(snaps["x"][sel], snaps["u_est"][sel], label=f"t={t:.2f}")
        if np.all(np.isfinite(snaps["u_true"][sel])):
            ax.plot(snaps["x"][sel], snaps["u_true"][sel], "--", color=line.get_color())
    ax.set_xlabel("x")
    ax.legend(fontsize="small")

    ax = axes[2]
    eig_path = os.path.join(args.run_dir, "eigenvalues.csv")
    if os.path.exists(eig_path):
        eig = np.loadtxt(eig_path, delimiter=",", skiprows=1)
        for row in eig[:: max(1, len(eig) // 5)]:
            lam = np.sort(np.abs(row[2:]))[::-1]
            ax.semilogy(np.arange(1, lam.size + 1), np.maximum(lam, 1e-20), label=f"t={row[1]:.2f}")
        ax.axhline(1e-6, color="k", lw=0.5)
        ax.set_xlabel("index")
        ax.legend(fontsize="small")

    fig.tight_layout()
    out = args.out or os.path.join(args.run_dir, "summary.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
