"""Plot violation ratios and thermalization conditions from a dbe_sweep.csv.

Usage: python3 scripts/plot_sweep.py out/uneven/dbe_sweep.csv [figure.png]
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(path, out):
    df = pd.read_csv(path, na_values=["NA"])
    fig, (ax, inset) = plt.subplots(1, 2, figsize=(10, 4))
    for col, label in [("I_0m", "I(0,-)"), ("I_pm", "I(+,-)"), ("I_0p", "I(0,+)")]:
        ax.plot(df["beta_deltaE"], df[col], label=label)
    ax.axhline(1.0, color="grey", lw=0.5)
    ax.set_xscale("log")
    ax.set_xlabel("beta * DeltaE")
    ax.set_ylabel("I")
    ax.legend()
    for lhs, rhs, name in [("lhs_30a", "rhs_30a", "a"), ("lhs_30b", "rhs_30b", "b")]:
        inset.plot(df["beta_deltaE"], df[lhs], label=f"lhs ({name})")
        inset.plot(df["beta_deltaE"], df[rhs], "--", label=f"rhs ({name})")
    inset.set_xscale("log")
    inset.set_xlabel("beta * DeltaE")
    inset.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "uneven.png")
