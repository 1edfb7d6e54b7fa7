#!/usr/bin/env python3
"""Plot the sampler comparison curves emitted next to this script."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
fig, ax = plt.subplots(figsize=(7, 5))
for name, style in (("overdamped.csv", "-"), ("underdamped.csv", "-")):
    path = here / name
    iters, kl = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("iter"):
                continue
            parts = line.strip().split(",")
            iters.append(int(parts[0]))
            kl.append(float(parts[3]))
    ax.plot(iters, kl, style, label=name.removesuffix(".csv"))
ax.set_xlabel("iteration")
ax.set_ylabel("position KL (nats)")
ax.set_xscale("log")
ax.set_yscale("log")
ax.legend()
fig.tight_layout()
out = here / "acceleration.png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
