"""Driven two-level crossing: survival probability against drive frequency.

Compares direct integration with the perturbative sum (gap drive, weak
coupling) and with the first-order drive correction (stronger coupling).
Writes a PNG next to this script when matplotlib is available.
"""
import math
from pathlib import Path

import numpy as np

from kzosc import furry, pt
from kzosc.tdse import DriveParams, survival_probabilities

omegas = np.linspace(0.5, 8.0, 40)

weak = [DriveParams(0.2, 0.5, 0.0, 0.1, w) for w in omegas]
strong = [DriveParams(0.75, 0.5, 0.0, 0.1, w) for w in omegas]
weak_tdse = survival_probabilities(weak)
strong_tdse = survival_probabilities(strong)
weak_pt = np.array([pt.p_pt(p) for p in weak])
strong_fp = np.array([furry.p_fp_exact(p) for p in strong])

print("omega   p_tdse(D=0.2)  p_pt        p_tdse(D=0.75)  p_fp_exact")
for row in zip(omegas, weak_tdse, weak_pt, strong_tdse, strong_fp):
    print("{:5.2f}   {:.6f}       {:.6f}    {:.6f}        {:.6f}".format(*row))
print(f"undriven values: {math.exp(-2 * math.pi * 0.04):.6f} (D=0.2), {math.exp(-2 * math.pi * 0.5625):.6f} (D=0.75)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, (a, b) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
a.plot(omegas, weak_tdse, "-", label="direct integration")
a.plot(omegas, weak_pt, ":", label="perturbative sum")
a.set_ylabel("survival, D=0.2")
a.legend()
b.plot(omegas, strong_tdse, "-", label="direct integration")
b.plot(omegas, strong_fp, ":", label="first-order drive correction")
b.set_ylabel("survival, D=0.75")
b.set_xlabel("omega")
b.legend()
out = Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
