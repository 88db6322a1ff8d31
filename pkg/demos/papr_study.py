"""Peak-to-average power of coded frames, with two analytic anchors.

The interesting quantity for a power amplifier is how often a frame's
envelope spikes far above its mean power.  This script prints the CCDF
of the coded QPSK frame population next to two closed-form sanity
points: a single impulse (all energy in one sample, PAPR = 10 log10 n)
and an unshaped constant-modulus sequence (PAPR = 0 dB by definition).
"""

import argparse
import math

import numpy as np

from shortpacket import frames, ldpc, metrics
from shortpacket import __version__

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--count", type=int, default=1000)
parser.add_argument("--oversample", type=int, default=16)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

n = 64
code = ldpc.build_code(n, 88)
pre = frames.preamble_for_length(n)
rng = np.random.default_rng(args.seed)
F = np.stack([frames.build_frame(u, code, pre)
              for u in rng.integers(0, 2, (args.count, n))])

impulse = np.zeros(n, dtype=complex)
impulse[0] = 1.0
cm = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
print(f"impulse frame:            {metrics.papr_db(impulse):6.2f} dB "
      f"(analytic {10 * math.log10(n):.2f})")
print(f"constant modulus, raw:    {metrics.papr_db(cm, oversample=1):6.2f} dB")
print(f"constant modulus, 16x:    {metrics.papr_db(cm):6.2f} dB "
      f"(interpolation overshoot)")

curve = metrics.papr_ccdf(F, oversample=args.oversample)
metrics.write_papr_csv("papr_ccdf.csv", curve, __version__)

print(f"\ncoded QPSK population ({args.count} frames, "
      f"{args.oversample}x oversampling):")
for level in (1e-1, 1e-2, 1e-3):
    idx = np.searchsorted(-curve.ccdf, -level)
    if idx < curve.papr_db.size:
        print(f"  PAPR exceeded by {level:>5.1%} of frames: "
              f"{curve.papr_db[idx]:.1f} dB")
print("wrote papr_ccdf.csv")
