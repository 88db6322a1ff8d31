"""One frame, start to finish: encode, propagate, detect, refine, decode.

Walks a single 64-symbol frame through the whole receive chain and
narrates what each stage sees, including how the per-round payload error
count shrinks as the equalizer and decoder trade information.
"""

import argparse

import numpy as np

from shortpacket import channel, detection, frames, ldpc, receiver

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--snr", type=float, default=9.0)
parser.add_argument("--seed", type=int, default=21)
parser.add_argument("--rounds", type=int, default=4)
args = parser.parse_args()

rng = np.random.default_rng(args.seed)
code = ldpc.build_code(64, 88)
pre = frames.preamble_for_length(64)

u = rng.integers(0, 2, 64)
x = frames.build_frame(u, code, pre)
print(f"payload: {64} bits -> {code.spec.tx_bits} coded bits "
      f"(rate {code.spec.rate:.3f}) -> {len(x)} symbols "
      f"({pre.length} preamble + {64 - pre.length} data)")

sigma2 = channel.snr_to_noise_var(args.snr)
real = channel.draw_realization(64, sigma2, args.seed)
win = channel.propagate(x, real)
print(f"channel: taps {np.round(real.taps, 3)}, frame starts at sample "
      f"{real.tau_off} of {len(win.samples)}, timing offset "
      f"{real.tau_sto:.2f} of a symbol, snr {args.snr:g} dB")

eta = 0.7555    # threshold calibrated for a 0.1% false-alarm budget
out = detection.detect_and_sync(win, pre, eta)
print(f"detector: statistic {out.metric:.3f} vs eta {eta} -> "
      f"{'hit' if out.detected else 'miss'} at coarse offset {out.tau_hat}")
if not out.detected:
    raise SystemExit("frame missed; try a higher --snr or another --seed")

cfg = receiver.ReceiverConfig(l_iedd=args.rounds)
res = receiver.receive(win, pre, code, eta, cfg)
print(f"refined anchor: {res.tau_hat} (true {real.tau_off}), "
      f"noise power estimate {res.noise_var:.3f} (true {sigma2:.3f})")

for r, u_hat in enumerate(res.round_payloads, start=1):
    errs = int(np.sum(u_hat != u))
    print(f"round {r}: {errs:2d}/64 payload bits wrong, "
          f"parity {'clean' if res.parity_ok and r == len(res.round_payloads) else '...'}")

final = res.round_payloads[-1]
verdict = "decoded correctly" if np.array_equal(final, u) else "block error"
print(f"result: {verdict}")
