"""Delay-line burst channel with a torch propagation path.

All random draws (tap gains, frame offset, clock offset, noise) run on
numpy Generators seeded exactly like the simulator that writes the
golden-vector files, so a record replays sample for sample.  The
deterministic part, scattering the frame into the silent buffer and
convolving with the composite channel response, runs in torch so
gradients reach the transmit symbols during training.
"""

from __future__ import annotations

import json
import math

import numpy as np
import torch

# Proakis type-C delay profile; tap i of a draw is TAP_WEIGHTS[i] * t_i with
# t_i standard normal, intentionally not power-normalized per realization.
TAP_WEIGHTS = np.array([0.227, 0.46, 0.688, 0.46, 0.227])
N_TAPS = 5
CHANNEL_MEMORY = N_TAPS

FILTER_LEN = 16
_CENTER = 8                  # filter index whose sample sits at t = 0
_TRIM = _CENTER - 1          # keep exactly one symbol of filter delay
DEFAULT_BETA = 0.3
KERNEL_LEN = N_TAPS + FILTER_LEN - 1

# sub-stream tags hung off a window seed; the noise tag is part of the
# golden-vector file contract
_REALIZATION_STREAM = 0
_NOISE_STREAM = 1


def snr_to_noise_var(snr_db: float) -> float:
    """Total complex noise variance for unit average signal power."""
    return float(10.0 ** (-snr_db / 10.0))


def _sinc(x):
    # plain-argument sin(x)/x, singularity filled in
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def shift_pulse(t, beta: float = DEFAULT_BETA):
    """Clock-offset filter expression at times t, symbol period 1.

    Matches the reference simulator branch for branch: unit at t = 0, the
    quarter-pi sinc value at |t| = 1/(2 beta), and cos(beta t)/(pi t) *
    sinc(pi t) elsewhere.
    """
    t = np.asarray(t, dtype=float)
    edge = 1.0 / (2.0 * beta)
    at_zero = t == 0.0
    at_edge = np.abs(t) == edge
    mid = ~(at_zero | at_edge)
    out = np.empty_like(t)
    out[at_zero] = 1.0
    out[at_edge] = (np.pi / 4.0) * float(_sinc(np.pi / (2.0 * beta)))
    tm = t[mid]
    out[mid] = np.cos(beta * tm) / (np.pi * tm) * _sinc(np.pi * tm)
    return out


def shift_filter(tau_sto, beta: float = DEFAULT_BETA) -> np.ndarray:
    """(B,) fractional clock offsets -> (B, 16) filter taps at t = i - 8 + tau."""
    tau = np.atleast_1d(np.asarray(tau_sto, dtype=float))
    if np.any((tau < 0.0) | (tau >= 1.0)):
        raise ValueError("tau_sto must lie in [0, 1)")
    t = np.arange(FILTER_LEN, dtype=float)[None, :] - _CENTER + tau[:, None]
    return shift_pulse(t, beta)


def composite_kernels(taps, tau_sto, beta: float = DEFAULT_BETA) -> np.ndarray:
    """Combined delay-line x clock-filter response, (B, 20) per draw."""
    taps = np.atleast_2d(np.asarray(taps, dtype=float))
    if taps.shape[1] != N_TAPS:
        raise ValueError(f"expected {N_TAPS} taps per draw, got {taps.shape[1]}")
    g = shift_filter(tau_sto, beta)
    if g.shape[0] != taps.shape[0]:
        raise ValueError("taps and tau_sto describe different batch sizes")
    out = np.zeros((taps.shape[0], KERNEL_LEN))
    for l in range(N_TAPS):
        out[:, l:l + FILTER_LEN] += taps[:, l:l + 1] * g
    return out


def draw_batch(n: int, count: int, rng: np.random.Generator):
    """Training-side channel draws: taps (B, 5), tau_off (B,), tau_sto (B,)."""
    if n <= CHANNEL_MEMORY:
        raise ValueError(f"n must exceed the channel memory, got {n}")
    taps = TAP_WEIGHTS * rng.standard_normal((count, N_TAPS))
    tau_off = rng.integers(0, n - CHANNEL_MEMORY, size=count)
    tau_sto = rng.uniform(0.0, 1.0, size=count)
    return taps, tau_off, tau_sto


def record_noise(seed: int, length: int) -> np.ndarray:
    """Unit-variance noise pairs (2, length) from a golden record's seed."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _NOISE_STREAM]))
    return rng.standard_normal((2, length))


def propagate(x: torch.Tensor, kernels, tau_off) -> torch.Tensor:
    """Clean observation windows for a batch of frames.

    x is (B, 2, n) with real and imaginary parts stacked on dim 1.  Each
    frame is scattered at its integer offset into a silent 2n - 5 buffer,
    convolved with its (20,) composite kernel and trimmed so the filter
    main tap lands one symbol late.  Returns (B, 2, 2n); gradients flow
    through x only, the kernels are constants.
    """
    if x.ndim != 3 or x.shape[1] != 2:
        raise ValueError("x must be (B, 2, n)")
    B, _, n = x.shape
    if n <= CHANNEL_MEMORY:
        raise ValueError(f"frame length must exceed the channel memory, got {n}")
    buf_len = 2 * n - CHANNEL_MEMORY
    kern = torch.as_tensor(kernels, dtype=x.dtype, device=x.device)
    if kern.shape != (B, KERNEL_LEN):
        raise ValueError(f"kernels must be ({B}, {KERNEL_LEN})")
    tau = torch.as_tensor(tau_off, dtype=torch.long, device=x.device)
    if tau.min() < 0 or tau.max() >= n - CHANNEL_MEMORY:
        raise ValueError("tau_off outside [0, n - channel memory)")

    idx = (tau[:, None, None] + torch.arange(n, device=x.device)).expand(B, 2, n)
    buf = torch.zeros(B, 2, buf_len, dtype=x.dtype, device=x.device)
    buf = buf.scatter(2, idx, x)

    # conv1d correlates, so flip each kernel; groups give one kernel per
    # real/imag channel pair
    w = torch.flip(kern, dims=(1,)).repeat_interleave(2, dim=0).unsqueeze(1)
    full = torch.nn.functional.conv1d(
        buf.reshape(1, 2 * B, buf_len), w, padding=KERNEL_LEN - 1, groups=2 * B)
    full = full.reshape(B, 2, buf_len + KERNEL_LEN - 1)
    return full[:, :, _TRIM:_TRIM + 2 * n]


def add_noise(clean: torch.Tensor, sigma2, noise_unit) -> torch.Tensor:
    """clean (B, 2, 2n) plus per-sample circular noise of total variance sigma2."""
    s = torch.as_tensor(sigma2, dtype=clean.dtype, device=clean.device)
    w = torch.as_tensor(noise_unit, dtype=clean.dtype, device=clean.device)
    return clean + torch.sqrt(s.reshape(-1, 1, 1) / 2.0) * w


# ---------------------------------------------------------------------------
# golden-vector cross-validation
# ---------------------------------------------------------------------------

def load_golden(path):
    """Yield golden records with x and y as complex arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            for key in ("x", "y"):
                a = np.asarray(rec[key], dtype=float)
                rec[key] = a[:, 0] + 1j * a[:, 1]
            yield rec


def replay_record(rec) -> np.ndarray:
    """Re-run one golden record through the torch path, float64.

    The noise is redrawn from the record's seed via the shared stream
    contract, so the result must match the stored window to float
    precision if the propagation is equivalent.
    """
    x = np.asarray(rec["x"], dtype=complex)
    n = x.shape[0]
    xt = torch.tensor(np.stack([x.real, x.imag])[None, :, :], dtype=torch.float64)
    kern = composite_kernels(np.asarray(rec["taps"], dtype=float)[None, :],
                             [float(rec["tau_sto"])])
    clean = propagate(xt, torch.tensor(kern, dtype=torch.float64),
                      [int(rec["tau_off"])])
    w = record_noise(rec["seed"], 2 * n)
    noise = math.sqrt(float(rec["sigma2"]) / 2.0) * (w[0] + 1j * w[1])
    return clean[0, 0].numpy() + 1j * clean[0, 1].numpy() + noise
