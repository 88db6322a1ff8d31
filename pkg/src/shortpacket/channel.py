"""Tapped-delay-line burst channel with random timing offset and symbol-clock skew.

A length-n frame is dropped at a random integer offset into a silent buffer,
convolved with a 5-tap random real channel and a fractionally shifted
raised-cosine filter, trimmed to a fixed 2n-sample observation window and hit
with circularly symmetric Gaussian noise.  Every random draw is tied to an
integer seed so windows can be reproduced bit for bit.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

# Proakis type-C delay profile.  Tap i of a realization is TAP_WEIGHTS[i] * t_i
# with t_i standard normal; the draw is intentionally not power-normalized.
TAP_WEIGHTS = np.array([0.227, 0.46, 0.688, 0.46, 0.227])
N_TAPS = 5

# Receiver-visible channel memory: n_taps - 1 from the delay line plus one
# symbol contributed by the timing-offset filter delay.
CHANNEL_MEMORY = N_TAPS

STO_FILTER_LEN = 16
_STO_CENTER = 8            # filter index whose sample sits at t = 0
_TRIM_OFFSET = _STO_CENTER - 1   # keep exactly one symbol of filter delay
DEFAULT_BETA = 0.3

# Sub-stream tags hung off a window seed.  The noise tag is part of the
# golden-vector file contract: replaying a record draws its noise from
# default_rng(SeedSequence([seed, _NOISE_STREAM])) as standard_normal((2, 2n)),
# row 0 real and row 1 imaginary, scaled by sqrt(sigma2 / 2).
_REALIZATION_STREAM = 0
_NOISE_STREAM = 1
_GOLDEN_SYMBOL_STREAM = 2


def snr_to_noise_var(snr_db: float) -> float:
    """Total complex noise variance sigma^2 for unit average signal power."""
    return float(10.0 ** (-snr_db / 10.0))


def _sinc(x):
    # sin(x)/x with the removable singularity filled in (plain-argument
    # convention, not numpy's normalized one).
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def _rc_pulse(t, beta):
    """Raised-cosine expression evaluated piecewise, symbol period T = 1.

    The middle branch is kept exactly as modelled, cos(beta*t)/(pi*t) *
    sinc(pi*t); it is not the textbook raised cosine and it grows as t -> 0,
    but t = 0 itself always takes the dedicated unit branch.
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


def sto_filter_taps(tau_sto: float, beta: float = DEFAULT_BETA) -> np.ndarray:
    """16 filter taps sampled at integer times shifted by the clock offset.

    Tap i sits at t = i - 8 + tau_sto.  At tau_sto = 0 the main tap is 1 and
    all other taps are exactly 0, giving a pure one-symbol delay after the
    fixed trim.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if not 0.0 <= tau_sto < 1.0:
        raise ValueError(f"tau_sto must be in [0, 1), got {tau_sto}")
    t = np.arange(STO_FILTER_LEN, dtype=float) - _STO_CENTER + tau_sto
    return _rc_pulse(t, beta)


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """One draw of everything random on the channel side except the noise."""

    taps: np.ndarray        # (5,) real delay-line gains
    tau_off: int            # frame placement offset inside the buffer
    tau_sto: float          # fractional clock offset in [0, 1)
    sigma2: float           # total complex noise variance
    seed: int               # root seed; noise is re-drawn from it on replay


@dataclasses.dataclass(frozen=True)
class WindowTruth:
    has_message: bool
    tau_off: int | None = None
    realization: ChannelRealization | None = None


@dataclasses.dataclass(frozen=True)
class RxWindow:
    samples: np.ndarray     # (2n,) complex observation window
    n: int
    truth: WindowTruth


def draw_realization(n: int, sigma2: float, seed: int) -> ChannelRealization:
    """Draw taps, integer offset and fractional offset for one window.

    tau_off is uniform on the half-open range [0, n - CHANNEL_MEMORY), so the
    whole frame plus channel tail always fits the 2n-sample window.
    """
    if n <= CHANNEL_MEMORY:
        raise ValueError(f"n must exceed the channel memory, got {n}")
    if sigma2 < 0.0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _REALIZATION_STREAM]))
    taps = TAP_WEIGHTS * rng.standard_normal(N_TAPS)
    tau_off = int(rng.integers(0, n - CHANNEL_MEMORY))
    tau_sto = float(rng.uniform(0.0, 1.0))
    return ChannelRealization(taps=taps, tau_off=tau_off, tau_sto=tau_sto,
                              sigma2=float(sigma2), seed=int(seed))


def _noise(seed: int, length: int, sigma2: float) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, _NOISE_STREAM]))
    w = rng.standard_normal((2, length))
    return math.sqrt(sigma2 / 2.0) * (w[0] + 1j * w[1])


def propagate(x: np.ndarray, real: ChannelRealization,
              beta: float = DEFAULT_BETA) -> RxWindow:
    """Run one frame through the channel of `real` and return the 2n window.

    The frame is zero-padded into a length 2n - n_M buffer at tau_off, fully
    convolved with the delay line (length 2n - 1) and the timing filter, then
    trimmed so the filter main tap lands exactly one symbol late.  Output
    length is exactly 2n.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D symbol vector")
    n = x.shape[0]
    if n <= CHANNEL_MEMORY:
        raise ValueError(f"frame length must exceed the channel memory, got {n}")
    if not 0 <= real.tau_off < n - CHANNEL_MEMORY:
        raise ValueError(f"tau_off {real.tau_off} outside [0, {n - CHANNEL_MEMORY})")
    buf = np.zeros(2 * n - CHANNEL_MEMORY, dtype=complex)
    buf[real.tau_off:real.tau_off + n] = x
    y_h = np.convolve(buf, np.asarray(real.taps, dtype=float))   # 2n - 1
    y_g = np.convolve(y_h, sto_filter_taps(real.tau_sto, beta))  # 2n + 14
    samples = y_g[_TRIM_OFFSET:_TRIM_OFFSET + 2 * n]
    samples = samples + _noise(real.seed, 2 * n, real.sigma2)
    truth = WindowTruth(has_message=True, tau_off=real.tau_off, realization=real)
    return RxWindow(samples=samples, n=n, truth=truth)


def none_window(n: int, sigma2: float, seed: int) -> RxWindow:
    """A 2n window containing only noise (no frame present)."""
    if n <= CHANNEL_MEMORY:
        raise ValueError(f"n must exceed the channel memory, got {n}")
    samples = _noise(seed, 2 * n, sigma2)
    return RxWindow(samples=samples, n=n, truth=WindowTruth(has_message=False))


def effective_taps(real: ChannelRealization, beta: float = DEFAULT_BETA) -> np.ndarray:
    """True six-tap discrete response seen by a receiver anchored at tau_off.

    Convolution of the delay line with the timing filter, windowed to the
    CHANNEL_MEMORY + 1 taps that line up with the trimmed observation.
    """
    hg = np.convolve(np.asarray(real.taps, dtype=float),
                     sto_filter_taps(real.tau_sto, beta))
    return hg[_TRIM_OFFSET:_TRIM_OFFSET + CHANNEL_MEMORY + 1].astype(complex)


# ---------------------------------------------------------------------------
# batched twin used by the Monte-Carlo sweeps; contract-checked against
# propagate() in the tests
# ---------------------------------------------------------------------------

def _propagate_batch(X, taps, tau_off, tau_sto, noise_unit, sigma2,
                     beta: float = DEFAULT_BETA):
    """Vectorized propagate for B frames with per-frame channel draws.

    noise_unit is (B, 2n) complex with unit variance per component pair,
    i.e. standard normal real and imaginary parts; it is scaled by
    sqrt(sigma2 / 2) here so a single draw can be reused across an SNR sweep.
    """
    X = np.asarray(X, dtype=complex)
    B, n = X.shape
    buf_len = 2 * n - CHANNEL_MEMORY
    buf = np.zeros((B, buf_len), dtype=complex)
    cols = np.asarray(tau_off)[:, None] + np.arange(n)[None, :]
    buf[np.arange(B)[:, None], cols] = X

    len_h = buf_len + N_TAPS - 1            # 2n - 1
    y_h = np.zeros((B, len_h), dtype=complex)
    taps = np.asarray(taps, dtype=float)
    for l in range(N_TAPS):
        y_h[:, l:l + buf_len] += taps[:, l:l + 1] * buf

    t = np.arange(STO_FILTER_LEN, dtype=float)[None, :] - _STO_CENTER \
        + np.asarray(tau_sto, dtype=float)[:, None]
    G = _rc_pulse(t, beta)
    y_g = np.zeros((B, len_h + STO_FILTER_LEN - 1), dtype=complex)
    for m in range(STO_FILTER_LEN):
        y_g[:, m:m + len_h] += G[:, m:m + 1] * y_h

    out = y_g[:, _TRIM_OFFSET:_TRIM_OFFSET + 2 * n]
    return out + math.sqrt(sigma2 / 2.0) * noise_unit


# ---------------------------------------------------------------------------
# golden-vector files (JSON lines)
# ---------------------------------------------------------------------------
#
# One record per line:
#   {"seed": int, "taps": [5 floats], "tau_off": int, "tau_sto": float,
#    "sigma2": float, "x": [[re, im], ...], "y": [[re, im], ...]}
# x is the transmitted frame (n symbols), y the full 2n window including
# noise.  Replaying propagate(x, realization-from-fields) reproduces y exactly
# because the noise comes from the record's seed (see _NOISE_STREAM above).

def _c2pairs(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _pairs2c(pairs):
    a = np.asarray(pairs, dtype=float)
    return a[:, 0] + 1j * a[:, 1]


def export_golden(path, count: int, n: int, sigma2: float, seed: int,
                  beta: float = DEFAULT_BETA) -> None:
    """Write `count` reproducible channel traversal records to a JSONL file."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(count):
            rec_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
            real = draw_realization(n, sigma2, rec_seed)
            srng = np.random.default_rng(
                np.random.SeedSequence([rec_seed, _GOLDEN_SYMBOL_STREAM]))
            bits = srng.integers(0, 2, size=(2, n))
            x = ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / math.sqrt(2.0)
            win = propagate(x, real, beta)
            rec = {
                "seed": rec_seed,
                "taps": [float(t) for t in real.taps],
                "tau_off": real.tau_off,
                "tau_sto": real.tau_sto,
                "sigma2": real.sigma2,
                "x": _c2pairs(x),
                "y": _c2pairs(win.samples),
            }
            fh.write(json.dumps(rec) + "\n")


def load_golden(path):
    """Yield golden records with x and y materialized as complex arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            rec["x"] = _pairs2c(rec["x"])
            rec["y"] = _pairs2c(rec["y"])
            yield rec


def replay_golden(rec, beta: float = DEFAULT_BETA) -> np.ndarray:
    """Re-run a golden record through propagate; returns the replayed window."""
    real = ChannelRealization(
        taps=np.asarray(rec["taps"], dtype=float),
        tau_off=int(rec["tau_off"]),
        tau_sto=float(rec["tau_sto"]),
        sigma2=float(rec["sigma2"]),
        seed=int(rec["seed"]),
    )
    x = np.asarray(rec["x"], dtype=complex)
    return propagate(x, real, beta).samples
