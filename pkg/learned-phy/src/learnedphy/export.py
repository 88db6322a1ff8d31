"""Message export: JSON-lines frames plus a per-position statistics CSV.

The JSONL format ({"bits": [...], "symbols": [[re, im], ...]} per line) is
the exchange contract with the reference simulator's import commands; the
stats CSV carries per-position average power and variance, which is where
learned pilot positions show up.
"""

from __future__ import annotations

import json

import numpy as np
import torch

from .model import Transceiver, append_parity


def sample_messages(model: Transceiver, count: int, seed: int = 0,
                    batch: int = 500, constant_envelope: bool = False):
    """Encode `count` random blocks; returns (bits (count, k) uint8, x complex)."""
    rng = np.random.default_rng(seed)
    cfg = model.cfg
    bits_out = np.empty((count, cfg.k), dtype=np.uint8)
    x_out = np.empty((count, cfg.n), dtype=complex)
    done = 0
    with torch.no_grad():
        while done < count:
            m = min(batch, count - done)
            info = torch.as_tensor(rng.integers(0, 2, size=(m, cfg.k)),
                                   dtype=torch.int64)
            x = model.encode(append_parity(info),
                             constant_envelope=constant_envelope)
            bits_out[done:done + m] = info.numpy().astype(np.uint8)
            x_out[done:done + m] = x[:, 0].numpy() + 1j * x[:, 1].numpy()
            done += m
    return bits_out, x_out


def message_stats(x: np.ndarray):
    """Per-position average power and complex variance over a message set."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2:
        raise ValueError("expected (count, n) complex messages")
    power = np.mean(np.abs(x) ** 2, axis=0)
    mean = np.mean(x, axis=0)
    variance = np.mean(np.abs(x - mean[None, :]) ** 2, axis=0)
    return power, variance


def pilot_positions(power: np.ndarray, variance: np.ndarray) -> np.ndarray:
    """Positions that behave like pilots: almost deterministic, above-average power.

    A position counts as near-deterministic when its variance is under a
    tenth of its own average power, i.e. more than 90 percent of the
    transmitted energy there is the same in every message.
    """
    power = np.asarray(power, dtype=float)
    variance = np.asarray(variance, dtype=float)
    low_var = variance < 0.1 * power
    strong = power > power.mean()
    return np.nonzero(low_var & strong)[0]


def export_messages(model: Transceiver, count: int, path, stats_path=None,
                    seed: int = 0, constant_envelope: bool = False):
    """Write count frames as JSONL; optionally the stats CSV alongside.

    Returns (bits, symbols) so callers can reuse the drawn set.
    """
    if count < 1:
        raise ValueError("count must be positive")
    bits, x = sample_messages(model, count, seed=seed,
                              constant_envelope=constant_envelope)
    with open(path, "w", encoding="utf-8") as fh:
        for row_bits, row_x in zip(bits, x):
            rec = {
                "bits": [int(b) for b in row_bits],
                "symbols": [[float(z.real), float(z.imag)] for z in row_x],
            }
            fh.write(json.dumps(rec) + "\n")
    if stats_path is not None:
        power, variance = message_stats(x)
        with open(stats_path, "w", encoding="utf-8") as fh:
            fh.write("position,power,variance\n")
            for i, (p, v) in enumerate(zip(power, variance)):
                fh.write(f"{i},{p:.8g},{v:.8g}\n")
    return bits, x
