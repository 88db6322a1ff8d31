"""Burst framing: constant-amplitude preamble followed by a QPSK coded payload."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

# preamble length per total frame length; the payload fills the remainder
PREAMBLE_LENGTHS = {40: 16, 48: 16, 56: 20, 64: 20, 96: 24}
DEFAULT_PREAMBLE_ROOT = 7

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def zadoff_chu(length: int, root: int) -> np.ndarray:
    """Constant-amplitude zero-autocorrelation sequence of the given length.

    Uses the even/odd closed forms; the root must be coprime with the length
    so the periodic autocorrelation vanishes at every non-zero lag.
    """
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} not coprime with length {length}")
    m = np.arange(length)
    if length % 2:
        phase = -np.pi * root * m * (m + 1) / length
    else:
        phase = -np.pi * root * m * m / length
    return np.exp(1j * phase)


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-map bit pairs (b0, b1) to unit-power symbols.

    b0 selects the real sign, b1 the imaginary sign, 0 -> positive:
    (0,0) -> (+1+j)/sqrt2, (0,1) -> (+1-j)/sqrt2,
    (1,0) -> (-1+j)/sqrt2, (1,1) -> (-1-j)/sqrt2.
    """
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.shape[0] % 2:
        raise ValueError("bits must be a flat vector of even length")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0/1")
    b = bits.reshape(-1, 2).astype(np.int64)  # uint8 would wrap under 1 - 2b
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) * _INV_SQRT2


def qpsk_hard_bits(symbols: np.ndarray) -> np.ndarray:
    """Inverse of qpsk_map under hard decisions (sign of each component)."""
    s = np.asarray(symbols)
    out = np.empty(2 * s.shape[0], dtype=np.uint8)
    out[0::2] = s.real < 0
    out[1::2] = s.imag < 0
    return out


@dataclasses.dataclass(frozen=True)
class PreambleSpec:
    symbols: np.ndarray
    root: int

    @property
    def length(self) -> int:
        return int(self.symbols.shape[0])


def preamble_for_length(n: int, root: int = DEFAULT_PREAMBLE_ROOT) -> PreambleSpec:
    """The preamble used by frames of total length n."""
    if n not in PREAMBLE_LENGTHS:
        raise ValueError(f"unsupported frame length {n}; known: {sorted(PREAMBLE_LENGTHS)}")
    return PreambleSpec(symbols=zadoff_chu(PREAMBLE_LENGTHS[n], root), root=root)


def payload_symbols(n: int) -> int:
    return n - PREAMBLE_LENGTHS[n]


def build_frame(u: np.ndarray, code, preamble: PreambleSpec) -> np.ndarray:
    """Encode a payload and prepend the preamble; unit average frame power.

    `code` supplies encode(u) -> coded bits and tx_bits; the coded bits must
    fill the payload section exactly (two bits per symbol).
    """
    coded = np.asarray(code.encode(u))
    frame = np.concatenate([preamble.symbols, qpsk_map(coded)])
    power = np.mean(np.abs(frame) ** 2)
    return frame / math.sqrt(power)
