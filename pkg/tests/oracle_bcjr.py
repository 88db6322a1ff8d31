"""Brute-force MAP bit marginals for a tiny ISI instance.

Enumerates every QPSK payload sequence of N symbols, scores the full
snippet likelihood plus the weighted prior directly, and reduces to
per-bit LLRs.  Nothing here shares code with the trellis implementation:
the model is applied sequence-by-sequence from its definition.

Model, for payload symbols x_0..x_{N-1} and taps h[0..5]:

    y_t = sum_l h[l] * x_ext[t - l] + noise,   t = 0 .. N+4

with x_ext the payload extended by the 5 known preamble symbols on the
left and zeros (frame edge) on the right.  Bit LLRs are positive for
bit = 0; digit q = 2*b0 + b1 maps to ((1-2b0) + 1j(1-2b1))/sqrt(2).
"""

import itertools
import math

import numpy as np

_C4 = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0)
_MEM = 5


def enum_llrs(y, h, pre_tail, n_sym, ap=None, weight=0.2, noise_var=1.0,
              mode="exact"):
    """All-sequence posterior bit LLRs; mode 'exact' or 'maxlog'."""
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    assert len(h) == 6 and len(pre_tail) == _MEM
    assert len(y) == n_sym + _MEM
    digits = np.array(list(itertools.product(range(4), repeat=n_sym)))
    x = _C4[digits]                                      # (4^N, N)
    S = x.shape[0]
    x_ext = np.concatenate([np.broadcast_to(pre_tail, (S, _MEM)), x,
                            np.zeros((S, _MEM), dtype=complex)], axis=1)
    y_model = np.zeros((S, n_sym + _MEM), dtype=complex)
    for l in range(6):
        start = _MEM - l
        y_model += h[l] * x_ext[:, start:start + n_sym + _MEM]
    metric = -np.sum(np.abs(y - y_model) ** 2, axis=1) / noise_var

    if ap is not None and weight != 0.0:
        ap = np.asarray(ap, dtype=float)
        assert len(ap) == 2 * n_sym
        lp0 = -np.logaddexp(0.0, -ap)                    # log P(bit = 0)
        lp1 = -np.logaddexp(0.0, ap)
        bits = np.stack([digits >> 1, digits & 1], axis=2).reshape(S, 2 * n_sym)
        metric += weight * np.sum(np.where(bits == 0, lp0, lp1), axis=1)

    bits = np.stack([digits >> 1, digits & 1], axis=2).reshape(S, 2 * n_sym)
    reduce = {"exact": _lse, "maxlog": np.max}[mode]
    llr = np.empty(2 * n_sym)
    for b in range(2 * n_sym):
        llr[b] = reduce(metric[bits[:, b] == 0]) - reduce(metric[bits[:, b] == 1])
    return llr


def _lse(v):
    m = np.max(v)
    return m + math.log(np.sum(np.exp(v - m)))
