"""BCJR equalization over the six-tap ISI trellis.

State = last five QPSK digits, little-endian in base 4 (digit 0 is the
most recent symbol), so 4^5 = 1024 states and 4096 branches per step.
A branch is indexed (q, d4, r): q the new digit, r = state % 256 the four
younger state digits, d4 the oldest.  The successor state is q + 4r.

Boundary handling: the forward metric is pinned to state 0 at step 0;
the first five steps add the known preamble tail as a constant gain term
and mask the taps that would read pinned ghost digits, and the five
trailing snippet samples past the payload depend only on the final state,
so they fold into the backward initialization.  Max-log is the default;
exact log-sum-exp recursions are selected with exact=True.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .frames import PreambleSpec

CHANNEL_TAPS = 6          # delay-line memory plus one symbol of filter delay
_MEM = CHANNEL_TAPS - 1
N_STATES = 4 ** _MEM
DEFAULT_APRIORI_WEIGHT = 0.2

# digit q = 2*b0 + b1 -> ((1-2*b0) + 1j*(1-2*b1))/sqrt(2), matching qpsk_map
QPSK_TABLE = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0)


def _branch_digit_tables():
    """Per-tap symbol digit for every branch, laid out (tap, q, d4, r)."""
    q, d4, r = np.meshgrid(np.arange(4), np.arange(4), np.arange(256),
                           indexing="ij")
    taps = [q]
    for l in range(1, 5):
        taps.append((r >> (2 * (l - 1))) & 3)
    taps.append(d4)
    return np.stack(taps).astype(np.uint8)


def _state_digit_tables():
    s = np.arange(N_STATES)
    return np.stack([(s >> (2 * i)) & 3 for i in range(_MEM)]).astype(np.uint8)


_BRANCH_DIGITS = _branch_digit_tables()      # (6, 4, 4, 256)
_STATE_DIGITS = _state_digit_tables()        # (5, 1024)
_BRANCH_SYMS = QPSK_TABLE[_BRANCH_DIGITS]    # complex, same shape
_STATE_SYMS = QPSK_TABLE[_STATE_DIGITS]


@dataclasses.dataclass(frozen=True)
class IsiTrellis:
    h: np.ndarray               # (6,) complex estimated response
    preamble: PreambleSpec
    n_sym: int                  # payload symbols equalized per call
    gain_cum: np.ndarray        # (6, 4, 4, 256) cumulative-tap branch gains
    pre_const: np.ndarray       # (5,) known preamble contribution at steps 0..4
    tail_gain: np.ndarray       # (5, 1024) state-only gains past the payload

    @property
    def n_states(self) -> int:
        return N_STATES

    @property
    def branch_gains(self) -> np.ndarray:
        """Full-history branch gains (4, 4, 256), used at steps >= 5."""
        return self.gain_cum[-1]

    @property
    def snippet_len(self) -> int:
        return self.preamble.length + self.n_sym + _MEM


def build_trellis(h_hat, preamble: PreambleSpec, n_sym: int) -> IsiTrellis:
    """Branch-gain tables for one estimated response.

    n_sym is the payload symbol count; the snippet it equalizes runs from
    the preamble start to n_M samples past the payload.
    """
    h = np.asarray(h_hat, dtype=complex)
    if h.shape != (CHANNEL_TAPS,):
        raise ValueError(f"h_hat must have {CHANNEL_TAPS} taps, got {h.shape}")
    if n_sym < _MEM:
        raise ValueError(f"need at least {_MEM} payload symbols, got {n_sym}")
    gain_cum = np.cumsum(h[:, None, None, None] * _BRANCH_SYMS, axis=0)
    p = preamble.symbols
    pre_const = np.array([
        sum(h[l] * p[preamble.length + t - l] for l in range(t + 1, 6))
        for t in range(_MEM)])
    tail_gain = np.stack([
        sum(h[l] * _STATE_SYMS[l - j] for l in range(j, 6))
        for j in range(1, 6)])
    return IsiTrellis(h=h, preamble=preamble, n_sym=n_sym, gain_cum=gain_cum,
                      pre_const=pre_const, tail_gain=tail_gain)


def _initial_alpha(batch: int, dtype=np.float64) -> np.ndarray:
    """Forward metric at step 0: pinned to the all-ghost state."""
    a = np.full((batch, N_STATES), -np.inf, dtype=dtype)
    a[:, 0] = 0.0
    return a


def _ap_symbol_terms(ap, n_sym, weight, dtype):
    """Weighted log-prior per (symbol, digit) from per-bit a-priori LLRs."""
    if ap is None or weight == 0.0:
        return np.zeros((1, n_sym, 4), dtype=dtype)
    ap = np.asarray(ap, dtype=float)
    lp0 = -np.logaddexp(0.0, -ap)
    lp1 = -np.logaddexp(0.0, ap)
    b0 = np.stack([lp0[..., 0::2], lp1[..., 0::2]])      # (2, B, N)
    b1 = np.stack([lp0[..., 1::2], lp1[..., 1::2]])
    digits = np.arange(4)
    out = b0[digits >> 1].transpose(1, 2, 0) + b1[digits & 1].transpose(1, 2, 0)
    return (weight * out).astype(dtype)                   # (B, N, 4)


def equalize(y_snip, trellis: IsiTrellis, a_priori=None,
             weight: float = DEFAULT_APRIORI_WEIGHT,
             noise_var: float = 1.0, exact: bool = False) -> np.ndarray:
    """Per-coded-bit LLRs (positive = bit 0) for one snippet.

    y_snip covers preamble + payload + n_M trailing samples, anchored at
    the detected offset.  a_priori, when given, holds 2*n_sym decoder
    LLRs added to the branch metrics with the given weight.
    """
    y = np.asarray(y_snip, dtype=complex)
    if y.shape != (trellis.snippet_len,):
        raise ValueError(f"y_snip must have {trellis.snippet_len} samples, "
                         f"got {y.shape}")
    ap = None if a_priori is None else np.asarray(a_priori, dtype=float)[None, :]
    return _equalize_batch(y[None, :], trellis.h[None, :], trellis.preamble,
                           trellis.n_sym, ap, weight,
                           np.array([noise_var]), exact=exact,
                           dtype=np.float64)[0]


def _masked_gains(H, t):
    """Branch gains at an early step: taps l <= t only, batched."""
    g = np.zeros((H.shape[0], 4, 4, 256), dtype=H.dtype)
    for l in range(t + 1):
        g += H[:, l, None, None, None] * _BRANCH_SYMS[l]
    return g


@dataclasses.dataclass(frozen=True)
class MetricCache:
    """Round-independent BCJR inputs for a batch of aligned snippets.

    E holds the per-step branch metrics with the |y_t|^2 term dropped: a
    per-step constant shifts every path metric equally and cancels in each
    LLR difference, and what remains (2 Re(y conj(g)) - |g|^2) / nv needs
    no complex arithmetic per step.  tail_beta is the backward metric
    folded from the five trailing snippet samples.  Building this once per
    frame lets turbo rounds and the forward/backward passes share it; only
    the a-priori term changes per round, and since it depends on the new
    digit alone it is added after the state reduction instead of being
    baked into the branch tensor.
    """
    E: np.ndarray                # (n_sym, B, 4, 4, 256)
    tail_beta: np.ndarray        # (B, 1024)
    batch: int
    n_sym: int


def build_metric_cache(Y, H, preamble: PreambleSpec, n_sym: int, noise_var,
                       dtype=np.float32) -> MetricCache:
    """Branch-metric tensor and boundary terms for a batch of snippets.

    Y (B, P + n_sym + 5); H (B, 6); noise_var (B,).
    """
    B = Y.shape[0]
    P = preamble.length
    if n_sym < _MEM:
        raise ValueError(f"need at least {_MEM} payload symbols, got {n_sym}")
    if Y.shape[1] != P + n_sym + _MEM:
        raise ValueError(f"snippets must have {P + n_sym + _MEM} samples, "
                         f"got {Y.shape[1]}")
    cdtype = np.complex128 if dtype == np.float64 else np.complex64
    H = np.asarray(H).astype(cdtype)
    nv = np.asarray(noise_var, dtype=dtype)
    if np.any(nv <= 0.0):
        raise ValueError("noise_var must be positive")
    inv_nv = 1.0 / nv
    inv4 = inv_nv[:, None, None, None]
    yp = np.asarray(Y)[:, P:].astype(cdtype)             # payload-anchored

    E = np.empty((n_sym, B, 4, 4, 256), dtype=dtype)
    p = preamble.symbols
    pre_const = np.stack([
        sum(H[:, l] * p[P + t - l] for l in range(t + 1, 6))
        for t in range(_MEM)], axis=1)                   # (B, 5)
    for t in range(_MEM):
        g = _masked_gains(H, t) + pre_const[:, t, None, None, None]
        d = yp[:, t, None, None, None] - g
        E[t] = -(d.real * d.real + d.imag * d.imag) * inv4

    full_gain = np.einsum("bl,lqdr->bqdr", H, _BRANCH_SYMS.astype(cdtype))
    gr = np.ascontiguousarray(full_gain.real)
    gi = np.ascontiguousarray(full_gain.imag)
    g2 = gr * gr
    g2 += gi * gi
    g2 *= inv4                                           # |g|^2 / nv
    zr = (2.0 * yp.real * inv_nv[:, None]).astype(dtype)
    zi = (2.0 * yp.imag * inv_nv[:, None]).astype(dtype)
    tmp = np.empty_like(g2)
    for t in range(_MEM, n_sym):
        buf = E[t]
        np.multiply(gr, zr[:, t].reshape(B, 1, 1, 1), out=buf)
        np.multiply(gi, zi[:, t].reshape(B, 1, 1, 1), out=tmp)
        buf += tmp
        buf -= g2

    # five trailing samples depend only on the final state
    tail_syms = _STATE_SYMS.astype(cdtype)
    tail = np.zeros((B, N_STATES), dtype=dtype)
    for j in range(1, 6):
        g = np.zeros((B, N_STATES), dtype=cdtype)
        for l in range(j, 6):
            g += H[:, l, None] * tail_syms[l - j]
        d = yp[:, n_sym - 1 + j, None] - g
        tail += -(d.real * d.real + d.imag * d.imag) * inv_nv[:, None]
    return MetricCache(E=E, tail_beta=tail, batch=B, n_sym=n_sym)


def equalize_cached(cache: MetricCache, a_priori=None,
                    weight: float = DEFAULT_APRIORI_WEIGHT,
                    exact: bool = False) -> np.ndarray:
    """Forward/backward over prebuilt metrics; LLRs per coded bit.

    The a-priori term varies per turbo round but depends only on the new
    digit q, which is an axis of the post-reduction tensors, so it rides
    on the (B, 4, 256) state arrays instead of the branch tensor: exact
    regrouping, max(x + c) = max(x) + c for c constant in the reduced
    axis (and the same for log-sum-exp).
    """
    E, B, n_sym = cache.E, cache.batch, cache.n_sym
    dtype = E.dtype
    ap = None if a_priori is None else np.asarray(a_priori, dtype=float)
    if ap is not None and ap.shape != (B, 2 * n_sym):
        raise ValueError(f"a_priori must have {2 * n_sym} entries per frame")
    reduce_max = (lambda a, ax: np.max(a, axis=ax)) if not exact \
        else (lambda a, ax: _lse(a, ax))
    has_ap = ap is not None and weight != 0.0
    a_sym = _ap_symbol_terms(ap, n_sym, weight, dtype) if has_ap else None

    tot = np.empty((B, 4, 4, 256), dtype=dtype)
    full = np.empty((B, 4, 4, 256), dtype=dtype)

    # forward, all steps stored for the combine pass; metrics are renormalized
    # per step so unbounded sums stay well inside float32 range
    alphas = np.empty((n_sym + 1, B, N_STATES), dtype=dtype)
    alphas[0] = _initial_alpha(B, dtype)
    for t in range(n_sym):
        np.add(alphas[t].reshape(B, 1, 4, 256), E[t], out=tot)
        nxt = reduce_max(tot, 2)                         # (B, q, r)
        if has_ap:
            nxt += a_sym[:, t, :, None]
        nxt -= nxt.max(axis=(1, 2), keepdims=True)
        # successor state is q + 4r: write through a (B, r, q) view
        alphas[t + 1].reshape(B, 256, 4)[...] = nxt.transpose(0, 2, 1)

    beta = cache.tail_beta.astype(dtype, copy=True)
    bq = np.empty((B, 4, 256), dtype=dtype)
    llr = np.empty((B, 2 * n_sym), dtype=dtype)
    for t in range(n_sym - 1, -1, -1):
        np.copyto(bq, beta.reshape(B, 256, 4).transpose(0, 2, 1))
        if has_ap:
            bq += a_sym[:, t, :, None]
        np.add(E[t], bq[:, :, None, :], out=tot)
        np.add(tot, alphas[t].reshape(B, 1, 4, 256), out=full)
        per_digit = reduce_max(full.reshape(B, 4, 4 * 256), 2)
        llr[:, 2 * t] = reduce_max(per_digit[:, :2], 1) - \
            reduce_max(per_digit[:, 2:], 1)
        llr[:, 2 * t + 1] = reduce_max(per_digit[:, 0::2], 1) - \
            reduce_max(per_digit[:, 1::2], 1)
        prev = reduce_max(tot, 1)                        # (B, d4, r)
        beta[...] = prev.reshape(B, N_STATES)
        beta -= beta.max(axis=1, keepdims=True)
    return llr


def _equalize_batch(Y, H, preamble: PreambleSpec, n_sym: int, ap, weight,
                    noise_var, exact: bool = False, dtype=np.float32):
    """Vectorized forward/backward over a batch of snippets.

    Y (B, P + n_sym + 5); H (B, 6); ap None or (B, 2*n_sym); noise_var (B,).
    """
    cache = build_metric_cache(Y, H, preamble, n_sym, noise_var, dtype=dtype)
    return equalize_cached(cache, ap, weight, exact=exact)


def _lse(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)   # keep -inf rows from producing nan
    with np.errstate(divide="ignore"):     # all -inf rows reduce to log(0)
        return np.squeeze(m, axis) + np.log(np.sum(np.exp(a - m), axis=axis))
