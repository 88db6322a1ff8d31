"""Rate-matched quasi-cyclic LDPC code for short payloads.

The code is lifted from a base-graph-2 style 42x52 prototype (CSV asset under
data/).  Short payloads use only the first 6 systematic prototype columns; the
remaining four are removed outright, so K = 6*Z with at most Z-1 shortened
filler bits.  Rate matching transmits a leading window of the codeword with
the first 2*Z bits punctured, the filler bits skipped and a small tail cut so
exactly tx_bits survive.  Decoding is damped min-sum belief propagation run on
the checks whose parity bit lies inside the window (the only checks that can
ever carry information about transmitted bits).
"""

from __future__ import annotations

import dataclasses
import functools
import math
import pathlib

import numpy as np

BG_ROWS = 42
BG_COLS = 52
BG_INFO_COLS = 10
KB = 6                    # systematic prototype columns kept for short blocks
N_REDUCED_COLS = BG_COLS - (BG_INFO_COLS - KB)
CORE_ROWS = 4
LLR_CLAMP = 127.0         # magnitude assigned to shortened (known-zero) bits

# lifting sizes grouped by shift-value set
LIFT_SETS = (
    (2, 4, 8, 16, 32, 64, 128, 256),
    (3, 6, 12, 24, 48, 96, 192, 384),
    (5, 10, 20, 40, 80, 160, 320),
    (7, 14, 28, 56, 112, 224),
    (9, 18, 36, 72, 144, 288),
    (11, 22, 44, 88, 176, 352),
    (13, 26, 52, 104, 208),
    (15, 30, 60, 120, 240),
)

_DATA = pathlib.Path(__file__).parent / "data" / "bg2.csv"


@functools.lru_cache(maxsize=1)
def _load_prototype():
    """Parse the CSV asset into (row, col, shifts[8]) entries."""
    entries = []
    for line in _DATA.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        r, c = int(parts[0]), int(parts[1])
        shifts = tuple(int(v) for v in parts[2:])
        if len(shifts) != 8:
            raise ValueError(f"malformed prototype line: {line}")
        entries.append((r, c, shifts))
    if len(entries) != 197:
        raise ValueError(f"prototype asset has {len(entries)} entries, expected 197")
    return tuple(entries)


def select_lifting(payload_bits: int):
    """Smallest lifting size Z with KB*Z >= payload, plus its set index."""
    best = None
    for iset, zs in enumerate(LIFT_SETS):
        for z in zs:
            if KB * z >= payload_bits and (best is None or z < best[0]):
                best = (z, iset)
    if best is None:
        raise ValueError(f"payload of {payload_bits} bits exceeds the lifting table")
    return best


@dataclasses.dataclass(frozen=True)
class CodeSpec:
    payload_bits: int     # k
    tx_bits: int          # transmitted coded bits
    z: int
    set_index: int
    k_full: int           # KB * z systematic positions incl. fillers
    n_short: int          # shortened filler bits at the end of the systematic part
    window: int           # leading codeword bits covered by rate matching
    tail_punct: int       # punctured bits at the end of the window

    @property
    def rate(self) -> float:
        return self.payload_bits / self.tx_bits


def _gf2_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B over GF(2) by elimination; A must be invertible."""
    n = A.shape[0]
    M = np.concatenate([A & 1, B & 1], axis=1).astype(np.uint8)
    for col in range(n):
        piv = col + int(np.argmax(M[col:, col]))
        if M[piv, col] == 0:
            raise np.linalg.LinAlgError("parity part of H is singular")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
        rows = np.nonzero(M[:, col])[0]
        rows = rows[rows != col]
        if rows.size:
            M[rows] ^= M[col]
    return M[:, n:]


@dataclasses.dataclass(frozen=True)
class DecodeResult:
    """Decode output; batched calls carry a leading batch axis on every field."""

    hard_payload: np.ndarray   # (k,) uint8 decisions on the payload bits
    extrinsic: np.ndarray      # (tx_bits,) total-minus-input on transmitted bits
    parity_ok: bool            # bool, or (batch,) bool array
    iters_run: int             # iterations until zero syndrome (or the cap)


class LdpcCode:
    """One constructed code instance; build with build_code()."""

    def __init__(self, spec: CodeSpec):
        self.spec = spec
        z = spec.z
        entries = _load_prototype()

        # lifted parity-check matrix over the reduced column set
        n_vars = N_REDUCED_COLS * z
        n_checks = BG_ROWS * z
        H = np.zeros((n_checks, n_vars), dtype=np.uint8)
        i = np.arange(z)
        reduced = []
        for r, c, shifts in entries:
            if KB <= c < BG_INFO_COLS:
                continue                      # removed systematic columns
            rc = c if c < KB else c - (BG_INFO_COLS - KB)
            s = shifts[spec.set_index] % z
            H[r * z + i, rc * z + (i + s) % z] = 1
            reduced.append((r, rc, s))
        self.H = H

        # encoder: parity = inv(H_par) @ H_info @ d  over GF(2)
        k_full = spec.k_full
        self._parity_map = _gf2_solve(H[:, k_full:], H[:, :k_full])

        # rate matching index map (window coordinates == codeword coordinates)
        W = spec.window
        keep = [p for p in range(2 * z, W - spec.tail_punct)
                if not (spec.payload_bits <= p < k_full)]
        if len(keep) != spec.tx_bits:
            raise AssertionError("rate matching arithmetic is inconsistent")
        self.tx_idx = np.asarray(keep)

        # decoding subgraph: checks whose parity column is inside the window
        wcols = W // z
        if W % z or wcols < KB + CORE_ROWS:
            raise ValueError(f"window of {W} bits cannot cover the core graph")
        # reduced extension column of row r is r + KB (identity part)
        active = [r for r in range(BG_ROWS)
                  if r < CORE_ROWS or (r + KB) < wcols]
        blocks = []
        for r in active:
            ent = sorted((rc, s) for rr, rc, s in reduced if rr == r)
            var_idx = np.stack(
                [rc * z + (i + s) % z for rc, s in ent], axis=1)   # (z, deg)
            blocks.append(var_idx)
        self._blocks = blocks
        self._active_rows = active
        var_of_edge = np.concatenate([b.reshape(-1) for b in blocks])
        order = np.argsort(var_of_edge, kind="stable")
        counts = np.bincount(var_of_edge, minlength=W)
        if counts.min() == 0:
            raise AssertionError("window position without any active check")
        self._edge_order = order
        self._var_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self._n_edges = var_of_edge.size

    # -- encoding ----------------------------------------------------------

    def _systematic(self, u):
        u = np.asarray(u)
        if u.shape != (self.spec.payload_bits,):
            raise ValueError(f"payload must have {self.spec.payload_bits} bits")
        if not np.all((u == 0) | (u == 1)):
            raise ValueError("payload bits must be 0/1")
        d = np.zeros(self.spec.k_full, dtype=np.uint8)
        d[:self.spec.payload_bits] = u
        return d

    def encode_full(self, u) -> np.ndarray:
        """Full codeword [systematic incl. fillers, all parity bits]."""
        d = self._systematic(u)
        parity = (self._parity_map @ d) % 2
        return np.concatenate([d, parity.astype(np.uint8)])

    def encode(self, u) -> np.ndarray:
        """Rate-matched transmitted bits."""
        return self.encode_full(u)[self.tx_idx]

    # -- decoding ----------------------------------------------------------

    def _expand_llr(self, llr):
        B, E = llr.shape
        W = self.spec.window
        win = np.zeros((B, W))
        win[:, self.tx_idx] = llr
        win[:, self.spec.payload_bits:self.spec.k_full] = LLR_CLAMP
        return win

    def _syndrome_ok(self, hard):
        ok = np.ones(hard.shape[0], dtype=bool)
        for blk in self._blocks:
            par = hard[:, blk].sum(axis=2) % 2
            ok &= ~np.any(par, axis=1)
        return ok

    def bp_decode_batch(self, llr, iters: int = 10, damping: float = 0.7):
        """Damped min-sum over a batch of LLR rows.

        Check messages are damped as m <- damping*m_new + (1-damping)*m_old;
        damping = 1 is plain min-sum.  Stops early once every frame in the
        batch has a zero syndrome.
        """
        llr = np.asarray(llr, dtype=float)
        if llr.ndim != 2 or llr.shape[1] != self.spec.tx_bits:
            raise ValueError(f"llr must be (batch, {self.spec.tx_bits})")
        if not np.all(np.isfinite(llr)):
            raise ValueError("llr values must be finite")
        if not 0.0 < damping <= 1.0:
            raise ValueError(f"damping must be in (0, 1], got {damping}")
        if iters < 1:
            raise ValueError("iters must be >= 1")

        B = llr.shape[0]
        win = self._expand_llr(llr)
        tot = win.copy()
        m_cv = [np.zeros((B,) + blk.shape) for blk in self._blocks]
        iters_run = np.full(B, iters)
        done = np.zeros(B, dtype=bool)

        for it in range(iters):
            # check update from current variable totals (extrinsic per edge);
            # frames with a zero syndrome are frozen so the outcome does not
            # depend on what else shares the batch
            new_tot = win.copy()
            for bi, blk in enumerate(self._blocks):
                m_vc = tot[:, blk] - m_cv[bi]
                sgn = np.where(m_vc < 0.0, -1.0, 1.0)
                mag = np.abs(m_vc)
                am = np.argmin(mag, axis=2, keepdims=True)
                min1 = np.take_along_axis(mag, am, axis=2)
                tmp = mag.copy()
                np.put_along_axis(tmp, am, np.inf, axis=2)
                min2 = tmp.min(axis=2, keepdims=True)
                excl_sign = sgn.prod(axis=2, keepdims=True) * sgn
                is_min = np.arange(blk.shape[1])[None, None, :] == am
                new = excl_sign * np.where(is_min, min2, min1)
                mixed = damping * new + (1.0 - damping) * m_cv[bi]
                m_cv[bi] = np.where(done[:, None, None], m_cv[bi], mixed)

            # variable totals via one scatter-add pass over sorted edges
            flat = np.concatenate(
                [m.reshape(B, -1) for m in m_cv], axis=1)[:, self._edge_order]
            new_tot += np.add.reduceat(flat, self._var_starts, axis=1)
            tot = np.where(done[:, None], tot, new_tot)

            hard = (tot < 0.0)
            ok = self._syndrome_ok(hard)
            newly = ok & ~done
            iters_run[newly] = it + 1
            done |= ok
            if done.all():
                break

        hard = (tot < 0.0)
        payload = hard[:, :self.spec.payload_bits].astype(np.uint8)
        extrinsic = tot[:, self.tx_idx] - llr
        return DecodeResult(hard_payload=payload, extrinsic=extrinsic,
                            parity_ok=self._syndrome_ok(hard), iters_run=iters_run)

    def bp_decode(self, llr, iters: int = 10, damping: float = 0.7) -> DecodeResult:
        llr = np.asarray(llr, dtype=float)
        if llr.ndim != 1:
            raise ValueError("llr must be a flat vector; use bp_decode_batch for batches")
        r = self.bp_decode_batch(llr[None, :], iters, damping)
        return DecodeResult(hard_payload=r.hard_payload[0], extrinsic=r.extrinsic[0],
                            parity_ok=bool(r.parity_ok[0]), iters_run=int(r.iters_run[0]))


@functools.lru_cache(maxsize=8)
def build_code(payload_bits: int = 64, tx_bits: int = 88) -> LdpcCode:
    """Construct the code for a payload/transmit size pair.

    The window is the smallest whole number of prototype columns holding the
    punctured head, the fillers and the transmitted bits; whatever the last
    column over-provisions is punctured off the tail.
    """
    if payload_bits < 1 or tx_bits < 1:
        raise ValueError("payload_bits and tx_bits must be positive")
    z, iset = select_lifting(payload_bits)
    k_full = KB * z
    n_short = k_full - payload_bits
    need = tx_bits + 2 * z + n_short
    window = z * math.ceil(need / z)
    spec = CodeSpec(payload_bits=payload_bits, tx_bits=tx_bits, z=z,
                    set_index=iset, k_full=k_full, n_short=n_short,
                    window=window, tail_punct=window - need)
    return LdpcCode(spec)
