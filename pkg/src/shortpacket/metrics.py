"""Monte-Carlo harness: detection and decoding error rates, PAPR curves.

Sweeps draw frames in fixed-size chunks keyed by (master seed, chunk
index), and every SNR point replays the same chunks with the noise
scaled, so curves from one config are paired sample by sample and
cross-curve orderings are not washed out by draw noise.

Population conventions: DER counts misses and coarse sync errors over
all message windows.  BER/BLER count only frames that passed detection
with a usable anchor; genie-CSI rows gate on the same detection outcome
and swap in the true taps, true anchor and true noise power for the
decoding stage, so the estimated and genie columns describe the same
frame population and differ only in channel knowledge.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from . import channel, detection, frames, ldpc, receiver
from .channel import CHANNEL_MEMORY
from .config import RunConfig, config_hash

Z_TWO_SIDED_95 = 1.959963984540054
DEFAULT_CHUNK = 2000
STOP_BLOCK_ERRORS = 200
_NONE_STREAM = 1

CSV_COLUMNS = ("snr_db", "trials", "misdetections", "sync_errors",
               "false_alarms", "none_trials", "bit_errors", "bits",
               "block_errors", "blocks", "der", "ber", "bler", "config_hash",
               "der_lo", "der_hi", "bler_lo", "bler_hi", "far")


def wilson_interval(k: int, n: int, z: float = Z_TWO_SIDED_95):
    """Two-sided Wilson score interval for a binomial rate."""
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    zz = z * z / n
    center = (p + zz / 2.0) / (1.0 + zz)
    half = z * np.sqrt(p * (1.0 - p) / n + zz / (4.0 * n)) / (1.0 + zz)
    # at the edges the algebra cancels exactly; don't leak rounding dust
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


@dataclasses.dataclass(frozen=True)
class MetricRecord:
    snr_db: float
    trials: int
    misdetections: int
    sync_errors: int
    false_alarms: int
    none_trials: int
    bit_errors: int
    bits: int
    block_errors: int
    blocks: int
    config_hash: str

    def __post_init__(self):
        if self.trials != self.blocks + self.misdetections + self.sync_errors:
            raise ValueError("trials must equal blocks + misdetections "
                             "+ sync_errors")

    @property
    def der(self) -> float:
        return (self.misdetections + self.sync_errors) / self.trials

    @property
    def far(self) -> float:
        return 0.0 if self.none_trials == 0 else \
            self.false_alarms / self.none_trials

    @property
    def ber(self) -> float:
        return 0.0 if self.bits == 0 else self.bit_errors / self.bits

    @property
    def bler(self) -> float:
        return 0.0 if self.blocks == 0 else self.block_errors / self.blocks

    def row(self):
        der_lo, der_hi = wilson_interval(
            self.misdetections + self.sync_errors, self.trials)
        bler_lo, bler_hi = wilson_interval(self.block_errors, self.blocks)
        return (f"{self.snr_db:g},{self.trials},{self.misdetections},"
                f"{self.sync_errors},{self.false_alarms},{self.none_trials},"
                f"{self.bit_errors},{self.bits},{self.block_errors},"
                f"{self.blocks},{self.der:.6g},{self.ber:.6g},"
                f"{self.bler:.6g},{self.config_hash},{der_lo:.6g},"
                f"{der_hi:.6g},{bler_lo:.6g},{bler_hi:.6g},{self.far:.6g}")


# --- chunked frame generation ------------------------------------------

def _draw_chunk(master_seed: int, chunk: int, B: int, n: int, code,
                preamble):
    """One paired chunk: payloads, frames, channels, unit-power noise."""
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, chunk]))
    U = rng.integers(0, 2, (B, code.spec.payload_bits)).astype(np.uint8)
    X = np.stack([frames.build_frame(u, code, preamble) for u in U])
    taps = rng.standard_normal((B, channel.N_TAPS)) * channel.TAP_WEIGHTS
    toff = rng.integers(0, n - CHANNEL_MEMORY + 1, B)
    tsto = rng.uniform(0.0, 1.0, B)
    nr = rng.standard_normal((2, B, 2 * n))
    noise = nr[0] + 1j * nr[1]
    return U, X, taps, toff, tsto, noise


def _import_chunk(pool, master_seed: int, chunk: int, B: int, n: int):
    """Channels and noise as _draw_chunk, frames cycled from an import pool."""
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, chunk]))
    taps = rng.standard_normal((B, channel.N_TAPS)) * channel.TAP_WEIGHTS
    toff = rng.integers(0, n - CHANNEL_MEMORY + 1, B)
    tsto = rng.uniform(0.0, 1.0, B)
    nr = rng.standard_normal((2, B, 2 * n))
    noise = nr[0] + 1j * nr[1]
    start = (chunk * B) % len(pool)
    rows = (start + np.arange(B)) % len(pool)
    return pool[rows], taps, toff, tsto, noise


def _score_detection(Y, n, preamble, eta, toff):
    """Detection verdicts for one chunk of message windows.

    Returns (hit mask, hit indices, refined anchors, per-frame taps,
    noise vars, sync-ok mask over hits).
    """
    det, tau, _ = detection._detect_batch(Y, n, preamble, eta)
    idx = np.flatnonzero(det)
    if idx.size == 0:
        return det, idx, None, None, None, np.zeros(0, dtype=bool)
    tau_r, H, NV = receiver.refine_alignment(Y[idx], tau[idx], preamble)
    sync_ok = np.abs(tau_r - toff[idx]) <= CHANNEL_MEMORY
    return det, idx, tau_r, H, NV, sync_ok


# --- sweeps -------------------------------------------------------------

def der_sweep(cfg: RunConfig, eta: float, system: str = "baseline",
              message_pool=None):
    """Detection error rate per SNR, false alarms on none-windows.

    system "baseline" draws coded frames; "phyae-import" propagates
    externally supplied frames (message_pool, complex (count, n)) through
    the same channels and detector.
    """
    if system not in ("baseline", "phyae-import"):
        raise ValueError(f"unknown system {system!r}")
    if system == "phyae-import":
        if message_pool is None or len(message_pool) == 0:
            raise ValueError("phyae-import needs a non-empty message_pool")
        pool = np.asarray(message_pool, dtype=complex)
        if pool.ndim != 2 or pool.shape[1] != cfg.n:
            raise ValueError(f"imported messages must be (count, {cfg.n})")
    n, pre = cfg.n, cfg.preamble
    code = ldpc.build_code(cfg.k, 2 * (n - pre.length))
    chash = config_hash(cfg)
    # the detection statistic is scale-free, so one none-window batch
    # serves every SNR row
    fa, nones = _count_false_alarms(cfg, eta)
    records = []
    for snr_db in cfg.snr_list:
        s2 = channel.snr_to_noise_var(snr_db)
        miss = sync_err = 0
        done = 0
        chunk = 0
        while done < cfg.trials:
            B = min(DEFAULT_CHUNK, cfg.trials - done)
            if system == "baseline":
                _, X, taps, toff, tsto, noise = _draw_chunk(
                    cfg.seed, chunk, B, n, code, pre)
            else:
                X, taps, toff, tsto, noise = _import_chunk(
                    pool, cfg.seed, chunk, B, n)
            Y = channel._propagate_batch(X, taps, toff, tsto, noise, s2)
            det, idx, tau_r, H, NV, sync_ok = _score_detection(
                Y, n, pre, eta, toff)
            miss += int(B - idx.size)
            sync_err += int((~sync_ok).sum())
            done += B
            chunk += 1
        blocks = cfg.trials - miss - sync_err
        records.append(MetricRecord(
            snr_db=float(snr_db), trials=cfg.trials, misdetections=miss,
            sync_errors=sync_err, false_alarms=fa, none_trials=nones,
            bit_errors=0, bits=0, block_errors=0, blocks=blocks,
            config_hash=chash))
    return records


def _count_false_alarms(cfg: RunConfig, eta: float):
    """Fresh none-windows against the threshold; noise-stream keyed apart."""
    n, pre = cfg.n, cfg.preamble
    fa = 0
    done = 0
    chunk = 0
    while done < cfg.none_trials:
        B = min(4 * DEFAULT_CHUNK, cfg.none_trials - done)
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, chunk, _NONE_STREAM]))
        nr = rng.standard_normal((2, B, 2 * n))
        Y = nr[0] + 1j * nr[1]
        det, _, _ = detection._detect_batch(Y, n, pre, eta)
        fa += int(det.sum())
        done += B
        chunk += 1
    return fa, cfg.none_trials


def error_rate_sweep(cfg: RunConfig, eta: float,
                     stop_block_errors: int | None = STOP_BLOCK_ERRORS):
    """BER/BLER per SNR over detection-gated frames.

    csi_mode comes from cfg.receiver: "estimated" decodes with the LS
    channel estimate at the refined anchor, "genie" decodes the same
    detected frames with the true taps, anchor and noise power.  The
    sweep stops a point early once stop_block_errors block errors have
    accumulated (pass None to always run the full trial budget).

    Returns (records, round_bit_errors (points, l_iedd), round_bits);
    the per-round tallies let one sweep answer how much each extra
    equalize/decode round buys.
    """
    n, pre = cfg.n, cfg.preamble
    code = ldpc.build_code(cfg.k, 2 * (n - pre.length))
    rx = cfg.receiver
    chash = config_hash(cfg)
    records = []
    round_errs = np.zeros((len(cfg.snr_list), rx.l_iedd), dtype=np.int64)
    round_bits = np.zeros(len(cfg.snr_list), dtype=np.int64)
    for pi, snr_db in enumerate(cfg.snr_list):
        s2 = channel.snr_to_noise_var(snr_db)
        miss = sync_err = blocks = blk_err = bit_err = bits = 0
        done = 0
        chunk = 0
        while done < cfg.trials and (stop_block_errors is None
                                     or blk_err < stop_block_errors):
            B = min(DEFAULT_CHUNK, cfg.trials - done)
            U, X, taps, toff, tsto, noise = _draw_chunk(
                cfg.seed, chunk, B, n, code, pre)
            Y = channel._propagate_batch(X, taps, toff, tsto, noise, s2)
            det, idx, tau_r, H, NV, sync_ok = _score_detection(
                Y, n, pre, eta, toff)
            miss += int(B - idx.size)
            sync_err += int((~sync_ok).sum())
            keep = idx[sync_ok]
            if keep.size:
                if rx.csi_mode == "genie":
                    anchors = toff[keep]
                    Hd = np.stack([_true_taps(taps[i], tsto[i], cfg.beta)
                                   for i in keep])
                    NVd = np.full(keep.size, s2)
                else:
                    anchors, Hd, NVd = (tau_r[sync_ok], H[sync_ok],
                                        NV[sync_ok])
                    if rx.noise_var_mode == "fixed":
                        NVd = np.full(keep.size, rx.fixed_noise_var)
                rounds, _ = receiver._iedd_batch(
                    Y[keep], anchors, Hd, NVd, n, code, pre, rx)
                wrong = rounds != U[keep][None, :, :]
                round_errs[pi] += wrong.sum(axis=(1, 2))
                round_bits[pi] += keep.size * code.spec.payload_bits
                blk_err += int(wrong[-1].any(axis=1).sum())
                bit_err += int(wrong[-1].sum())
                bits += keep.size * code.spec.payload_bits
                blocks += keep.size
            done += B
            chunk += 1
        records.append(MetricRecord(
            snr_db=float(snr_db), trials=done, misdetections=miss,
            sync_errors=sync_err, false_alarms=0, none_trials=0,
            bit_errors=bit_err, bits=bits, block_errors=blk_err,
            blocks=blocks, config_hash=chash))
    return records, round_errs, round_bits


def _true_taps(taps, tau_sto, beta):
    real = channel.ChannelRealization(taps=taps, tau_off=0,
                                      tau_sto=float(tau_sto), sigma2=1.0,
                                      seed=0)
    return channel.effective_taps(real, beta)


def length_sweep(lengths=(40, 48, 56, 64, 96), snr_db: float = 18.0,
                 trials: int = 4000, seed: int = 0, eta_by_n=None,
                 far_target: float = 1e-3, far_trials: int = 20000,
                 rx: receiver.ReceiverConfig | None = None):
    """Estimated-CSI BLER versus frame length at one SNR, rate k/n = 1.

    Each length gets its own preamble, code and calibrated threshold
    (eta_by_n maps n -> eta to reuse stored calibrations).
    """
    rx = rx or receiver.ReceiverConfig(l_iedd=3)
    out = []
    for n in lengths:
        pre = frames.preamble_for_length(n)
        if eta_by_n and n in eta_by_n:
            eta = eta_by_n[n]
        else:
            eta = detection.calibrate_threshold(
                n, pre, far_target, far_trials, seed).eta
        cfg = RunConfig(n=n, k=n, seed=seed, snr_list=(snr_db,),
                        trials=trials, none_trials=1, receiver=rx,
                        preamble=pre)
        recs, _, _ = error_rate_sweep(cfg, eta, stop_block_errors=None)
        out.append((n, recs[0]))
    return out


# --- PAPR ---------------------------------------------------------------

def _spectral_interp(x, oversample: int):
    """Zero-padded DFT interpolation, frame treated as one periodic burst.

    The Nyquist bin of an even-length frame rides with the negative half
    of the spectrum; frames are complex baseband so no realness
    constraint is at stake.
    """
    x = np.asarray(x, dtype=complex)
    L = x.shape[-1]
    M = oversample
    X = np.fft.fft(x, axis=-1)
    shape = x.shape[:-1] + (L * M,)
    Xp = np.zeros(shape, dtype=complex)
    head = (L + 1) // 2
    Xp[..., :head] = X[..., :head]
    Xp[..., L * M - (L - head):] = X[..., head:]
    return np.fft.ifft(Xp, axis=-1) * M


def papr_db(x, oversample: int = 16) -> float:
    """Peak-to-average power ratio of one frame after interpolation."""
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    y = x if oversample == 1 else _spectral_interp(x, oversample)
    p = np.abs(np.asarray(y)) ** 2
    return float(10.0 * np.log10(p.max() / p.mean()))


@dataclasses.dataclass(frozen=True)
class PaprCurve:
    papr_db: np.ndarray      # grid, dB
    ccdf: np.ndarray         # P(PAPR > grid point)
    oversample: int


def papr_ccdf(frame_set, oversample: int = 16, grid=None) -> PaprCurve:
    """CCDF of per-frame PAPR over a set of frames."""
    if oversample < 2:
        raise ValueError("oversample must be >= 2 for a meaningful CCDF")
    F = np.asarray(frame_set, dtype=complex)
    if F.ndim != 2 or F.shape[0] < 1:
        raise ValueError("frame_set must be (count, n) with count >= 1")
    y = _spectral_interp(F, oversample)
    p = np.abs(y) ** 2
    vals = 10.0 * np.log10(p.max(axis=1) / p.mean(axis=1))
    if grid is None:
        grid = np.arange(0.0, 12.05, 0.1)
    grid = np.asarray(grid, dtype=float)
    ccdf = (vals[None, :] > grid[:, None]).mean(axis=1)
    return PaprCurve(papr_db=grid, ccdf=ccdf, oversample=oversample)


# --- output files -------------------------------------------------------

def write_csv(path, records, tool_version: str, extra_comment: str = ""):
    """MetricRecord rows with the column header; provenance in comments."""
    lines = [f"# tool_version={tool_version}"]
    if records:
        lines.append(f"# config_hash={records[0].config_hash}")
    if extra_comment:
        lines.append(f"# {extra_comment}")
    lines.append(",".join(CSV_COLUMNS))
    lines.extend(r.row() for r in records)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def write_jsonl(path, records, tool_version: str):
    """One JSON object per record, same fields as the CSV columns."""
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            der_lo, der_hi = wilson_interval(
                r.misdetections + r.sync_errors, r.trials)
            bler_lo, bler_hi = wilson_interval(r.block_errors, r.blocks)
            obj = {c: getattr(r, c) for c in CSV_COLUMNS
                   if c not in ("der_lo", "der_hi", "bler_lo", "bler_hi")}
            obj.update(der_lo=der_lo, der_hi=der_hi, bler_lo=bler_lo,
                       bler_hi=bler_hi, tool_version=tool_version)
            f.write(json.dumps(obj) + "\n")


def write_papr_csv(path, curve: PaprCurve, tool_version: str,
                   chash: str = ""):
    lines = [f"# tool_version={tool_version}"]
    if chash:
        lines.append(f"# config_hash={chash}")
    lines.append(f"# oversample={curve.oversample}")
    lines.append("papr_db,ccdf")
    lines.extend(f"{g:.4g},{c:.6g}"
                 for g, c in zip(curve.papr_db, curve.ccdf))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_message_jsonl(path):
    """Imported frames: one {bits: [...], symbols: [[re, im], ...]} per line.

    Returns (bits (count, k') uint8 or None when absent, symbols
    (count, n) complex).
    """
    bits = []
    syms = []
    with open(path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"line {ln}: bad JSON: {e}") from None
            if "symbols" not in obj:
                raise ValueError(f"line {ln}: missing 'symbols'")
            pairs = np.asarray(obj["symbols"], dtype=float)
            if pairs.ndim != 2 or pairs.shape[1] != 2:
                raise ValueError(f"line {ln}: symbols must be [re, im] pairs")
            syms.append(pairs[:, 0] + 1j * pairs[:, 1])
            bits.append(np.asarray(obj.get("bits", []), dtype=np.uint8))
    if not syms:
        raise ValueError("no messages in file")
    lens = {s.shape[0] for s in syms}
    if len(lens) != 1:
        raise ValueError(f"inconsistent message lengths: {sorted(lens)}")
    sym_arr = np.stack(syms)
    bit_lens = {b.shape[0] for b in bits}
    if len(bit_lens) > 1:
        raise ValueError(f"inconsistent bits lengths: {sorted(bit_lens)}")
    bit_arr = np.stack(bits) if next(iter(bit_lens)) > 0 else None
    return bit_arr, sym_arr
