"""Alternating transmitter / receiver training with none-ratio adaptation.

One epoch is t_tx encoder-only steps at the fixed encoder SNR followed by
t_rx detector+decoder steps at per-sample SNR draws; the encoder is frozen
during the receiver phase and vice versa.  After each epoch the measured
false-alarm rate moves the none-message mixing ratio gamma one fixed step
toward the target.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import torch

from . import channel
from .config import NetConfig, TrainSchedule, lr_at_epoch
from .model import Transceiver, append_parity, cut_snippet


@dataclasses.dataclass(frozen=True)
class StepStats:
    total: float
    bce: float
    cce: float


@dataclasses.dataclass
class EpochStats:
    epoch: int
    lr: float
    gamma_before: float
    gamma_after: float
    far: float
    tx_steps: list
    rx_steps: list

    @property
    def tx_loss(self) -> float:
        return float(np.mean([s.total for s in self.tx_steps]))

    @property
    def rx_loss(self) -> float:
        return float(np.mean([s.total for s in self.rx_steps]))

    def summary(self) -> dict:
        return {
            "epoch": self.epoch,
            "lr": self.lr,
            "gamma_before": self.gamma_before,
            "gamma_after": self.gamma_after,
            "far": self.far,
            "tx_loss": self.tx_loss,
            "rx_loss": self.rx_loss,
            "rx_bce": float(np.mean([s.bce for s in self.rx_steps])),
            "rx_cce": float(np.mean([s.cce for s in self.rx_steps])),
        }


def adapt_gamma(gamma: float, far: float, target: float, step: float = 0.05) -> float:
    """One fixed-size ratio step: up at or above the FAR target, down below."""
    out = gamma + step if far >= target else gamma - step
    # a negative none-message ratio is meaningless
    return max(out, 0.0)


def random_bits(rng: np.random.Generator, count: int, k: int) -> torch.Tensor:
    """(count, k+1) bit blocks with the parity bit appended."""
    info = torch.as_tensor(rng.integers(0, 2, size=(count, k)), dtype=torch.int64)
    return append_parity(info)


def message_windows(x: torch.Tensor, snr_lo: float, snr_hi: float,
                    rng: np.random.Generator):
    """Send a batch of frames over fresh channel draws.

    Returns (windows (B, 2, 2n), true offsets (B,)); per-sample SNR uniform
    in dB over [snr_lo, snr_hi].
    """
    B, _, n = x.shape
    taps, tau_off, tau_sto = channel.draw_batch(n, B, rng)
    kern = channel.composite_kernels(taps, tau_sto)
    sigma2 = 10.0 ** (-rng.uniform(snr_lo, snr_hi, size=B) / 10.0)
    clean = channel.propagate(x, kern, tau_off)
    y = channel.add_noise(clean, sigma2, rng.standard_normal((B, 2, 2 * n)))
    return y, torch.as_tensor(tau_off, dtype=torch.long)


def none_windows(count: int, n: int, snr_lo: float, snr_hi: float,
                 rng: np.random.Generator) -> torch.Tensor:
    """(count, 2, 2n) pure-noise windows at the given SNR range's power."""
    sigma2 = 10.0 ** (-rng.uniform(snr_lo, snr_hi, size=count) / 10.0)
    w = rng.standard_normal((count, 2, 2 * n))
    y = np.sqrt(sigma2 / 2.0)[:, None, None] * w
    return torch.as_tensor(y, dtype=torch.float32)


def _set_phase(model: Transceiver, train_encoder: bool) -> None:
    for p in model.outer_encoder.parameters():
        p.requires_grad_(train_encoder)
    for p in model.inner_encoder.parameters():
        p.requires_grad_(train_encoder)
    for mod in (model.detector, model.inner_decoder, model.outer_decoder):
        for p in mod.parameters():
            p.requires_grad_(not train_encoder)


def _check_finite(loss: torch.Tensor) -> None:
    if not bool(torch.isfinite(loss)):
        raise RuntimeError(f"training diverged: non-finite loss {loss.item()!r}")


def tx_step(model: Transceiver, opt: torch.optim.Optimizer,
            schedule: TrainSchedule, rng: np.random.Generator,
            power_clip: float | None = None) -> StepStats:
    """One encoder update; receiver nets frozen, snippet cut at the true offset."""
    cfg = model.cfg
    _set_phase(model, train_encoder=True)
    u_full = random_bits(rng, schedule.batch, cfg.k)
    x = model.encode(u_full, power_clip=power_clip)
    y, tau = message_windows(x, schedule.encoder_snr_db, schedule.encoder_snr_db, rng)
    cce = torch.nn.functional.cross_entropy(model.detect(y), tau)
    logits = model.decode(cut_snippet(y, tau, cfg))
    bce = torch.nn.functional.binary_cross_entropy_with_logits(
        logits, u_full.to(logits.dtype))
    total = bce + schedule.alpha * cce
    _check_finite(total)
    opt.zero_grad()
    total.backward()
    opt.step()
    return StepStats(float(total.detach()), float(bce.detach()), float(cce.detach()))


def rx_step(model: Transceiver, opt: torch.optim.Optimizer,
            schedule: TrainSchedule, gamma: float, rng: np.random.Generator,
            power_clip: float | None = None) -> StepStats:
    """One detector+decoder update; encoder frozen.

    The detector batch mixes round(gamma * batch) pure-noise windows in
    with the message windows; the decoder snippet is cut at the detector's
    most likely offset, not the true one.
    """
    cfg = model.cfg
    _set_phase(model, train_encoder=False)
    u_full = random_bits(rng, schedule.batch, cfg.k)
    with torch.no_grad():
        x = model.encode(u_full, power_clip=power_clip)

    det_lo, det_hi = schedule.detector_snr_db
    y_det, tau_det = message_windows(x, det_lo, det_hi, rng)
    n_none = int(round(gamma * schedule.batch))
    labels = tau_det
    if n_none > 0:
        y_det = torch.cat([y_det, none_windows(n_none, cfg.n, det_lo, det_hi, rng)])
        labels = torch.cat([tau_det,
                            torch.full((n_none,), cfg.none_class, dtype=torch.long)])
    cce = torch.nn.functional.cross_entropy(model.detect(y_det), labels)

    dec_lo, dec_hi = schedule.decoder_snr_db
    y_dec, _ = message_windows(x, dec_lo, dec_hi, rng)
    with torch.no_grad():
        tau_hat = model.offset_argmax(model.detect(y_dec))
    logits = model.decode(cut_snippet(y_dec, tau_hat, cfg))
    bce = torch.nn.functional.binary_cross_entropy_with_logits(
        logits, u_full.to(logits.dtype))
    total = bce + schedule.alpha * cce
    _check_finite(total)
    opt.zero_grad()
    total.backward()
    opt.step()
    return StepStats(float(total.detach()), float(bce.detach()), float(cce.detach()))


def measure_far(model: Transceiver, schedule: TrainSchedule,
                rng: np.random.Generator, batch: int = 1000) -> float:
    """Fraction of fresh pure-noise windows the detector declares a message."""
    cfg = model.cfg
    declared = 0
    left = schedule.far_trials
    with torch.no_grad():
        while left > 0:
            count = min(batch, left)
            y = none_windows(count, cfg.n, *schedule.detector_snr_db, rng)
            declared += int((model.detect(y).argmax(dim=1) != cfg.none_class).sum())
            left -= count
    return declared / schedule.far_trials


def train_epoch(model: Transceiver, opt_enc: torch.optim.Optimizer,
                opt_rx: torch.optim.Optimizer, schedule: TrainSchedule,
                gamma: float, rng: np.random.Generator, epoch: int = 0,
                power_clip: float | None = None) -> EpochStats:
    tx_stats = [tx_step(model, opt_enc, schedule, rng, power_clip)
                for _ in range(schedule.t_tx)]
    rx_stats = [rx_step(model, opt_rx, schedule, gamma, rng, power_clip)
                for _ in range(schedule.t_rx)]
    far = measure_far(model, schedule, rng)
    return EpochStats(
        epoch=epoch,
        lr=float(opt_rx.param_groups[0]["lr"]),
        gamma_before=gamma,
        gamma_after=adapt_gamma(gamma, far, schedule.far_target, schedule.gamma_step),
        far=far,
        tx_steps=tx_stats,
        rx_steps=rx_stats,
    )


def make_optimizers(model: Transceiver, lr: float):
    enc_params = list(model.outer_encoder.parameters()) \
        + list(model.inner_encoder.parameters())
    rx_params = list(model.detector.parameters()) \
        + list(model.inner_decoder.parameters()) \
        + list(model.outer_decoder.parameters())
    return torch.optim.Adam(enc_params, lr=lr), torch.optim.Adam(rx_params, lr=lr)


def fit(model: Transceiver, schedule: TrainSchedule, epochs: int, seed: int = 0,
        power_clip: float | None = None, callback=None) -> list[EpochStats]:
    """Run the full alternating loop; callback(model, stats) after each epoch."""
    rng = np.random.default_rng(seed)
    opt_enc, opt_rx = make_optimizers(model, schedule.lr_start)
    gamma = schedule.gamma0
    history: list[EpochStats] = []
    for epoch in range(epochs):
        lr = lr_at_epoch(schedule, epoch, epochs)
        for opt in (opt_enc, opt_rx):
            for group in opt.param_groups:
                group["lr"] = lr
        stats = train_epoch(model, opt_enc, opt_rx, schedule, gamma, rng,
                            epoch=epoch, power_clip=power_clip)
        gamma = stats.gamma_after
        history.append(stats)
        if callback is not None:
            callback(model, stats)
    return history


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path, model: Transceiver, schedule: TrainSchedule,
                    history, seed: int) -> None:
    """Weights plus config plus the per-epoch training record."""
    entries = [e.summary() if isinstance(e, EpochStats) else dict(e) for e in history]
    torch.save({
        "net_config": dataclasses.asdict(model.cfg),
        "schedule": dataclasses.asdict(schedule),
        "state_dict": model.state_dict(),
        "history": entries,
        "seed": int(seed),
    }, path)


def load_checkpoint(path):
    """Returns (model in eval mode, schedule, history entries, raw payload)."""
    payload = torch.load(path, map_location="cpu")
    cfg = NetConfig(**payload["net_config"])
    sched_fields = dict(payload["schedule"])
    for key in ("decoder_snr_db", "detector_snr_db", "power_thresholds"):
        sched_fields[key] = tuple(sched_fields[key])
    schedule = TrainSchedule(**sched_fields)
    model = Transceiver(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, schedule, payload["history"], payload
