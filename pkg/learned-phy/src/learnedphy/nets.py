"""CNN building blocks: encoder pair, detector, unrolled decoder pair."""

from __future__ import annotations

import torch
from torch import nn

from .config import NetConfig


class SignSTE(torch.autograd.Function):
    """Binarize to {-1, +1} with a saturated straight-through gradient.

    Forward is sign (with sign(0) = +1); backward passes the gradient
    unchanged where |input| <= 1 and blocks it outside.
    """

    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return torch.where(x >= 0, x.new_ones(()), -x.new_ones(()))

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        return grad * (x.abs() <= 1.0).to(grad.dtype)


def binarize(x: torch.Tensor) -> torch.Tensor:
    return SignSTE.apply(x)


def unit_power(y: torch.Tensor) -> torch.Tensor:
    """Scale each (2, 2n) window so its mean per-sample power is one."""
    power = 2.0 * y.square().mean(dim=(1, 2), keepdim=True)
    return y / torch.sqrt(power.clamp_min(1e-30))


def _stack(in_ch: int, cfg: NetConfig) -> nn.Sequential:
    # layers_per_cnn same-padded conv layers, ELU throughout
    layers: list[nn.Module] = []
    ch = in_ch
    for _ in range(cfg.layers_per_cnn):
        layers.append(nn.Conv1d(ch, cfg.filters, cfg.kernel, padding="same"))
        layers.append(nn.ELU())
        ch = cfg.filters
    return nn.Sequential(*layers)


class OuterEncoder(nn.Module):
    """k+1 bipolar bits -> (F, k) real code features.

    The parity bit occupies the last input position; the convolutions mix
    it into the nearby positions' features and the output keeps the first
    k positions, so the positional length stays k = n while all k+1 bits
    shape the code.  Parity deliberately shares the one input channel
    with the info bits: giving it a channel of its own lets the first
    layer weight it separately, and training then amplifies the easy
    parity evidence until it drowns the message and the decoder never
    gets past chance on the info bits.
    """

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.body = _stack(1, cfg)
        self.out = nn.Conv1d(cfg.filters, cfg.feature_depth, 1)

    def forward(self, bits: torch.Tensor) -> torch.Tensor:
        if bits.ndim != 3 or bits.shape[1] != 1 or bits.shape[2] != self.cfg.k + 1:
            raise ValueError(f"expected (B, 1, {self.cfg.k + 1}) bit input")
        return self.out(self.body(bits))[:, :, :self.cfg.k]


class InnerEncoder(nn.Module):
    """(F, k) interleaved code -> raw complex symbols as (2, n)."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.body = _stack(cfg.feature_depth, cfg)
        self.out = nn.Conv1d(cfg.filters, 2, 1)

    def forward(self, code: torch.Tensor) -> torch.Tensor:
        if code.shape[1:] != (self.cfg.feature_depth, self.cfg.k):
            raise ValueError("inner encoder input must be (B, F, k)")
        return self.out(self.body(code))


class Detector(nn.Module):
    """2n-sample window -> logits over integer offsets plus a none class.

    The window is normalized to unit power first, so the decision is
    invariant to received power scaling by construction.
    """

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.body = _stack(2, cfg)
        self.mix = nn.Conv1d(cfg.filters, 1, 1)
        self.head = nn.Linear(2 * cfg.n, cfg.detector_classes)

    def forward(self, window: torch.Tensor) -> torch.Tensor:
        if window.ndim != 3 or window.shape[1] != 2 or window.shape[2] != 2 * self.cfg.n:
            raise ValueError(f"expected (B, 2, {2 * self.cfg.n}) window")
        z = self.mix(self.body(unit_power(window)))
        return self.head(z.flatten(1))


class InnerDecoder(nn.Module):
    """Snippet plus a-priori features -> extrinsic code features.

    The a-priori block of length k is zero-padded by margin on both sides
    to line up with the n + 2 margin snippet; the output is cropped back
    to the k frame positions and the a-priori is subtracted, so what
    leaves the block is extrinsic.
    """

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.body = _stack(2 + cfg.feature_depth, cfg)
        self.out = nn.Conv1d(cfg.filters, cfg.feature_depth, 1)

    def forward(self, snippet: torch.Tensor, apriori: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        if snippet.shape[1:] != (2, cfg.snippet_len):
            raise ValueError(f"expected (B, 2, {cfg.snippet_len}) snippet")
        if apriori.shape[1:] != (cfg.feature_depth, cfg.k):
            raise ValueError("a-priori must be (B, F, k)")
        padded = nn.functional.pad(apriori, (cfg.margin, cfg.margin))
        z = self.out(self.body(torch.cat([snippet, padded], dim=1)))
        return z[:, :, cfg.margin:cfg.margin + cfg.k] - apriori


class OuterDecoder(nn.Module):
    """Extrinsic code features -> coded feedback plus bit logits.

    The feedback head returns extrinsic information (input subtracted).
    The bit head emits two channels per position: channel 0 holds the k
    info-bit logits, channel 1 holds per-position estimates of the
    broadcast parity bit, which average into the single parity logit.
    """

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.body = _stack(cfg.feature_depth, cfg)
        self.feedback = nn.Conv1d(cfg.filters, cfg.feature_depth, 1)
        self.bit = nn.Conv1d(cfg.filters, 2, 1)

    def forward(self, apriori: torch.Tensor):
        if apriori.shape[1:] != (self.cfg.feature_depth, self.cfg.k):
            raise ValueError("outer decoder input must be (B, F, k)")
        h = self.body(apriori)
        extrinsic = self.feedback(h) - apriori
        raw = self.bit(h)
        logits = torch.cat([raw[:, 0], raw[:, 1].mean(dim=1, keepdim=True)], dim=1)
        return extrinsic, logits
