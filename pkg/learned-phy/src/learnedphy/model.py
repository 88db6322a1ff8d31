"""The full transceiver: encode, detect, cut, decode, parity post-processing."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .config import NetConfig
from .nets import Detector, InnerDecoder, InnerEncoder, OuterDecoder, OuterEncoder, binarize


def _normalize(x: torch.Tensor) -> torch.Tensor:
    # zero complex mean, unit average per-symbol power, per frame
    mu = x.mean(dim=2, keepdim=True)
    centered = x - mu
    power = centered.square().sum(dim=1, keepdim=True).mean(dim=2, keepdim=True)
    return centered / torch.sqrt(power.clamp_min(1e-30))


def append_parity(info_bits: torch.Tensor) -> torch.Tensor:
    """(B, k) bits in {0, 1} -> (B, k + 1) with the XOR parity appended."""
    parity = info_bits.sum(dim=1, keepdim=True) % 2
    return torch.cat([info_bits, parity], dim=1)


def parity_flip(logits: torch.Tensor) -> torch.Tensor:
    """Hard-decide k+1 soft bits, repairing single-bit parity violations.

    If the decided parity bit disagrees with the XOR of the decided info
    bits, the info bit with the smallest |logit| is flipped.  Returns the
    k info bits.
    """
    if logits.ndim != 2 or logits.shape[1] < 2:
        raise ValueError("logits must be (B, k + 1)")
    hard = (logits > 0).to(torch.int64)
    info, parity = hard[:, :-1], hard[:, -1]
    mismatch = (info.sum(dim=1) % 2) != parity
    weakest = logits[:, :-1].abs().argmin(dim=1)
    info = info.clone()
    rows = torch.nonzero(mismatch, as_tuple=True)[0]
    info[rows, weakest[rows]] ^= 1
    return info


def cut_snippet(window: torch.Tensor, tau: torch.Tensor, cfg: NetConfig) -> torch.Tensor:
    """Extract (B, 2, n + 2 margin) starting margin samples before each tau.

    Starts that would reach outside the window are covered by zero
    padding, which only happens near the window edges.
    """
    if window.ndim != 3 or window.shape[1] != 2:
        raise ValueError("window must be (B, 2, 2n)")
    m = cfg.margin
    padded = nn.functional.pad(window, (m, m))
    tau = torch.as_tensor(tau, dtype=torch.long, device=window.device)
    if torch.any((tau < 0) | (tau > cfg.n)):
        raise ValueError("cut start outside the coverable range [0, n]")
    idx = tau[:, None, None] + torch.arange(cfg.snippet_len, device=window.device)
    return padded.gather(2, idx.expand(window.shape[0], 2, cfg.snippet_len))


class Transceiver(nn.Module):
    """Encoder, detector and iterative decoder sharing one configuration.

    The positional interleaver between the outer and inner code is drawn
    once from `interleaver_seed` and stored as a buffer: it ships with
    the checkpoint and never changes after construction, because the
    trained decoder is specific to it.
    """

    def __init__(self, cfg: NetConfig, interleaver_seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.outer_encoder = OuterEncoder(cfg)
        self.inner_encoder = InnerEncoder(cfg)
        self.detector = Detector(cfg)
        self.inner_decoder = InnerDecoder(cfg)
        self.outer_decoder = OuterDecoder(cfg)
        perm = np.random.default_rng(interleaver_seed).permutation(cfg.k)
        self.register_buffer("perm", torch.as_tensor(perm, dtype=torch.long))
        self.register_buffer("inv_perm", torch.argsort(self.perm))

    def interleave(self, code: torch.Tensor) -> torch.Tensor:
        return code[:, :, self.perm]

    def deinterleave(self, code: torch.Tensor) -> torch.Tensor:
        return code[:, :, self.inv_perm]

    def encode(self, bits_full: torch.Tensor, power_clip: float | None = None,
               constant_envelope: bool = False) -> torch.Tensor:
        """(B, k+1) bits in {0, 1} -> (B, 2, n) normalized symbols.

        power_clip caps each symbol's power at the given threshold (used
        while training the envelope-constrained variant); constant_envelope
        keeps only the phase, |x_i| = 1 (its inference mode).
        """
        if bits_full.ndim != 2 or bits_full.shape[1] != self.cfg.k + 1:
            raise ValueError(f"expected (B, {self.cfg.k + 1}) bits")
        bipolar = (1.0 - 2.0 * bits_full.to(self.perm.device, torch.float32))
        code = binarize(self.outer_encoder(bipolar.unsqueeze(1)))
        x = _normalize(self.inner_encoder(self.interleave(code)))
        if power_clip is not None:
            mag = torch.sqrt(x.square().sum(dim=1, keepdim=True).clamp_min(1e-30))
            x = x * torch.clamp(float(power_clip) ** 0.5 / mag, max=1.0)
        if constant_envelope:
            mag = torch.sqrt(x.square().sum(dim=1, keepdim=True).clamp_min(1e-30))
            x = x / mag
        return x

    def detect(self, window: torch.Tensor) -> torch.Tensor:
        """(B, 2, 2n) -> (B, offsets + 1) logits; last class means none."""
        return self.detector(window)

    def detect_probs(self, window: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.detect(window), dim=1)

    def offset_argmax(self, logits: torch.Tensor) -> torch.Tensor:
        """Most likely integer offset, never the none class (cutout choice)."""
        return logits[:, :self.cfg.offset_classes].argmax(dim=1)

    def decode(self, snippet: torch.Tensor, return_trace: bool = False):
        """Iterative decode of a synchronized snippet -> (B, k+1) bit logits.

        The first inner pass runs with all-zero a-priori; each exchange
        subtracts the pass's own input inside the net blocks so only
        extrinsic information crosses the interleaver.
        """
        B = snippet.shape[0]
        cfg = self.cfg
        apriori = snippet.new_zeros(B, cfg.feature_depth, cfg.k)
        trace = []
        logits = None
        for _ in range(cfg.decoder_iterations):
            if return_trace:
                trace.append(apriori)
            extrinsic_in = self.inner_decoder(snippet, apriori)
            feedback, logits = self.outer_decoder(self.deinterleave(extrinsic_in))
            apriori = self.interleave(feedback)
        if return_trace:
            return logits, trace
        return logits
