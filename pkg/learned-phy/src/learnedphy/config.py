"""Static configuration for the network stack and the training loop."""

from __future__ import annotations

import dataclasses


@dataclasses.dataclass(frozen=True)
class NetConfig:
    """Shapes and depths of the five CNNs.

    The block carries k information bits plus one appended parity bit over
    n = k complex channel uses.  `margin` is the synchronization slack: the
    detector classifies the frame start into n - margin integer offsets
    plus a none class, and the decoder consumes a snippet padded by margin
    samples on both sides of the predicted start.
    """

    k: int = 64
    n: int = 64
    margin: int = 5
    filters: int = 100
    layers_per_cnn: int = 5
    kernel: int = 5
    feature_depth: int = 10
    decoder_iterations: int = 6

    def __post_init__(self):
        if self.k != self.n:
            raise ValueError(f"k and n must match, got k={self.k} n={self.n}")
        if not 0 < self.margin < self.n:
            raise ValueError(f"margin must lie in (0, n), got {self.margin}")
        for name in ("filters", "layers_per_cnn", "kernel",
                     "feature_depth", "decoder_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.kernel % 2 == 0:
            # same-padding conv stacks need odd kernels to stay centered
            raise ValueError(f"kernel must be odd, got {self.kernel}")

    @property
    def offset_classes(self) -> int:
        return self.n - self.margin

    @property
    def none_class(self) -> int:
        # last softmax position
        return self.n - self.margin

    @property
    def detector_classes(self) -> int:
        return self.n - self.margin + 1

    @property
    def snippet_len(self) -> int:
        return self.n + 2 * self.margin

    @classmethod
    def tiny(cls) -> "NetConfig":
        """Desk-scale variant used for the shipped checkpoint and the tests."""
        return cls(k=16, n=16, filters=32)


@dataclasses.dataclass(frozen=True)
class TrainSchedule:
    """Hyperparameters of one alternating training run.

    Each epoch runs t_tx encoder-only steps at the fixed encoder SNR and
    then t_rx detector+decoder steps with per-sample SNR draws from the
    two ranges; the none-message ratio gamma is re-adapted after every
    epoch against the false-alarm target.
    """

    t_tx: int = 100
    t_rx: int = 500
    batch: int = 500
    lr_start: float = 1e-4
    lr_end: float = 1e-6
    encoder_snr_db: float = 15.0
    decoder_snr_db: tuple[float, float] = (10.0, 15.0)
    detector_snr_db: tuple[float, float] = (5.0, 10.0)
    alpha: float = 0.01
    gamma0: float = 0.5
    gamma_step: float = 0.05
    far_target: float = 1e-3
    far_trials: int = 4000
    power_thresholds: tuple[float, ...] = (2.0, 1.1, 1.01)

    def __post_init__(self):
        for name in ("t_tx", "t_rx", "batch", "far_trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for rng_name in ("decoder_snr_db", "detector_snr_db"):
            lo, hi = getattr(self, rng_name)
            if lo > hi:
                raise ValueError(f"{rng_name} range is inverted: ({lo}, {hi})")
        # the detector trains where detection is hard, below the decoder range
        if self.detector_snr_db[1] > self.decoder_snr_db[0]:
            raise ValueError("detector SNR range must sit below the decoder range")
        # lr 0 is allowed: a frozen run still exercises the loop mechanics
        if not 0.0 <= self.lr_end <= self.lr_start:
            raise ValueError("need 0 <= lr_end <= lr_start")
        if not 0.0 < self.far_target < 1.0:
            raise ValueError(f"far_target must be in (0, 1), got {self.far_target}")
        if self.gamma0 < 0.0 or self.gamma_step <= 0.0:
            raise ValueError("gamma0 must be >= 0 and gamma_step > 0")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        thr = self.power_thresholds
        if any(t <= 0 for t in thr) or list(thr) != sorted(thr, reverse=True):
            raise ValueError("power_thresholds must be positive and decreasing")

    @classmethod
    def tiny(cls) -> "TrainSchedule":
        # fewer, larger-stepped epochs so a CPU run finishes in hours; the
        # full-scale defaults above are kept as the reference configuration
        return cls(t_tx=5, t_rx=20, batch=500, lr_start=1e-3, lr_end=1e-4)


def lr_at_epoch(schedule: TrainSchedule, epoch: int, epochs: int) -> float:
    """Geometric decay from lr_start to lr_end across the planned run."""
    if schedule.lr_start == 0.0 or epochs <= 1:
        return schedule.lr_start
    frac = epoch / (epochs - 1)
    ratio = schedule.lr_end / schedule.lr_start
    return float(schedule.lr_start * ratio ** min(max(frac, 0.0), 1.0))
