"""Learned short-message transceiver.

A CNN encoder maps a bit block straight to complex channel symbols, a
detector CNN finds the message inside an unsynchronized observation
window, and an unrolled iterative CNN pair equalizes and decodes it.
All three are trained jointly over the same delay-line burst channel
the hand-crafted reference system runs on; channel equivalence is
pinned by golden-vector files, message exchange by JSON-lines.
"""

from pathlib import Path

from .config import NetConfig, TrainSchedule
from .model import Transceiver, cut_snippet, parity_flip

__version__ = "0.1.0"


def assets_dir() -> Path:
    """Directory holding shipped checkpoints (repo layout, editable install)."""
    return Path(__file__).resolve().parents[2] / "assets"


__all__ = [
    "NetConfig",
    "TrainSchedule",
    "Transceiver",
    "cut_snippet",
    "parity_flip",
    "assets_dir",
    "__version__",
]
