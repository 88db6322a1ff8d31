"""Run configuration: flat key=value files, strict keys, stable hashing.

Every field, including the derived preamble and all receiver knobs, is
serialized into the hash so any output file can be traced back to the
exact settings that produced it.  Unknown keys are rejected rather than
ignored; a typo must fail loudly, not silently run the defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib

from . import frames
from .frames import PreambleSpec
from .receiver import ReceiverConfig

HASH_CHARS = 12


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    n: int = 64
    k: int = 64
    n_taps: int = 5
    beta: float = 0.3
    seed: int = 0
    snr_list: tuple = (6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0)
    trials: int = 20000
    none_trials: int = 100000
    receiver: ReceiverConfig = ReceiverConfig()
    preamble: PreambleSpec | None = None
    output_path: str = "sweep.csv"

    def __post_init__(self):
        if self.k != self.n:
            raise ConfigError(f"k must equal n (information rate 1), "
                              f"got k={self.k} n={self.n}")
        if self.n_taps != 5:
            raise ConfigError("only the five-tap delay-line profile is "
                              "supported; n_taps must be 5")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must be in (0, 1], got {self.beta}")
        if self.trials < 1 or self.none_trials < 1:
            raise ConfigError("trials and none_trials must be >= 1")
        if len(self.snr_list) == 0:
            raise ConfigError("snr_list must name at least one point")
        if self.preamble is None:
            object.__setattr__(self, "preamble",
                               frames.preamble_for_length(self.n))
        if self.preamble.length != frames.PREAMBLE_LENGTHS.get(self.n):
            raise ConfigError(f"preamble length {self.preamble.length} does "
                              f"not match frame length {self.n}")


# key -> (parser, pretty type name); receiver knobs are flattened because
# the file format is deliberately flat
_SCALAR_KEYS = {
    "n": (int, "int"),
    "k": (int, "int"),
    "n_taps": (int, "int"),
    "beta": (float, "float"),
    "seed": (int, "int"),
    "trials": (int, "int"),
    "none_trials": (int, "int"),
    "output_path": (str, "str"),
}
_RECEIVER_KEYS = {
    "l_iedd": (int, "int"),
    "l_bp": (int, "int"),
    "damping": (float, "float"),
    "apriori_weight": (float, "float"),
    "csi_mode": (str, "str"),
    "noise_var_mode": (str, "str"),
    "fixed_noise_var": (float, "float"),
}


def _parse_snr_list(raw: str):
    try:
        vals = tuple(float(v) for v in raw.split(",") if v.strip() != "")
    except ValueError as e:
        raise ConfigError(f"bad snr_list entry: {e}") from None
    if not vals:
        raise ConfigError("snr_list is empty")
    return vals


def parse_config(text: str) -> RunConfig:
    """Flat `key=value` lines; `#` comments and blank lines are skipped."""
    scalars = {}
    rx = {}
    snr = None
    pre_root = None
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in scalars or key in rx or \
                (key == "snr_list" and snr is not None) or \
                (key == "preamble_root" and pre_root is not None):
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        if key == "snr_list":
            snr = _parse_snr_list(raw)
        elif key == "preamble_root":
            try:
                pre_root = int(raw)
            except ValueError:
                raise ConfigError(f"line {ln}: preamble_root wants int, "
                                  f"got {raw!r}") from None
        elif key in _SCALAR_KEYS:
            cast, tn = _SCALAR_KEYS[key]
            try:
                scalars[key] = cast(raw)
            except ValueError:
                raise ConfigError(f"line {ln}: {key} wants {tn}, "
                                  f"got {raw!r}") from None
        elif key in _RECEIVER_KEYS:
            cast, tn = _RECEIVER_KEYS[key]
            try:
                rx[key] = cast(raw)
            except ValueError:
                raise ConfigError(f"line {ln}: {key} wants {tn}, "
                                  f"got {raw!r}") from None
        else:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
    try:
        receiver = ReceiverConfig(**rx)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    kwargs = dict(scalars)
    if snr is not None:
        kwargs["snr_list"] = snr
    n = kwargs.get("n", 64)
    kwargs.setdefault("k", n)
    if pre_root is not None:
        if n not in frames.PREAMBLE_LENGTHS:
            raise ConfigError(f"unsupported frame length {n}")
        kwargs["preamble"] = PreambleSpec(
            symbols=frames.zadoff_chu(frames.PREAMBLE_LENGTHS[n], pre_root),
            root=pre_root)
    try:
        return RunConfig(receiver=receiver, **kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def serialize(cfg: RunConfig) -> str:
    """Canonical flat text covering every field.

    Parsing the result reproduces the config field for field, so equal
    hashes mean equal settings.
    """
    rx = cfg.receiver
    lines = [
        f"n={cfg.n}",
        f"k={cfg.k}",
        f"n_taps={cfg.n_taps}",
        f"beta={cfg.beta!r}",
        f"seed={cfg.seed}",
        "snr_list=" + ",".join(repr(v) for v in cfg.snr_list),
        f"trials={cfg.trials}",
        f"none_trials={cfg.none_trials}",
        f"l_iedd={rx.l_iedd}",
        f"l_bp={rx.l_bp}",
        f"damping={rx.damping!r}",
        f"apriori_weight={rx.apriori_weight!r}",
        f"csi_mode={rx.csi_mode}",
        f"noise_var_mode={rx.noise_var_mode}",
        f"fixed_noise_var={rx.fixed_noise_var!r}",
        f"preamble_root={cfg.preamble.root}",
        f"output_path={cfg.output_path}",
    ]
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    digest = hashlib.sha256(serialize(cfg).encode("utf-8")).hexdigest()
    return digest[:HASH_CHARS]
