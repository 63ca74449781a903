"""``key = value`` run configuration files.

Blank lines and ``#`` comments are ignored.  Every key has a default; an
unknown key or unparsable value raises ``ConfigError`` carrying its line.
Relative paths are resolved against the config file's directory.
"""

import dataclasses
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .metrics import SsnrConfig
from .model import ARMS
from .training import EVAL_SNRS_DB, LossConfig, TrainConfig

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

_LOSS_KEYS = {"alpha": "alpha", "lambda": "lam", "loss_epsilon": "epsilon"}
_SSNR_KEYS = {"ssnr_frame_len": "frame_len", "ssnr_hop": "hop",
              "ssnr_floor_db": "floor_db", "ssnr_ceil_db": "ceil_db"}
_PATH_KEYS = ("manifest", "checkpoint", "loss_csv")


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    ssnr: SsnrConfig = field(default_factory=SsnrConfig)
    manifest: str = None
    checkpoint: str = "model.bfly"
    loss_csv: str = "loss.csv"
    eval_snr_db: tuple = EVAL_SNRS_DB
    arm: str = None


def _parse_bool(text):
    t = text.lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_floats(text):
    return tuple(float(s) for s in text.split(",") if s.strip())


def _convert(default, text):
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return _parse_floats(text)
    return text


def parse_config(text, base_dir="."):
    cfg = RunConfig()
    train_fields = {f.name: f.default for f in dataclasses.fields(TrainConfig)}
    loss_kw, ssnr_kw, train_kw = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key == "hop":
                train_kw[key] = int(val)
            elif key in train_fields:
                train_kw[key] = _convert(train_fields[key], val)
            elif key in _LOSS_KEYS:
                loss_kw[_LOSS_KEYS[key]] = float(val)
            elif key in _SSNR_KEYS:
                name = _SSNR_KEYS[key]
                ssnr_kw[name] = int(val) if name in ("frame_len", "hop") else float(val)
            elif key in _PATH_KEYS:
                setattr(cfg, key, os.path.normpath(os.path.join(base_dir, val)))
            elif key == "eval_snr_db":
                cfg.eval_snr_db = _parse_floats(val)
            elif key == "arm":
                if val not in ARMS:
                    raise ValueError(f"unknown arm {val!r}; choose from {', '.join(ARMS)}")
                cfg.arm = val
                window, fft = ARMS[val]
                train_kw.update(train_window_analysis=window, train_window_synthesis=window,
                                train_fft_forward=fft, train_fft_inverse=fft)
            else:
                raise ConfigError(f"unknown key {key!r}", line=lineno)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line=lineno) from None
    try:
        cfg.train = TrainConfig(**train_kw)
        cfg.loss = LossConfig(**loss_kw)
        cfg.ssnr = SsnrConfig(**ssnr_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
