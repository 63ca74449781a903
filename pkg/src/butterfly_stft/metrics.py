"""Segmental SNR and a log-spectrum diagnostic.

The SSNR convention here (256-sample frames, hop 128, per-frame clipping to
[-10, 35] dB, frames with clean energy below 1e-10 skipped) is this
package's own; absolute values compare only with other runs of it.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeError, UndefinedMetricError

SILENCE_ENERGY = 1e-10
ERROR_FLOOR = 1e-20
LOG_FLOOR = 1e-8


@dataclass
class SsnrConfig:
    frame_len: int = 256
    hop: int = 128
    floor_db: float = -10.0
    ceil_db: float = 35.0

    def __post_init__(self):
        if self.floor_db >= self.ceil_db:
            raise ValueError("floor_db must be below ceil_db")
        if self.frame_len < 1 or self.hop < 1:
            raise ValueError("frame_len and hop must be positive")


def frame_snrs(clean, estimate, cfg=None):
    """Clipped per-frame SNR in dB, NaN where the clean frame is silent."""
    cfg = cfg or SsnrConfig()
    clean = np.asarray(clean, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if clean.shape != estimate.shape or clean.ndim != 1:
        raise ShapeError(f"clean {clean.shape} and estimate {estimate.shape} must be equal 1-D arrays")
    if clean.size < cfg.frame_len:
        raise ShapeError(f"signals shorter than one frame ({cfg.frame_len})")
    c = ad.frame(clean, cfg.frame_len, cfg.hop).value
    e = ad.frame(clean - estimate, cfg.frame_len, cfg.hop).value
    sig = np.sum(c * c, axis=-1)
    err = np.sum(e * e, axis=-1)
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(sig / (err + ERROR_FLOOR))
    snr = np.clip(snr, cfg.floor_db, cfg.ceil_db)
    snr[sig < SILENCE_ENERGY] = np.nan
    return snr


def ssnr(clean, estimate, cfg=None):
    snr = frame_snrs(clean, estimate, cfg)
    if np.all(np.isnan(snr)):
        raise UndefinedMetricError("no frame of the clean signal carries energy")
    return float(np.nanmean(snr))


def spectral_diag(signal, reference, hop=None):
    """Per-bin mean natural-log magnitude under a fixed analysis front end."""
    from .stft import analyze

    hop = reference.n // 2 if hop is None else hop
    x = np.asarray(signal, dtype=np.float64)
    z = analyze(reference, ad.frame(x, reference.n, hop)).value
    mag = np.sqrt(z[0] ** 2 + z[1] ** 2)
    logmag = np.log(np.maximum(mag, LOG_FLOOR))
    return logmag.reshape(-1, reference.n).mean(axis=0)
