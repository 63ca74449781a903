"""Trainable FFT-structured STFT front ends for speech enhancement."""

__version__ = "0.1.0"

from .butterfly import (ButterflyStack, MacCounter, SplitComplexBuffer, StackedDiagonalMatrix,
                        apply_forward, apply_inverse, bit_reversal_permutation, build_butterfly_stack,
                        build_stage_matrix, build_twiddle_diagonal, count_macs, count_parameters,
                        dense_parameter_count, naive_dft, to_dense)
from .errors import ButterflyError
from .estimator import ButterflyEnhancer, ButterflySTFT
from .metrics import SsnrConfig, ssnr
from .model import ARMS, EnhancementModel
from .training import LossConfig, TrainConfig, loss, train

__all__ = [
    "ARMS", "ButterflyEnhancer", "ButterflyError", "ButterflySTFT", "ButterflyStack",
    "EnhancementModel", "LossConfig", "MacCounter", "SplitComplexBuffer", "SsnrConfig",
    "StackedDiagonalMatrix", "TrainConfig", "apply_forward", "apply_inverse",
    "bit_reversal_permutation", "build_butterfly_stack", "build_stage_matrix",
    "build_twiddle_diagonal", "count_macs", "count_parameters", "dense_parameter_count",
    "loss", "naive_dft", "ssnr", "to_dense", "train",
]
