"""Scratch-mask image inpainting with an encoder-decoder network and
guided selection of the predicted pixels."""

from .autodiff import Adam, AdamState, Tensor, adam_step, grad_check
from .baseline import BaselineConfig, directional_fill, multiscale_inpaint
from .compositing import composite
from .data import AugmentConfig, Manifest, augment, load_image, make_batches, resize, save_image
from .estimators import MultiscaleInterpolator, UnetInpainter
from .masks import (MaskRegime, NARROW_CENTER, REGIMES, THICK, VARIABLE,
                    apply_mask, generate_mask, load_mask, mask_coverage, save_mask)
from .metrics import EvalReport, evaluate_dataset, psnr, ssim, write_report_csv
from .network import (Network, NetworkConfig, OptimizerConfig, TrainStats,
                      build_network, forward, load_checkpoint, save_checkpoint, train)

__version__ = "0.1.0"

__all__ = [
    "Adam", "AdamState", "Tensor", "adam_step", "grad_check",
    "BaselineConfig", "directional_fill", "multiscale_inpaint",
    "composite",
    "AugmentConfig", "Manifest", "augment", "load_image", "make_batches",
    "resize", "save_image",
    "MultiscaleInterpolator", "UnetInpainter",
    "MaskRegime", "NARROW_CENTER", "REGIMES", "THICK", "VARIABLE",
    "apply_mask", "generate_mask", "load_mask", "mask_coverage", "save_mask",
    "EvalReport", "evaluate_dataset", "psnr", "ssim", "write_report_csv",
    "Network", "NetworkConfig", "OptimizerConfig", "TrainStats",
    "build_network", "forward", "load_checkpoint", "save_checkpoint", "train",
]
