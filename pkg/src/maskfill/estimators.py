"""Scikit-learn style estimators wrapping the two restoration methods.

Both estimators share one prediction surface: ``predict(X, masks)`` takes
corrupted H x W x 3 images plus their damage masks and returns restored
images with valid pixels passed through untouched.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import data as dp
from . import masks as mk
from . import network as nw
from .baseline import BaselineConfig, multiscale_inpaint
from .compositing import composite
from .validation import check_image, check_mask, check_same_spatial


def _check_pairs(X, masks):
    if len(X) != len(masks):
        raise ValueError(f"got {len(X)} images but {len(masks)} masks")
    out = []
    for img, m in zip(X, masks):
        img = check_image(img)
        m = check_mask(m)
        check_same_spatial(img, m, "image", "mask")
        out.append((img, m))
    return out


class UnetInpainter(BaseEstimator):
    """Trainable encoder-decoder inpainter with guided pixel selection.

    ``fit(X)`` expects clean images already sized to ``input_size``;
    corruption is simulated internally with fresh random scratch masks
    each epoch. ``predict(X, masks)`` composites the network output into
    the corrupted inputs at the damaged pixels only.
    """

    def __init__(self, depth: int = 2, base_channels: int = 8,
                 input_size: tuple[int, int] = (32, 32), mask_channel: bool = False,
                 kernel_size: int = 3, epochs: int = 200, batch_size: int = 8,
                 lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8, regime: str = "variable",
                 fill: float = mk.DEFAULT_FILL, masked_loss: bool = False,
                 flip_probability: float = 0.5, rotate_probability: float = 0.5,
                 seed: int = 0):
        self.depth = depth
        self.base_channels = base_channels
        self.input_size = input_size
        self.mask_channel = mask_channel
        self.kernel_size = kernel_size
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.regime = regime
        self.fill = fill
        self.masked_loss = masked_loss
        self.flip_probability = flip_probability
        self.rotate_probability = rotate_probability
        self.seed = seed

    def _network_config(self) -> nw.NetworkConfig:
        return nw.NetworkConfig(
            depth=self.depth, base_channels=self.base_channels,
            input_size=tuple(self.input_size),
            input_channels=4 if self.mask_channel else 3,
            kernel_size=self.kernel_size, seed=self.seed)

    def fit(self, X, y=None, val_set=None):
        X = [check_image(img) for img in X]
        self.net_ = nw.build_network(self._network_config())
        self.train_stats_ = nw.train(
            self.net_, X, list(val_set) if val_set else [],
            epochs=self.epochs, batch_size=self.batch_size,
            optimizer=nw.OptimizerConfig(self.lr, self.beta1, self.beta2, self.epsilon),
            augment_cfg=dp.AugmentConfig(self.flip_probability, self.rotate_probability),
            regime=mk.REGIMES[self.regime], fill=self.fill, seed=self.seed,
            masked_loss=self.masked_loss)
        return self

    def predict_raw(self, X, masks):
        """Unspliced network outputs for corrupted inputs."""
        self._require_fitted()
        pairs = _check_pairs(X, masks)
        return [nw.predict_images(self.net_, [img], [m])[0] for img, m in pairs]

    def predict(self, X, masks):
        """Composited restorations: network output only at damaged pixels."""
        self._require_fitted()
        pairs = _check_pairs(X, masks)
        out = []
        for img, m in pairs:
            pred = nw.predict_images(self.net_, [img], [m])[0]
            out.append(composite(img, pred, m))
        return out

    def save(self, path):
        self._require_fitted()
        nw.save_checkpoint(self.net_, path)

    @classmethod
    def from_checkpoint(cls, path) -> "UnetInpainter":
        net = nw.load_checkpoint(path)
        cfg = net.config
        est = cls(depth=cfg.depth, base_channels=cfg.base_channels,
                  input_size=cfg.input_size, mask_channel=cfg.mask_channel,
                  kernel_size=cfg.kernel_size, seed=cfg.seed)
        est.net_ = net
        return est

    def _require_fitted(self):
        if not hasattr(self, "net_"):
            raise RuntimeError("estimator is not fitted; call fit() or from_checkpoint()")


class MultiscaleInterpolator(BaseEstimator):
    """Training-free directional interpolation baseline ("interp-simplified")."""

    def __init__(self, scales: tuple[int, ...] = (1, 2, 4)):
        self.scales = scales

    def fit(self, X=None, y=None):
        return self

    def predict(self, X, masks):
        cfg = BaselineConfig(scales=tuple(self.scales))
        return [multiscale_inpaint(img, m, cfg) for img, m in _check_pairs(X, masks)]
