"""Guided pixel selection: splice predicted pixels into the damaged spots only.

Valid pixels of the corrupted input pass through bit-exactly; the network
output is consulted only where the mask marks damage. Compositing happens
in the [0, 1] float domain, before any 8-bit quantization.
"""

from __future__ import annotations

import numpy as np

from .validation import check_image, check_mask, check_same_spatial


def composite(corrupted: np.ndarray, predicted: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Return predicted where mask == 1, corrupted where mask == 0."""
    corrupted = check_image(corrupted, "corrupted")
    predicted = check_image(predicted, "predicted")
    mask = check_mask(mask)
    if corrupted.shape != predicted.shape:
        raise ValueError(f"image shapes differ: {corrupted.shape} vs {predicted.shape}")
    check_same_spatial(corrupted, mask, "corrupted", "mask")
    return np.where(mask[:, :, None].astype(bool), predicted, corrupted)
