"""Input validation helpers shared across the package.

Images are H x W x 3 float arrays with values in [0, 1]; masks are H x W
arrays of {0, 1} with 1 marking a damaged pixel.
"""

from __future__ import annotations

import numpy as np


def check_image(image, name: str = "image") -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must be HxWx3, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        raise ValueError(f"{name} must be a float array, got dtype {arr.dtype}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1], got range "
                         f"[{arr.min():.4g}, {arr.max():.4g}]")
    return arr


def check_mask(mask, name: str = "mask") -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be HxW, got shape {arr.shape}")
    vals = np.unique(arr)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"{name} must be binary (0/1), found values {vals[:8]}")
    return arr.astype(np.uint8, copy=False)


def check_same_spatial(a: np.ndarray, b: np.ndarray, name_a: str = "a", name_b: str = "b"):
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"spatial shapes differ: {name_a} {a.shape[:2]} vs {name_b} {b.shape[:2]}")
