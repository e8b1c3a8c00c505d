import numpy as np
import pytest


def make_synth_image(rng, size=32, texture_weight=0.0):
    """Random smooth gradient plus a few blended rectangles, optionally mixed
    with a fixed high-frequency grid texture shared across the dataset."""
    yy, xx = np.mgrid[0:size, 0:size]
    coeffs = rng.random((3, 3)) * np.array([0.5, 0.5, 0.3])
    img = np.stack([a * yy / (size - 1) + b * xx / (size - 1) + c
                    for a, b, c in coeffs], axis=-1)
    for _ in range(rng.integers(2, 6)):
        r0, c0 = rng.integers(0, size - size // 4, 2)
        hgt, wid = rng.integers(size // 8, size // 3 + 1, 2)
        col = rng.random(3)
        img[r0:r0 + hgt, c0:c0 + wid] = 0.7 * col + 0.3 * img[r0:r0 + hgt, c0:c0 + wid]
    if texture_weight > 0:
        tex = 0.5 + 0.5 * np.sign(np.sin(2 * np.pi * xx / 8) * np.sin(2 * np.pi * yy / 8))
        img = (1 - texture_weight) * img + texture_weight * tex[:, :, None]
    return np.clip(img, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_images(rng):
    return [make_synth_image(rng, size=32) for _ in range(8)]
