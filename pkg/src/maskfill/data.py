"""Image I/O, bilinear resizing, flip/rotate augmentation, and batching.

Images live on disk as 8-bit RGB PNG or binary PPM (P6) and in memory as
H x W x 3 float arrays in [0, 1]. All randomness is keyed by explicit
seeds; per-sample seeds are derived with a stable hash so prefetch order
can never change results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .validation import check_image


class ImageFormatError(ValueError):
    """Unsupported or unreadable image file."""


class TruncatedImageError(ValueError):
    """File recognized but its pixel data is incomplete."""


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of ints/strings (blake2b based)."""
    key = "/".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


# ---------------------------------------------------------------------------
# image files

def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB PNG or PPM into a [0, 1] float64 array."""
    path = Path(path)
    try:
        with PILImage.open(path) as img:
            if img.format not in ("PNG", "PPM"):
                raise ImageFormatError(f"{path}: unsupported format {img.format!r} "
                                       "(expected PNG or PPM)")
            img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a recognized image file") from exc
    except OSError as exc:
        raise TruncatedImageError(f"{path}: truncated or unreadable pixel data") from exc
    return arr.astype(np.float64) / 255.0


def save_image(image: np.ndarray, path) -> None:
    """Quantize to 8 bits (round half up) and write PNG or PPM by extension."""
    image = check_image(image)
    bytes_ = np.floor(image * 255.0 + 0.5).clip(0, 255).astype(np.uint8)
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".ppm", ".pnm") else "PNG"
    PILImage.fromarray(bytes_, mode="RGB").save(path, format=fmt)


# ---------------------------------------------------------------------------
# resizing

def resize(image: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resample with edge clamping; same-size resize is the identity."""
    image = check_image(image)
    if h < 1 or w < 1:
        raise ValueError(f"target size must be positive, got {h}x{w}")
    src_h, src_w = image.shape[:2]
    if (src_h, src_w) == (h, w):
        return image.copy()

    def axis_coords(n_dst, n_src):
        x = (np.arange(n_dst) + 0.5) * n_src / n_dst - 0.5
        lo = np.floor(x).astype(int)
        frac = x - lo
        lo0 = np.clip(lo, 0, n_src - 1)
        lo1 = np.clip(lo + 1, 0, n_src - 1)
        return lo0, lo1, frac

    r0, r1, fr = axis_coords(h, src_h)
    c0, c1, fc = axis_coords(w, src_w)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    top = image[r0][:, c0] * (1 - fc) + image[r0][:, c1] * fc
    bot = image[r1][:, c0] * (1 - fc) + image[r1][:, c1] * fc
    out = top * (1 - fr) + bot * fr
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# augmentation

@dataclass(frozen=True)
class AugmentConfig:
    flip_probability: float = 0.5
    rotate_probability: float = 0.5

    def __post_init__(self):
        for name in ("flip_probability", "rotate_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")


def augment(image: np.ndarray, config: AugmentConfig, sample_seed: int) -> np.ndarray:
    """Randomly flip (horizontal or vertical) and/or rotate by 90/180/270.

    Rotations assume square images (everything is resized square upstream).
    Deterministic given ``sample_seed``.
    """
    image = check_image(image)
    rng = np.random.default_rng(sample_seed)
    out = image
    if rng.random() < config.flip_probability:
        if rng.integers(0, 2) == 0:
            out = out[:, ::-1]     # horizontal flip
        else:
            out = out[::-1, :]     # vertical flip
    if rng.random() < config.rotate_probability:
        k = int(rng.integers(1, 4))
        if k in (1, 3) and out.shape[0] != out.shape[1]:
            raise ValueError("90/270-degree rotation requires a square image")
        out = np.rot90(out, k=k, axes=(0, 1))
    return np.ascontiguousarray(out)


# ---------------------------------------------------------------------------
# manifests and batching

@dataclass
class Manifest:
    """Ordered, unique list of image paths plus a split tag."""

    paths: list[Path]
    split: str = "train"

    def __post_init__(self):
        self.paths = [Path(p) for p in self.paths]
        if len(set(self.paths)) != len(self.paths):
            raise ValueError("manifest paths must be unique")

    def __len__(self):
        return len(self.paths)

    @classmethod
    def read(cls, path, split: str = "train", base_dir=None) -> "Manifest":
        """Newline-delimited relative paths; '#' starts a comment."""
        path = Path(path)
        base = Path(base_dir) if base_dir is not None else path.parent
        entries = []
        for line in path.read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                entries.append(base / line)
        return cls(paths=entries, split=split)

    def write(self, path) -> None:
        Path(path).write_text("\n".join(str(p) for p in self.paths) + "\n")


def make_batches(n_items: int, batch_size: int, epoch: int, seed: int) -> list[list[int]]:
    """Deterministic shuffled index batches; the final short batch is kept."""
    if n_items < 1:
        raise ValueError("cannot batch an empty dataset")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(derive_seed("shuffle", seed, epoch))
    order = rng.permutation(n_items).tolist()
    return [order[i:i + batch_size] for i in range(0, n_items, batch_size)]


def sample_augment_seed(seed: int, epoch: int, index: int) -> int:
    """Per-sample augmentation seed; independent of batch assembly order."""
    return derive_seed("augment", seed, epoch, index)


def sample_mask_seed(seed: int, epoch: int, index: int) -> int:
    """Per-sample training-mask seed, fresh every epoch."""
    return derive_seed("mask", seed, epoch, index)


# ---------------------------------------------------------------------------
# layout conversion between HWC images and NCHW engine tensors

def to_planar(images: list[np.ndarray]) -> np.ndarray:
    """Stack H x W x 3 images into an N x 3 x H x W float32 batch."""
    return np.stack([img.transpose(2, 0, 1) for img in images]).astype(np.float32)


def from_planar(batch: np.ndarray) -> list[np.ndarray]:
    """Split an N x C x H x W batch back into H x W x C float64 images."""
    return [np.ascontiguousarray(batch[i].transpose(1, 2, 0)).astype(np.float64)
            for i in range(batch.shape[0])]
