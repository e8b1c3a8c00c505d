"""Random scratch-line mask generation and application.

Three regimes mirror the benchmark's mask families:

* ``narrow``  -- a few fixed-width lines confined to the central half of
  the frame (all lines share one width, default 2).
* ``variable`` -- lines with per-stroke width drawn uniformly from [1, 8],
  anywhere in the frame.
* ``thick``   -- per-stroke width uniform in [8, 24], anywhere.

A stroke is a random polyline of 2-5 vertices rasterized with round caps:
the Bresenham centerline plus every pixel within (width-1)/2 of a segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

from .validation import check_image, check_mask, check_same_spatial

DEFAULT_FILL = 1.0


@dataclass(frozen=True)
class MaskRegime:
    """Parameter family for one mask severity level."""

    kind: str                              # "narrow" | "variable" | "thick"
    line_count: tuple[int, int] = (2, 8)   # inclusive range of strokes per mask
    width_range: tuple[int, int] = (1, 8)  # inclusive per-stroke width range
    center_only: bool = False              # endpoints confined to central half box
    vertex_count: tuple[int, int] = (2, 5)

    def __post_init__(self):
        lo, hi = self.width_range
        if not (0 < lo <= hi):
            raise ValueError(f"width range must be positive and ordered, got {self.width_range}")
        lo, hi = self.line_count
        if not (0 < lo <= hi):
            raise ValueError(f"line count range must be positive and ordered, got {self.line_count}")


NARROW_CENTER = MaskRegime(kind="narrow", line_count=(2, 8), width_range=(2, 2), center_only=True)
VARIABLE = MaskRegime(kind="variable", line_count=(2, 8), width_range=(1, 8))
THICK = MaskRegime(kind="thick", line_count=(1, 5), width_range=(8, 24))

REGIMES = {"narrow": NARROW_CENTER, "variable": VARIABLE, "thick": THICK}


@dataclass
class Stroke:
    vertices: list[tuple[float, float]]  # (row, col)
    width: int


def _bresenham(r0: int, c0: int, r1: int, c1: int):
    """Integer line pixels from (r0,c0) to (r1,c1), inclusive."""
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        yield r, c
        if r == r1 and c == c1:
            return
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr


REFERENCE_SIZE = 224  # stroke counts are calibrated at this frame size


def sample_strokes(h: int, w: int, regime: MaskRegime, rng: np.random.Generator) -> list[Stroke]:
    """Draw the stroke set for one mask; exposed so tests can inspect widths."""
    n_lines = int(rng.integers(regime.line_count[0], regime.line_count[1] + 1))
    # keep damaged-area fractions comparable across frame sizes: stroke area
    # scales with frame length, so the count shrinks on small frames
    scale = min(h, w) / REFERENCE_SIZE
    if scale < 1.0:
        n_lines = max(1, round(n_lines * scale))
    if regime.center_only:
        r_lo, r_hi = h // 4, h - h // 4
        c_lo, c_hi = w // 4, w - w // 4
    else:
        r_lo, r_hi, c_lo, c_hi = 0, h, 0, w
    shared_width = int(rng.integers(regime.width_range[0], regime.width_range[1] + 1))
    strokes = []
    for _ in range(n_lines):
        n_verts = int(rng.integers(regime.vertex_count[0], regime.vertex_count[1] + 1))
        verts = [(int(rng.integers(r_lo, r_hi)), int(rng.integers(c_lo, c_hi)))
                 for _ in range(n_verts)]
        if regime.center_only:
            width = shared_width  # "narrow" uses one width for every line
        else:
            width = int(rng.integers(regime.width_range[0], regime.width_range[1] + 1))
        strokes.append(Stroke(vertices=verts, width=width))
    return strokes


def rasterize_stroke(h: int, w: int, stroke: Stroke) -> np.ndarray:
    """Rasterize one polyline with round caps onto an H x W binary grid."""
    bits = np.zeros((h, w), dtype=np.uint8)
    radius = (stroke.width - 1) / 2.0
    rows, cols = np.mgrid[0:h, 0:w]
    for (r0, c0), (r1, c1) in zip(stroke.vertices[:-1], stroke.vertices[1:]):
        for r, c in _bresenham(r0, c0, r1, c1):
            if 0 <= r < h and 0 <= c < w:
                bits[r, c] = 1
        if radius > 0:
            lo_r = max(0, int(min(r0, r1) - radius - 1))
            hi_r = min(h, int(max(r0, r1) + radius + 2))
            lo_c = max(0, int(min(c0, c1) - radius - 1))
            hi_c = min(w, int(max(c0, c1) + radius + 2))
            rr = rows[lo_r:hi_r, lo_c:hi_c].astype(np.float64)
            cc = cols[lo_r:hi_r, lo_c:hi_c].astype(np.float64)
            # distance from each pixel center to the segment
            vr, vc = r1 - r0, c1 - c0
            seg_len2 = vr * vr + vc * vc
            if seg_len2 == 0:
                t = np.zeros_like(rr)
            else:
                t = np.clip(((rr - r0) * vr + (cc - c0) * vc) / seg_len2, 0.0, 1.0)
            dist = np.hypot(rr - (r0 + t * vr), cc - (c0 + t * vc))
            patch = bits[lo_r:hi_r, lo_c:hi_c]
            patch[dist <= radius + 1e-9] = 1
    return bits


def generate_mask(h: int, w: int, regime: MaskRegime, seed: int) -> np.ndarray:
    """Deterministically generate one scratch mask (1 = damaged pixel)."""
    if h < 16 or w < 16:
        raise ValueError(f"mask dimensions must be >= 16, got {h}x{w}")
    if min(h, w) < 2 * regime.width_range[1]:
        raise ValueError(f"image {h}x{w} too small for regime max width "
                         f"{regime.width_range[1]}")
    rng = np.random.default_rng(seed)
    for _ in range(16):
        bits = np.zeros((h, w), dtype=np.uint8)
        for stroke in sample_strokes(h, w, regime, rng):
            bits |= rasterize_stroke(h, w, stroke)
        damaged = int(bits.sum())
        if 0 < damaged < h * w:
            return bits
    raise RuntimeError("could not generate a non-degenerate mask")


def apply_mask(image: np.ndarray, mask: np.ndarray, fill: float = DEFAULT_FILL) -> np.ndarray:
    """Overwrite damaged pixels with ``fill`` on all channels."""
    image = check_image(image)
    mask = check_mask(mask)
    check_same_spatial(image, mask, "image", "mask")
    if not 0.0 <= fill <= 1.0:
        raise ValueError(f"fill must lie in [0, 1], got {fill}")
    out = image.copy()
    out[mask.astype(bool)] = fill
    return out


def mask_coverage(mask: np.ndarray) -> float:
    """Fraction of damaged pixels."""
    mask = check_mask(mask)
    return float(mask.sum()) / mask.size


def save_mask(mask: np.ndarray, path) -> None:
    """Write a mask as 8-bit grayscale PNG, 255 = damaged."""
    mask = check_mask(mask)
    PILImage.fromarray((mask * 255).astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Read an 8-bit grayscale mask PNG; any nonzero byte counts as damaged."""
    with PILImage.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return (arr > 127).astype(np.uint8)
