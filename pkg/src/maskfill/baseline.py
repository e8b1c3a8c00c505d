"""Multiscale four-direction interpolation baseline.

A simplified stand-in for classic 1-D spline interpolation inpainting:
each damaged run on a scanline (rows, columns or the two lattice
diagonals) is filled by linear interpolation between its bounding valid
pixels; this is repeated at several box-downscaled resolutions and the
per-(scale, direction) candidates are averaged at the damaged pixels.
Reported under the method name "interp-simplified" since the original
method's scale set, weighting, and border policy are not reproduced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_image, check_mask, check_same_spatial

METHOD_NAME = "interp-simplified"

DIRECTIONS = ("horizontal", "vertical", "diag_down", "diag_up")


@dataclass(frozen=True)
class BaselineConfig:
    scales: tuple[int, ...] = (1, 2, 4)

    def __post_init__(self):
        if not self.scales:
            raise ValueError("at least one scale is required")
        for s in self.scales:
            if s < 1 or (s & (s - 1)):
                raise ValueError(f"scales must be positive powers of two, got {s}")


def _fill_lines(values: np.ndarray, damaged: np.ndarray):
    """Linearly interpolate damaged entries of one scanline, per channel.

    Returns (filled_values, fillable, extended). ``fillable`` is False when
    the whole scanline is damaged (values are then left untouched).
    ``extended`` marks damaged entries outside the valid span, which only
    copy the single nearest valid value instead of interpolating.
    """
    valid_idx = np.nonzero(~damaged)[0]
    extended = np.zeros(damaged.shape, dtype=bool)
    if valid_idx.size == 0:
        return values, False, extended
    out = values.copy()
    holes = np.nonzero(damaged)[0]
    if holes.size:
        for ch in range(values.shape[1]):
            # np.interp clamps to the boundary values outside the valid span,
            # which is exactly the "extend the single valid value" border rule
            out[holes, ch] = np.interp(holes, valid_idx, values[valid_idx, ch])
        extended[holes] = (holes < valid_idx[0]) | (holes > valid_idx[-1])
    return out, True, extended


def _diag_indices(h: int, w: int):
    for off in range(-(h - 1), w):
        rows = np.arange(max(0, -off), min(h, w - off))
        cols = rows + off
        yield rows, cols


def directional_fill(image: np.ndarray, mask: np.ndarray, direction: str):
    """Fill damaged runs along one scanline direction.

    Returns (filled_image, unfilled) where ``unfilled`` marks damaged
    pixels whose entire scanline was damaged and could not be filled.
    """
    out, unfilled, _ = _directional_fill_ex(image, mask, direction)
    return out, unfilled


def _directional_fill_ex(image: np.ndarray, mask: np.ndarray, direction: str):
    """Like :func:`directional_fill`, with an extra ``extended`` map marking
    damaged pixels filled by border extension rather than interpolation."""
    image = check_image(image)
    mask = check_mask(mask)
    check_same_spatial(image, mask, "image", "mask")
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}, expected one of {DIRECTIONS}")
    h, w = mask.shape
    out = image.copy()
    unfilled = np.zeros((h, w), dtype=bool)
    extended = np.zeros((h, w), dtype=bool)
    dmg = mask.astype(bool)

    if direction == "horizontal":
        for r in range(h):
            filled, ok, ext = _fill_lines(out[r], dmg[r])
            out[r] = filled
            extended[r] = ext
            if not ok:
                unfilled[r] = dmg[r]
    elif direction == "vertical":
        for c in range(w):
            filled, ok, ext = _fill_lines(out[:, c], dmg[:, c])
            out[:, c] = filled
            extended[:, c] = ext
            if not ok:
                unfilled[:, c] = dmg[:, c]
    else:
        if direction == "diag_up":        # anti-diagonal: flip rows, reuse diag_down
            flipped, unfl, ext = _directional_fill_ex(image[::-1], mask[::-1], "diag_down")
            return flipped[::-1].copy(), unfl[::-1].copy(), ext[::-1].copy()
        for rows, cols in _diag_indices(h, w):
            line = out[rows, cols]
            filled, ok, ext = _fill_lines(line, dmg[rows, cols])
            out[rows, cols] = filled
            extended[rows, cols] = ext
            if not ok:
                unfilled[rows, cols] = dmg[rows, cols]
    return out, unfilled, extended


def _box_downscale(image: np.ndarray, s: int) -> np.ndarray:
    h, w = image.shape[:2]
    return image.reshape(h // s, s, w // s, s, 3).mean(axis=(1, 3))


def _mask_downscale(mask: np.ndarray, s: int) -> np.ndarray:
    h, w = mask.shape
    blocks = mask.reshape(h // s, s, w // s, s)
    return (blocks.max(axis=(1, 3))).astype(np.uint8)   # any damaged -> damaged


def _bilinear_upscale(image: np.ndarray, h: int, w: int) -> np.ndarray:
    from .data import resize
    return resize(image, h, w)


def multiscale_inpaint(image: np.ndarray, mask: np.ndarray,
                       config: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """Average the four directional fills over all configured scales.

    Valid pixels pass through bit-exactly. A damaged pixel no candidate
    reached falls back to the mean of its valid 8-neighbors; if it has
    none, the region is reported unfillable.
    """
    image = check_image(image)
    mask = check_mask(mask)
    check_same_spatial(image, mask, "image", "mask")
    h, w = mask.shape
    biggest = max(config.scales)
    if h % biggest or w % biggest:
        raise ValueError(f"image {h}x{w} not divisible by the largest scale {biggest}")

    dmg = mask.astype(bool)
    acc = np.zeros((h, w, 3), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.int64)
    # Border-extended fills only copy one nearby value, so they are kept as a
    # second-tier fallback rather than averaged with true interpolations.
    ext_acc = np.zeros((h, w, 3), dtype=np.float64)
    ext_count = np.zeros((h, w), dtype=np.int64)
    for s in config.scales:
        small_img = image if s == 1 else _box_downscale(image, s)
        small_mask = mask if s == 1 else _mask_downscale(mask, s)
        for direction in DIRECTIONS:
            filled, unfilled, extended = _directional_fill_ex(small_img, small_mask, direction)
            if s == 1:
                candidate, covered, ext = filled, ~unfilled, extended
            else:
                grow = np.ones((s, s), dtype=bool)
                candidate = _bilinear_upscale(filled, h, w)
                covered = ~np.kron(unfilled, grow)
                ext = np.kron(extended, grow)
            use = dmg & covered & ~ext
            acc[use] += candidate[use]
            count[use] += 1
            backup = dmg & covered & ext
            ext_acc[backup] += candidate[backup]
            ext_count[backup] += 1

    out = image.copy()
    got = dmg & (count > 0)
    out[got] = acc[got] / count[got][:, None]
    fallback = dmg & (count == 0) & (ext_count > 0)
    out[fallback] = ext_acc[fallback] / ext_count[fallback][:, None]

    orphans = np.argwhere(dmg & (count == 0) & (ext_count == 0))
    for r, c in orphans:
        block = []
        for rr in range(max(0, r - 1), min(h, r + 2)):
            for cc in range(max(0, c - 1), min(w, c + 2)):
                if (rr, cc) != (r, c) and not dmg[rr, cc]:
                    block.append(image[rr, cc])
        if not block:
            raise ValueError(f"unfillable region at pixel ({r}, {c})")
        out[r, c] = np.mean(block, axis=0)
    return out
