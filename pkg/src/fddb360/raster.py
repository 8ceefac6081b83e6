"""Raster helpers: validation, bilinear sampling, masks and skin detection.

Images are ``uint8`` arrays of shape ``(height, width, channels)`` with
``channels`` 1 or 3; masks are ``bool`` arrays of shape ``(height, width)``.
Continuous pixel coordinates put the center of pixel ``(row, col)`` at
``(col + 0.5, row + 0.5)``.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

LUMA = np.array([0.299, 0.587, 0.114])


def check_image(img) -> np.ndarray:
    """Return ``img`` as a ``(H, W, C)`` uint8 array, C in {1, 3}."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected an (H, W), (H, W, 1) or (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("image has zero size")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("image values must lie in [0, 255]")
        arr = np.rint(arr).astype(np.uint8)
    return arr


def check_mask(mask, shape) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.shape != tuple(shape[:2]):
        raise ValueError(f"mask shape {m.shape} does not match image {tuple(shape[:2])}")
    return m


def grayscale(img: np.ndarray) -> np.ndarray:
    img = check_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0].astype(float)
    return img.astype(float) @ LUMA


def bilinear_sample(img: np.ndarray, col, row) -> np.ndarray:
    """Bilinearly interpolate ``img`` at continuous ``(col, row)`` positions.

    Positions are clamped to the pixel-center grid, so out-of-bounds lookups
    return edge values. Returns float values of shape ``col.shape + (C,)``.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    u = np.clip(np.asarray(col, dtype=float) - 0.5, 0.0, w - 1)
    v = np.clip(np.asarray(row, dtype=float) - 0.5, 0.0, h - 1)
    c0 = np.minimum(np.floor(u).astype(np.intp), max(w - 2, 0))
    r0 = np.minimum(np.floor(v).astype(np.intp), max(h - 2, 0))
    c1 = np.minimum(c0 + 1, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    fu = (u - c0)[..., None]
    fv = (v - r0)[..., None]
    data = img.astype(float)
    top = data[r0, c0] * (1 - fu) + data[r0, c1] * fu
    bottom = data[r1, c0] * (1 - fu) + data[r1, c1] * fu
    return top * (1 - fv) + bottom * fv


def skin_mask(img: np.ndarray) -> np.ndarray:
    """Explicit RGB-threshold skin classifier; grayscale input yields no skin."""
    img = check_image(img)
    if img.shape[2] != 3:
        return np.zeros(img.shape[:2], dtype=bool)
    rgb = img.astype(np.int16)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    spread = rgb.max(axis=2) - rgb.min(axis=2)
    return ((r > 95) & (g > 40) & (b > 20) & (spread > 15)
            & (np.abs(r - g) > 15) & (r > g) & (r > b))


def rect_mask(width: int, height: int, rects, dilation: float = 0) -> np.ndarray:
    """Pixels whose centers fall inside any rect grown by ``dilation``."""
    mask = np.zeros((height, width), dtype=bool)
    for r in rects:
        # pixel i is covered when x - d <= i + 0.5 < x + w + d
        c0 = max(0, math.ceil(r.x - dilation - 0.5))
        c1 = min(width, math.ceil(r.x + r.w + dilation - 0.5))
        r0 = max(0, math.ceil(r.y - dilation - 0.5))
        r1 = min(height, math.ceil(r.y + r.h + dilation - 0.5))
        if c1 > c0 and r1 > r0:
            mask[r0:r1, c0:c1] = True
    return mask


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return check_image(np.array(im))


def write_image(path, img: np.ndarray) -> None:
    img = check_image(img)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    arr = img[:, :, 0] if img.shape[2] == 1 else img
    Image.fromarray(arr).save(path)
