"""Square patch sampling, fisheye rendering and annotation remapping."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .annotations import RectFace, iou, rect_intersection
from .exceptions import DomainError
from .geometry import MAX_SQUEEZED_RADIUS, forward_warp, inverse_warp, norm_to_pixel, pixel_to_norm
from .inpaint import ExtendedImage
from .raster import LUMA, bilinear_sample

N_PATCHES = 6
#: minimum fraction of a face that must fall inside a patch (strictly more)
RETENTION = 0.5
DEDUP_IOU = 0.9


@dataclass(frozen=True)
class PatchSpec:
    left: int
    top: int
    side: int
    source_image_id: str = ""
    patch_index: int = 0

    @property
    def rect(self) -> RectFace:
        return RectFace(self.left, self.top, self.side, self.side)


@dataclass
class CircularSample:
    image: np.ndarray
    faces: list = field(default_factory=list)
    source_id: str = ""
    patch_index: int = 0
    layout: str = ""
    augmentation: str | None = None
    fold_id: int | None = None

    @property
    def side(self) -> int:
        return self.image.shape[0]

    @property
    def name(self) -> str:
        base = f"{self.source_id}_p{self.patch_index}"
        return f"{base}_{self.augmentation}" if self.augmentation else base


def plan_patches(ext: ExtendedImage, n_patches: int = N_PATCHES) -> list[PatchSpec]:
    """Evenly spaced full-height square windows across the extended image."""
    h, w = ext.image.shape[:2]
    if w < h:
        raise DomainError(f"extended image {w}x{h} is narrower than tall; no square patch fits")
    if n_patches < 1:
        raise ValueError("n_patches must be >= 1")
    span = w - h
    specs = []
    for i in range(n_patches):
        left = int(np.floor(i * span / max(n_patches - 1, 1) + 0.5))
        specs.append(PatchSpec(left, 0, h, ext.source_id, i))
    return specs


@lru_cache(maxsize=8)
def _lookup_table(side: int):
    """Source square coordinates (patch pixels) for every in-disc output pixel."""
    centers = np.arange(side) + 0.5
    x, y = pixel_to_norm(centers[None, :], centers[:, None], side)
    x, y = np.broadcast_arrays(x, y)
    inside = np.hypot(x, y) <= MAX_SQUEEZED_RADIUS
    sx, sy = inverse_warp(x[inside], y[inside])
    col, row = norm_to_pixel(sx, sy, side)
    for a in (inside, col, row):
        a.setflags(write=False)
    return inside, col, row


def _fill_value(fill_color, channels):
    fill = np.asarray(fill_color, dtype=float).reshape(-1)
    if channels == 1:
        if fill.size == 3:
            return np.array([np.rint(fill @ LUMA)], dtype=np.uint8)
        return np.rint(fill[:1]).astype(np.uint8)
    if fill.size == 1:
        fill = np.repeat(fill, 3)
    return np.rint(fill).astype(np.uint8)


def render_fisheye(ext: ExtendedImage, spec: PatchSpec, fill_color=(0, 0, 0)) -> np.ndarray:
    """Render one square patch as a fisheye-looking disc by inverse lookup."""
    img = ext.image
    if spec.left < 0 or spec.top < 0 or spec.left + spec.side > img.shape[1] \
            or spec.top + spec.side > img.shape[0]:
        raise DomainError(f"patch {spec} lies outside the {img.shape[1]}x{img.shape[0]} image")
    channels = img.shape[2]
    inside, col, row = _lookup_table(spec.side)
    out = np.empty((spec.side, spec.side, channels), dtype=np.uint8)
    out[...] = _fill_value(fill_color, channels)
    vals = bilinear_sample(img, col + spec.left, row + spec.top)
    out[inside] = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    return out


def eight_points(r: RectFace) -> np.ndarray:
    """Corners and edge midpoints of ``r`` as a (8, 2) array of (x, y)."""
    xm, ym = r.x + 0.5 * r.w, r.y + 0.5 * r.h
    return np.array([
        (r.x, r.y), (xm, r.y), (r.x2, r.y),
        (r.x2, ym), (r.x2, r.y2), (xm, r.y2),
        (r.x, r.y2), (r.x, ym),
    ])


def warp_points(points: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """Forward-warp extended-image points into output patch pixel coordinates."""
    x, y = pixel_to_norm(points[:, 0] - spec.left, points[:, 1] - spec.top, spec.side)
    u, v = forward_warp(x, y)
    col, row = norm_to_pixel(u, v, spec.side)
    return np.column_stack([col, row])


def retention(face: RectFace, spec: PatchSpec) -> float:
    return rect_intersection(face, spec.rect) / face.area


def map_face(face: RectFace, spec: PatchSpec) -> RectFace | None:
    """Map a face rectangle into a circular patch, or None if mostly cropped.

    The face is kept only when strictly more than half its area lies inside
    the patch.  It is trimmed to the patch, its eight boundary points are
    warped, and their axis-aligned bounding box is returned.
    """
    if retention(face, spec) <= RETENTION:
        return None
    p = spec.rect
    trimmed = RectFace.from_corners(max(face.x, p.x), max(face.y, p.y),
                                    min(face.x2, p.x2), min(face.y2, p.y2))
    pts = warp_points(eight_points(trimmed), spec)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return RectFace.from_corners(lo[0], lo[1], hi[0], hi[1])


def synthesize(ext: ExtendedImage, n_patches: int = N_PATCHES, fill_color=(0, 0, 0),
               fold_id: int | None = None) -> list[CircularSample]:
    samples = []
    for spec in plan_patches(ext, n_patches):
        faces = []
        for f in ext.face_rects:
            m = map_face(f, spec)
            if m is None:
                continue
            if ext.layout == "side_by_side" and any(iou(m, k) > DEDUP_IOU for k in faces):
                continue
            faces.append(m)
        samples.append(CircularSample(render_fisheye(ext, spec, fill_color), faces,
                                      ext.source_id, spec.patch_index, ext.layout,
                                      fold_id=fold_id))
    return samples


class FisheyeSynthesizer(TransformerMixin, BaseEstimator):
    """Turn extended images into fisheye-looking circular samples.

    Parameters
    ----------
    n_patches : int, default=6
        Square windows sampled per extended image.
    fill_color : tuple of int, default=(0, 0, 0)
        RGB value for pixels outside the rendered disc.
    """

    def __init__(self, n_patches=N_PATCHES, fill_color=(0, 0, 0)):
        self.n_patches = n_patches
        self.fill_color = fill_color

    def fit(self, X=None, y=None):
        if int(self.n_patches) < 1:
            raise ValueError("n_patches must be >= 1")
        fill = np.asarray(self.fill_color)
        if fill.size not in (1, 3) or fill.min() < 0 or fill.max() > 255:
            raise ValueError(f"fill_color must be 1 or 3 values in [0, 255], got {self.fill_color}")
        self.n_patches_ = int(self.n_patches)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_patches_")
        out = []
        for ext in X:
            out.extend(synthesize(ext, self.n_patches_, self.fill_color))
        return out
