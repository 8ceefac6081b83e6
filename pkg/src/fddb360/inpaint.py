"""Exemplar-based inpainting with an exclusion penalty, and image widening.

The fill follows the classic confidence x data-term ordering: the fill-front
pixel with the highest priority is completed by copying the best matching
patch from the original known region.  Candidate sources that overlap the
exclusion mask (faces, skin) pay an additive penalty proportional to the
overlapped fraction of the patch.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .annotations import RectFace
from .exceptions import DomainError
from .raster import check_image, check_mask, grayscale, rect_mask, skin_mask, write_image

logger = logging.getLogger(__name__)

# largest integer run float32 accumulates exactly
_F32_EXACT = 2 ** 24
_CHUNK = 65536
_CACHE_BYTES = 256 * 2 ** 20


class InpaintError(RuntimeError):
    """No admissible source patch exists, even at the smallest patch radius."""


@dataclass
class InpaintTask:
    image: np.ndarray
    hole: np.ndarray
    exclusion: np.ndarray | None = None
    patch_radius: int = 4
    exclusion_penalty: float | None = None
    search_window: int | None = None

    def __post_init__(self):
        self.image = check_image(self.image)
        self.hole = check_mask(self.hole, self.image.shape)
        if self.exclusion is None:
            self.exclusion = np.zeros_like(self.hole)
        self.exclusion = check_mask(self.exclusion, self.image.shape)
        if int(self.patch_radius) < 1:
            raise ValueError("patch_radius must be >= 1")
        self.patch_radius = int(self.patch_radius)
        if self.exclusion_penalty is None:
            self.exclusion_penalty = 1e6 * self.image.shape[2]


@dataclass(frozen=True)
class Selection:
    """One fill step, as recorded in the selection log."""
    target: tuple[int, int]
    source: tuple[int, int]
    patch_radius: int
    ssd: float
    overlap: float
    cost: float
    clean_available: bool


@dataclass
class ExtendedImage:
    image: np.ndarray
    layout: str
    original_width: int
    face_rects: list = field(default_factory=list)
    #: x offset of each copy of the original inside ``image``
    copy_offsets: tuple = (0,)
    source_id: str = ""

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]


def _known_gradient(gray, known, axis):
    """Centered difference along ``axis`` using known pixels only.

    Falls back to a one-sided difference when one neighbour is unknown and
    to zero when both are.
    """
    g = np.moveaxis(gray, axis, -1)
    k = np.moveaxis(known, axis, -1)
    gf = np.zeros_like(g)
    gb = np.zeros_like(g)
    kf = np.zeros_like(k)
    kb = np.zeros_like(k)
    gf[..., :-1], kf[..., :-1] = g[..., 1:], k[..., 1:]
    gb[..., 1:], kb[..., 1:] = g[..., :-1], k[..., :-1]
    out = np.where(kf & kb, 0.5 * (gf - gb),
                   np.where(kf, gf - g, np.where(kb, g - gb, 0.0)))
    out = np.where(k, out, 0.0)
    return np.moveaxis(out, -1, axis)


class _Candidates:
    """All source patches that lie fully inside the original known region."""

    def __init__(self, image, known, exclusion, radius):
        h, w, c = image.shape
        k = 2 * radius + 1
        self.radius = radius
        if h < k or w < k:
            tl = np.empty((0, 2), dtype=np.intp)
            self.overlap = np.empty(0)
            self.patches = np.empty((0, c * k * k), dtype=np.uint8)
        else:
            inside = sliding_window_view(known, (k, k)).all(axis=(2, 3))
            tl = np.argwhere(inside)
            excl = sliding_window_view(exclusion, (k, k)).mean(axis=(2, 3))
            self.overlap = excl[tl[:, 0], tl[:, 1]]
            # (rows, cols, C, k, k) -> one flattened (C, k, k) vector per candidate
            windows = sliding_window_view(image, (k, k), axis=(0, 1))
            self.patches = np.ascontiguousarray(
                windows[tl[:, 0], tl[:, 1]].reshape(len(tl), c * k * k))
        self.centers = tl + radius
        self.dtype = np.float32 if self.patches.shape[1] * 255 * 255 < _F32_EXACT else np.float64
        self._dense = None
        if self.patches.size * 2 * np.dtype(self.dtype).itemsize <= _CACHE_BYTES:
            p = self.patches.astype(self.dtype)
            self._dense = (p, p * p)

    def __len__(self):
        return len(self.centers)

    def _blocks(self, idx):
        if self._dense is not None:
            p, p2 = self._dense
            if idx is None:
                yield slice(None), p, p2
            else:
                yield slice(None), p[idx], p2[idx]
            return
        n = len(self.centers) if idx is None else len(idx)
        for s in range(0, n, _CHUNK):
            rows = slice(s, s + _CHUNK)
            block = self.patches[rows if idx is None else idx[rows]].astype(self.dtype)
            yield rows, block, block * block

    def ssd(self, idx, target, weight):
        """Masked SSD of candidates ``idx`` (None = all) against ``target``.

        Patch values are integers and every partial sum stays below 2**24
        (or float64 is used), so the result is exact.
        """
        wt = (weight * target).astype(self.dtype)
        wf = weight.astype(self.dtype)
        const = float(np.dot(weight * target, target))
        out = np.empty(len(self.centers) if idx is None else len(idx))
        for rows, p, p2 in self._blocks(idx):
            a = p2 @ wf
            b = p @ wt
            out[rows] = a.astype(np.float64) - 2.0 * b.astype(np.float64) + const
        return out


class _Filler:
    def __init__(self, task: InpaintTask):
        self.task = task
        self.image = task.image.copy()
        self.hole = task.hole.copy()
        self.known0 = ~task.hole
        self.exclusion = task.exclusion
        self.confidence = self.known0.astype(float)
        self.penalty = float(task.exclusion_penalty)
        self._set_radius(task.patch_radius)

    def _set_radius(self, radius):
        self.radius = radius
        self.candidates = _Candidates(self.image, self.known0, self.exclusion, radius)

    # -- fill front ------------------------------------------------------
    def front(self):
        known = ~self.hole
        near = ndimage.binary_dilation(known, structure=np.ones((3, 3), dtype=bool))
        return self.hole & near

    def _windows(self, arr, pts, fill):
        r = self.radius
        pad = np.pad(arr, r, mode="constant", constant_values=fill)
        k = 2 * r + 1
        view = sliding_window_view(pad, (k, k))
        return view[pts[:, 0], pts[:, 1]]

    def _crop(self):
        """Bounding box of the hole grown by radius + 2.

        Priorities only read the patch around each front pixel plus one more
        pixel for the gradients, so working on this crop gives the same values
        as the full canvas.
        """
        rows = np.flatnonzero(self.hole.any(axis=1))
        cols = np.flatnonzero(self.hole.any(axis=0))
        m = self.radius + 2
        h, w = self.hole.shape
        return (slice(max(rows[0] - m, 0), min(rows[-1] + m + 1, h)),
                slice(max(cols[0] - m, 0), min(cols[-1] + m + 1, w)))

    def priorities(self, pts):
        """Confidence, data term and priority for fill-front points ``pts``."""
        rs, cs = self._crop()
        hole = self.hole[rs, cs]
        image = self.image[rs, cs]
        confidence = self.confidence[rs, cs]
        r = self.radius
        k = 2 * r + 1
        h, w = self.hole.shape
        # window pixels that fall inside the canvas
        inside = ((np.minimum(pts[:, 0] + r, h - 1) - np.maximum(pts[:, 0] - r, 0) + 1)
                  * (np.minimum(pts[:, 1] + r, w - 1) - np.maximum(pts[:, 1] - r, 0) + 1))
        pts = pts - np.array([rs.start, cs.start])
        conf = self._windows(confidence * ~hole, pts, 0.0).sum(axis=(1, 2)) / inside

        hole_f = hole.astype(float)
        nx = ndimage.sobel(hole_f, axis=1, mode="nearest")[pts[:, 0], pts[:, 1]]
        ny = ndimage.sobel(hole_f, axis=0, mode="nearest")[pts[:, 0], pts[:, 1]]
        norm = np.hypot(nx, ny)
        nz = norm > 0
        nx = np.where(nz, nx / np.where(nz, norm, 1.0), 0.0)
        ny = np.where(nz, ny / np.where(nz, norm, 1.0), 0.0)

        gray = grayscale(image)
        known = ~hole
        gx, gy = _known_gradient(gray, known, 1), _known_gradient(gray, known, 0)
        mag = self._windows(np.hypot(gx, gy), pts, -1.0).reshape(len(pts), k * k)
        best = mag.argmax(axis=1)
        wx = self._windows(gx, pts, 0.0).reshape(len(pts), k * k)
        wy = self._windows(gy, pts, 0.0).reshape(len(pts), k * k)
        sel = np.arange(len(pts))
        bx, by = wx[sel, best], wy[sel, best]
        # isophote = gradient rotated by 90 degrees
        data = np.abs(-by * nx + bx * ny) / 255.0
        return conf, data, conf * data

    # -- source search ---------------------------------------------------
    def target_patch(self, center):
        r = self.radius
        k = 2 * r + 1
        row, col = center
        pad_img = np.pad(self.image, ((r, r), (r, r), (0, 0)))
        pad_known = np.pad(~self.hole, r, constant_values=False)
        t = pad_img[row:row + k, col:col + k].transpose(2, 0, 1).astype(np.float64)
        m = np.broadcast_to(pad_known[row:row + k, col:col + k], t.shape).astype(np.float64)
        return t.reshape(-1), m.reshape(-1)

    def search(self, center):
        """Return (index, ssd, cost, clean_available) or None if nothing admissible."""
        cand = self.candidates
        if len(cand) == 0:
            return None
        idx = None
        overlap = cand.overlap
        win = self.task.search_window
        if win is not None:
            d = np.abs(cand.centers - np.asarray(center)).max(axis=1)
            # deep inside a wide hole the window may be empty: grow it
            win = max(win, int(d.min()))
            idx = np.flatnonzero(d <= win)
            overlap = overlap[idx]
        t, m = self.target_patch(center)
        ssd = cand.ssd(idx, t, m)
        cost = ssd + self.penalty * overlap
        j = int(np.argmin(cost))
        k = j if idx is None else int(idx[j])
        return k, float(ssd[j]), float(cost[j]), bool(np.any(overlap == 0))

    def best_source(self, center):
        while True:
            found = self.search(center)
            if found is not None:
                return found
            if self.radius <= 1:
                raise InpaintError(f"no admissible source patch for target {tuple(center)}")
            logger.debug("no source at radius %d, shrinking", self.radius)
            self._set_radius(self.radius - 1)

    # -- main loop -------------------------------------------------------
    def step(self):
        front = self.front()
        pts = np.argwhere(front)
        if len(pts) == 0:
            raise InpaintError("hole has no known neighbours to grow from")
        conf, _, prio = self.priorities(pts)
        # argmax returns the first maximum: lowest (row, col)
        i = int(np.argmax(prio))
        target = pts[i]
        j, ssd, cost, clean = self.best_source(target)
        r = self.radius
        source = self.candidates.centers[j]
        h, w = self.hole.shape
        r0, r1 = max(target[0] - r, 0), min(target[0] + r + 1, h)
        c0, c1 = max(target[1] - r, 0), min(target[1] + r + 1, w)
        dr, dc = source[0] - target[0], source[1] - target[1]
        fill = self.hole[r0:r1, c0:c1].copy()
        dst = self.image[r0:r1, c0:c1]
        src = self.image[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        dst[fill] = src[fill]
        self.confidence[r0:r1, c0:c1][fill] = conf[i]
        self.hole[r0:r1, c0:c1][fill] = False
        return Selection((int(target[0]), int(target[1])), (int(source[0]), int(source[1])),
                         r, ssd, float(self.candidates.overlap[j]), cost, clean)


def fill_front_priority(task: InpaintTask, p) -> float:
    """Priority (confidence x data term) of fill-front pixel ``p = (row, col)``."""
    filler = _Filler(task)
    pt = np.array([p], dtype=np.intp)
    if not filler.front()[pt[0, 0], pt[0, 1]]:
        raise DomainError(f"pixel {tuple(p)} is not on the fill front")
    return float(filler.priorities(pt)[2][0])


def best_source_patch(task: InpaintTask, target) -> tuple[int, int]:
    """Center ``(row, col)`` of the cheapest admissible source patch for ``target``."""
    filler = _Filler(task)
    found = filler.search(np.asarray(target))
    if found is None:
        raise InpaintError(f"no admissible source patch at radius {task.patch_radius}")
    c = filler.candidates.centers[found[0]]
    return int(c[0]), int(c[1])


def inpaint(task: InpaintTask, log: list | None = None, debug_dir=None) -> np.ndarray:
    """Fill every hole pixel of ``task.image``; returns a new image.

    If ``log`` is a list, one :class:`Selection` per fill step is appended.
    With ``debug_dir`` set, the canvas is dumped after each step with the
    remaining hole painted magenta.
    """
    if not task.hole.any():
        return task.image.copy()
    filler = _Filler(task)
    n = 0
    while filler.hole.any():
        sel = filler.step()
        n += 1
        if log is not None:
            log.append(sel)
        if debug_dir is not None:
            frame = filler.image.copy()
            if frame.shape[2] == 3:
                frame[filler.hole] = (255, 0, 255)
            else:
                frame[filler.hole] = 255
            write_image(Path(debug_dir) / f"fill_{n:05d}.png", frame)
    logger.debug("inpainted %d pixels in %d steps", int(task.hole.sum()), n)
    return filler.image


# -- widening ---------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def extend_image(img, faces, patch_radius: int = 4, exclusion_penalty: float | None = None,
                 face_dilation: float = 4, widen_fraction: float = 0.4,
                 narrow_ratio: float = 0.75, search_window: int | None = None,
                 log: list | None = None, debug_dir=None, source_id: str = "") -> ExtendedImage:
    """Widen ``img`` by ``widen_fraction`` of its width using inpainting.

    A copy of the image is placed to the right, separated by a gap of
    ``round(widen_fraction * W)`` columns, and the gap is inpainted with faces
    and skin excluded as sources.  Images at least ``narrow_ratio`` wide
    (width / height) are then rearranged: the right half of the filled gap is
    moved to the left edge, giving width ``W + gap``.  Narrower images keep the
    side-by-side canvas of width ``2W + gap`` and list each face twice.
    """
    img = check_image(img)
    h, w, c = img.shape
    k = 2 * patch_radius + 1
    if w < k or h < k:
        raise DomainError(f"image {w}x{h} smaller than the {k}x{k} patch")
    faces = list(faces)
    gap = _round_half_up(widen_fraction * w)
    copy_x = w + gap
    canvas = np.zeros((h, 2 * w + gap, c), dtype=np.uint8)
    canvas[:, :w] = img
    canvas[:, copy_x:] = img
    hole = np.zeros((h, canvas.shape[1]), dtype=bool)
    hole[:, w:copy_x] = True

    face_mask = rect_mask(w, h, faces, face_dilation) | skin_mask(img)
    exclusion = np.zeros_like(hole)
    exclusion[:, :w] = face_mask
    exclusion[:, copy_x:] = face_mask

    task = InpaintTask(canvas, hole, exclusion, patch_radius, exclusion_penalty, search_window)
    filled = inpaint(task, log=log, debug_dir=debug_dir)

    if w / h < narrow_ratio:
        rects = [f for f in faces] + [f.shifted(copy_x) for f in faces]
        return ExtendedImage(filled, "side_by_side", w, rects, (0, copy_x), source_id)

    left_half = gap // 2
    moved = gap - left_half
    out = np.concatenate([filled[:, w + left_half:copy_x], filled[:, :w + left_half]], axis=1)
    return ExtendedImage(out, "rearranged", w, [f.shifted(moved) for f in faces], (moved,), source_id)


class ImageExtender(TransformerMixin, BaseEstimator):
    """Widen annotated images by inpainting, ready for patch sampling.

    ``transform`` takes an iterable of ``(image, faces)`` pairs, where
    ``faces`` is a list of :class:`~fddb360.annotations.RectFace`, and returns
    a list of :class:`ExtendedImage`.
    """

    def __init__(self, patch_radius=4, exclusion_penalty=None, face_dilation=4,
                 widen_fraction=0.4, narrow_ratio=0.75, search_window=None):
        self.patch_radius = patch_radius
        self.exclusion_penalty = exclusion_penalty
        self.face_dilation = face_dilation
        self.widen_fraction = widen_fraction
        self.narrow_ratio = narrow_ratio
        self.search_window = search_window

    def fit(self, X=None, y=None):
        if int(self.patch_radius) < 1:
            raise ValueError("patch_radius must be >= 1")
        if self.widen_fraction <= 0:
            raise ValueError("widen_fraction must be positive")
        if self.face_dilation < 0:
            raise ValueError("face_dilation must be non-negative")
        if self.search_window is not None and self.search_window < 1:
            raise ValueError("search_window must be >= 1")
        self.patch_radius_ = int(self.patch_radius)
        return self

    def transform(self, X):
        check_is_fitted(self, "patch_radius_")
        out = []
        for item in X:
            image, faces = item[0], item[1]
            out.append(extend_image(
                image, faces, patch_radius=self.patch_radius_,
                exclusion_penalty=self.exclusion_penalty, face_dilation=self.face_dilation,
                widen_fraction=self.widen_fraction, narrow_ratio=self.narrow_ratio,
                search_window=self.search_window))
        return out
