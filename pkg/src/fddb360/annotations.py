"""FDDB ellipse annotations, fisheye rectangle annotations and fold splits.

Both text formats share the FDDB layout: an image path line, a face-count
line, then one line per face.  Ellipse lines read
``major_radius minor_radius angle center_x center_y 1``; rectangle lines read
``x y w h`` (detections append a score: ``x y w h score``).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, TextIO, Union

from .exceptions import DomainError, ParseError

#: Test folds of the five cross-validation splits; train is the complement.
FOLD_PAIRS = ((1, 2), (3, 4), (5, 6), (7, 8), (9, 10))


@dataclass(frozen=True)
class EllipseFace:
    major_radius: float
    minor_radius: float
    angle: float
    center_x: float
    center_y: float

    def __post_init__(self):
        if not self.minor_radius > 0:
            raise DomainError("ellipse radii must be positive")
        if self.minor_radius > self.major_radius:
            raise DomainError("minor_radius exceeds major_radius")


@dataclass(frozen=True)
class RectFace:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite rectangle {vals}")
        if self.w <= 0 or self.h <= 0:
            raise DomainError(f"rectangle must have positive size, got w={self.w} h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + 0.5 * self.w, self.y + 0.5 * self.h

    def shifted(self, dx: float = 0.0, dy: float = 0.0) -> "RectFace":
        return RectFace(self.x + dx, self.y + dy, self.w, self.h)

    @classmethod
    def from_corners(cls, x1, y1, x2, y2) -> "RectFace":
        return cls(float(x1), float(y1), float(x2 - x1), float(y2 - y1))


@dataclass(frozen=True)
class Detection:
    image_id: str
    rect: RectFace
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise DomainError("detection score must be finite")


@dataclass
class ImageRecord:
    image_path: str
    faces: list = field(default_factory=list)
    fold_id: int | None = None

    def __post_init__(self):
        if self.fold_id is not None and not 1 <= self.fold_id <= 10:
            raise DomainError(f"fold_id must be in 1..10, got {self.fold_id}")


def rect_intersection(a: RectFace, b: RectFace) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: RectFace, b: RectFace) -> float:
    inter = rect_intersection(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def ellipse_to_rect(e: EllipseFace) -> RectFace:
    """Tight axis-aligned bounding box of a rotated ellipse.

    ``angle`` is the major axis direction measured from the horizontal.
    """
    a, b, t = e.major_radius, e.minor_radius, e.angle
    c, s = math.cos(t), math.sin(t)
    half_w = math.sqrt(a * a * c * c + b * b * s * s)
    half_h = math.sqrt(a * a * s * s + b * b * c * c)
    return RectFace(e.center_x - half_w, e.center_y - half_h, 2 * half_w, 2 * half_h)


# -- readers ---------------------------------------------------------------

TextSource = Union[str, TextIO, Iterable[str]]


def _lines(source: TextSource):
    if isinstance(source, str):
        source = source.splitlines()
    for n, line in enumerate(source, start=1):
        yield n, line.strip()


def _floats(tokens, n, lineno, what):
    try:
        return [float(t) for t in tokens[:n]]
    except ValueError:
        raise ParseError(f"non-numeric {what} line", lineno) from None


def _parse_blocks(source: TextSource, parse_face):
    records = []
    it = _lines(source)
    for n, line in it:
        if not line:
            continue
        path = line
        try:
            n_count, count_line = next(it)
            while not count_line:
                n_count, count_line = next(it)
        except StopIteration:
            raise ParseError(f"missing face-count line after {path!r}", n) from None
        try:
            count = int(count_line)
        except ValueError:
            raise ParseError(f"expected face count, got {count_line!r}", n_count) from None
        if count < 0:
            raise ParseError("negative face count", n_count)
        faces = []
        last = n_count
        for _ in range(count):
            try:
                last, face_line = next(it)
            except StopIteration:
                raise ParseError(
                    f"{path!r} declares {count} faces but file ended after {len(faces)}",
                    last) from None
            if not face_line:
                raise ParseError(
                    f"{path!r} declares {count} faces but only {len(faces)} follow", last)
            faces.append(parse_face(face_line.split(), last))
        records.append((path, faces))
    return records


def _ellipse_line(tokens, lineno):
    if len(tokens) not in (5, 6):
        raise ParseError(f"ellipse line needs 5 or 6 fields, got {len(tokens)}", lineno)
    a, b, t, cx, cy = _floats(tokens, 5, lineno, "ellipse")
    if b > a:
        a, b = b, a
        t += math.pi / 2
    try:
        return EllipseFace(a, b, t, cx, cy)
    except DomainError as exc:
        raise ParseError(str(exc), lineno) from None


def _rect_line(tokens, lineno):
    if len(tokens) != 4:
        raise ParseError(f"rectangle line needs 4 fields, got {len(tokens)}", lineno)
    x, y, w, h = _floats(tokens, 4, lineno, "rectangle")
    try:
        return RectFace(x, y, w, h)
    except DomainError as exc:
        raise ParseError(str(exc), lineno) from None


def _detection_line(tokens, lineno):
    if len(tokens) != 5:
        raise ParseError(f"detection line needs 5 fields, got {len(tokens)}", lineno)
    x, y, w, h, score = _floats(tokens, 5, lineno, "detection")
    try:
        return RectFace(x, y, w, h), score
    except DomainError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_fddb(source: TextSource, fold_id: int | None = None) -> list[ImageRecord]:
    """Parse an FDDB ellipse list into one record per image, faces in order."""
    return [ImageRecord(p, faces, fold_id) for p, faces in _parse_blocks(source, _ellipse_line)]


def parse_rect(source: TextSource, fold_id: int | None = None) -> list[ImageRecord]:
    return [ImageRecord(p, faces, fold_id) for p, faces in _parse_blocks(source, _rect_line)]


def parse_detections(source: TextSource) -> list[Detection]:
    out = []
    for path, items in _parse_blocks(source, _detection_line):
        out.extend(Detection(path, rect, score) for rect, score in items)
    return out


def read_fold_list(source: TextSource) -> list[str]:
    """FDDB fold file: one image path per line."""
    return [line for _, line in _lines(source) if line]


_FOLD_RE = re.compile(r"fold-?0*(\d+)", re.IGNORECASE)


def fold_from_filename(path: Union[str, Path]) -> int | None:
    m = _FOLD_RE.search(Path(path).name)
    return int(m.group(1)) if m else None


# -- writers ---------------------------------------------------------------

def format_rect(r: RectFace) -> str:
    return f"{r.x:.2f} {r.y:.2f} {r.w:.2f} {r.h:.2f}"


def write_rect_annotations(samples, sink: TextIO) -> None:
    """Write samples (anything with ``name`` and ``faces``) as rectangle annotations."""
    for s in samples:
        name = getattr(s, "name", None) or getattr(s, "image_path")
        sink.write(f"{name}\n{len(s.faces)}\n")
        for r in s.faces:
            sink.write(format_rect(r) + "\n")


def write_detections(detections: Iterable[Detection], sink: TextIO) -> None:
    by_image: dict[str, list[Detection]] = {}
    for d in detections:
        by_image.setdefault(d.image_id, []).append(d)
    for image_id, dets in by_image.items():
        sink.write(f"{image_id}\n{len(dets)}\n")
        for d in dets:
            sink.write(f"{format_rect(d.rect)} {d.score:.6f}\n")


# -- folds -----------------------------------------------------------------

def fold_split(records: list[ImageRecord]) -> list[tuple[list[ImageRecord], list[ImageRecord]]]:
    """Five (train, test) partitions pairing FDDB folds 1-2, 3-4, ..., 9-10."""
    present = set()
    for r in records:
        if r.fold_id is None:
            raise DomainError(f"record {r.image_path!r} has no fold_id")
        present.add(r.fold_id)
    missing = sorted(set(range(1, 11)) - present)
    if missing:
        raise DomainError(f"no records for fold(s) {missing}")
    splits = []
    for pair in FOLD_PAIRS:
        test = [r for r in records if r.fold_id in pair]
        train = [r for r in records if r.fold_id not in pair]
        splits.append((train, test))
    return splits


def with_fold(records: list[ImageRecord], fold_id: int) -> list[ImageRecord]:
    return [replace(r, fold_id=fold_id) for r in records]
