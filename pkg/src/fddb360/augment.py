"""Flip and right-angle rotation of circular samples and their rectangles.

Only multiples of 90 degrees are offered: any other angle would inflate the
axis-aligned boxes.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .annotations import RectFace
from .exceptions import DomainError
from .synth import CircularSample

AUGMENTATIONS = ("hflip", "rot90", "rot180", "rot270")


def transform_rect(r: RectFace, op: str, side: float) -> RectFace:
    """Apply ``op`` to a rectangle inside a ``side`` x ``side`` image (rotations clockwise)."""
    s = side
    if op == "hflip":
        return RectFace(s - r.x - r.w, r.y, r.w, r.h)
    if op == "rot90":
        return RectFace(s - r.y - r.h, r.x, r.h, r.w)
    if op == "rot180":
        return RectFace(s - r.x - r.w, s - r.y - r.h, r.w, r.h)
    if op == "rot270":
        return RectFace(r.y, s - r.x - r.w, r.h, r.w)
    raise DomainError(f"unknown augmentation {op!r}; choose from {AUGMENTATIONS}")


def transform_image(img: np.ndarray, op: str) -> np.ndarray:
    if op == "hflip":
        out = img[:, ::-1]
    elif op == "rot90":
        out = np.rot90(img, k=-1)
    elif op == "rot180":
        out = img[::-1, ::-1]
    elif op == "rot270":
        out = np.rot90(img, k=1)
    else:
        raise DomainError(f"unknown augmentation {op!r}; choose from {AUGMENTATIONS}")
    return np.ascontiguousarray(out)


def augment(sample: CircularSample, op: str) -> CircularSample:
    if sample.image.shape[0] != sample.image.shape[1]:
        raise DomainError("augmentation needs a square sample")
    side = sample.image.shape[0]
    tag = op if not sample.augmentation else f"{sample.augmentation}_{op}"
    return replace(sample, image=transform_image(sample.image, op),
                   faces=[transform_rect(f, op, side) for f in sample.faces],
                   augmentation=tag)


def validate_ops(ops) -> tuple[str, ...]:
    ops = tuple(ops)
    bad = [o for o in ops if o not in AUGMENTATIONS]
    if bad:
        raise DomainError(f"unsupported augmentation(s) {bad}; only {AUGMENTATIONS} are allowed")
    if not ops:
        raise DomainError("at least one augmentation is required")
    return ops


class FisheyeAugmenter(TransformerMixin, BaseEstimator):
    """Flip/rotate circular samples.

    With ``mode="all"`` every sample yields one output per op; with
    ``mode="random"`` each sample gets a single op drawn from ``ops`` using
    ``random_state``.
    """

    def __init__(self, ops=AUGMENTATIONS, mode="all", random_state=None):
        self.ops = ops
        self.mode = mode
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self.ops_ = validate_ops(self.ops)
        if self.mode not in ("all", "random"):
            raise ValueError(f"mode must be 'all' or 'random', got {self.mode!r}")
        return self

    def transform(self, X):
        check_is_fitted(self, "ops_")
        ops = self.ops_
        if self.mode == "all":
            return [augment(s, op) for s in X for op in ops]
        rng = check_random_state(self.random_state)
        return [augment(s, ops[rng.randint(len(ops))]) for s in X]
