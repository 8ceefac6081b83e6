"""A small synthetic dataset in FDDB layout, for smoke tests and demos.

The bundled copy lives in ``fddb360/data/mini_fddb``; :func:`make_mini_fddb`
regenerates it.  Layout::

    originalPics/mini/img_XXX.png
    FDDB-folds/FDDB-fold-XX.txt               image paths
    FDDB-folds/FDDB-fold-XX-ellipseList.txt   ellipse annotations
"""
from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np

from .raster import write_image

# (width, height); the last four are narrower than 3:4
_SIZES = [(128, 96), (120, 90), (112, 84), (136, 96), (100, 100), (120, 96),
          (128, 88), (104, 96), (96, 96), (140, 100), (128, 96), (116, 92),
          (108, 90), (132, 96), (124, 100), (112, 96),
          (72, 108), (66, 110), (70, 100), (64, 96)]


def mini_fddb_path() -> Path:
    return Path(str(resources.files("fddb360") / "data" / "mini_fddb"))


def _background(rng, w, h):
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    base = rng.uniform(30, 200, 3)
    gx, gy = rng.uniform(-0.6, 0.6, (2, 3))
    img = base + gx * xx[..., None] + gy * yy[..., None]
    # a few blocky or striped structures so inpainting has something to continue
    for _ in range(rng.integers(3, 7)):
        x0, y0 = rng.integers(0, w), rng.integers(0, h)
        bw, bh = rng.integers(6, w // 2), rng.integers(6, h // 2)
        color = rng.uniform(0, 255, 3)
        # bluish/greenish so the structures are not mistaken for skin
        color[0] = min(color[0], color[2])
        img[y0:y0 + bh, x0:x0 + bw] = color
    if rng.random() < 0.5:
        period = rng.integers(6, 14)
        img[(yy.astype(int) // period) % 2 == 0] *= 0.85
    img += rng.normal(0, 4, img.shape)
    return img


def _draw_face(img, e, rng):
    h, w = img.shape[:2]
    a, b, t, cx, cy = e
    yy, xx = np.mgrid[0:h, 0:w].astype(float) + 0.5
    dx, dy = xx - cx, yy - cy
    c, s = math.cos(t), math.sin(t)
    along = dx * c + dy * s
    across = -dx * s + dy * c
    inside = (along / a) ** 2 + (across / b) ** 2 <= 1
    skin = np.array([rng.uniform(185, 225), rng.uniform(120, 150), rng.uniform(90, 115)])
    img[inside] = skin + rng.normal(0, 3, (inside.sum(), 3))
    # eyes and mouth in face-local coordinates (major axis points down the face)
    for ax, ay, r in ((-0.3, -0.35, 0.12), (-0.3, 0.35, 0.12), (0.45, 0.0, 0.1)):
        px = cx + ax * a * c - ay * b * s
        py = cy + ax * a * s + ay * b * c
        m = (xx - px) ** 2 + (yy - py) ** 2 <= (r * b * 1.6) ** 2
        img[m & inside] = (60, 35, 30)


def make_mini_fddb(root, n_images: int = 20, seed: int = 0) -> Path:
    """Write ``n_images`` synthetic annotated images (two per fold) under ``root``."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    folds: dict[int, list] = {k: [] for k in range(1, 11)}
    for i in range(n_images):
        w, h = _SIZES[i % len(_SIZES)]
        img = _background(rng, w, h)
        faces = []
        for _ in range(int(rng.integers(1, 4))):
            a = rng.uniform(0.14, 0.22) * h
            b = a * rng.uniform(0.7, 0.8)
            t = math.pi / 2 + rng.uniform(-0.25, 0.25)
            cx = rng.uniform(b + 2, w - b - 2)
            cy = rng.uniform(a + 2, h - a - 2)
            faces.append((a, b, t, cx, cy))
        for e in faces:
            _draw_face(img, e, rng)
        name = f"mini/img_{i:03d}"
        write_image(root / "originalPics" / (name + ".png"),
                    np.clip(np.rint(img), 0, 255).astype(np.uint8))
        folds[i % 10 + 1].append((name, faces))
    fold_dir = root / "FDDB-folds"
    fold_dir.mkdir(parents=True, exist_ok=True)
    for k, items in folds.items():
        with open(fold_dir / f"FDDB-fold-{k:02d}.txt", "w", newline="\n") as fh:
            fh.writelines(f"{name}\n" for name, _ in items)
        with open(fold_dir / f"FDDB-fold-{k:02d}-ellipseList.txt", "w", newline="\n") as fh:
            for name, faces in items:
                fh.write(f"{name}\n{len(faces)}\n")
                for a, b, t, cx, cy in faces:
                    fh.write(f"{a:.6f} {b:.6f} {t:.6f} {cx:.6f} {cy:.6f}  1\n")
    return root


def mini_fddb_annotation_files(root=None) -> list[Path]:
    root = Path(root) if root is not None else mini_fddb_path()
    return sorted((root / "FDDB-folds").glob("FDDB-fold-*-ellipseList.txt"))
