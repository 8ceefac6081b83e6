"""Dataset-level orchestration: config, synthesis run, manifest and fold files.

Output layout under ``output_root``::

    images/<fddb path>_p<k>.png
    annotations/FDDB-fisheye-rectList.txt          all samples
    annotations/FDDB-fisheye-fold-XX-rectList.txt  samples per source fold
    manifest.jsonl
    folds/split-N-{train,test}.txt                 after emit_folds
"""
from __future__ import annotations

import configparser
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .annotations import (FOLD_PAIRS, ImageRecord, ellipse_to_rect, fold_from_filename, parse_fddb,
                          parse_rect, write_rect_annotations)
from .augment import AUGMENTATIONS, FisheyeAugmenter
from .exceptions import ConfigError
from .inpaint import extend_image
from .raster import read_image, write_image
from .synth import N_PATCHES, CircularSample, synthesize

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = ("", ".jpg", ".png", ".jpeg", ".JPG", ".PNG")
ALL_ANNOTATIONS = "FDDB-fisheye-rectList.txt"
MANIFEST = "manifest.jsonl"

DEVIATIONS = {
    "ellipse_to_rect": "tight axis-aligned bounding box of the rotated ellipse, angle from horizontal, no padding",
    "resampling": "inverse lookup with bilinear interpolation at pixel centers",
    "skin_rule": "R>95, G>40, B>20, max-min>15, |R-G|>15, R>G, R>B",
    "exclusion": "extended images narrower than tall cannot host a square patch and are excluded",
}


def fold_annotation_name(fold_id: int) -> str:
    return f"FDDB-fisheye-fold-{fold_id:02d}-rectList.txt"


def parse_fill_color(text: str) -> tuple[int, int, int]:
    t = text.strip().lstrip("#")
    if len(t) != 6:
        raise ConfigError(f"fill color must be RRGGBB hex, got {text!r}")
    try:
        return tuple(int(t[i:i + 2], 16) for i in (0, 2, 4))
    except ValueError:
        raise ConfigError(f"fill color must be RRGGBB hex, got {text!r}") from None


@dataclass
class PipelineConfig:
    input_image_root: Path
    fddb_annotation_files: list
    output_root: Path
    patch_radius: int = 4
    exclusion_penalty: float | None = None
    face_dilation: float = 4.0
    fill_color: tuple = (0, 0, 0)
    seed: int = 0
    worker_count: int = 1
    augmentations: tuple = ()
    search_window: int | None = None
    n_patches: int = N_PATCHES

    def validate(self) -> "PipelineConfig":
        self.input_image_root = Path(self.input_image_root)
        self.output_root = Path(self.output_root)
        self.fddb_annotation_files = [Path(p) for p in self.fddb_annotation_files]
        if not self.input_image_root.is_dir():
            raise ConfigError(f"image root {self.input_image_root} is not a directory")
        if not self.fddb_annotation_files:
            raise ConfigError("no FDDB annotation files given")
        for p in self.fddb_annotation_files:
            if not p.is_file():
                raise ConfigError(f"annotation file {p} does not exist")
        if self.worker_count < 1:
            raise ConfigError("worker_count must be >= 1")
        if self.patch_radius < 1:
            raise ConfigError("patch_radius must be >= 1")
        if self.n_patches < 1:
            raise ConfigError("n_patches must be >= 1")
        if self.search_window is not None and self.search_window < 1:
            raise ConfigError("search_window must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        bad = [a for a in self.augmentations if a not in AUGMENTATIONS]
        if bad:
            raise ConfigError(f"unsupported augmentation(s) {bad}: only {', '.join(AUGMENTATIONS)} "
                              "are allowed (other angles would enlarge the boxes)")
        if len(self.fill_color) != 3 or not all(0 <= c <= 255 for c in self.fill_color):
            raise ConfigError(f"fill_color must be three values in [0, 255], got {self.fill_color}")
        self.augmentations = tuple(self.augmentations)
        self.fill_color = tuple(int(c) for c in self.fill_color)
        return self

    def snapshot(self) -> dict:
        d = asdict(self)
        d["input_image_root"] = str(self.input_image_root)
        d["fddb_annotation_files"] = [str(p) for p in self.fddb_annotation_files]
        d["fill_color"] = "%02x%02x%02x" % tuple(self.fill_color)
        d["augmentations"] = list(self.augmentations)
        # neither affects the outputs; leaving them out keeps manifests comparable
        del d["worker_count"], d["output_root"]
        return d

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        """Load ``key = value`` lines (no section header); ``overrides`` win."""
        text = Path(path).read_text()
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string("[config]\n" + text)
        raw = dict(cp["config"])
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        aliases = {"jobs": "worker_count", "images": "input_image_root",
                   "annotations": "fddb_annotation_files", "output": "output_root"}
        kw = {}
        for key, value in raw.items():
            key = aliases.get(key, key)
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = value
        try:
            return cls(**_coerce(kw))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _split_list(v):
    if isinstance(v, str):
        return [s for s in v.replace(",", " ").split() if s]
    return list(v)


def _coerce(kw: dict) -> dict:
    out = dict(kw)
    try:
        for k in ("patch_radius", "seed", "worker_count", "n_patches"):
            if k in out and isinstance(out[k], str):
                out[k] = int(out[k])
        for k in ("face_dilation",):
            if k in out and isinstance(out[k], str):
                out[k] = float(out[k])
        for k in ("exclusion_penalty", "search_window"):
            if k in out and isinstance(out[k], str):
                v = out[k].strip().lower()
                out[k] = None if v in ("", "none", "default") else (
                    float(v) if k == "exclusion_penalty" else int(v))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "fill_color" in out and isinstance(out["fill_color"], str):
        out["fill_color"] = parse_fill_color(out["fill_color"])
    if "fddb_annotation_files" in out:
        out["fddb_annotation_files"] = _split_list(out["fddb_annotation_files"])
    if "augmentations" in out:
        out["augmentations"] = tuple(_split_list(out["augmentations"]))
    return out


# -- manifest ---------------------------------------------------------------

@dataclass
class ManifestEntry:
    source: str
    fold_id: int | None
    status: str
    reason: str = ""
    samples: list = field(default_factory=list)
    faces: int = 0

    @property
    def images(self) -> int:
        return len(self.samples)


@dataclass
class RunManifest:
    entries: list
    config: dict
    tool_version: str = __version__
    deviations: dict = field(default_factory=lambda: dict(DEVIATIONS))
    augmented_images: int = 0

    @property
    def images(self) -> int:
        return sum(e.images for e in self.entries)

    @property
    def faces(self) -> int:
        return sum(e.faces for e in self.entries)

    @property
    def failures(self) -> list:
        return [e for e in self.entries if e.status != "ok"]

    def lines(self):
        yield {"kind": "header", "tool": "fddb360", "tool_version": self.tool_version,
               "config": self.config}
        for k, v in self.deviations.items():
            yield {"kind": "deviation", "key": k, "value": v}
        for e in self.entries:
            yield {"kind": "source", "source": e.source, "fold_id": e.fold_id, "status": e.status,
                   "reason": e.reason, "images": e.images, "faces": e.faces, "samples": e.samples}
        yield {"kind": "totals", "sources": len(self.entries),
               "excluded": len(self.failures), "images": self.images, "faces": self.faces,
               "augmented_images": self.augmented_images}

    def write(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            for obj in self.lines():
                fh.write(json.dumps(obj) + "\n")


def read_manifest(path) -> RunManifest:
    header, totals = None, None
    entries, deviations = [], {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: invalid manifest line: {exc}") from None
            kind = obj.get("kind")
            if kind == "header":
                header = obj
            elif kind == "deviation":
                deviations[obj["key"]] = obj["value"]
            elif kind == "source":
                entries.append(ManifestEntry(obj["source"], obj["fold_id"], obj["status"],
                                             obj["reason"], list(obj["samples"]), obj["faces"]))
                if obj["images"] != len(obj["samples"]):
                    raise ValueError(f"{path}:{n}: image count disagrees with sample list")
            elif kind == "totals":
                totals = obj
            else:
                raise ValueError(f"{path}:{n}: unknown manifest record {kind!r}")
    if header is None or totals is None:
        raise ValueError(f"{path}: manifest lacks header or totals")
    m = RunManifest(entries, header["config"], header["tool_version"], deviations,
                    totals.get("augmented_images", 0))
    if totals["images"] != m.images or totals["faces"] != m.faces or totals["sources"] != len(entries):
        raise ValueError(f"{path}: totals do not match per-source entries")
    return m


# -- synthesis --------------------------------------------------------------

def load_records(config: PipelineConfig) -> list[ImageRecord]:
    records = []
    for i, path in enumerate(config.fddb_annotation_files, start=1):
        fold = fold_from_filename(path)
        if fold is None:
            fold = i if i <= 10 else None
        with open(path) as fh:
            records.extend(parse_fddb(fh, fold_id=fold))
    return records


def resolve_image(root: Path, image_path: str) -> Path:
    for suffix in IMAGE_SUFFIXES:
        p = root / (image_path + suffix)
        if p.is_file():
            return p
    raise FileNotFoundError(f"no image file for {image_path!r} under {root}")


def _process(job):
    record, config = job
    try:
        img = read_image(resolve_image(config.input_image_root, record.image_path))
        faces = [ellipse_to_rect(e) for e in record.faces]
        ext = extend_image(img, faces, patch_radius=config.patch_radius,
                           exclusion_penalty=config.exclusion_penalty,
                           face_dilation=config.face_dilation,
                           search_window=config.search_window, source_id=record.image_path)
        samples = synthesize(ext, config.n_patches, config.fill_color, fold_id=record.fold_id)
    except Exception as exc:  # per-image failures are reported, not fatal
        logger.warning("excluding %s: %s", record.image_path, exc)
        return ManifestEntry(record.image_path, record.fold_id, "excluded",
                             f"{type(exc).__name__}: {exc}"), []
    for s in samples:
        write_image(config.output_root / "images" / (s.name + ".png"), s.image)
    entry = ManifestEntry(record.image_path, record.fold_id, "ok", "",
                          [s.name for s in samples], sum(len(s.faces) for s in samples))
    # images are on disk; ship annotations back without pixel data
    return entry, [CircularSample(s.image[:0, :0], s.faces, s.source_id, s.patch_index, s.layout,
                                  fold_id=s.fold_id) for s in samples]


def _run_jobs(jobs, workers):
    if workers == 1:
        return [_process(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_process, jobs, chunksize=1))


def run_synthesis(config: PipelineConfig) -> RunManifest:
    """Build the fisheye dataset described by ``config`` and write its manifest."""
    config.validate()
    records = load_records(config)
    logger.info("synthesizing from %d source images with %d worker(s)",
                len(records), config.worker_count)
    out = config.output_root
    (out / "annotations").mkdir(parents=True, exist_ok=True)
    results = _run_jobs([(r, config) for r in records], config.worker_count)

    entries = [e for e, _ in results]
    samples = [s for _, ss in results for s in ss]
    with open(out / "annotations" / ALL_ANNOTATIONS, "w", newline="\n") as fh:
        write_rect_annotations(samples, fh)
    for fold in sorted({s.fold_id for s in samples if s.fold_id is not None}):
        with open(out / "annotations" / fold_annotation_name(fold), "w", newline="\n") as fh:
            write_rect_annotations([s for s in samples if s.fold_id == fold], fh)

    manifest = RunManifest(entries, config.snapshot())
    if config.augmentations:
        manifest.augmented_images = len(augment_directory(
            out, out / "augmented", config.augmentations, "all", config.seed))
    manifest.write(out / MANIFEST)
    logger.info("wrote %d images with %d faces (%d sources excluded)",
                manifest.images, manifest.faces, len(manifest.failures))
    return manifest


def augment_directory(input_root, output_root, ops=AUGMENTATIONS, mode="all", seed=0):
    """Materialize flipped/rotated copies of a synthesized dataset."""
    input_root, output_root = Path(input_root), Path(output_root)
    with open(input_root / "annotations" / ALL_ANNOTATIONS) as fh:
        records = parse_rect(fh)
    aug = FisheyeAugmenter(ops=tuple(ops), mode=mode, random_state=seed).fit()
    written = []
    for rec in records:
        img = read_image(input_root / "images" / (rec.image_path + ".png"))
        sample = CircularSample(img, rec.faces, rec.image_path, 0)
        for a in aug.transform([sample]):
            name = f"{rec.image_path}_{a.augmentation}"
            write_image(output_root / "images" / (name + ".png"), a.image)
            written.append(_Named(name, a.faces))
    (output_root / "annotations").mkdir(parents=True, exist_ok=True)
    with open(output_root / "annotations" / ALL_ANNOTATIONS, "w", newline="\n") as fh:
        write_rect_annotations(written, fh)
    return written


@dataclass
class _Named:
    name: str
    faces: list


def emit_folds(root) -> list[tuple[Path, Path]]:
    """Write the five train/test annotation pairs for a synthesized dataset."""
    root = Path(root)
    manifest = read_manifest(root / MANIFEST)
    fold_of = {}
    for e in manifest.entries:
        if e.status != "ok":
            continue
        if e.fold_id is None:
            raise ConfigError(f"source {e.source!r} has no fold metadata")
        for name in e.samples:
            fold_of[name] = e.fold_id
    with open(root / "annotations" / ALL_ANNOTATIONS) as fh:
        records = parse_rect(fh)
    for r in records:
        if r.image_path not in fold_of:
            raise ConfigError(f"sample {r.image_path!r} missing from manifest")
        r.fold_id = fold_of[r.image_path]
    out = root / "folds"
    out.mkdir(parents=True, exist_ok=True)
    pairs = []
    for n, test_folds in enumerate(FOLD_PAIRS, start=1):
        train = [r for r in records if r.fold_id not in test_folds]
        test = [r for r in records if r.fold_id in test_folds]
        paths = out / f"split-{n}-train.txt", out / f"split-{n}-test.txt"
        for p, recs in zip(paths, (train, test)):
            with open(p, "w", newline="\n") as fh:
                write_rect_annotations(recs, fh)
        pairs.append(paths)
    return pairs
