"""Fisheye-looking face detection data from rectilinear FDDB images."""

__version__ = "0.1.0"

from .annotations import (Detection, EllipseFace, ImageRecord, RectFace, ellipse_to_rect,  # noqa: E402
                          fold_split, parse_detections, parse_fddb, parse_rect,
                          write_rect_annotations)
from .augment import FisheyeAugmenter, augment  # noqa: E402
from .evaluation import discrete_roc, fn_scatter, match_dataset, match_detections, pr_curve  # noqa: E402
from .geometry import disc_to_square, forward_warp, square_to_disc, squeeze, unsqueeze  # noqa: E402
from .inpaint import ExtendedImage, ImageExtender, InpaintTask, extend_image, inpaint  # noqa: E402
from .synth import CircularSample, FisheyeSynthesizer, PatchSpec, map_face, plan_patches, render_fisheye  # noqa: E402

__all__ = [
    "CircularSample", "Detection", "EllipseFace", "ExtendedImage", "FisheyeAugmenter",
    "FisheyeSynthesizer", "ImageExtender", "ImageRecord", "InpaintTask", "PatchSpec", "RectFace",
    "augment", "disc_to_square", "discrete_roc", "ellipse_to_rect", "extend_image", "fn_scatter",
    "fold_split", "forward_warp", "inpaint", "map_face", "match_dataset", "match_detections",
    "parse_detections", "parse_fddb", "parse_rect", "plan_patches", "pr_curve", "render_fisheye",
    "square_to_disc", "squeeze", "unsqueeze", "write_rect_annotations",
]
