import json

import numpy as np
import pytest

from fddb360.annotations import parse_rect
from fddb360.cli import main
from fddb360.exceptions import ConfigError
from fddb360.pipeline import (ALL_ANNOTATIONS, MANIFEST, PipelineConfig, emit_folds,
                              parse_fill_color, read_manifest, run_synthesis)
from fddb360.raster import read_image, write_image


def _write_source(root, name, w, h, ellipses, fold=1, seed=0, ann=None):
    rng = np.random.default_rng(seed)
    img = rng.integers(20, 90, (h, w, 3)).astype(np.uint8)
    write_image(root / "pics" / (name + ".png"), img)
    ann = ann or root / f"FDDB-fold-{fold:02d}-ellipseList.txt"
    with open(ann, "a") as fh:
        fh.write(f"{name}\n{len(ellipses)}\n")
        for e in ellipses:
            fh.write(" ".join(f"{v}" for v in e) + "  1\n")
    return ann


def _config(root, anns, **kw):
    return PipelineConfig(root / "pics", anns, root / "out", patch_radius=2, **kw)


def test_centered_face_gives_six_images_six_faces(tmp_path):
    # 100x90 -> 140x90 extended; every patch covers x in [50, 90] (original [30, 70])
    ann = _write_source(tmp_path, "a/img1", 100, 90, [(12, 9, 1.5707963, 50, 45)])
    m = run_synthesis(_config(tmp_path, [ann]))
    assert (m.images, m.faces) == (6, 6)
    recs = parse_rect((tmp_path / "out" / "annotations" / ALL_ANNOTATIONS).read_text())
    assert [r.image_path for r in recs] == [f"a/img1_p{k}" for k in range(6)]
    assert all(len(r.faces) == 1 for r in recs)
    for k in range(6):
        assert read_image(tmp_path / "out" / "images" / f"a/img1_p{k}.png").shape == (90, 90, 3)
    again = read_manifest(tmp_path / "out" / MANIFEST)
    assert (again.images, again.faces) == (6, 6)
    assert again.entries[0].fold_id == 1


def test_empty_annotation_file(tmp_path):
    (tmp_path / "pics").mkdir()
    ann = tmp_path / "empty.txt"
    ann.write_text("")
    m = run_synthesis(_config(tmp_path, [ann]))
    assert m.images == 0 and m.faces == 0
    assert (tmp_path / "out" / "annotations" / ALL_ANNOTATIONS).read_text() == ""
    code = main(["synthesize", "--images", str(tmp_path / "pics"), "--annotations", str(ann),
                 "--output", str(tmp_path / "out2")])
    assert code == 0


def test_failures_are_recorded_and_exit_two(tmp_path):
    ann = _write_source(tmp_path, "ok", 40, 30, [(5, 4, 1.57, 20, 15)])
    with open(ann, "a") as fh:
        fh.write("missing\n0\n")
    code = main(["synthesize", "--images", str(tmp_path / "pics"), "--annotations", str(ann),
                 "--output", str(tmp_path / "out"), "--patch-radius", "2"])
    assert code == 2
    m = read_manifest(tmp_path / "out" / MANIFEST)
    status = {e.source: (e.status, e.reason) for e in m.entries}
    assert status["ok"][0] == "ok"
    assert status["missing"][0] == "excluded" and "FileNotFoundError" in status["missing"][1]
    assert m.images == 6


def test_narrow_extended_image_is_excluded(tmp_path):
    # 20 wide, 60 tall: side-by-side width 48 < 60, no square patch fits
    ann = _write_source(tmp_path, "thin", 20, 60, [])
    m = run_synthesis(_config(tmp_path, [ann]))
    assert m.failures[0].reason.startswith("DomainError")


def test_manifest_lines(tmp_path):
    ann = _write_source(tmp_path, "x", 40, 30, [(5, 4, 1.57, 20, 15)])
    run_synthesis(_config(tmp_path, [ann], fill_color=(1, 2, 255)))
    lines = [json.loads(s) for s in (tmp_path / "out" / MANIFEST).read_text().splitlines()]
    kinds = [d["kind"] for d in lines]
    assert kinds[0] == "header" and kinds[-1] == "totals"
    assert "deviation" in kinds and kinds.count("source") == 1
    assert lines[0]["config"]["fill_color"] == "0102ff"
    assert "worker_count" not in lines[0]["config"]


def test_config_validation(tmp_path):
    (tmp_path / "pics").mkdir()
    ann = tmp_path / "a.txt"
    ann.write_text("")
    with pytest.raises(ConfigError):
        _config(tmp_path, [ann], augmentations=("rot45",)).validate()
    with pytest.raises(ConfigError):
        _config(tmp_path, [tmp_path / "nope.txt"]).validate()
    with pytest.raises(ConfigError):
        _config(tmp_path, [ann], worker_count=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig.from_mapping({"bogus": 1})
    assert parse_fill_color("#00ff10") == (0, 255, 16)
    with pytest.raises(ConfigError):
        parse_fill_color("fff")


def test_config_file_and_overrides(tmp_path):
    ann = _write_source(tmp_path, "x", 40, 30, [(5, 4, 1.57, 20, 15)])
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"images = {tmp_path / 'pics'}\nannotations = {ann}\n"
                   f"output = {tmp_path / 'out'}\npatch_radius = 3\nfill_color = 808080\n"
                   "augmentations = hflip, rot90\njobs = 2\n")
    c = PipelineConfig.from_file(cfg, patch_radius=2)
    assert c.patch_radius == 2 and c.worker_count == 2
    assert c.fill_color == (128, 128, 128) and c.augmentations == ("hflip", "rot90")
    code = main(["synthesize", "--config", str(cfg), "--patch-radius", "2"])
    assert code == 0
    m = read_manifest(tmp_path / "out" / MANIFEST)
    assert m.augmented_images == 12
    img = read_image(tmp_path / "out" / "images" / "x_p0.png")
    assert (img[0, 0] == 128).all()


def test_cli_config_errors(tmp_path, capsys):
    ann = _write_source(tmp_path, "x", 40, 30, [])
    base = ["synthesize", "--images", str(tmp_path / "pics"), "--annotations", str(ann),
            "--output", str(tmp_path / "out")]
    assert main(base + ["--augment", "rot45"]) == 1
    assert "rot45" in capsys.readouterr().err
    assert main(["synthesize", "--images", str(tmp_path / "pics")]) == 1
    assert main(base + ["--fill-color", "zzzzzz"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("a\nnot-a-number\n")
    assert main(["synthesize", "--images", str(tmp_path / "pics"), "--annotations", str(bad),
                 "--output", str(tmp_path / "out")]) == 1


def test_folds_single_fold(tmp_path):
    ann = _write_source(tmp_path, "x", 40, 30, [(5, 4, 1.57, 20, 15)], fold=1)
    run_synthesis(_config(tmp_path, [ann]))
    pairs = emit_folds(tmp_path / "out")
    assert len(pairs) == 5
    for n, (train, test) in enumerate(pairs, start=1):
        tr, te = parse_rect(train.read_text()), parse_rect(test.read_text())
        assert len(tr) + len(te) == 6
        assert len(te) == (6 if n == 1 else 0)
    assert main(["folds", "--root", str(tmp_path / "out")]) == 0


def test_folds_need_fold_metadata(tmp_path):
    # files are numbered by position when the name carries no fold; the
    # eleventh has neither
    anns = [_write_source(tmp_path, f"i{k}", 40, 30, [], ann=tmp_path / f"list{k}.txt")
            for k in range(11)]
    m = run_synthesis(_config(tmp_path, anns))
    assert [e.fold_id for e in m.entries] == list(range(1, 11)) + [None]
    with pytest.raises(ConfigError):
        emit_folds(tmp_path / "out")


def test_augment_and_evaluate_cli(tmp_path):
    ann = _write_source(tmp_path, "a/img1", 100, 90, [(12, 9, 1.5707963, 50, 45)])
    run_synthesis(_config(tmp_path, [ann]))
    out = tmp_path / "out"
    assert main(["augment", "--input", str(out), "--output", str(tmp_path / "aug"),
                 "--ops", "rot90", "hflip"]) == 0
    recs = parse_rect((tmp_path / "aug" / "annotations" / ALL_ANNOTATIONS).read_text())
    assert len(recs) == 12 and recs[0].image_path == "a/img1_p0_rot90"
    assert main(["augment", "--input", str(out), "--output", str(tmp_path / "aug2"),
                 "--ops", "rot45"]) == 1

    gt = parse_rect((out / "annotations" / ALL_ANNOTATIONS).read_text())
    det = tmp_path / "dets.txt"
    with open(det, "w") as fh:
        for r in gt:
            fh.write(f"{r.image_path}\n{len(r.faces)}\n")
            for f in r.faces:
                fh.write(f"{f.x} {f.y} {f.w} {f.h} 0.9\n")
    ev = tmp_path / "ev"
    for side in (["--image-side", "90"], ["--image-root", str(out / "images")]):
        assert main(["evaluate", "--ground-truth", str(out / "annotations" / ALL_ANNOTATIONS),
                     "--detections", str(det), "--output", str(ev)] + side) == 0
        assert (ev / "fn.csv").read_text() == "u,v\n"
        assert (ev / "pr.csv").read_text().splitlines()[1] == "0.9,6,0,0,1.0,1.0"
        assert (ev / "roc.csv").exists()
