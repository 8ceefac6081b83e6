import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fddb360.annotations import (Detection, EllipseFace, ImageRecord, RectFace, ellipse_to_rect,
                                 fold_from_filename, fold_split, parse_detections, parse_fddb,
                                 parse_rect, read_fold_list, write_detections,
                                 write_rect_annotations)
from fddb360.exceptions import DomainError, ParseError


def _boundary(e: EllipseFace, n=360):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    px, py = e.major_radius * np.cos(t), e.minor_radius * np.sin(t)
    c, s = math.cos(e.angle), math.sin(e.angle)
    return e.center_x + px * c - py * s, e.center_y + px * s + py * c


def test_parse_minimal():
    recs = parse_fddb("2002/08/11/big/img_591\n1\n123.5 85.5 1.26 269.6 161.7  1\n")
    assert len(recs) == 1
    assert recs[0].image_path == "2002/08/11/big/img_591"
    assert recs[0].faces == [EllipseFace(123.5, 85.5, 1.26, 269.6, 161.7)]


def test_parse_count_mismatch():
    with pytest.raises(ParseError) as err:
        parse_fddb("img\n2\n10 5 0 50 50 1\n")
    assert err.value.line_number == 3


def test_parse_empty():
    assert parse_fddb("") == []


def test_parse_bad_line_reports_line_number():
    with pytest.raises(ParseError) as err:
        parse_fddb("a\n1\n10 5 0 50 50 1\nb\n1\n10 x 0 50 50 1\n")
    assert err.value.line_number == 6


def test_parse_several_images_keeps_order():
    text = "a\n0\nb\n2\n10 5 0 1 2 1\n20 8 0.5 3 4 1\n"
    recs = parse_fddb(io.StringIO(text), fold_id=4)
    assert [r.image_path for r in recs] == ["a", "b"]
    assert [f.major_radius for f in recs[1].faces] == [10, 20]
    assert all(r.fold_id == 4 for r in recs)


def test_parse_swaps_minor_major():
    e = parse_fddb("a\n1\n5 10 0 50 50 1\n")[0].faces[0]
    assert (e.major_radius, e.minor_radius) == (10, 5)
    r = ellipse_to_rect(e)
    assert (r.w, r.h) == pytest.approx((10, 20))


def test_ellipse_axis_aligned():
    assert ellipse_to_rect(EllipseFace(50, 30, 0, 100, 100)) == RectFace(50, 70, 100, 60)


def test_ellipse_rotated_quarter_turn():
    r = ellipse_to_rect(EllipseFace(50, 30, math.pi / 2, 100, 100))
    assert (r.x, r.y, r.w, r.h) == pytest.approx((70, 50, 60, 100))


def test_ellipse_45_degrees_against_dense_sampling():
    e = EllipseFace(50, 30, math.pi / 4, 100, 100)
    r = ellipse_to_rect(e)
    assert (r.x, r.y, r.w, r.h) == pytest.approx((58.769, 58.769, 82.462, 82.462), abs=1e-3)
    xs, ys = _boundary(e, 200_000)
    assert r.x == pytest.approx(xs.min(), abs=1e-6)
    assert r.x2 == pytest.approx(xs.max(), abs=1e-6)
    assert r.y == pytest.approx(ys.min(), abs=1e-6)
    assert r.y2 == pytest.approx(ys.max(), abs=1e-6)


def test_ellipse_invalid_radii():
    with pytest.raises(DomainError):
        EllipseFace(0, 0, 0, 0, 0)
    with pytest.raises(DomainError):
        EllipseFace(5, 10, 0, 0, 0)


ellipses = st.builds(
    lambda a, ratio, t, cx, cy: EllipseFace(a, a * ratio, t, cx, cy),
    st.floats(1, 200), st.floats(0.05, 1), st.floats(-7, 7), st.floats(-500, 500),
    st.floats(-500, 500))


@given(ellipses)
def test_rect_contains_ellipse_boundary(e):
    r = ellipse_to_rect(e)
    xs, ys = _boundary(e)
    tol = 1e-9 * (1 + abs(e.center_x) + abs(e.center_y) + e.major_radius)
    assert xs.min() >= r.x - tol and xs.max() <= r.x2 + tol
    assert ys.min() >= r.y - tol and ys.max() <= r.y2 + tol


@given(ellipses)
def test_rect_invariant_under_half_turn(e):
    a = ellipse_to_rect(e)
    b = ellipse_to_rect(EllipseFace(e.major_radius, e.minor_radius, e.angle + math.pi,
                                    e.center_x, e.center_y))
    assert (a.x, a.y, a.w, a.h) == pytest.approx((b.x, b.y, b.w, b.h), abs=1e-9)


def test_write_rect_zero_faces():
    buf = io.StringIO()
    write_rect_annotations([ImageRecord("img_p0", [])], buf)
    assert buf.getvalue() == "img_p0\n0\n"


def test_write_rect_two_faces():
    buf = io.StringIO()
    write_rect_annotations([ImageRecord("img_p1", [RectFace(1, 2, 3, 4), RectFace(5.125, 6, 7, 8)])], buf)
    assert buf.getvalue() == "img_p1\n2\n1.00 2.00 3.00 4.00\n5.12 6.00 7.00 8.00\n"


rects = st.builds(RectFace, st.floats(-1e4, 1e4), st.floats(-1e4, 1e4),
                  st.floats(0.01, 1e4), st.floats(0.01, 1e4))


@given(st.lists(st.lists(rects, max_size=4), max_size=5))
def test_rect_round_trip(faces_per_image):
    recs = [ImageRecord(f"dir/img_{i}", faces) for i, faces in enumerate(faces_per_image)]
    buf = io.StringIO()
    write_rect_annotations(recs, buf)
    back = parse_rect(buf.getvalue())
    assert [r.image_path for r in back] == [r.image_path for r in recs]
    for a, b in zip(recs, back):
        assert len(a.faces) == len(b.faces)
        for fa, fb in zip(a.faces, b.faces):
            for va, vb in zip((fa.x, fa.y, fa.w, fa.h), (fb.x, fb.y, fb.w, fb.h)):
                assert abs(va - vb) <= 0.005 + 1e-9


def test_parse_rect_rejects_negative_width():
    with pytest.raises(ParseError) as err:
        parse_rect("a\n1\n1 2 -3 4\n")
    assert err.value.line_number == 3


def test_parse_rect_accepts_blank_trailing_line():
    assert len(parse_rect("a\n1\n1 2 3 4\n\n\n")) == 1


def test_detection_round_trip():
    dets = [Detection("a", RectFace(1, 2, 3, 4), 0.9), Detection("a", RectFace(5, 6, 7, 8), 0.25),
            Detection("b", RectFace(0, 0, 1, 1), -1.5)]
    buf = io.StringIO()
    write_detections(dets, buf)
    assert parse_detections(buf.getvalue()) == dets


def test_fold_helpers():
    assert fold_from_filename("FDDB-fold-07-ellipseList.txt") == 7
    assert fold_from_filename("whatever.txt") is None
    assert read_fold_list("a/b\n\nc/d\n") == ["a/b", "c/d"]


def _records():
    return [ImageRecord(f"img{f}_{i}", [], f) for f in range(1, 11) for i in range(2)]


def test_fold_split_table():
    recs = _records()
    splits = fold_split(recs)
    assert len(splits) == 5
    r3 = next(r for r in recs if r.fold_id == 3)
    for k, (train, test) in enumerate(splits, start=1):
        assert (r3 in test) == (k == 2)
        assert (r3 in train) == (k != 2)
    assert sorted({r.fold_id for r in splits[0][1]}) == [1, 2]
    assert sorted({r.fold_id for r in splits[0][0]}) == list(range(3, 11))


def test_fold_split_partition():
    recs = _records()
    splits = fold_split(recs)
    for r in recs:
        assert sum(r in test for _, test in splits) == 1
        assert sum(r in train for train, _ in splits) == 4
    for train, test in splits:
        assert sorted(map(id, train + test)) == sorted(map(id, recs))


def test_fold_split_missing_fold():
    recs = [r for r in _records() if r.fold_id != 9]
    with pytest.raises(DomainError):
        fold_split(recs)
