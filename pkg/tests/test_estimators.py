import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from fddb360 import FisheyeAugmenter, FisheyeSynthesizer, ImageExtender, RectFace


@pytest.mark.parametrize("est", [ImageExtender(patch_radius=3, search_window=10),
                                 FisheyeSynthesizer(n_patches=4),
                                 FisheyeAugmenter(ops=("rot90",), mode="random", random_state=1)])
def test_params_round_trip(est):
    params = est.get_params()
    copy = clone(est)
    assert copy.get_params() == params
    assert type(copy)().set_params(**params).get_params() == params


@pytest.mark.parametrize("est", [ImageExtender(), FisheyeSynthesizer(), FisheyeAugmenter()])
def test_transform_before_fit(est):
    with pytest.raises(NotFittedError):
        est.transform([])


def test_full_estimator_chain():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (24, 32, 3)).astype(np.uint8)
    pipe = make_pipeline(ImageExtender(patch_radius=2), FisheyeSynthesizer(),
                         FisheyeAugmenter(ops=("hflip", "rot180")))
    out = pipe.fit_transform([(img, [RectFace(12, 8, 8, 8)])])
    assert len(out) == 12
    assert {s.augmentation for s in out} == {"hflip", "rot180"}
    assert all(s.image.shape == (24, 24, 3) for s in out)
