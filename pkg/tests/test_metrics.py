import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inpaintloc.metrics import EvalReport, config_fingerprint, pixel_auc


def auc_threshold_sweep(scores, labels):
    """Brute-force oracle: sweep all distinct thresholds, integrate the ROC
    by trapezoid."""
    scores = scores.ravel()
    labels = labels.ravel().astype(bool)
    n_pos = labels.sum()
    n_neg = labels.size - n_pos
    thresholds = np.concatenate([[np.inf], np.unique(scores)[::-1], [-np.inf]])
    tpr = [(scores >= th)[labels].sum() / n_pos for th in thresholds]
    fpr = [(scores >= th)[~labels].sum() / n_neg for th in thresholds]
    return float(np.trapezoid(tpr, fpr))


class TestPixelAuc:
    def test_perfect(self):
        gt = np.zeros((8, 8))
        gt[2:5, 2:5] = 1
        assert pixel_auc(gt, gt) == 1.0

    def test_all_ties(self):
        gt = np.zeros((8, 8))
        gt[0, 0] = 1
        assert pixel_auc(np.full((8, 8), 0.5), gt) == 0.5

    def test_constant_gt_undefined(self):
        assert pixel_auc(np.random.default_rng(0).random((8, 8)), np.zeros((8, 8))) is None
        assert pixel_auc(np.random.default_rng(0).random((8, 8)), np.ones((8, 8))) is None

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_threshold_sweep(self, seed):
        rng = np.random.default_rng(seed)
        scores = np.round(rng.random((16, 16)), 2)  # rounding forces ties
        gt = (rng.random((16, 16)) > 0.5).astype(float)
        if gt.min() == gt.max():
            return
        assert abs(pixel_auc(scores, gt) - auc_threshold_sweep(scores, gt)) < 1e-9

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.random((12, 12))
        gt = (rng.random((12, 12)) > 0.6).astype(float)
        if gt.min() == gt.max():
            return
        a = pixel_auc(scores, gt)
        b = pixel_auc(np.exp(3 * scores) + 7, gt)
        assert abs(a - b) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            pixel_auc(np.zeros((4, 4)), np.zeros((5, 5)))


class TestEvalReport:
    def test_mean_excludes_undefined(self):
        r = EvalReport(per_image_auc=[0.9, None, 0.7], fingerprint="abc")
        assert r.n_excluded == 1
        assert abs(r.mean_auc - 0.8) < 1e-12
        d = r.to_dict()
        assert d["n_excluded"] == 1 and d["fingerprint"] == "abc"

    def test_fingerprint_stable(self):
        a = config_fingerprint({"x": 1, "y": [2, 3]})
        b = config_fingerprint({"y": [2, 3], "x": 1})
        assert a == b
        assert a != config_fingerprint({"x": 2, "y": [2, 3]})
