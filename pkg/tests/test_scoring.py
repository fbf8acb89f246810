import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.geometry import ArtifactClass as C, BBox, Detection
from artifact.scoring import Disposition, QualityConfig, quality_score, triage
from conftest import boxes, random_box

# [PAPER] class weights
WC = {C.misc_artifact: 0.50, C.specularity: 0.20, C.saturation: 0.10, C.blur: 0.05,
      C.contrast: 0.05, C.bubbles: 0.10}


def oracle_qs(dets):
    """Independent re-summation with its own weight tables and grid lookup."""
    lam = (1.0, 1.0) if len(dets) < 5 else (0.5, 0.5)
    total = 0.0
    for d in dets:
        cx, cy = d.box.x + d.box.w / 2, d.box.y + d.box.h / 2
        central = sum(1 / 3 <= v < 2 / 3 for v in (cx, cy))
        wl = [0.125, 0.25, 0.5][central]
        total += lam[0] * WC[d.label] * d.box.w * d.box.h + lam[1] * WC[d.label] * wl
    return max(0.0, 1.0 - total)


def central(side):
    return BBox((1 - side) / 2, (1 - side) / 2, side, side)


class TestHandCases:
    def test_no_detections(self):
        assert quality_score([]).qs == 1.0

    def test_full_frame_misc(self):
        # [DERIVED] 1 - (0.5*1 + 0.5*0.5)
        assert quality_score([Detection(C.misc_artifact, BBox(0, 0, 1, 1))]).qs == pytest.approx(0.25, abs=1e-9)

    def test_six_specularities(self):
        # [DERIVED] six boxes switch to lambda 0.5; 0.06 per box
        side = np.sqrt(0.1)
        dets = [Detection(C.specularity, central(side))] * 6
        assert quality_score(dets).qs == pytest.approx(0.64, abs=1e-9)

    def test_clamped_at_zero(self):
        dets = [Detection(C.misc_artifact, BBox(0, 0, 1, 1))] * 3
        assert quality_score(dets).qs == 0.0

    def test_contributions_resum(self):
        rep = quality_score([Detection(C.blur, BBox(0, 0, .3, .3)),
                             Detection(C.bubbles, central(.2))])
        assert rep.qs == pytest.approx(1 - rep.penalty, abs=1e-15)
        assert len(rep.contributions) == 2


class TestTriage:
    @pytest.mark.parametrize("qs,expected", [
        (0.40, Disposition.discard), (0.70, Disposition.restore), (0.96, Disposition.keep),
        (0.5, Disposition.restore), (0.95, Disposition.restore), (1.0, Disposition.keep),
        (0.0, Disposition.discard)])
    def test_thresholds(self, qs, expected):
        assert triage(qs) is expected

    def test_report_disposition_consistent(self):
        rep = quality_score([Detection(C.misc_artifact, BBox(0, 0, 1, 1))])
        assert rep.disposition is Disposition.discard


class TestProperties:
    def test_randomized_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(0, 9))
            dets = [Detection(C(int(rng.integers(0, 6))), random_box(rng)) for _ in range(n)]
            assert quality_score(dets).qs == pytest.approx(oracle_qs(dets), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 5), boxes()), max_size=8), st.integers(0, 5), boxes())
    def test_adding_detection_never_raises_qs_within_lambda_regime(self, items, label, box):
        if len(items) == 4:
            items = items[:3]
        dets = [Detection(C(c), b) for c, b in items]
        before = quality_score(dets).qs
        after = quality_score(dets + [Detection(C(label), box)]).qs
        assert 0.0 <= after <= before + 1e-12 <= 1.0 + 1e-12

    def test_fifth_box_can_raise_qs(self):
        # lambda drops from 1 to 0.5 at the cutoff, so monotonicity breaks there
        four = [Detection(C.blur, BBox(0, 0, 1, 1))] * 4
        assert quality_score(four).qs == pytest.approx(0.7, abs=1e-12)
        assert quality_score(four + four[:1]).qs == pytest.approx(0.8125, abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 5), boxes()), min_size=5, max_size=10))
    def test_halving_lambdas_halves_penalty(self, items):
        dets = [Detection(C(c), b) for c, b in items]
        full = quality_score(dets).penalty
        half = quality_score(dets, QualityConfig(lambda_area=0.25, lambda_location=0.25)).penalty
        assert half == pytest.approx(full / 2, rel=1e-12)

    def test_contrast_beats_misc_plus_specularity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            box = central(rng.uniform(0.4, 1.0))
            extra = Detection(C.specularity, random_box(rng, 0.01, 0.3))
            contrast = quality_score([Detection(C.contrast, box)]).qs
            misc = quality_score([Detection(C.misc_artifact, box), extra]).qs
            assert contrast > misc


class TestConfig:
    def test_round_trip(self):
        cfg = QualityConfig(lambda_area=0.3, discard_below=0.4)
        again = QualityConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_rejects_bad_thresholds(self):
        with pytest.raises(ValueError):
            QualityConfig(discard_below=0.96, keep_above=0.95)

    def test_rejects_negative_weight(self):
        w = {c.name: 0.1 for c in C}
        w["blur"] = -0.1
        with pytest.raises(ValueError):
            QualityConfig(class_weights=w)

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            QualityConfig.from_dict({"lambda": 1})

    def test_rejects_unknown_class(self):
        class Fake:
            label = 9
            box = BBox(0, 0, .1, .1)
        with pytest.raises(ValueError):
            quality_score([Fake()])
