import numpy as np
import pytest

from artifact.config import RunConfig
from artifact.degradation import DegradationSpec, corrupt, random_trajectory, trajectory_kernel
from artifact.geometry import ArtifactClass as C, BBox, Detection, Frame, boxes_to_mask
from artifact.metrics import psnr
from artifact.pipeline import (PlanStage, RestorationPlan, Stage, baseline_retention,
                               plan_restoration, process_video, restore_frame)
from artifact.scoring import Disposition, QualityConfig
from artifact.simulate import simulate_corpus
from artifact.synthetic import smooth_texture_composite

FULL = BBox(0, 0, 1, 1)


class TestPlan:
    def test_blur_only(self):
        assert plan_restoration([Detection(C.blur, FULL)], (64, 64)).names == ["deblur"]

    def test_specularity_and_saturation(self):
        dets = [Detection(C.specularity, BBox(.1, .1, .1, .1)), Detection(C.saturation, FULL)]
        plan = plan_restoration(dets, (64, 64))
        assert plan.names == ["exposure_crt", "inpaint"]
        assert plan.stages[0].direction == "saturation"

    def test_direction_by_majority_area(self):
        dets = [Detection(C.saturation, BBox(0, 0, .2, .2)), Detection(C.contrast, BBox(0, 0, .5, .5))]
        assert plan_restoration(dets, (64, 64)).stages[0].direction == "low_contrast"

    def test_empty(self):
        assert plan_restoration([], (64, 64)).stages == ()

    def test_all_stages_ordered(self):
        dets = [Detection(C.bubbles, BBox(.1, .1, .1, .1)), Detection(C.contrast, FULL),
                Detection(C.blur, FULL)]
        assert plan_restoration(dets, (64, 64)).names == ["deblur", "exposure_crt", "inpaint"]

    def test_mask_is_dilated_boxes(self):
        det = Detection(C.misc_artifact, BBox(.5, .5, .1, .1))
        plan = plan_restoration([det], (512, 512))
        assert np.array_equal(plan.stages[0].mask, boxes_to_mask([det], (512, 512), 4))
        small = plan_restoration([det], (128, 128))
        assert np.array_equal(small.stages[0].mask, boxes_to_mask([det], (128, 128), 1))

    def test_invalid_plans(self):
        with pytest.raises(ValueError):
            RestorationPlan((PlanStage(Stage.inpaint, mask=np.zeros((2, 2), bool)), PlanStage(Stage.deblur)))
        with pytest.raises(ValueError):
            RestorationPlan((PlanStage(Stage.inpaint),))
        with pytest.raises(ValueError):
            RestorationPlan((PlanStage(Stage.deblur), PlanStage(Stage.deblur)))


class TestRestoreFrame:
    def test_empty_plan_identity(self, textured128):
        f = Frame(textured128)
        out, log = restore_frame(f, RestorationPlan())
        assert out is f and log.stages == []

    def test_inpaint_scope(self, textured128):
        dets = [Detection(C.specularity, BBox(.2, .3, .1, .1)), Detection(C.bubbles, BBox(.6, .6, .15, .1))]
        bad = textured128.copy()
        plan = plan_restoration(dets, (128, 128))
        mask = plan.stages[0].mask
        bad[mask] = 1.0
        out, log = restore_frame(Frame(bad), plan)
        assert log.stages == ["inpaint"]
        assert np.array_equal(out.pixels[~mask], bad[~mask])
        assert psnr(textured128, out) > psnr(textured128, bad)

    def test_patch_method_scope(self, textured128):
        det = [Detection(C.misc_artifact, BBox(.4, .4, .1, .1))]
        cfg = RunConfig(inpaint_method="patch")
        plan = plan_restoration(det, (128, 128), cfg)
        out, _ = restore_frame(Frame(textured128), plan, cfg)
        mask = plan.stages[0].mask
        assert np.array_equal(out.pixels[~mask], textured128[~mask])

    def test_blur_round_trip_known_psf(self):
        clean = smooth_texture_composite(96, seed=3)
        psf = trajectory_kernel(random_trajectory(3, 9), 9)
        bad = corrupt(clean, DegradationSpec(psf=psf, noise_sigma=0.003), 3)
        out, log = restore_frame(Frame(bad), plan_restoration([Detection(C.blur, FULL)], (96, 96)), psf=psf)
        assert log.stages == ["deblur"] and psnr(clean, out) > psnr(clean, bad)

    def test_stage_failure_discards(self, textured128):
        plan = RestorationPlan((PlanStage(Stage.inpaint, mask=np.ones((128, 128), bool)),))
        out, log = restore_frame(Frame(textured128), plan)
        assert out is None and log.disposition is Disposition.discard
        assert log.reason.startswith("inpaint failed")

    def test_degenerate_exposure_warns_not_fails(self):
        plan = plan_restoration([Detection(C.saturation, FULL)], (16, 16))
        out, log = restore_frame(Frame(np.ones((16, 16, 3))), plan)
        assert out is not None and log.warnings


def small_video(n=20, seed=2):
    corpus = simulate_corpus(n, size=64, seed=seed)
    frames = {c.frame_id: c.corrupted for c in corpus}
    side = {c.frame_id: c.detections for c in corpus}
    return corpus, frames, side


class TestProcessVideo:
    def test_all_clean_kept(self, textured128):
        frames = {str(i): Frame(textured128, index=i) for i in range(5)}
        rep, logs, outs = process_video(frames, {})
        assert rep.kept == 5 and rep.restored == 0 and rep.retained_fraction == 1.0
        assert all(o is frames[str(i)] for i, o in enumerate(outs))

    def test_partition_and_order(self):
        corpus, frames, side = small_video()
        rep, logs, outs = process_video(frames, side)
        assert rep.kept + rep.restored + rep.discarded == rep.total == 20
        assert [l.frame_id for l in logs] == list(frames)
        assert sum(rep.to_dict()["fractions"].values()) == pytest.approx(1.0)

    def test_retention_at_least_baseline(self):
        corpus, frames, side = small_video(30, seed=4)
        rep, _, _ = process_video(frames, side)
        assert rep.retained_fraction >= rep.baseline_retained_fraction
        assert rep.baseline_retained_fraction == baseline_retention(side, list(frames))

    def test_raising_discard_threshold_never_retains_more(self):
        corpus, frames, side = small_video(20, seed=5)
        retained = []
        for thr in (0.2, 0.5, 0.8, 0.95):
            rep, _, _ = process_video(frames, side, RunConfig(quality=QualityConfig(discard_below=thr)))
            retained.append(rep.kept + rep.restored)
        assert all(a >= b for a, b in zip(retained, retained[1:]))

    def test_keep_path_is_untouched(self):
        corpus, frames, side = small_video()
        _, logs, outs = process_video(frames, side)
        for fid, log, out in zip(frames, logs, outs):
            if log.disposition is Disposition.keep:
                assert out is frames[fid]

    def test_low_confidence_ignored(self, textured128):
        det = [Detection(C.misc_artifact, FULL, 0.2)]
        rep, logs, _ = process_video({"a": Frame(textured128)}, {"a": det})
        assert rep.kept == 1 and logs[0].qs == 1.0 and rep.class_histogram == {}

    def test_unreadable_frame(self, textured128):
        def broken():
            raise OSError("truncated file")
        rep, logs, outs = process_video({"a": broken, "b": Frame(textured128)}, {})
        assert rep.discarded == 1 and logs[0].reason.startswith("io:") and outs[0] is None
        assert rep.baseline_kept == 1

    def test_threads_match_serial(self):
        corpus, frames, side = small_video(12, seed=6)
        r1, l1, o1 = process_video(frames, side, threads=1)
        r4, l4, o4 = process_video(frames, side, threads=4)
        assert r1.to_dict() == r4.to_dict()
        assert [l.to_row() for l in l1] == [l.to_row() for l in l4]
        for a, b in zip(o1, o4):
            assert (a is None and b is None) or np.array_equal(a.pixels, b.pixels)

    def test_ground_truth_logs_and_rescore(self):
        corpus, frames, side = small_video(10, seed=7)
        gt = {c.frame_id: c.clean for c in corpus}
        psfs = {c.frame_id: c.psf for c in corpus if c.psf is not None}
        _, logs, _ = process_video(frames, side, ground_truth=gt, psfs=psfs, rescore=lambda f: [])
        for log in logs:
            assert log.psnr_pre is not None
            if log.disposition is Disposition.restore:
                assert log.psnr_post is not None and log.qs_post == 1.0

    def test_empty_video(self):
        rep, logs, outs = process_video({}, {})
        assert rep.total == 0 and rep.retained_fraction == 0.0 and logs == [] and outs == []


class TestCorpus:
    def test_label_proportions(self):
        corpus = simulate_corpus(50, size=48, seed=0)
        labels = [c.label for c in corpus]
        assert labels.count("clean") == 30 and labels.count("mild") == 15 and labels.count("severe") == 5

    def test_deterministic(self):
        a, b = simulate_corpus(6, size=48, seed=3), simulate_corpus(6, size=48, seed=3)
        assert all(np.array_equal(x.corrupted.pixels, y.corrupted.pixels) for x, y in zip(a, b))

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            simulate_corpus(10, fractions=(0.5, 0.5, 0.5))
