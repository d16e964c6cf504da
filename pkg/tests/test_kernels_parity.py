"""Bit-exact equivalence between the compiled kernels and the NumPy fallback.

The whole suite runs on whichever backend is selected; these tests pin the
two implementations to each other on randomized inputs.
"""

import numpy as np
import pytest

from handwatch import kernels
from handwatch.imgcore import blobs_from_labels, gaussian_kernel

pytestmark = pytest.mark.skipif(
    "compiled" not in kernels.available(),
    reason="compiled kernel extension not built",
)


@pytest.fixture
def both():
    return kernels.available()["compiled"], kernels.available()["fallback"]


def rgb_images(rng, n=4, h=37, w=29):
    out = [rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8) for _ in range(n - 1)]
    flat = np.full((h, w, 3), 127, dtype=np.uint8)  # exercise achromatic paths
    return out + [flat]


def test_rgb_to_ycbcr_identical(rng, both):
    c, f = both
    for img in rgb_images(rng):
        assert (c.rgb_to_ycbcr(img) == f.rgb_to_ycbcr(img)).all()


def test_hue_bins_identical(rng, both):
    c, f = both
    for img in rgb_images(rng):
        for sat_min, val_min in ((30, 30), (0, 0), (200, 10)):
            cb, cg = c.hue_bins(img, 32, sat_min, val_min)
            fb, fg = f.hue_bins(img, 32, sat_min, val_min)
            assert (cb == fb).all()
            assert (cg == fg).all()


def test_integral_identical(rng, both):
    c, f = both
    img = rng.integers(0, 256, size=(23, 31), dtype=np.uint8)
    for sq in (False, True):
        assert (c.integral_u8(img, sq) == f.integral_u8(img, sq)).all()


def test_gaussian_blur_identical(rng, both):
    c, f = both
    img = rng.integers(0, 256, size=(40, 33), dtype=np.uint8)
    for sigma in (0.6, 1.0, 1.4, 2.5):
        w = gaussian_kernel(sigma)
        assert (c.gaussian_blur_u8(img, w) == f.gaussian_blur_u8(img, w)).all()


def test_sobel_nms_hysteresis_identical(rng, both):
    c, f = both
    for _ in range(3):
        img = rng.integers(0, 256, size=(31, 27), dtype=np.uint8)
        cgx, cgy = c.sobel_u8(img)
        fgx, fgy = f.sobel_u8(img)
        assert (cgx == fgx).all() and (cgy == fgy).all()
        mag = np.sqrt(cgx.astype(np.float64) ** 2 + cgy.astype(np.float64) ** 2)
        cn = c.nms(mag, cgx, cgy)
        fn = f.nms(mag, fgx, fgy)
        assert (cn == fn).all()
        t_high = 0.2 * mag.max()
        ch = c.hysteresis(cn, 0.5 * t_high, t_high)
        fh = f.hysteresis(fn, 0.5 * t_high, t_high)
        assert (ch == fh).all()


def test_morphology_identical(rng, both):
    c, f = both
    for _ in range(4):
        mask = rng.random((26, 34)) < 0.45
        for r in (1, 2, 3):
            assert (c.erode(mask, r) == f.erode(mask, r)).all()
            assert (c.dilate(mask, r) == f.dilate(mask, r)).all()


def test_components_identical_as_blobs(rng, both):
    c, f = both
    for _ in range(4):
        mask = rng.random((24, 30)) < 0.4
        cl, cn = c.label_components(mask)
        fl, fn = f.label_components(mask)
        assert cn == fn
        cb = [(b.area, b.bbox, b.centroid) for b in blobs_from_labels(cl, cn)]
        fb = [(b.area, b.bbox, b.centroid) for b in blobs_from_labels(fl, fn)]
        assert cb == fb
        # label partitions agree pixel-wise (up to renumbering)
        pairs = {(int(a), int(b)) for a, b in zip(cl.ravel(), fl.ravel())}
        assert len({a for a, _ in pairs}) == len(pairs)


def test_codebook_identical(rng, both):
    c, f = both
    stack = np.clip(
        118 + rng.integers(-28, 29, size=(25, 9, 11, 3)), 0, 255
    ).astype(np.uint8)
    got_c = c.codebook_train(stack, 9.0, 0.7, 1.3)
    got_f = f.codebook_train(stack, 9.0, 0.7, 1.3)
    for a, b in zip(got_c, got_f):
        assert a.shape == b.shape
        assert (a == b).all()
    frame = np.clip(118 + rng.integers(-40, 41, size=(9, 11, 3)), 0, 255).astype(np.uint8)
    mc = c.codebook_extract(got_c[0], got_c[1], got_c[2], got_c[3], got_c[8], frame, 11.0, 0.7, 1.3)
    mf = f.codebook_extract(got_f[0], got_f[1], got_f[2], got_f[3], got_f[8], frame, 11.0, 0.7, 1.3)
    assert (mc == mf).all()


def test_vj_scan_identical(rng, both):
    c, f = both
    img = rng.integers(0, 256, size=(40, 48), dtype=np.uint8)
    ii_c = c.integral_u8(img)
    ii2_c = c.integral_u8(img, True)
    rects = np.array([[0, 0, 4, 8], [4, 0, 4, 8], [0, 0, 8, 4]], dtype=np.int32)
    rweights = np.array([-1.0, 1.0, 0.25])
    weak_rect_start = np.array([0, 2, 3], dtype=np.int32)
    splits = np.array([0.1, -0.05])
    lefts = np.array([-1.0, 0.5])
    rights = np.array([1.0, -0.25])
    stage_weak_start = np.array([0, 1, 2], dtype=np.int32)
    sthresh = np.array([-0.5, 0.0])
    args = (8, 8, 2, rects, rweights, weak_rect_start, splits, lefts, rights,
            stage_weak_start, sthresh)
    got_c = c.vj_scan_scale(ii_c, ii2_c, *args)
    got_f = f.vj_scan_scale(ii_c, ii2_c, *args)
    assert got_c.shape == got_f.shape
    assert (got_c == got_f).all()


def test_full_pipeline_stream_identical(rng):
    """End-to-end: both backends produce byte-identical event streams."""
    from handwatch import synth
    from handwatch.background import CodebookParams, train_codebook
    from handwatch.cpdh import CpdhParams, PALM, FIST, build_gesture_db
    from handwatch.imgcore import BinaryMask, Frame
    from handwatch.pipeline import PipelineConfig, Session, run_session
    from handwatch.skintrack import skin_model_from_hue

    spec_train = synth.ScenarioSpec(duration=12, width=96, height=72, fps=10.0,
                                    background="textured", noise_amp=4)
    ev = synth.ActorEvent(2, 17, PALM, ("static", 48, 34), 0.6, 20.0)
    spec_run = synth.ScenarioSpec(duration=18, width=96, height=72, fps=10.0,
                                  background="textured", noise_amp=4, events=[ev])
    train_frames = [Frame(synth.render_scenario_frame(spec_train, 9, t)[0], t / 10.0)
                    for t in range(12)]
    run_frames = [Frame(synth.render_scenario_frame(spec_run, 9, t)[0], t / 10.0)
                  for t in range(18)]
    masks = []
    mask_rng = np.random.default_rng(4)
    for i in range(8):
        shape = PALM if i % 2 == 0 else FIST
        masks.append((BinaryMask(synth.render_hand(shape, 0.5 + 0.04 * i, (48, 36), (96, 72), mask_rng)), shape))

    streams = {}
    for name in ("compiled", "fallback"):
        with kernels.using(name):
            model = train_codebook(train_frames, CodebookParams())
            db = build_gesture_db(masks, CpdhParams())
            session = Session(model, db, skin_model_from_hue(20.0),
                              PipelineConfig(window_w=4.0, red_threshold=5.0,
                                             grace=2.0, min_area=60))
            lines = []
            run_session(session, run_frames, lines.append)
            streams[name] = "".join(lines)
    assert streams["compiled"] == streams["fallback"]
