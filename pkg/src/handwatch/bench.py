"""Benchmark comparing the compiled kernel core against the NumPy fallback.

Per-kernel timings at a given frame size plus the end-to-end per-frame
pipeline rate (detector re-init frames excluded, matching how the
throughput requirement is stated).
"""

from __future__ import annotations

import time

import numpy as np

from . import background, cpdh, kernels, pipeline, skintrack, synth
from .imgcore import Frame, gaussian_kernel


def _time_op(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0  # ms


def kernel_benchmarks(width=320, height=240, repeats=5):
    """Per-kernel best-of-N milliseconds for every available backend."""
    rng = np.random.default_rng(7)
    rgb = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    gray = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    mask = rng.random((height, width)) < 0.2
    weights = gaussian_kernel(1.4)
    rows = []
    for name in sorted(kernels.available()):
        k = kernels.available()[name]
        mag_gx_gy = k.sobel_u8(gray)
        mag = np.sqrt(mag_gx_gy[0].astype(np.float64) ** 2 + mag_gx_gy[1].astype(np.float64) ** 2)
        ops = {
            "rgb_to_ycbcr": lambda: k.rgb_to_ycbcr(rgb),
            "hue_bins": lambda: k.hue_bins(rgb, 32, 30, 30),
            "gaussian_blur": lambda: k.gaussian_blur_u8(gray, weights),
            "sobel": lambda: k.sobel_u8(gray),
            "nms": lambda: k.nms(mag, mag_gx_gy[0], mag_gx_gy[1]),
            "erode_r1": lambda: k.erode(mask, 1),
            "dilate_r1": lambda: k.dilate(mask, 1),
            "label_components": lambda: k.label_components(mask),
            "integral": lambda: k.integral_u8(gray),
        }
        for op, fn in ops.items():
            rows.append((name, op, _time_op(fn, repeats)))
    return rows


def _scenario_fixture(width=320, height=240, frames=60, train=30):
    spec = synth.ScenarioSpec(
        duration=frames, width=width, height=height, fps=10.0,
        background="flat", noise_amp=4,
        events=[synth.ActorEvent(5, frames - 1, cpdh.PALM,
                                 ("static", width * 0.5, height * 0.55), 1.0, 20.0)],
    )
    train_frames = [
        Frame(synth.render_scenario_frame(
            synth.ScenarioSpec(duration=train, width=width, height=height,
                               fps=10.0, background="flat", noise_amp=4),
            99, t)[0], t / 10.0)
        for t in range(train)
    ]
    run_frames = [
        Frame(synth.render_scenario_frame(spec, 99, t)[0], t / 10.0)
        for t in range(frames)
    ]
    return train_frames, run_frames


def _build_db(n_entries=20):
    masks = []
    rng = np.random.default_rng(11)
    for i in range(n_entries):
        shape = cpdh.PALM if i % 2 == 0 else cpdh.FIST
        scale = 0.8 + 0.4 * (i / max(1, n_entries - 1))
        m = synth.render_hand(shape, scale, (160, 130), (320, 240), rng)
        from .imgcore import BinaryMask

        masks.append((BinaryMask(m), shape))
    return cpdh.build_gesture_db(masks, cpdh.CpdhParams())


def pipeline_benchmark(width=320, height=240, frames=60):
    """End-to-end frames/s per backend, detector re-init frames excluded."""
    train_frames, run_frames = _scenario_fixture(width, height, frames)
    db = _build_db()
    results = []
    for name in sorted(kernels.available()):
        with kernels.using(name):
            model = background.train_codebook(train_frames, background.CodebookParams())
            session = pipeline.Session(
                model, db, skintrack.skin_model_from_hue(20.0),
                pipeline.PipelineConfig(window_w=6.0, grace=2.0, red_threshold=5.0),
            )
            hot_time = 0.0
            hot_frames = 0
            for f in run_frames:
                calls_before = session.detector_calls
                t0 = time.perf_counter()
                session.process_frame(f)
                dt = time.perf_counter() - t0
                if session.detector_calls == calls_before:
                    hot_time += dt
                    hot_frames += 1
            fps = hot_frames / hot_time if hot_time > 0 else float("inf")
            results.append((name, fps, hot_frames))
    return results


def format_report(width=320, height=240, frames=60, repeats=5) -> str:
    lines = [f"kernel benchmarks at {width}x{height} (best of {repeats}, ms)"]
    rows = kernel_benchmarks(width, height, repeats)
    ops = sorted({op for _, op, _ in rows})
    names = sorted({n for n, _, _ in rows})
    by = {(n, op): ms for n, op, ms in rows}
    header = "op".ljust(18) + "".join(n.rjust(14) for n in names)
    lines.append(header)
    for op in ops:
        lines.append(op.ljust(18) + "".join(f"{by[(n, op)]:14.3f}" for n in names))
    lines.append("")
    lines.append(f"pipeline throughput at {width}x{height} ({frames} frames, re-init excluded)")
    for name, fps, hot in pipeline_benchmark(width, height, frames):
        lines.append(f"  {name:10s} {fps:8.1f} frames/s over {hot} hot frames")
    return "\n".join(lines)
