"""Hand localization and tracking.

A boosted cascade of rectangle features (or a motion-blob fallback) seeds
the region of interest; a hue-histogram skin model turns each frame into a
probability image; CamShift keeps the window on the hand between the
periodic re-detections. The thresholded probability image is the second
(skin) mask that later gets AND-ed with the motion mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .imgcore import BinaryMask, Frame, IntegralImage, connected_components, threshold


class CascadeError(ValueError):
    """Malformed cascade model or model file."""


class EmptySkinModelError(ValueError):
    """No pixel of the sampling region passed the saturation/value gates."""


def _rnd(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Roi:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise CascadeError(f"degenerate ROI {self}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def clipped(self, width: int, height: int) -> "Roi":
        x = min(max(self.x, 0), width - 1)
        y = min(max(self.y, 0), height - 1)
        w = max(1, min(self.w, width - x))
        h = max(1, min(self.h, height - y))
        return Roi(x, y, w, h)


# ---------------------------------------------------------------------------
# Viola-Jones cascade evaluation


@dataclass(frozen=True)
class WeakClassifier:
    rects: tuple  # ((x, y, w, h, weight), ...)
    split_threshold: float
    left_value: float
    right_value: float


@dataclass(frozen=True)
class CascadeStage:
    threshold: float
    weaks: tuple


@dataclass(frozen=True)
class CascadeModel:
    window: tuple[int, int]  # (w, h)
    stages: tuple

    def __post_init__(self):
        w0, h0 = self.window
        if w0 < 1 or h0 < 1:
            raise CascadeError("cascade window must be at least 1x1")
        for stage in self.stages:
            for weak in stage.weaks:
                for (x, y, w, h, wt) in weak.rects:
                    if x < 0 or y < 0 or w < 0 or h < 0 or x + w > w0 or y + h > h0:
                        raise CascadeError(f"feature rect {(x, y, w, h)} outside window")
                    if not math.isfinite(wt):
                        raise CascadeError("non-finite feature weight")
                if not (
                    math.isfinite(weak.split_threshold)
                    and math.isfinite(weak.left_value)
                    and math.isfinite(weak.right_value)
                ):
                    raise CascadeError("non-finite weak classifier values")
            # an infinite threshold is a legal always-reject stage
            if math.isnan(stage.threshold):
                raise CascadeError("NaN stage threshold")


def _flatten_cascade(model: CascadeModel):
    rects, rweights = [], []
    weak_rect_start = [0]
    splits, lefts, rights = [], [], []
    stage_weak_start = [0]
    sthresh = []
    for stage in model.stages:
        for weak in stage.weaks:
            for (x, y, w, h, wt) in weak.rects:
                rects.append((x, y, w, h))
                rweights.append(wt)
            weak_rect_start.append(len(rects))
            splits.append(weak.split_threshold)
            lefts.append(weak.left_value)
            rights.append(weak.right_value)
        stage_weak_start.append(len(splits))
        sthresh.append(stage.threshold)
    return (
        np.array(rects, dtype=np.int32).reshape(-1, 4),
        np.array(rweights, dtype=np.float64),
        np.array(weak_rect_start, dtype=np.int32),
        np.array(splits, dtype=np.float64),
        np.array(lefts, dtype=np.float64),
        np.array(rights, dtype=np.float64),
        np.array(stage_weak_start, dtype=np.int32),
        np.array(sthresh, dtype=np.float64),
    )


def _scale_rects(rects: np.ndarray, s: float, win_w: int, win_h: int) -> np.ndarray:
    out = np.empty_like(rects)
    for i, (x, y, w, h) in enumerate(rects):
        sx, sy = _rnd(x * s), _rnd(y * s)
        sw, sh = _rnd(w * s), _rnd(h * s)
        sx = min(sx, win_w)
        sy = min(sy, win_h)
        sw = min(sw, win_w - sx)
        sh = min(sh, win_h - sy)
        out[i] = (sx, sy, sw, sh)
    return out


def _iou(a: Roi, b: Roi) -> float:
    ix = max(0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def _group_rois(rois: list[Roi], min_neighbors: int) -> list[Roi]:
    n = len(rois)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _iou(rois[i], rois[j]) > 0.3:
                parent[find(i)] = find(j)
    groups: dict[int, list[Roi]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(rois[i])
    merged = []
    for members in groups.values():
        if len(members) < min_neighbors:
            continue
        k = len(members)
        merged.append(
            Roi(
                _rnd(sum(r.x for r in members) / k),
                _rnd(sum(r.y for r in members) / k),
                max(1, _rnd(sum(r.w for r in members) / k)),
                max(1, _rnd(sum(r.h for r in members) / k)),
            )
        )
    return merged


def viola_jones_detect(
    img: Frame,
    model: CascadeModel,
    scale_factor: float = 1.1,
    min_neighbors: int = 3,
) -> list[Roi]:
    """Multi-scale sliding-window cascade evaluation.

    A window passes when every stage's weak-classifier vote sum reaches the
    stage threshold; weak votes compare the variance-normalized feature sum
    against the split threshold. With min_neighbors = 0 the raw passing
    windows are returned; otherwise windows are grouped by IoU > 0.3, small
    groups dropped, and each group averaged into one ROI.
    """
    if scale_factor <= 1.0:
        raise CascadeError("scale_factor must be > 1")
    gray = img.to_gray()
    h, w = gray.data.shape
    ii = IntegralImage.build(gray).table
    ii2 = IntegralImage.build(gray, squared=True).table
    flat = _flatten_cascade(model)
    (rects, rweights, weak_rect_start, splits, lefts, rights, stage_weak_start, sthresh) = flat

    k = kernels.active()
    w0, h0 = model.window
    hits: list[Roi] = []
    s = 1.0
    while True:
        win_w, win_h = _rnd(w0 * s), _rnd(h0 * s)
        if win_w > w or win_h > h:
            break
        step = max(1, _rnd(s / 10.0))
        scaled = _scale_rects(rects, s, win_w, win_h)
        passed = k.vj_scan_scale(
            ii, ii2, win_w, win_h, step, scaled, rweights,
            weak_rect_start, splits, lefts, rights, stage_weak_start, sthresh,
        )
        for iy, ix in zip(*np.nonzero(passed)):
            hits.append(Roi(int(ix) * step, int(iy) * step, win_w, win_h))
        s *= scale_factor
    if min_neighbors > 0:
        hits = _group_rois(hits, min_neighbors)
    hits.sort(key=lambda r: (-r.area, r.y, r.x, r.w, r.h))
    return hits


def blob_detect(foreground: BinaryMask, min_area: int = 200) -> list[Roi]:
    """Bounding boxes of foreground components with area >= min_area."""
    rois = []
    for blob in connected_components(foreground):
        if blob.area >= min_area:
            rois.append(Roi(*blob.bbox))
    return rois


# ---------------------------------------------------------------------------
# cascade persistence: whitespace-delimited text, header HCAS1

CASCADE_MAGIC = "HCAS1"


def save_cascade(model: CascadeModel, path):
    tokens: list[str] = [CASCADE_MAGIC, str(model.window[0]), str(model.window[1])]
    tokens.append(str(len(model.stages)))
    for stage in model.stages:
        tokens.append(repr(stage.threshold))
        tokens.append(str(len(stage.weaks)))
        for weak in stage.weaks:
            tokens.append(str(len(weak.rects)))
            for (x, y, w, h, wt) in weak.rects:
                tokens += [str(x), str(y), str(w), str(h), repr(float(wt))]
            tokens += [
                repr(weak.split_threshold),
                repr(weak.left_value),
                repr(weak.right_value),
            ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(tokens) + "\n")


def load_cascade(path) -> CascadeModel:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    it = iter(tokens)

    def tok():
        try:
            return next(it)
        except StopIteration:
            raise CascadeError("truncated cascade file") from None

    if tok() != CASCADE_MAGIC:
        raise CascadeError("bad cascade magic")
    w0, h0 = int(tok()), int(tok())
    stages = []
    for _ in range(int(tok())):
        thresh = float(tok())
        weaks = []
        for _ in range(int(tok())):
            rects = []
            for _ in range(int(tok())):
                rects.append((int(tok()), int(tok()), int(tok()), int(tok()), float(tok())))
            weaks.append(WeakClassifier(tuple(rects), float(tok()), float(tok()), float(tok())))
        stages.append(CascadeStage(thresh, tuple(weaks)))
    return CascadeModel((w0, h0), tuple(stages))


# ---------------------------------------------------------------------------
# skin color model and backprojection


@dataclass(frozen=True)
class SkinParams:
    sat_min: int = 30
    val_min: int = 30
    bins: int = 32
    face_core_frac: float = 0.6


@dataclass(frozen=True)
class SkinModel:
    hue_hist: np.ndarray  # normalized, sums to 1
    sat_min: int = 30
    val_min: int = 30

    @property
    def bins(self) -> int:
        return len(self.hue_hist)


def build_skin_model(frame: Frame, face: Roi, params: SkinParams | None = None) -> SkinModel:
    """Hue histogram of the central core of a face ROI.

    The ROI is shrunk to its central face_core_frac (per side) to skip hair
    and background; only pixels passing both gates are counted.
    """
    params = params or SkinParams()
    if frame.channels != 3:
        raise EmptySkinModelError("skin model needs a color frame")
    if face.x < 0 or face.y < 0 or face.x + face.w > frame.width or face.y + face.h > frame.height:
        raise CascadeError(f"face ROI {face} outside frame")
    margin = (1.0 - params.face_core_frac) / 2.0
    x0 = face.x + _rnd(margin * face.w)
    y0 = face.y + _rnd(margin * face.h)
    cw = max(1, _rnd(params.face_core_frac * face.w))
    ch = max(1, _rnd(params.face_core_frac * face.h))
    patch = np.ascontiguousarray(frame.data[y0 : y0 + ch, x0 : x0 + cw])
    bins, gate = kernels.active().hue_bins(patch, params.bins, params.sat_min, params.val_min)
    counted = bins[gate]
    if counted.size == 0:
        raise EmptySkinModelError("no pixels passed the saturation/value gates")
    hist = np.bincount(counted, minlength=params.bins).astype(np.float64)
    return SkinModel(hist / hist.sum(), params.sat_min, params.val_min)


def skin_model_from_hue(hue_deg: float, spread: int = 1, params: SkinParams | None = None) -> SkinModel:
    """Synthetic single-hue model (adjacent bins at half weight)."""
    params = params or SkinParams()
    nb = params.bins
    center = int(hue_deg * nb / 360.0) % nb
    hist = np.zeros(nb, dtype=np.float64)
    hist[center] = 1.0
    for d in range(1, spread + 1):
        hist[(center + d) % nb] = 0.5
        hist[(center - d) % nb] = 0.5
    return SkinModel(hist / hist.sum(), params.sat_min, params.val_min)


def backproject(frame: Frame, model: SkinModel) -> Frame:
    """Skin probability image: 255 * hist[bin]/max_bin on gated pixels."""
    if frame.channels != 3:
        raise EmptySkinModelError("backprojection needs a color frame")
    bins, gate = kernels.active().hue_bins(frame.data, model.bins, model.sat_min, model.val_min)
    peak = model.hue_hist.max()
    if peak <= 0:
        raise EmptySkinModelError("empty skin model")
    lut = np.clip(np.floor(255.0 * model.hue_hist / peak + 0.5), 0, 255).astype(np.uint8)
    out = np.where(gate, lut[bins], 0).astype(np.uint8)
    return Frame(out, frame.timestamp)


# ---------------------------------------------------------------------------
# CamShift tracking


@dataclass(frozen=True)
class TrackParams:
    theta_skin: int = 60
    lost_threshold: float = 5 * 255.0
    min_window: int = 8
    max_iters: int = 10


@dataclass(frozen=True)
class TrackState:
    window: Roi
    frames_since_reinit: int = 0
    reinit_period: int = 20
    lost: bool = True

    def __post_init__(self):
        if not (0 <= self.frames_since_reinit <= self.reinit_period):
            raise ValueError("frames_since_reinit out of [0, reinit_period]")


def _window_moments(data: np.ndarray, win: Roi):
    patch = data[win.y : win.y + win.h, win.x : win.x + win.w].astype(np.int64)
    m00 = int(patch.sum())
    if m00 == 0:
        return 0, 0.0, 0.0
    ys = np.arange(win.h, dtype=np.int64)
    xs = np.arange(win.w, dtype=np.int64)
    m10 = int((patch.sum(axis=0) * xs).sum())
    m01 = int((patch.sum(axis=1) * ys).sum())
    return m00, win.x + m10 / m00, win.y + m01 / m00


def _mean_shift_trace(prob: Frame, window: Roi, params: TrackParams):
    """Mean-shift iterations; returns (final center, final M00, [M00 trace])."""
    data = prob.data
    h, w = data.shape
    win = window.clipped(w, h)
    cx = win.x + win.w / 2.0
    cy = win.y + win.h / 2.0
    trace = []
    m00 = 0
    for _ in range(params.max_iters):
        m00, mx, my = _window_moments(data, win)
        trace.append(m00)
        if m00 == 0:
            return (cx, cy), 0, trace, win
        shift = math.hypot(mx - cx, my - cy)
        cx, cy = mx, my
        win = Roi(
            _rnd(cx - win.w / 2.0), _rnd(cy - win.h / 2.0), win.w, win.h
        ).clipped(w, h)
        if shift < 1.0:
            break
    return (cx, cy), m00, trace, win


def camshift_track(prob: Frame, state: TrackState, params: TrackParams | None = None) -> TrackState:
    """One CamShift update on a probability image.

    Mean-shift recenters the window on its mass centroid (up to max_iters or
    until the move is under 1 px), then the window is resized to a square of
    side 2*sqrt(M00/255) about the converged center. lost is set when the
    final window mass falls below lost_threshold; an all-zero window leaves
    the window untouched.
    """
    params = params or TrackParams()
    h, w = prob.data.shape
    (cx, cy), m00, _, win = _mean_shift_trace(prob, state.window, params)
    if m00 == 0:
        return replace(state, lost=True)
    side = _rnd(2.0 * math.sqrt(m00 / 255.0))
    side = max(params.min_window, min(side, min(w, h)))
    new_win = Roi(_rnd(cx - side / 2.0), _rnd(cy - side / 2.0), side, side).clipped(w, h)
    final_m00, _, _ = _window_moments(prob.data, new_win)
    return replace(state, window=new_win, lost=final_m00 < params.lost_threshold)


def tracker_step(
    frame: Frame,
    foreground: BinaryMask,
    state: TrackState,
    detector,
    skin: SkinModel,
    params: TrackParams | None = None,
):
    """Advance the tracker one frame; returns (new state, full-frame skin mask).

    The detector port (frame, foreground) -> [Roi] runs every reinit_period
    calls and whenever the tracker is lost; its largest ROI re-seeds the
    window. Between re-inits CamShift follows the backprojection. The mask
    is the thresholded backprojection; restriction to the hand happens at
    mask fusion.
    """
    params = params or TrackParams()
    counter = state.frames_since_reinit + 1
    window = state.window
    lost = state.lost
    if counter >= state.reinit_period or lost:
        rois = detector(frame, foreground)
        counter = 0
        if rois:
            window = rois[0].clipped(frame.width, frame.height)
            lost = False
        elif lost:
            empty = BinaryMask(np.zeros((frame.height, frame.width), dtype=bool))
            return replace(state, frames_since_reinit=counter, lost=True), empty

    prob = backproject(frame, skin)
    tracked = camshift_track(
        prob,
        replace(state, window=window, frames_since_reinit=counter, lost=lost),
        params,
    )
    mask = threshold(prob, params.theta_skin)
    return tracked, mask
