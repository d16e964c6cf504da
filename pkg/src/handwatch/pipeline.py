"""Per-frame orchestration and the participation indicator.

Each frame: motion mask from the codebook, skin mask from the tracker,
AND-fusion, morphological cleanup, CPDH classification, then debounced
palm runs become hand-raise events feeding a windowed events-per-minute
curve with a green/red state and hysteresis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import background, cpdh, skintrack
from .imgcore import (
    BinaryMask,
    Frame,
    ParameterError,
    connected_components,
    gaussian_blur,
    morph,
    threshold,
)

GESTURE_NONE = "none"
GREEN = "green"
RED = "red"


@dataclass(frozen=True)
class GestureEvent:
    t: float
    learner: str
    gesture: str  # palm | fist | none
    distance: float | None = None

    def __post_init__(self):
        if (self.gesture == GESTURE_NONE) != (self.distance is None):
            raise ParameterError("distance must be present iff a gesture was recognized")


@dataclass(frozen=True)
class RaiseEvent:
    t_start: float
    t_end: float
    learner: str

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ParameterError("raise event ends before it starts")


@dataclass
class PipelineConfig:
    debounce_k: int = 5
    window_w: float = 300.0  # seconds
    red_threshold: float = 0.5  # events per minute
    grace: float = 120.0  # seconds
    max_distance: float | None = None  # None: 95th pct of intra-class db distances
    min_area: int = 300
    indicator_interval: float = 1.0
    codebook: background.CodebookParams = field(default_factory=background.CodebookParams)
    skin: skintrack.SkinParams = field(default_factory=skintrack.SkinParams)
    track: skintrack.TrackParams = field(default_factory=skintrack.TrackParams)
    cpdh: cpdh.CpdhParams = field(default_factory=cpdh.CpdhParams)
    reinit_period: int = 20

    def __post_init__(self):
        if self.debounce_k < 1 or self.window_w <= 0 or self.grace <= 0:
            raise ParameterError("debounce_k, window_w, grace must be positive")
        if self.red_threshold <= 0 or self.indicator_interval <= 0:
            raise ParameterError("red_threshold and indicator_interval must be positive")
        if self.max_distance is not None and self.max_distance <= 0:
            raise ParameterError("max_distance must be positive")


def fuse_masks(motion: BinaryMask, skin: BinaryMask) -> BinaryMask:
    """Pixel-wise AND; keeps moving skin, drops the static face."""
    if motion.bits.shape != skin.bits.shape:
        raise ParameterError("mask dimensions differ")
    return BinaryMask(motion.bits & skin.bits)


def postprocess_mask(mask: BinaryMask) -> BinaryMask:
    """open(1), close(1), then Gaussian blur of the {0,255} render and re-threshold."""
    m = morph(mask, "open", 1)
    m = morph(m, "close", 1)
    blurred = gaussian_blur(m.to_gray_frame(), 1.0)
    return threshold(blurred, 128)


def default_max_distance(db: cpdh.GestureDb, percentile: float = 95.0) -> float:
    """95th percentile of intra-class pairwise descriptor distances."""
    dists = []
    desc = db.descriptors.astype(np.float64)
    for label in cpdh.LABELS:
        idx = [i for i, l in enumerate(db.labels) if l == label]
        sub = desc[idx]
        if len(sub) < 2:
            continue
        diff = sub[:, np.newaxis, :] - sub[np.newaxis, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        iu = np.triu_indices(len(sub), k=1)
        dists.append(d[iu])
    if not dists:
        return 100.0
    return float(np.percentile(np.concatenate(dists), percentile))


# ---------------------------------------------------------------------------
# raise-event detection (batch and incremental forms must agree)


def detect_raise_events(events: list[GestureEvent], debounce_k: int) -> list[RaiseEvent]:
    """Palm runs of length >= debounce_k become raise events.

    A run opens at its first palm event, closes at the first non-palm event
    (or end of stream); t_start/t_end are the run's first/last palm times.
    """
    out: list[RaiseEvent] = []
    run_start: float | None = None
    run_last: float | None = None
    run_len = 0
    learner = events[0].learner if events else ""
    for e in events:
        if e.gesture == cpdh.PALM:
            if run_len == 0:
                run_start = e.t
            run_len += 1
            run_last = e.t
        else:
            if run_len >= debounce_k:
                out.append(RaiseEvent(run_start, run_last, learner))
            run_len = 0
    if run_len >= debounce_k:
        out.append(RaiseEvent(run_start, run_last, learner))
    return out


@dataclass
class ParticipationSeries:
    """Per-learner raise events, windowed frequency curve, and red/green state."""

    learner: str
    window_w: float
    red_threshold: float
    grace: float
    events: list[RaiseEvent] = field(default_factory=list)
    freq_curve: list[tuple[float, float]] = field(default_factory=list)
    state: str = GREEN
    red_since: float | None = None
    _below_since: float | None = None

    def add_event(self, event: RaiseEvent):
        self.events.append(event)

    def last_t(self) -> float | None:
        return self.freq_curve[-1][0] if self.freq_curve else None


def update_indicator(series: ParticipationSeries, now: float) -> ParticipationSeries:
    """Append freq(now) to the curve and run the red/green state machine.

    freq counts events with t_start in (now - window_w, now], scaled to
    events per minute. Red requires freq < red_threshold continuously for
    grace seconds; recovery to green is immediate.
    """
    last = series.last_t()
    if last is not None and now < last:
        raise ParameterError(f"indicator time regressed: {now} < {last}")
    w = series.window_w
    count = sum(1 for e in series.events if now - w < e.t_start <= now)
    freq = 60.0 * count / w
    series.freq_curve.append((now, freq))
    if freq >= series.red_threshold:
        series.state = GREEN
        series.red_since = None
        series._below_since = None
    else:
        if series._below_since is None:
            series._below_since = now
        if series.state == GREEN and now - series._below_since >= series.grace:
            series.state = RED
            series.red_since = now
    return series


# ---------------------------------------------------------------------------
# wire format


def serialize_event(record) -> str:
    """One newline-terminated UTF-8 wire line for a gesture event or indicator sample."""
    if isinstance(record, GestureEvent):
        payload = {"t": record.t, "learner": record.learner, "kind": "gesture",
                   "gesture": record.gesture}
        if record.distance is not None:
            payload["distance"] = record.distance
    elif isinstance(record, IndicatorSample):
        payload = {"t": record.t, "learner": record.learner, "kind": "indicator",
                   "freq": record.freq, "state": record.state}
    else:
        raise ParameterError(f"cannot serialize {type(record).__name__}")
    return json.dumps(payload, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class IndicatorSample:
    t: float
    learner: str
    freq: float
    state: str


def parse_record(line: str):
    """Inverse of serialize_event; raises ParameterError on malformed lines."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed wire line: {exc}") from None
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParameterError("wire record must be an object with a 'kind'")
    try:
        if obj["kind"] == "gesture":
            return GestureEvent(float(obj["t"]), str(obj["learner"]),
                                str(obj["gesture"]), obj.get("distance"))
        if obj["kind"] == "indicator":
            return IndicatorSample(float(obj["t"]), str(obj["learner"]),
                                   float(obj["freq"]), str(obj["state"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed wire record: {exc}") from None
    raise ParameterError(f"unknown record kind {obj['kind']!r}")


# ---------------------------------------------------------------------------
# per-learner session


class Session:
    """All per-stream state for one learner: tracker, debouncer, indicator."""

    def __init__(
        self,
        model: background.CodebookModel,
        db: cpdh.GestureDb,
        skin: skintrack.SkinModel,
        config: PipelineConfig | None = None,
        learner: str = "L1",
        cascade: skintrack.CascadeModel | None = None,
    ):
        self.config = config or PipelineConfig()
        self.model = model
        self.db = db
        self.skin = skin
        self.learner = learner
        self.max_distance = (
            self.config.max_distance
            if self.config.max_distance is not None
            else default_max_distance(db)
        )
        full = skintrack.Roi(0, 0, model.width, model.height)
        self.track = skintrack.TrackState(
            window=full, frames_since_reinit=0,
            reinit_period=self.config.reinit_period, lost=True,
        )
        if cascade is not None:
            self.detector = lambda frame, fg: skintrack.viola_jones_detect(
                frame, cascade, min_neighbors=1
            )
        else:
            self.detector = lambda frame, fg: skintrack.blob_detect(
                fg, self.config.min_area
            )
        self.series = ParticipationSeries(
            learner, self.config.window_w, self.config.red_threshold, self.config.grace
        )
        self._run_len = 0
        self._run_start: float | None = None
        self._run_last: float | None = None
        self._run_open = False
        self.detector_calls = 0
        # raw (label, distance) of the last frame's 1-NN before the
        # max_distance gate; None when no descriptor was computed
        self.last_classification: tuple[str, float] | None = None

    # incremental palm-run debouncer; must agree with detect_raise_events
    def _feed_debouncer(self, event: GestureEvent):
        if event.gesture == cpdh.PALM:
            if self._run_len == 0:
                self._run_start = event.t
            self._run_len += 1
            self._run_last = event.t
            if self._run_len == self.config.debounce_k:
                self._run_open = True
                self.series.add_event(RaiseEvent(self._run_start, self._run_last, self.learner))
        else:
            if self._run_open:
                # rewrite the event's end to the run's last palm
                done = self.series.events[-1]
                self.series.events[-1] = replace(done, t_end=self._run_last)
            self._run_len = 0
            self._run_open = False

    def close(self):
        """Finish an open palm run at end of stream."""
        if self._run_open:
            done = self.series.events[-1]
            self.series.events[-1] = replace(done, t_end=self._run_last)
            self._run_open = False
        self._run_len = 0

    def process_frame(self, frame: Frame) -> GestureEvent:
        """Run the full per-frame path and return the gesture event."""
        cfg = self.config
        motion = background.extract_foreground(self.model, frame)

        def counting_detector(f, fg):
            self.detector_calls += 1
            return self.detector(f, fg)

        self.track, skin_mask = skintrack.tracker_step(
            frame, motion, self.track, counting_detector, self.skin, cfg.track
        )
        fused = fuse_masks(motion, skin_mask)
        cleaned = postprocess_mask(fused)

        gesture = GESTURE_NONE
        distance = None
        self.last_classification = None
        blobs = connected_components(cleaned)
        if blobs and blobs[0].area >= cfg.min_area:
            try:
                desc = cpdh.describe_mask(cleaned, cfg.cpdh)
                label, dist, _ = cpdh.classify_gesture(desc, self.db)
                self.last_classification = (label, dist)
                if dist <= self.max_distance:
                    gesture = label
                    distance = dist
            except cpdh.DegenerateShapeError:
                pass
        event = GestureEvent(frame.timestamp, self.learner, gesture, distance)
        self._feed_debouncer(event)
        return event

    def sample_indicator(self, now: float) -> IndicatorSample:
        update_indicator(self.series, now)
        t, freq = self.series.freq_curve[-1]
        return IndicatorSample(t, self.learner, freq, self.series.state)


def run_session(session: Session, frames, sink, realtime: bool = False):
    """Replay frames through the session, emitting wire lines to sink(line).

    The indicator is sampled every config.indicator_interval seconds of
    stream time, starting at the first frame's timestamp. The sink receives
    gesture lines in frame order interleaved with indicator lines.
    """
    import time as _time

    interval = session.config.indicator_interval
    next_sample = None
    t_wall = None
    for frame in frames:
        if realtime:
            now = _time.monotonic()
            if t_wall is None:
                t_wall = now - frame.timestamp
            lag = (t_wall + frame.timestamp) - now
            if lag > 0:
                _time.sleep(lag)
        event = session.process_frame(frame)
        sink(serialize_event(event))
        if next_sample is None:
            next_sample = frame.timestamp
        while next_sample <= frame.timestamp:
            sink(serialize_event(session.sample_indicator(next_sample)))
            next_sample += interval
    session.close()


def raise_interval_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Interval IoU used by the end-to-end acceptance check."""
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = max(a[1], b[1]) - min(a[0], b[0])
    if union <= 0:
        return 1.0 if inter == 0 and a == b else 0.0
    return inter / union


__all__ = [
    "GESTURE_NONE", "GREEN", "RED",
    "GestureEvent", "RaiseEvent", "IndicatorSample",
    "ParticipationSeries", "PipelineConfig", "Session",
    "detect_raise_events", "default_max_distance", "fuse_masks",
    "parse_record", "postprocess_mask", "raise_interval_iou",
    "run_session", "serialize_event", "update_indicator",
]
