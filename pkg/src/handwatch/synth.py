"""Synthetic desk-scale scenarios and procedural hand silhouettes.

Stands in for live cameras and the private gesture footage: renders palm
and fist silhouettes (unions of ellipses and capsules) over flat or
textured backgrounds with seeded noise, and writes the matching ground
truth (per-frame label + bbox, plus raise intervals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cpdh import FIST, PALM
from .frameio import FrameIOError, write_pnm


class ScenarioError(ValueError):
    pass


# ---------------------------------------------------------------------------
# silhouettes


def _ellipse(cx, cy, rx, ry):
    return ("ellipse", cx, cy, rx, ry)


def _capsule(x0, y0, x1, y1, r):
    return ("capsule", x0, y0, x1, y1, r)


def _palm_primitives(rng=None):
    j = (lambda lo, hi: rng.uniform(lo, hi)) if rng is not None else (lambda lo, hi: 1.0)
    prims = [_ellipse(0, 10 * j(0.95, 1.05), 27 * j(0.92, 1.08), 32 * j(0.92, 1.08))]
    fingers = [
        (-18, -12, -22, -58, 6.5),
        (-6, -14, -7, -66, 7.0),
        (6, -14, 9, -60, 6.5),
        (18, -10, 26, -44, 5.5),
        (-24, 6, -44, -20, 7.5),  # thumb
    ]
    for (x0, y0, x1, y1, r) in fingers:
        L = j(0.9, 1.1)
        prims.append(_capsule(x0, y0, x0 + (x1 - x0) * L, y0 + (y1 - y0) * L, r * j(0.9, 1.1)))
    prims.append(_capsule(0, 36, 0, 58, 14))
    return prims


def _fist_primitives(rng=None):
    j = (lambda lo, hi: rng.uniform(lo, hi)) if rng is not None else (lambda lo, hi: 1.0)
    return [
        _ellipse(0, 0, 32 * j(0.92, 1.08), 28 * j(0.92, 1.08)),
        _capsule(-28, 2, -34 * j(0.9, 1.1), 10, 9 * j(0.9, 1.1)),  # thumb bump
        _capsule(0, 22, 0, 48, 15),
    ]


def render_hand(
    shape: str,
    scale: float,
    center: tuple[float, float],
    canvas_wh: tuple[int, int],
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Rasterize a palm/fist silhouette; returns a boolean (H, W) mask.

    `rng`, when given, jitters the proportions so database entries are not
    all identical up to scale.
    """
    if scale <= 0:
        raise ScenarioError("scale must be positive")
    if shape == PALM:
        prims = _palm_primitives(rng)
    elif shape == FIST:
        prims = _fist_primitives(rng)
    else:
        raise ScenarioError(f"unknown hand shape {shape!r}")
    w, h = canvas_wh
    cx, cy = center
    ys, xs = np.mgrid[0:h, 0:w]
    X = (xs - cx) / scale
    Y = (ys - cy) / scale
    mask = np.zeros((h, w), dtype=bool)
    for p in prims:
        if p[0] == "ellipse":
            _, ex, ey, rx, ry = p
            mask |= ((X - ex) / rx) ** 2 + ((Y - ey) / ry) ** 2 <= 1.0
        else:
            _, x0, y0, x1, y1, r = p
            dx, dy = x1 - x0, y1 - y0
            ll = dx * dx + dy * dy
            if ll == 0:
                t = np.zeros_like(X)
            else:
                t = np.clip(((X - x0) * dx + (Y - y0) * dy) / ll, 0.0, 1.0)
            px = x0 + t * dx
            py = y0 + t * dy
            mask |= (X - px) ** 2 + (Y - py) ** 2 <= r * r
    return mask


def hsv_to_rgb_u8(h_deg: float, s: float, v: float) -> tuple[int, int, int]:
    """h in degrees, s and v in [0, 255]; standard hexagonal conversion."""
    c = (v / 255.0) * (s / 255.0) * 255.0
    hp = (h_deg % 360.0) / 60.0
    x = c * (1.0 - abs(hp % 2.0 - 1.0))
    m = v - c
    sector = int(hp) % 6
    rgb1 = [(c, x, 0), (x, c, 0), (0, c, x), (0, x, c), (x, 0, c), (c, 0, x)][sector]
    return tuple(int(min(max(math.floor(q + m + 0.5), 0), 255)) for q in rgb1)


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ActorEvent:
    t_start: int  # frame index, inclusive
    t_end: int  # frame index, inclusive
    shape: str  # palm | fist
    trajectory: tuple  # ("static", cx, cy) | ("linear", x0, y0, x1, y1)
    scale: float = 1.0
    hue: float = 20.0

    def position(self, t: int) -> tuple[float, float]:
        if self.trajectory[0] == "static":
            return (self.trajectory[1], self.trajectory[2])
        _, x0, y0, x1, y1 = self.trajectory
        span = max(1, self.t_end - self.t_start)
        a = (t - self.t_start) / span
        return (x0 + (x1 - x0) * a, y0 + (y1 - y0) * a)


@dataclass
class ScenarioSpec:
    duration: int  # frames
    width: int = 320
    height: int = 240
    fps: float = 10.0
    background: str = "flat"  # flat | textured
    noise_amp: int = 5
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.duration < 1 or self.width < 1 or self.height < 1 or self.fps <= 0:
            raise ScenarioError("bad scenario dimensions")
        if self.background not in ("flat", "textured"):
            raise ScenarioError(f"unknown background {self.background!r}")
        if self.noise_amp < 0:
            raise ScenarioError("noise_amp must be >= 0")
        for e in self.events:
            if not (0 <= e.t_start <= e.t_end < self.duration):
                raise ScenarioError(f"event {e} outside scenario duration")
            if e.scale <= 0:
                raise ScenarioError("event scale must be positive")


def _background_image(spec: ScenarioSpec, seed: int) -> np.ndarray:
    if spec.background == "flat":
        return np.full((spec.height, spec.width, 3), 120, dtype=np.uint8)
    rng = np.random.default_rng((seed, 0xB6))
    cell = 16
    gh = spec.height // cell + 1
    gw = spec.width // cell + 1
    grey = rng.integers(90, 170, size=(gh, gw, 1))
    tint = rng.integers(-10, 11, size=(gh, gw, 3))
    cells = np.clip(grey + tint, 0, 255).astype(np.uint8)
    big = np.kron(cells, np.ones((cell, cell, 1), dtype=np.uint8))
    return np.ascontiguousarray(big[: spec.height, : spec.width])


def render_scenario_frame(spec: ScenarioSpec, seed: int, t: int):
    """(rgb frame, label, hand mask) for frame t; deterministic in (spec, seed)."""
    img = _background_image(spec, seed).copy()
    label = "none"
    hand = np.zeros((spec.height, spec.width), dtype=bool)
    for e in spec.events:
        if e.t_start <= t <= e.t_end:
            mask = render_hand(e.shape, e.scale, e.position(t), (spec.width, spec.height))
            color = hsv_to_rgb_u8(e.hue, 180, 200)
            img[mask] = color
            hand |= mask
            label = e.shape
    if spec.noise_amp > 0:
        rng = np.random.default_rng((seed, 1, t))
        noise = rng.integers(-spec.noise_amp, spec.noise_amp + 1, size=img.shape)
        img = np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)
    return img, label, hand


def _mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        return (0, 0, 0, 0)
    return (int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))


def gen_synthetic(spec: ScenarioSpec, seed: int, out_dir) -> Path:
    """Render the scenario into out_dir as frame_%06d.ppm plus truth.tsv.

    The truth file carries one `# raise t0 t1` comment line per palm event
    (seconds, inclusive frame times) followed by per-frame rows
    frame_index<TAB>label<TAB>x y w h.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# handwatch-truth v1"]
    for e in spec.events:
        if e.shape == PALM:
            lines.append(f"# raise {e.t_start / spec.fps} {e.t_end / spec.fps}")
    for t in range(spec.duration):
        img, label, hand = render_scenario_frame(spec, seed, t)
        write_pnm(out / f"frame_{t:06d}.ppm", img)
        x, y, w, h = _mask_bbox(hand)
        lines.append(f"{t}\t{label}\t{x} {y} {w} {h}")
    (out / "truth.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def load_truth(path):
    """Parse a truth file -> (labels, bboxes, raise intervals in seconds)."""
    labels = {}
    bboxes = {}
    raises = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            if toks and toks[0] == "raise":
                raises.append((float(toks[1]), float(toks[2])))
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise FrameIOError(f"bad truth row: {line!r}")
        idx = int(cols[0])
        labels[idx] = cols[1]
        bboxes[idx] = tuple(int(v) for v in cols[2].split())
    n = max(labels) + 1 if labels else 0
    out_labels = [labels.get(i, "none") for i in range(n)]
    out_boxes = [bboxes.get(i, (0, 0, 0, 0)) for i in range(n)]
    return out_labels, out_boxes, raises


# ---------------------------------------------------------------------------
# keyvalue scenario files


def parse_scenario_file(path) -> ScenarioSpec:
    """Parse the `key = value` scenario format (repeatable `event` keys).

    event value: <shape> <t_start> <t_end> static <cx> <cy> <scale> <hue>
               | <shape> <t_start> <t_end> linear <x0,y0> <x1,y1> <scale> <hue>
    """
    fields: dict = {}
    events = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "event":
            toks = val.split()
            if len(toks) < 4:
                raise ScenarioError(f"bad event spec {val!r}")
            shape, t0, t1, kind = toks[0], int(toks[1]), int(toks[2]), toks[3]
            if kind == "static":
                traj = ("static", float(toks[4]), float(toks[5]))
                rest = toks[6:]
            elif kind == "linear":
                x0, y0 = (float(v) for v in toks[4].split(","))
                x1, y1 = (float(v) for v in toks[5].split(","))
                traj = ("linear", x0, y0, x1, y1)
                rest = toks[6:]
            else:
                raise ScenarioError(f"unknown trajectory {kind!r}")
            scale = float(rest[0]) if len(rest) > 0 else 1.0
            hue = float(rest[1]) if len(rest) > 1 else 20.0
            events.append(ActorEvent(t0, t1, shape, traj, scale, hue))
        else:
            fields[key] = val
    try:
        return ScenarioSpec(
            duration=int(fields["duration"]),
            width=int(fields.get("width", 320)),
            height=int(fields.get("height", 240)),
            fps=float(fields.get("fps", 10.0)),
            background=fields.get("background", "flat"),
            noise_amp=int(fields.get("noise_amp", 5)),
            events=events,
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario file missing key {exc}") from None
