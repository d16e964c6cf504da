"""Contour point distribution histogram.

The hand mask's boundary is traced from its Canny edge, resampled to N
points at uniform arc length, expressed in polar coordinates about the
point centroid, and counted into u radial x v angular bins bounded by the
minimum circumscribed circle. Gestures are matched 1-NN by Euclidean
distance between the raw count histograms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .imgcore import BinaryMask, ParameterError, blobs_from_labels, canny_edges

PALM = "palm"
FIST = "fist"
LABELS = (PALM, FIST)


class DegenerateShapeError(ValueError):
    """Too few contour points, or all points coincident."""


@dataclass(frozen=True)
class CpdhParams:
    n_points: int = 100
    u: int = 5
    v: int = 12
    canny_sigma: float = 1.0


@dataclass(frozen=True)
class ContourPointSet:
    points: np.ndarray  # (n, 2) float64, (x, y), boundary traversal order

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PolarPointSet:
    rho: np.ndarray  # (n,) float64, >= 0
    theta: np.ndarray  # (n,) float64 in [0, 2*pi)
    centroid: tuple[float, float]
    rho_max: float


@dataclass(frozen=True)
class CpdhDescriptor:
    counts: np.ndarray  # (u, v) int64

    @property
    def u(self) -> int:
        return self.counts.shape[0]

    @property
    def v(self) -> int:
        return self.counts.shape[1]

    @property
    def n(self) -> int:
        return int(self.counts.sum())


# Moore neighborhood as (dx, dy), starting West and sweeping
# counter-clockwise on screen (y grows downward)
_MOORE_CCW = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _moore_trace(edges: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Order a thin 8-connected edge set by Moore boundary tracing.

    Starts at `start` (topmost-leftmost pixel, so its West neighbor is
    background), sweeps the neighborhood counter-clockwise from the
    backtrack pixel, and stops when the (position, backtrack) walker state
    repeats, i.e. the boundary loop has closed.
    """
    h, w = edges.shape
    sy, sx = start

    def fg(y, x):
        return 0 <= y < h and 0 <= x < w and edges[y, x]

    path = [(sx, sy)]
    pos = (sy, sx)
    back = (sy, sx - 1)
    seen = set()
    while (pos, back) not in seen:
        seen.add((pos, back))
        py, px = pos
        by, bx = back
        try:
            k0 = _MOORE_CCW.index((bx - px, by - py))
        except ValueError:
            k0 = 0
        nxt = None
        for i in range(1, 9):
            dx, dy = _MOORE_CCW[(k0 + i) % 8]
            ny, nx = py + dy, px + dx
            if fg(ny, nx):
                nxt = (ny, nx)
                # the last background pixel swept becomes the new backtrack
                pdx, pdy = _MOORE_CCW[(k0 + i - 1) % 8]
                back = (py + pdy, px + pdx)
                break
        if nxt is None:
            break  # isolated pixel
        pos = nxt
        path.append((pos[1], pos[0]))
    # a closed boundary re-enters the start a step or two before the walker
    # state repeats: cut the lap at the first return
    for i in range(1, len(path)):
        if path[i] == path[0]:
            return path[:i]
    return path


def trace_contour(mask: BinaryMask, params: CpdhParams | None = None) -> ContourPointSet:
    """Canny edge of the mask, largest edge component ordered by Moore tracing."""
    params = params or CpdhParams()
    if mask.count() < 3:
        raise DegenerateShapeError("mask too small to carry a shape")
    edges = canny_edges(mask.to_gray_frame(), sigma=params.canny_sigma)
    labels, n = kernels.active().label_components(edges.bits)
    blobs = blobs_from_labels(labels, n)
    if not blobs:
        raise DegenerateShapeError("mask produced no edges")
    component = labels == blobs[0].label
    ys, xs = np.nonzero(component)
    start_idx = np.lexsort((xs, ys))[0]  # topmost, then leftmost
    path = _moore_trace(component, (int(ys[start_idx]), int(xs[start_idx])))
    if len(path) < 3:
        raise DegenerateShapeError(f"contour has only {len(path)} points")
    return ContourPointSet(np.array(path, dtype=np.float64))


def sample_contour(contour: ContourPointSet, n: int) -> ContourPointSet:
    """N points at uniform arc length along the closed traversal."""
    if n < 3:
        raise ParameterError("need at least 3 sample points")
    pts = contour.points
    if len(pts) < 2:
        raise DegenerateShapeError("contour too short to sample")
    closed = np.vstack([pts, pts[:1]])
    seg = np.diff(closed, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    total = cum[-1]
    if total <= 0:
        raise DegenerateShapeError("zero-length contour")
    targets = np.arange(n, dtype=np.float64) * (total / n)
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seglen) - 1)
    frac = np.where(seglen[idx] > 0, (targets - cum[idx]) / np.where(seglen[idx] > 0, seglen[idx], 1.0), 0.0)
    sampled = closed[idx] + seg[idx] * frac[:, np.newaxis]
    return ContourPointSet(sampled)


def to_polar(sampled: ContourPointSet) -> PolarPointSet:
    """Polar coordinates about the point centroid, full four-quadrant angle.

    Radii and angles are computed from n*p_i - sum(p) so that integer point
    sets produce bit-identical polar sets under integer translation.
    """
    pts = sampled.points
    n = len(pts)
    if n < 3:
        raise DegenerateShapeError("need at least 3 points")
    sx = float(pts[:, 0].sum())
    sy = float(pts[:, 1].sum())
    dxn = pts[:, 0] * n - sx
    dyn = pts[:, 1] * n - sy
    rho = np.hypot(dxn, dyn) / n
    rho_max = float(rho.max())
    if rho_max <= 0:
        raise DegenerateShapeError("all points coincident")
    theta = np.arctan2(dyn, dxn)
    theta = np.where(theta < 0, theta + 2.0 * math.pi, theta)
    theta = np.where(theta >= 2.0 * math.pi, 0.0, theta)
    return PolarPointSet(rho, theta, (sx / n, sy / n), rho_max)


def build_cpdh(polar: PolarPointSet, u: int, v: int) -> CpdhDescriptor:
    """Count points into u radial x v angular bins; rho = rho_max lands in the outer ring."""
    if u < 1 or v < 1:
        raise ParameterError("need u, v >= 1")
    if polar.rho_max <= 0:
        raise DegenerateShapeError("rho_max must be positive")
    ri = np.minimum((polar.rho * u / polar.rho_max).astype(np.int64), u - 1)
    ai = np.minimum((polar.theta * v / (2.0 * math.pi)).astype(np.int64), v - 1)
    counts = np.zeros((u, v), dtype=np.int64)
    np.add.at(counts, (ri, ai), 1)
    return CpdhDescriptor(counts)


def describe_mask(mask: BinaryMask, params: CpdhParams | None = None) -> CpdhDescriptor:
    """trace -> sample -> polar -> histogram in one call."""
    params = params or CpdhParams()
    contour = trace_contour(mask, params)
    sampled = sample_contour(contour, params.n_points)
    return build_cpdh(to_polar(sampled), params.u, params.v)


def cpdh_distance(a: CpdhDescriptor, b: CpdhDescriptor) -> float:
    if a.counts.shape != b.counts.shape:
        raise ParameterError(f"descriptor shapes differ: {a.counts.shape} vs {b.counts.shape}")
    d = (a.counts - b.counts).astype(np.float64).ravel()
    return float(math.sqrt(float(np.dot(d, d))))


@dataclass(frozen=True)
class GestureDb:
    descriptors: np.ndarray  # (m, u*v) int64, row-major flattened counts
    labels: tuple
    u: int
    v: int
    n: int
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.labels)

    def entry(self, i: int) -> CpdhDescriptor:
        return CpdhDescriptor(self.descriptors[i].reshape(self.u, self.v))


def classify_gesture(query: CpdhDescriptor, db: GestureDb):
    """Nearest entry by Euclidean distance; ties break to the lowest index.

    Returns (label, distance, entry_index).
    """
    if len(db) == 0:
        raise ParameterError("empty gesture database")
    if (query.u, query.v) != (db.u, db.v):
        raise ParameterError("query shape does not match the database")
    diff = db.descriptors.astype(np.float64) - query.counts.ravel().astype(np.float64)
    d2 = (diff * diff).sum(axis=1)
    i = int(d2.argmin())  # argmin takes the first minimum: lowest index
    return db.labels[i], float(math.sqrt(d2[i])), i


def build_gesture_db(
    labeled_masks,
    params: CpdhParams | None = None,
) -> GestureDb:
    """CPDH database from (mask, label) pairs; degenerate masks are skipped."""
    params = params or CpdhParams()
    rows = []
    labels = []
    skipped = 0
    for mask, label in labeled_masks:
        if label not in LABELS:
            raise ParameterError(f"unknown gesture label {label!r}")
        try:
            desc = describe_mask(mask, params)
        except DegenerateShapeError:
            skipped += 1
            continue
        rows.append(desc.counts.ravel())
        labels.append(label)
    if not rows:
        raise ParameterError("no usable masks")
    for want in LABELS:
        if want not in labels:
            raise ParameterError(f"no usable masks labeled {want!r}")
    return GestureDb(
        np.array(rows, dtype=np.int64),
        tuple(labels),
        params.u,
        params.v,
        params.n_points,
        skipped,
    )


# ---------------------------------------------------------------------------
# persistence: text, header "CPDH1 u v n count"


def save_gesture_db(db: GestureDb, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"CPDH1 {db.u} {db.v} {db.n} {len(db)}\n")
        for i, label in enumerate(db.labels):
            row = " ".join(str(int(c)) for c in db.descriptors[i])
            fh.write(f"{label} {row}\n")


def load_gesture_db(path) -> GestureDb:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "CPDH1":
            raise ParameterError("bad gesture db header")
        u, v, n, count = (int(x) for x in header[1:])
        rows = []
        labels = []
        for _ in range(count):
            toks = fh.readline().split()
            if len(toks) != 1 + u * v:
                raise ParameterError("truncated gesture db entry")
            labels.append(toks[0])
            rows.append([int(x) for x in toks[1:]])
    return GestureDb(np.array(rows, dtype=np.int64), tuple(labels), u, v, n)
