"""Raster primitives shared by every pipeline stage.

Frames are row-major 8-bit numpy arrays behind a small dataclass; masks are
boolean arrays of matching shape. All operators are pure functions; the
per-pixel loops live in :mod:`handwatch.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class ParameterError(ValueError):
    """Raised when an operator is called with out-of-contract parameters."""


class BoundsError(IndexError):
    """Raised when a rectangle or ROI leaves the image plane."""


# default Canny tuning: sigma, and thresholds as fractions of the frame's
# maximum gradient magnitude when not given explicitly
CANNY_SIGMA = 1.4
CANNY_HIGH_FRAC = 0.2
CANNY_LOW_FRAC = 0.5  # of t_high


@dataclass(frozen=True)
class Frame:
    """One 8-bit raster, grayscale (H, W) or RGB (H, W, 3)."""

    data: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        d = self.data
        if d.dtype != np.uint8:
            raise ParameterError(f"frame data must be uint8, got {d.dtype}")
        if d.ndim == 2:
            pass
        elif d.ndim == 3 and d.shape[2] == 3:
            pass
        else:
            raise ParameterError(f"frame shape must be (H, W) or (H, W, 3), got {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ParameterError("frame must be at least 1x1")
        if not d.flags.c_contiguous:
            object.__setattr__(self, "data", np.ascontiguousarray(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def to_gray(self) -> "Frame":
        """Luma plane (BT.601 Y) for color frames, self for gray ones."""
        if self.channels == 1:
            return self
        ycbcr = kernels.active().rgb_to_ycbcr(self.data)
        return Frame(np.ascontiguousarray(ycbcr[..., 0]), self.timestamp)


@dataclass(frozen=True)
class BinaryMask:
    """Boolean raster derived from (and dimension-matched to) a Frame."""

    bits: np.ndarray

    def __post_init__(self):
        b = self.bits
        if b.dtype != np.bool_ or b.ndim != 2:
            raise ParameterError("mask must be a 2-D boolean array")
        if not b.flags.c_contiguous:
            object.__setattr__(self, "bits", np.ascontiguousarray(b))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def to_gray_frame(self, timestamp: float = 0.0) -> Frame:
        """Render as a {0, 255} grayscale frame."""
        return Frame((self.bits.astype(np.uint8) * 255), timestamp)


@dataclass(frozen=True)
class IntegralImage:
    """(H+1, W+1) int64 summed-area table with zero first row/column."""

    table: np.ndarray

    @classmethod
    def build(cls, gray: np.ndarray | Frame, squared: bool = False) -> "IntegralImage":
        arr = gray.data if isinstance(gray, Frame) else gray
        if arr.ndim != 2:
            raise ParameterError("integral image needs a grayscale plane")
        return cls(kernels.active().integral_u8(arr, squared))

    @property
    def height(self) -> int:
        return self.table.shape[0] - 1

    @property
    def width(self) -> int:
        return self.table.shape[1] - 1

    def rect_sum(self, x: int, y: int, w: int, h: int) -> int:
        if w < 0 or h < 0 or x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise BoundsError(f"rect {(x, y, w, h)} outside {self.width}x{self.height}")
        t = self.table
        return int(t[y + h, x + w] - t[y + h, x] - t[y, x + w] + t[y, x])


@dataclass(frozen=True)
class Blob:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # x, y, w, h
    centroid: tuple[float, float] = field(default=(0.0, 0.0))


def color_convert(p, target: str):
    """Convert one RGB triple to YCbCr (BT.601 full-range) or HSV.

    YCbCr components come back as clamped 8-bit ints; HSV as floats with
    H in [0, 360), S and V scaled to [0, 255]. Achromatic pixels get H = 0.
    """
    r, g, b = (float(c) for c in p)
    if target == "YCbCr":
        y = 0.299 * r + 0.587 * g + 0.114 * b
        cb = 128.0 + (b - y) / 1.772
        cr = 128.0 + (r - y) / 1.402
        clamp = lambda v: int(min(max(math.floor(v + 0.5), 0), 255))
        return (clamp(y), clamp(cb), clamp(cr))
    if target == "HSV":
        mx = max(r, g, b)
        mn = min(r, g, b)
        c = mx - mn
        if c == 0:
            hue = 0.0
        elif mx == r:
            hue = 60.0 * (((g - b) / c) % 6.0)
        elif mx == g:
            hue = 60.0 * ((b - r) / c + 2.0)
        else:
            hue = 60.0 * ((r - g) / c + 4.0)
        sat = 0.0 if mx == 0 else 255.0 * c / mx
        return (hue, sat, mx)
    raise ParameterError(f"unknown color target {target!r}")


def integral_rect_sum(img: Frame, rect: tuple[int, int, int, int]) -> int:
    """Sum of the pixels in rect via a summed-area table."""
    x, y, w, h = rect
    return IntegralImage.build(img.to_gray()).rect_sum(x, y, w, h)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian taps with radius ceil(3*sigma), normalized to sum 1."""
    if sigma <= 0:
        raise ParameterError("sigma must be > 0")
    r = math.ceil(3.0 * sigma)
    ks = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(ks * ks) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(img: Frame, sigma: float) -> Frame:
    """Separable Gaussian blur with clamp-to-border edge handling."""
    gray = img.to_gray()
    weights = gaussian_kernel(sigma)
    out = kernels.active().gaussian_blur_u8(gray.data, weights)
    return Frame(out, img.timestamp)


def threshold(img: Frame, t: int) -> BinaryMask:
    """Mask bit = (pixel >= t)."""
    return BinaryMask(img.to_gray().data >= t)


def morph(mask: BinaryMask, op: str, kernel_radius: int = 1) -> BinaryMask:
    """Set morphology with a (2r+1)^2 square structuring element.

    Dilation treats pixels beyond the border as false, erosion clips the
    window at the border, which makes dilate(m) == ~erode(~m) exact.
    """
    if kernel_radius < 1:
        raise ParameterError("kernel_radius must be >= 1")
    k = kernels.active()
    if op == "erode":
        return BinaryMask(k.erode(mask.bits, kernel_radius))
    if op == "dilate":
        return BinaryMask(k.dilate(mask.bits, kernel_radius))
    if op == "open":
        return BinaryMask(k.dilate(k.erode(mask.bits, kernel_radius), kernel_radius))
    if op == "close":
        return BinaryMask(k.erode(k.dilate(mask.bits, kernel_radius), kernel_radius))
    raise ParameterError(f"unknown morphology op {op!r}")


def connected_components(mask: BinaryMask) -> list[Blob]:
    """8-connected blobs, area-descending, ties by (bbox.y, bbox.x)."""
    labels, n = kernels.active().label_components(mask.bits)
    return blobs_from_labels(labels, n)


def blobs_from_labels(labels: np.ndarray, n: int) -> list[Blob]:
    """Blob statistics for an already-labeled mask (labels 1..n, 0 = background)."""
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    areas = np.bincount(lab, minlength=n + 1)
    min_x = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    min_y = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    max_x = np.full(n + 1, -1, dtype=np.int64)
    max_y = np.full(n + 1, -1, dtype=np.int64)
    np.minimum.at(min_x, lab, xs)
    np.minimum.at(min_y, lab, ys)
    np.maximum.at(max_x, lab, xs)
    np.maximum.at(max_y, lab, ys)
    sum_x = np.bincount(lab, weights=xs, minlength=n + 1)
    sum_y = np.bincount(lab, weights=ys, minlength=n + 1)
    blobs = []
    for lbl in range(1, n + 1):
        a = int(areas[lbl])
        if a == 0:
            continue
        bbox = (
            int(min_x[lbl]),
            int(min_y[lbl]),
            int(max_x[lbl] - min_x[lbl] + 1),
            int(max_y[lbl] - min_y[lbl] + 1),
        )
        blobs.append(
            Blob(lbl, a, bbox, (float(sum_x[lbl] / a), float(sum_y[lbl] / a)))
        )
    blobs.sort(key=lambda b: (-b.area, b.bbox[1], b.bbox[0]))
    return blobs


def gradient_magnitude(img: Frame, sigma: float):
    """Blur, then Sobel; returns (mag float64, gx int32, gy int32)."""
    k = kernels.active()
    blurred = gaussian_blur(img, sigma)
    gx, gy = k.sobel_u8(blurred.data)
    mag = np.sqrt(gx.astype(np.float64) ** 2 + gy.astype(np.float64) ** 2)
    return mag, gx, gy


def canny_edges(
    img: Frame,
    sigma: float = CANNY_SIGMA,
    t_low: float | None = None,
    t_high: float | None = None,
) -> BinaryMask:
    """Canny: Gaussian smoothing, Sobel, 4-bin NMS, 8-connected hysteresis.

    When thresholds are omitted, t_high = CANNY_HIGH_FRAC * max gradient of
    the frame and t_low = CANNY_LOW_FRAC * t_high.
    """
    k = kernels.active()
    mag, gx, gy = gradient_magnitude(img, sigma)
    if t_high is None:
        t_high = CANNY_HIGH_FRAC * float(mag.max())
        if t_high <= 0.0:
            return BinaryMask(np.zeros(mag.shape, dtype=bool))
    if t_low is None:
        t_low = CANNY_LOW_FRAC * t_high
    if not (0 < t_low < t_high):
        raise ParameterError(f"need 0 < t_low < t_high, got {t_low}, {t_high}")
    thin = k.nms(mag, gx, gy)
    return BinaryMask(k.hysteresis(thin, t_low, t_high))
