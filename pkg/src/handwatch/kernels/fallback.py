"""NumPy implementations of the per-pixel kernels.

This module is the semantic reference for ``handwatch.kernels._core`` (the
compiled extension). Both backends must return bit-identical arrays for the
same inputs, so every float expression here is written in the exact
evaluation order the C code uses, and all float-to-u8 rounding is
floor(x + 0.5) followed by a clamp to [0, 255].
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

NAME = "fallback"

# tan(pi/8), the half-angle boundary between the four gradient direction bins
_TAN_PI_8 = 0.41421356237309503


def _round_u8(x):
    return np.clip(np.floor(x + 0.5), 0.0, 255.0).astype(np.uint8)


# ---------------------------------------------------------------------------
# color conversion


def rgb_to_ycbcr(rgb):
    """BT.601 full-range YCbCr of an (H, W, 3) uint8 image."""
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 + (b - y) / 1.772
    cr = 128.0 + (r - y) / 1.402
    out = np.empty(rgb.shape, dtype=np.uint8)
    out[..., 0] = _round_u8(y)
    out[..., 1] = _round_u8(cb)
    out[..., 2] = _round_u8(cr)
    return out


def hue_bins(rgb, nbins, sat_min, val_min):
    """Hue bin index plus saturation/value gate, all in integer arithmetic.

    bin = floor(nbins * H / 360) with H the standard hexagonal hue; the gate
    passes where S >= sat_min and V >= val_min with S, V scaled to [0, 255].
    Achromatic pixels get bin 0.
    """
    r = rgb[..., 0].astype(np.int64)
    g = rgb[..., 1].astype(np.int64)
    b = rgb[..., 2].astype(np.int64)
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    c = mx - mn

    gate = (mx >= int(val_min)) & ((mx - mn) * 255 >= int(sat_min) * mx)

    is_r = (mx == r) & (c > 0)
    is_g = (mx == g) & ~is_r & (c > 0)
    is_b = (c > 0) & ~is_r & ~is_g

    c_safe = np.where(c > 0, c, 1)
    t = np.zeros(mx.shape, dtype=np.int64)
    t = np.where(is_r, (g - b) % (6 * c_safe), t)
    t = np.where(is_g, (b - r) + 2 * c_safe, t)
    t = np.where(is_b, (r - g) + 4 * c_safe, t)
    bins = np.where(c > 0, (t * int(nbins)) // (6 * c_safe), 0)
    return bins.astype(np.int32), gate


# ---------------------------------------------------------------------------
# integral image


def integral_u8(gray, squared=False):
    """(H+1, W+1) int64 summed-area table; entry (0,*) and (*,0) are zero."""
    h, w = gray.shape
    vals = gray.astype(np.int64)
    if squared:
        vals = vals * vals
    out = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(vals, axis=0), axis=1, out=out[1:, 1:])
    return out


# ---------------------------------------------------------------------------
# separable Gaussian


def gaussian_blur_u8(gray, weights):
    """Separable convolution with clamp-to-border; weights must sum to 1."""
    h, w = gray.shape
    r = (len(weights) - 1) // 2
    src = gray.astype(np.float64)
    tmp = np.zeros((h, w), dtype=np.float64)
    cols = np.arange(w)
    for k in range(2 * r + 1):
        idx = np.clip(cols + (k - r), 0, w - 1)
        tmp += weights[k] * src[:, idx]
    out = np.zeros((h, w), dtype=np.float64)
    rows = np.arange(h)
    for k in range(2 * r + 1):
        idx = np.clip(rows + (k - r), 0, h - 1)
        out += weights[k] * tmp[idx, :]
    return _round_u8(out)


# ---------------------------------------------------------------------------
# Sobel gradients / non-maximum suppression / hysteresis


def sobel_u8(gray):
    """3x3 Sobel with clamp-to-border. gx grows to the right, gy downward."""
    h, w = gray.shape
    g = gray.astype(np.int32)
    xm = np.clip(np.arange(w) - 1, 0, w - 1)
    xp = np.clip(np.arange(w) + 1, 0, w - 1)
    ym = np.clip(np.arange(h) - 1, 0, h - 1)
    yp = np.clip(np.arange(h) + 1, 0, h - 1)
    up = g[ym, :]
    down = g[yp, :]
    gx = (up[:, xp] - up[:, xm]) + 2 * (g[:, xp] - g[:, xm]) + (down[:, xp] - down[:, xm])
    gy = (down[:, xm] - up[:, xm]) + 2 * (down - up) + (down[:, xp] - up[:, xp])
    return gx, gy


def nms(mag, gx, gy):
    """Thin the gradient magnitude along the quantized gradient direction.

    A pixel survives iff mag > forward neighbor and mag >= backward neighbor
    (forward = along the gradient, toward the bright side); out-of-frame
    neighbors count as 0. The asymmetric tie-break keeps exactly one pixel of
    a two-pixel plateau, the one on the bright side of the edge.
    """
    h, w = mag.shape
    ax = np.abs(gx).astype(np.float64)
    ay = np.abs(gy).astype(np.float64)
    horiz = ay <= _TAN_PI_8 * ax
    vert = (ax <= _TAN_PI_8 * ay) & ~horiz
    diag = ~(horiz | vert)
    sx = np.sign(gx).astype(np.int64)
    sy = np.sign(gy).astype(np.int64)
    dx = np.where(horiz | diag, sx, 0)
    dy = np.where(vert | diag, sy, 0)

    yy, xx = np.mgrid[0:h, 0:w]

    def neighbor(sign):
        ny = yy + sign * dy
        nx = xx + sign * dx
        inb = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        return np.where(inb, mag[np.clip(ny, 0, h - 1), np.clip(nx, 0, w - 1)], 0.0)

    fwd = neighbor(+1)
    bwd = neighbor(-1)
    keep = (mag > 0) & (mag > fwd) & (mag >= bwd)
    return np.where(keep, mag, 0.0)


def hysteresis(nmag, t_low, t_high):
    """Edges: pixels >= t_high plus >= t_low pixels 8-connected to them."""
    strong = nmag >= t_high
    weak = nmag >= t_low
    if not strong.any():
        return np.zeros(nmag.shape, dtype=bool)
    grown = ndimage.binary_dilation(
        strong, structure=np.ones((3, 3), dtype=bool), iterations=0, mask=weak
    )
    return grown


# ---------------------------------------------------------------------------
# binary morphology (square structuring element, separable)


def _shift_bool_1d(mask, delta, axis, fill):
    out = np.full(mask.shape, fill, dtype=bool)
    if delta == 0:
        out[...] = mask
        return out
    if axis == 1:
        if delta > 0:
            out[:, delta:] = mask[:, :-delta]
        else:
            out[:, :delta] = mask[:, -delta:]
    else:
        if delta > 0:
            out[delta:, :] = mask[:-delta, :]
        else:
            out[:delta, :] = mask[-delta:, :]
    return out


def dilate(mask, radius):
    """Square (2r+1)^2 dilation; pixels outside the frame are false."""
    acc = mask.copy()
    for d in range(1, radius + 1):
        acc |= _shift_bool_1d(mask, d, 1, False)
        acc |= _shift_bool_1d(mask, -d, 1, False)
    out = acc.copy()
    for d in range(1, radius + 1):
        out |= _shift_bool_1d(acc, d, 0, False)
        out |= _shift_bool_1d(acc, -d, 0, False)
    return out


def erode(mask, radius):
    """Square (2r+1)^2 erosion; the window is clipped at the frame border."""
    acc = mask.copy()
    for d in range(1, radius + 1):
        acc &= _shift_bool_1d(mask, d, 1, True)
        acc &= _shift_bool_1d(mask, -d, 1, True)
    out = acc.copy()
    for d in range(1, radius + 1):
        out &= _shift_bool_1d(acc, d, 0, True)
        out &= _shift_bool_1d(acc, -d, 0, True)
    return out


# ---------------------------------------------------------------------------
# connected components


def label_components(mask):
    """Label 8-connected components; 0 is background."""
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=np.int32))
    return labels.astype(np.int32), int(n)


# ---------------------------------------------------------------------------
# codebook background model


def codebook_train(ycbcr, eps, alpha, beta):
    """One training pass over a (T, H, W, 3) uint8 YCbCr stack.

    Returns per-pixel codeword arrays shaped (P, K): chroma running means,
    luma bounds, match frequency, max negative run length (internal gaps
    only; the caller adds the head/tail wrap), first/last seen frame index,
    plus the per-pixel codeword count (P,).
    """
    t_frames, h, w, _ = ycbcr.shape
    p = h * w
    cap = 4
    mean_cb = np.zeros((p, cap), dtype=np.float64)
    mean_cr = np.zeros((p, cap), dtype=np.float64)
    lo = np.zeros((p, cap), dtype=np.float64)
    hi = np.zeros((p, cap), dtype=np.float64)
    freq = np.zeros((p, cap), dtype=np.int32)
    mnrl = np.zeros((p, cap), dtype=np.int32)
    first = np.zeros((p, cap), dtype=np.int32)
    last = np.zeros((p, cap), dtype=np.int32)
    counts = np.zeros(p, dtype=np.int32)

    eps2 = eps * eps
    kidx = np.arange(cap)

    for t in range(t_frames):
        frame = ycbcr[t].reshape(p, 3)
        y = frame[:, 0].astype(np.float64)
        cb = frame[:, 1].astype(np.float64)
        cr = frame[:, 2].astype(np.float64)

        valid = kidx[np.newaxis, :] < counts[:, np.newaxis]
        dcb = cb[:, np.newaxis] - mean_cb
        dcr = cr[:, np.newaxis] - mean_cr
        ok = (
            valid
            & (dcb * dcb + dcr * dcr <= eps2)
            & (y[:, np.newaxis] >= alpha * lo)
            & (y[:, np.newaxis] <= np.minimum(beta * hi, 255.0))
        )
        has = ok.any(axis=1)
        kstar = ok.argmax(axis=1)

        pm = np.nonzero(has)[0]
        if pm.size:
            km = kstar[pm]
            f_new = freq[pm, km] + 1
            freq[pm, km] = f_new
            mean_cb[pm, km] += (cb[pm] - mean_cb[pm, km]) / f_new
            mean_cr[pm, km] += (cr[pm] - mean_cr[pm, km]) / f_new
            lo[pm, km] = np.minimum(lo[pm, km], y[pm])
            hi[pm, km] = np.maximum(hi[pm, km], y[pm])
            gap = t - last[pm, km] - 1
            mnrl[pm, km] = np.maximum(mnrl[pm, km], gap.astype(np.int32))
            last[pm, km] = t

        pu = np.nonzero(~has)[0]
        if pu.size:
            if counts[pu].max() >= cap:
                new_cap = cap * 2
                pad = ((0, 0), (0, new_cap - cap))
                mean_cb = np.pad(mean_cb, pad)
                mean_cr = np.pad(mean_cr, pad)
                lo = np.pad(lo, pad)
                hi = np.pad(hi, pad)
                freq = np.pad(freq, pad)
                mnrl = np.pad(mnrl, pad)
                first = np.pad(first, pad)
                last = np.pad(last, pad)
                cap = new_cap
                kidx = np.arange(cap)
            kn = counts[pu]
            mean_cb[pu, kn] = cb[pu]
            mean_cr[pu, kn] = cr[pu]
            lo[pu, kn] = y[pu]
            hi[pu, kn] = y[pu]
            freq[pu, kn] = 1
            mnrl[pu, kn] = 0
            first[pu, kn] = t
            last[pu, kn] = t
            counts[pu] += 1

    kmax = int(counts.max()) if p else 0
    return (
        mean_cb[:, :kmax],
        mean_cr[:, :kmax],
        lo[:, :kmax],
        hi[:, :kmax],
        freq[:, :kmax],
        mnrl[:, :kmax],
        first[:, :kmax],
        last[:, :kmax],
        counts,
    )


def codebook_extract(mean_cb, mean_cr, lo, hi, counts, ycbcr, eps, alpha, beta):
    """Foreground mask: true where no codeword matches the pixel."""
    h, w, _ = ycbcr.shape
    p = h * w
    frame = ycbcr.reshape(p, 3)
    y = frame[:, 0].astype(np.float64)
    cb = frame[:, 1].astype(np.float64)
    cr = frame[:, 2].astype(np.float64)
    kmax = mean_cb.shape[1]
    if kmax == 0:
        return np.ones((h, w), dtype=bool)
    eps2 = eps * eps
    valid = np.arange(kmax)[np.newaxis, :] < counts[:, np.newaxis]
    dcb = cb[:, np.newaxis] - mean_cb
    dcr = cr[:, np.newaxis] - mean_cr
    ok = (
        valid
        & (dcb * dcb + dcr * dcr <= eps2)
        & (y[:, np.newaxis] >= alpha * lo)
        & (y[:, np.newaxis] <= np.minimum(beta * hi, 255.0))
    )
    return (~ok.any(axis=1)).reshape(h, w)


# ---------------------------------------------------------------------------
# Viola-Jones cascade scan (one pyramid scale)


def vj_scan_scale(
    ii,
    ii2,
    win_w,
    win_h,
    step,
    rects,
    rect_weights,
    weak_rect_start,
    weak_split,
    weak_left,
    weak_right,
    stage_weak_start,
    stage_thresh,
):
    """Evaluate the cascade at every window position of one scale.

    ``rects`` is (R, 4) int32 already scaled to this window size; offsets
    are prefix arrays (weak i owns rects weak_rect_start[i]:weak_rect_start[i+1],
    stage s owns weaks stage_weak_start[s]:stage_weak_start[s+1]). Returns the
    boolean pass-grid over (y, x) scan positions.
    """
    img_h = ii.shape[0] - 1
    img_w = ii.shape[1] - 1
    xs = np.arange(0, img_w - win_w + 1, step)
    ys = np.arange(0, img_h - win_h + 1, step)
    if len(xs) == 0 or len(ys) == 0:
        return np.zeros((0, 0), dtype=bool)

    def rectsum(table, x0, y0, rw, rh):
        return (
            table[np.ix_(ys + y0 + rh, xs + x0 + rw)]
            - table[np.ix_(ys + y0 + rh, xs + x0)]
            - table[np.ix_(ys + y0, xs + x0 + rw)]
            + table[np.ix_(ys + y0, xs + x0)]
        )

    area = float(win_w * win_h)
    s1 = rectsum(ii, 0, 0, win_w, win_h).astype(np.float64)
    s2 = rectsum(ii2, 0, 0, win_w, win_h).astype(np.float64)
    mean = s1 / area
    var = s2 / area - mean * mean
    sd = np.where(var > 0.0, np.sqrt(np.where(var > 0.0, var, 1.0)), 0.0)
    denom = np.where(sd >= 1.0, sd, 1.0)
    norm = area * denom

    alive = np.ones((len(ys), len(xs)), dtype=bool)
    n_stages = len(stage_thresh)
    for s in range(n_stages):
        ssum = np.zeros((len(ys), len(xs)), dtype=np.float64)
        for wk in range(stage_weak_start[s], stage_weak_start[s + 1]):
            f = np.zeros((len(ys), len(xs)), dtype=np.float64)
            for r in range(weak_rect_start[wk], weak_rect_start[wk + 1]):
                rx, ry, rw, rh = rects[r]
                f += rect_weights[r] * rectsum(ii, rx, ry, rw, rh).astype(np.float64)
            fn = f / norm
            ssum += np.where(fn < weak_split[wk], weak_left[wk], weak_right[wk])
        alive &= ssum >= stage_thresh[s]
        if not alive.any():
            break
    return alive
