# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the per-pixel kernels.

Must stay bit-identical to handwatch.kernels.fallback: same float
expression order, floor(x + 0.5) rounding, floor-style integer division,
and the same tie-break conventions. The fallback module is the semantic
reference; consult it before changing anything here.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

NAME = "compiled"

cdef double _TAN_PI_8 = 0.41421356237309503


cdef inline cnp.uint8_t _round_u8(double x) nogil:
    cdef double v = floor(x + 0.5)
    if v < 0.0:
        return 0
    if v > 255.0:
        return 255
    return <cnp.uint8_t>v


# ---------------------------------------------------------------------------
# color conversion


def rgb_to_ycbcr(cnp.uint8_t[:, :, ::1] rgb):
    cdef Py_ssize_t h = rgb.shape[0], w = rgb.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double r, g, b, y, cb, cr
    with nogil:
        for i in range(h):
            for j in range(w):
                r = <double>rgb[i, j, 0]
                g = <double>rgb[i, j, 1]
                b = <double>rgb[i, j, 2]
                y = 0.299 * r + 0.587 * g + 0.114 * b
                cb = 128.0 + (b - y) / 1.772
                cr = 128.0 + (r - y) / 1.402
                out[i, j, 0] = _round_u8(y)
                out[i, j, 1] = _round_u8(cb)
                out[i, j, 2] = _round_u8(cr)
    return out_arr


def hue_bins(cnp.uint8_t[:, :, ::1] rgb, int nbins, int sat_min, int val_min):
    cdef Py_ssize_t h = rgb.shape[0], w = rgb.shape[1]
    bins_arr = np.zeros((h, w), dtype=np.int32)
    gate_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.int32_t[:, ::1] bins = bins_arr
    cdef cnp.uint8_t[:, ::1] gate = gate_arr
    cdef Py_ssize_t i, j
    cdef long r, g, b, mx, mn, c, t
    with nogil:
        for i in range(h):
            for j in range(w):
                r = rgb[i, j, 0]
                g = rgb[i, j, 1]
                b = rgb[i, j, 2]
                mx = r if r >= g else g
                if b > mx:
                    mx = b
                mn = r if r <= g else g
                if b < mn:
                    mn = b
                c = mx - mn
                if mx >= val_min and (mx - mn) * 255 >= sat_min * mx:
                    gate[i, j] = 1
                if c > 0:
                    if mx == r:
                        t = (g - b) % (6 * c)
                        if t < 0:
                            t += 6 * c
                    elif mx == g:
                        t = (b - r) + 2 * c
                    else:
                        t = (r - g) + 4 * c
                    bins[i, j] = <cnp.int32_t>((t * nbins) // (6 * c))
    return bins_arr, gate_arr.view(np.bool_)


# ---------------------------------------------------------------------------
# integral image


def integral_u8(cnp.uint8_t[:, ::1] gray, bint squared=False):
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    out_arr = np.zeros((h + 1, w + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t v, rowsum
    with nogil:
        for i in range(h):
            rowsum = 0
            for j in range(w):
                v = gray[i, j]
                if squared:
                    v = v * v
                rowsum += v
                out[i + 1, j + 1] = out[i, j + 1] + rowsum
    return out_arr


# ---------------------------------------------------------------------------
# separable Gaussian


def gaussian_blur_u8(cnp.uint8_t[:, ::1] gray, cnp.float64_t[::1] weights):
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    cdef Py_ssize_t r = (weights.shape[0] - 1) // 2
    tmp_arr = np.zeros((h, w), dtype=np.float64)
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef cnp.float64_t[:, ::1] tmp = tmp_arr
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, idx
    cdef double acc
    with nogil:
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for k in range(2 * r + 1):
                    idx = j + k - r
                    if idx < 0:
                        idx = 0
                    elif idx >= w:
                        idx = w - 1
                    acc += weights[k] * <double>gray[i, idx]
                tmp[i, j] = acc
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for k in range(2 * r + 1):
                    idx = i + k - r
                    if idx < 0:
                        idx = 0
                    elif idx >= h:
                        idx = h - 1
                    acc += weights[k] * tmp[idx, j]
                out[i, j] = _round_u8(acc)
    return out_arr


# ---------------------------------------------------------------------------
# Sobel / NMS / hysteresis


def sobel_u8(cnp.uint8_t[:, ::1] gray):
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    gx_arr = np.empty((h, w), dtype=np.int32)
    gy_arr = np.empty((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] gx = gx_arr
    cdef cnp.int32_t[:, ::1] gy = gy_arr
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef long a, b, c, d, e, f, g2, hh
    with nogil:
        for i in range(h):
            im = i - 1 if i > 0 else 0
            ip = i + 1 if i < h - 1 else h - 1
            for j in range(w):
                jm = j - 1 if j > 0 else 0
                jp = j + 1 if j < w - 1 else w - 1
                # neighbors: a=NW b=N c=NE / d=W e=E / f=SW g2=S hh=SE
                a = gray[im, jm]; b = gray[im, j]; c = gray[im, jp]
                d = gray[i, jm];                  e = gray[i, jp]
                f = gray[ip, jm]; g2 = gray[ip, j]; hh = gray[ip, jp]
                gx[i, j] = <cnp.int32_t>((c - a) + 2 * (e - d) + (hh - f))
                gy[i, j] = <cnp.int32_t>((f - a) + 2 * (g2 - b) + (hh - c))
    return gx_arr, gy_arr


def nms(cnp.float64_t[:, ::1] mag, cnp.int32_t[:, ::1] gx, cnp.int32_t[:, ::1] gy):
    cdef Py_ssize_t h = mag.shape[0], w = mag.shape[1]
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, ax, ay, fwd, bwd
    cdef int sx, sy, dx, dy
    cdef Py_ssize_t ny, nx
    with nogil:
        for i in range(h):
            for j in range(w):
                m = mag[i, j]
                if m <= 0.0:
                    continue
                ax = gx[i, j]
                if ax < 0:
                    ax = -ax
                ay = gy[i, j]
                if ay < 0:
                    ay = -ay
                sx = (gx[i, j] > 0) - (gx[i, j] < 0)
                sy = (gy[i, j] > 0) - (gy[i, j] < 0)
                if ay <= _TAN_PI_8 * ax:
                    dx = sx; dy = 0
                elif ax <= _TAN_PI_8 * ay:
                    dx = 0; dy = sy
                else:
                    dx = sx; dy = sy
                ny = i + dy; nx = j + dx
                if 0 <= ny < h and 0 <= nx < w:
                    fwd = mag[ny, nx]
                else:
                    fwd = 0.0
                ny = i - dy; nx = j - dx
                if 0 <= ny < h and 0 <= nx < w:
                    bwd = mag[ny, nx]
                else:
                    bwd = 0.0
                if m > fwd and m >= bwd:
                    out[i, j] = m
    return out_arr


def hysteresis(cnp.float64_t[:, ::1] nmag, double t_low, double t_high):
    cdef Py_ssize_t h = nmag.shape[0], w = nmag.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t i, j, ci, cj, ni, nj
    cdef int di, dj
    with nogil:
        for i in range(h):
            for j in range(w):
                if nmag[i, j] >= t_high:
                    out[i, j] = 1
                    stack[top] = i * w + j
                    top += 1
        while top > 0:
            top -= 1
            ci = stack[top] // w
            cj = stack[top] % w
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    if di == 0 and dj == 0:
                        continue
                    ni = ci + di
                    nj = cj + dj
                    if 0 <= ni < h and 0 <= nj < w and not out[ni, nj] and nmag[ni, nj] >= t_low:
                        out[ni, nj] = 1
                        stack[top] = ni * w + nj
                        top += 1
    return out_arr.view(np.bool_)


# ---------------------------------------------------------------------------
# binary morphology (separable square SE)


def dilate(mask, int radius):
    cdef cnp.uint8_t[:, ::1] src = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    acc_arr = np.zeros((h, w), dtype=np.uint8)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] acc = acc_arr
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, lo, hi
    with nogil:
        for i in range(h):
            for j in range(w):
                lo = j - radius
                if lo < 0:
                    lo = 0
                hi = j + radius
                if hi > w - 1:
                    hi = w - 1
                for k in range(lo, hi + 1):
                    if src[i, k]:
                        acc[i, j] = 1
                        break
        for i in range(h):
            for j in range(w):
                lo = i - radius
                if lo < 0:
                    lo = 0
                hi = i + radius
                if hi > h - 1:
                    hi = h - 1
                for k in range(lo, hi + 1):
                    if acc[k, j]:
                        out[i, j] = 1
                        break
    return out_arr.view(np.bool_)


def erode(mask, int radius):
    cdef cnp.uint8_t[:, ::1] src = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    acc_arr = np.ones((h, w), dtype=np.uint8)
    out_arr = np.ones((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] acc = acc_arr
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, lo, hi
    with nogil:
        for i in range(h):
            for j in range(w):
                lo = j - radius
                if lo < 0:
                    lo = 0
                hi = j + radius
                if hi > w - 1:
                    hi = w - 1
                for k in range(lo, hi + 1):
                    if not src[i, k]:
                        acc[i, j] = 0
                        break
        for i in range(h):
            for j in range(w):
                lo = i - radius
                if lo < 0:
                    lo = 0
                hi = i + radius
                if hi > h - 1:
                    hi = h - 1
                for k in range(lo, hi + 1):
                    if not acc[k, j]:
                        out[i, j] = 0
                        break
    return out_arr.view(np.bool_)


# ---------------------------------------------------------------------------
# connected components (8-connectivity, BFS in raster order)


def label_components(mask):
    cdef cnp.uint8_t[:, ::1] src = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head, tail
    cdef cnp.int32_t current = 0
    cdef Py_ssize_t i, j, ci, cj, ni, nj
    cdef int di, dj
    with nogil:
        for i in range(h):
            for j in range(w):
                if src[i, j] and labels[i, j] == 0:
                    current += 1
                    labels[i, j] = current
                    queue[0] = i * w + j
                    head = 0
                    tail = 1
                    while head < tail:
                        ci = queue[head] // w
                        cj = queue[head] % w
                        head += 1
                        for di in range(-1, 2):
                            for dj in range(-1, 2):
                                if di == 0 and dj == 0:
                                    continue
                                ni = ci + di
                                nj = cj + dj
                                if 0 <= ni < h and 0 <= nj < w and src[ni, nj] and labels[ni, nj] == 0:
                                    labels[ni, nj] = current
                                    queue[tail] = ni * w + nj
                                    tail += 1
    return labels_arr, int(current)


# ---------------------------------------------------------------------------
# codebook background model


def codebook_train(cnp.uint8_t[:, :, :, ::1] ycbcr, double eps, double alpha, double beta):
    cdef Py_ssize_t t_frames = ycbcr.shape[0]
    cdef Py_ssize_t h = ycbcr.shape[1], w = ycbcr.shape[2]
    cdef Py_ssize_t p = h * w
    cdef Py_ssize_t cap = 4

    mean_cb_arr = np.zeros((p, cap), dtype=np.float64)
    mean_cr_arr = np.zeros((p, cap), dtype=np.float64)
    lo_arr = np.zeros((p, cap), dtype=np.float64)
    hi_arr = np.zeros((p, cap), dtype=np.float64)
    freq_arr = np.zeros((p, cap), dtype=np.int32)
    mnrl_arr = np.zeros((p, cap), dtype=np.int32)
    first_arr = np.zeros((p, cap), dtype=np.int32)
    last_arr = np.zeros((p, cap), dtype=np.int32)
    counts_arr = np.zeros(p, dtype=np.int32)

    cdef cnp.float64_t[:, ::1] mean_cb = mean_cb_arr
    cdef cnp.float64_t[:, ::1] mean_cr = mean_cr_arr
    cdef cnp.float64_t[:, ::1] lo = lo_arr
    cdef cnp.float64_t[:, ::1] hi = hi_arr
    cdef cnp.int32_t[:, ::1] freq = freq_arr
    cdef cnp.int32_t[:, ::1] mnrl = mnrl_arr
    cdef cnp.int32_t[:, ::1] first = first_arr
    cdef cnp.int32_t[:, ::1] last = last_arr
    cdef cnp.int32_t[::1] counts = counts_arr

    cdef double eps2 = eps * eps
    cdef Py_ssize_t t, pi, pj, idx, k, kn
    cdef double y, cb, cr, dcb, dcr, cap255
    cdef cnp.int32_t f_new, gap
    cdef int matched
    cdef Py_ssize_t kmax_now = 0

    for t in range(t_frames):
        # grow capacity up-front if the next frame could overflow it
        if kmax_now >= cap:
            cap = cap * 2
            mean_cb_arr = np.concatenate([mean_cb_arr, np.zeros((p, cap - mean_cb_arr.shape[1]))], axis=1)
            mean_cr_arr = np.concatenate([mean_cr_arr, np.zeros((p, cap - mean_cr_arr.shape[1]))], axis=1)
            lo_arr = np.concatenate([lo_arr, np.zeros((p, cap - lo_arr.shape[1]))], axis=1)
            hi_arr = np.concatenate([hi_arr, np.zeros((p, cap - hi_arr.shape[1]))], axis=1)
            freq_arr = np.concatenate([freq_arr, np.zeros((p, cap - freq_arr.shape[1]), dtype=np.int32)], axis=1)
            mnrl_arr = np.concatenate([mnrl_arr, np.zeros((p, cap - mnrl_arr.shape[1]), dtype=np.int32)], axis=1)
            first_arr = np.concatenate([first_arr, np.zeros((p, cap - first_arr.shape[1]), dtype=np.int32)], axis=1)
            last_arr = np.concatenate([last_arr, np.zeros((p, cap - last_arr.shape[1]), dtype=np.int32)], axis=1)
            mean_cb = mean_cb_arr
            mean_cr = mean_cr_arr
            lo = lo_arr
            hi = hi_arr
            freq = freq_arr
            mnrl = mnrl_arr
            first = first_arr
            last = last_arr
        with nogil:
            for pi in range(h):
                for pj in range(w):
                    idx = pi * w + pj
                    y = <double>ycbcr[t, pi, pj, 0]
                    cb = <double>ycbcr[t, pi, pj, 1]
                    cr = <double>ycbcr[t, pi, pj, 2]
                    matched = 0
                    for k in range(counts[idx]):
                        dcb = cb - mean_cb[idx, k]
                        dcr = cr - mean_cr[idx, k]
                        if dcb * dcb + dcr * dcr <= eps2:
                            cap255 = beta * hi[idx, k]
                            if cap255 > 255.0:
                                cap255 = 255.0
                            if y >= alpha * lo[idx, k] and y <= cap255:
                                f_new = freq[idx, k] + 1
                                freq[idx, k] = f_new
                                mean_cb[idx, k] += (cb - mean_cb[idx, k]) / f_new
                                mean_cr[idx, k] += (cr - mean_cr[idx, k]) / f_new
                                if y < lo[idx, k]:
                                    lo[idx, k] = y
                                if y > hi[idx, k]:
                                    hi[idx, k] = y
                                gap = <cnp.int32_t>(t - last[idx, k] - 1)
                                if gap > mnrl[idx, k]:
                                    mnrl[idx, k] = gap
                                last[idx, k] = <cnp.int32_t>t
                                matched = 1
                                break
                    if not matched:
                        kn = counts[idx]
                        mean_cb[idx, kn] = cb
                        mean_cr[idx, kn] = cr
                        lo[idx, kn] = y
                        hi[idx, kn] = y
                        freq[idx, kn] = 1
                        mnrl[idx, kn] = 0
                        first[idx, kn] = <cnp.int32_t>t
                        last[idx, kn] = <cnp.int32_t>t
                        counts[idx] = <cnp.int32_t>(kn + 1)
                        if kn + 1 > kmax_now:
                            kmax_now = kn + 1
    kmax = int(counts_arr.max()) if p else 0
    return (
        mean_cb_arr[:, :kmax],
        mean_cr_arr[:, :kmax],
        lo_arr[:, :kmax],
        hi_arr[:, :kmax],
        freq_arr[:, :kmax],
        mnrl_arr[:, :kmax],
        first_arr[:, :kmax],
        last_arr[:, :kmax],
        counts_arr,
    )


def codebook_extract(
    cnp.float64_t[:, :] mean_cb,
    cnp.float64_t[:, :] mean_cr,
    cnp.float64_t[:, :] lo,
    cnp.float64_t[:, :] hi,
    cnp.int32_t[::1] counts,
    cnp.uint8_t[:, :, ::1] ycbcr,
    double eps,
    double alpha,
    double beta,
):
    cdef Py_ssize_t h = ycbcr.shape[0], w = ycbcr.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef double eps2 = eps * eps
    cdef Py_ssize_t i, j, idx, k
    cdef double y, cb, cr, dcb, dcr, cap255
    cdef int matched
    with nogil:
        for i in range(h):
            for j in range(w):
                idx = i * w + j
                y = <double>ycbcr[i, j, 0]
                cb = <double>ycbcr[i, j, 1]
                cr = <double>ycbcr[i, j, 2]
                matched = 0
                for k in range(counts[idx]):
                    dcb = cb - mean_cb[idx, k]
                    dcr = cr - mean_cr[idx, k]
                    if dcb * dcb + dcr * dcr <= eps2:
                        cap255 = beta * hi[idx, k]
                        if cap255 > 255.0:
                            cap255 = 255.0
                        if y >= alpha * lo[idx, k] and y <= cap255:
                            matched = 1
                            break
                if not matched:
                    out[i, j] = 1
    return out_arr.view(np.bool_)


# ---------------------------------------------------------------------------
# Viola-Jones cascade scan (one pyramid scale)


def vj_scan_scale(
    cnp.int64_t[:, ::1] ii,
    cnp.int64_t[:, ::1] ii2,
    int win_w,
    int win_h,
    int step,
    cnp.int32_t[:, ::1] rects,
    cnp.float64_t[::1] rect_weights,
    cnp.int32_t[::1] weak_rect_start,
    cnp.float64_t[::1] weak_split,
    cnp.float64_t[::1] weak_left,
    cnp.float64_t[::1] weak_right,
    cnp.int32_t[::1] stage_weak_start,
    cnp.float64_t[::1] stage_thresh,
):
    cdef Py_ssize_t img_h = ii.shape[0] - 1
    cdef Py_ssize_t img_w = ii.shape[1] - 1
    cdef Py_ssize_t nx = 0, ny = 0
    cdef Py_ssize_t x, y
    for x in range(0, img_w - win_w + 1, step):
        nx += 1
    for y in range(0, img_h - win_h + 1, step):
        ny += 1
    out_arr = np.zeros((ny, nx), dtype=np.uint8)
    if nx == 0 or ny == 0:
        return out_arr.view(np.bool_)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t iy, ix, s, wk, r
    cdef Py_ssize_t n_stages = stage_thresh.shape[0]
    cdef double area = <double>(win_w * win_h)
    cdef cnp.int64_t s1, s2, rs
    cdef double mean, var, sd, denom, norm, f, fn, ssum
    cdef int rx, ry, rw, rh
    cdef int passed
    with nogil:
        for iy in range(ny):
            y = iy * step
            for ix in range(nx):
                x = ix * step
                s1 = ii[y + win_h, x + win_w] - ii[y + win_h, x] - ii[y, x + win_w] + ii[y, x]
                s2 = ii2[y + win_h, x + win_w] - ii2[y + win_h, x] - ii2[y, x + win_w] + ii2[y, x]
                mean = <double>s1 / area
                var = <double>s2 / area - mean * mean
                if var > 0.0:
                    sd = sqrt(var)
                else:
                    sd = 0.0
                denom = sd if sd >= 1.0 else 1.0
                norm = area * denom
                passed = 1
                for s in range(n_stages):
                    ssum = 0.0
                    for wk in range(stage_weak_start[s], stage_weak_start[s + 1]):
                        f = 0.0
                        for r in range(weak_rect_start[wk], weak_rect_start[wk + 1]):
                            rx = rects[r, 0]
                            ry = rects[r, 1]
                            rw = rects[r, 2]
                            rh = rects[r, 3]
                            rs = (
                                ii[y + ry + rh, x + rx + rw]
                                - ii[y + ry + rh, x + rx]
                                - ii[y + ry, x + rx + rw]
                                + ii[y + ry, x + rx]
                            )
                            f += rect_weights[r] * <double>rs
                        fn = f / norm
                        if fn < weak_split[wk]:
                            ssum += weak_left[wk]
                        else:
                            ssum += weak_right[wk]
                    if not ssum >= stage_thresh[s]:
                        passed = 0
                        break
                if passed:
                    out[iy, ix] = 1
    return out_arr.view(np.bool_)
