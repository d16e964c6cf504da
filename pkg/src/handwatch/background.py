"""Codebook background model.

A per-pixel list of codewords summarizes the chroma/luma history of a
training sequence in YCbCr; a pixel of a later frame is foreground when no
surviving codeword matches it. Chroma is matched by Euclidean radius around
the running (Cb, Cr) mean, luma must fall in [alpha*lo, min(beta*hi, 255)].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .imgcore import BinaryMask, Frame

MAGIC = b"CBK1"


class TrainingError(ValueError):
    """Empty or inconsistent training input."""


@dataclass
class CodebookParams:
    eps_train: float = 10.0
    eps_detect: float = 12.0
    alpha: float = 0.7
    beta: float = 1.3
    mnrl_prune_frac: float = 0.5

    def __post_init__(self):
        if not (self.eps_detect >= self.eps_train > 0):
            raise TrainingError("need eps_detect >= eps_train > 0")
        if not (0 < self.alpha <= 1 <= self.beta):
            raise TrainingError("need 0 < alpha <= 1 <= beta")
        if not (0 < self.mnrl_prune_frac <= 1):
            raise TrainingError("need 0 < mnrl_prune_frac <= 1")


@dataclass(frozen=True)
class Codeword:
    chroma: tuple[float, float]  # running (Cb, Cr) means
    luma_lo: int
    luma_hi: int
    freq: int
    mnrl: int
    first_seen: int
    last_seen: int


@dataclass
class CodebookModel:
    """Immutable after training; arrays are padded to (H*W, K) with a count per pixel."""

    width: int
    height: int
    params: CodebookParams
    mean_cb: np.ndarray  # (P, K) float64
    mean_cr: np.ndarray
    luma_lo: np.ndarray  # (P, K) float64, integer-valued
    luma_hi: np.ndarray
    freq: np.ndarray  # (P, K) int32
    mnrl: np.ndarray
    first_seen: np.ndarray
    last_seen: np.ndarray
    counts: np.ndarray  # (P,) int32
    train_len: int = field(default=0)

    def codewords_at(self, x: int, y: int) -> list[Codeword]:
        p = y * self.width + x
        out = []
        for k in range(int(self.counts[p])):
            out.append(
                Codeword(
                    (float(self.mean_cb[p, k]), float(self.mean_cr[p, k])),
                    int(self.luma_lo[p, k]),
                    int(self.luma_hi[p, k]),
                    int(self.freq[p, k]),
                    int(self.mnrl[p, k]),
                    int(self.first_seen[p, k]),
                    int(self.last_seen[p, k]),
                )
            )
        return out


def codeword_match(p_ycbcr, cw: Codeword, eps: float, alpha: float, beta: float) -> bool:
    """True iff chroma is within eps of the codeword mean and luma in bounds."""
    y, cb, cr = (float(c) for c in p_ycbcr)
    dcb = cb - cw.chroma[0]
    dcr = cr - cw.chroma[1]
    if dcb * dcb + dcr * dcr > eps * eps:
        return False
    return alpha * cw.luma_lo <= y <= min(beta * cw.luma_hi, 255.0)


def _to_ycbcr_stack(frames: list[Frame]) -> np.ndarray:
    k = kernels.active()
    h, w = frames[0].height, frames[0].width
    stack = np.empty((len(frames), h, w, 3), dtype=np.uint8)
    for i, f in enumerate(frames):
        if (f.height, f.width) != (h, w):
            raise TrainingError("mixed frame dimensions in training sequence")
        if f.channels == 3:
            stack[i] = k.rgb_to_ycbcr(f.data)
        else:
            stack[i, ..., 0] = f.data
            stack[i, ..., 1] = 128
            stack[i, ..., 2] = 128
    return stack


def train_codebook(frames: list[Frame], params: CodebookParams | None = None) -> CodebookModel:
    """Build the static background model from a training sequence.

    After the matching pass, each codeword's max negative run length is
    extended by the wrap gap (tail after last_seen plus head before
    first_seen) and codewords with mnrl > mnrl_prune_frac * T are dropped.
    A pixel whose codewords would all be pruned keeps its smallest-mnrl one
    so every pixel retains at least one codeword.
    """
    params = params or CodebookParams()
    if not frames:
        raise TrainingError("empty training sequence")
    stack = _to_ycbcr_stack(list(frames))
    t_frames, h, w, _ = stack.shape
    k = kernels.active()
    (mean_cb, mean_cr, lo, hi, freq, mnrl, first, last, counts) = k.codebook_train(
        stack, params.eps_train, params.alpha, params.beta
    )

    kmax = mean_cb.shape[1]
    kidx = np.arange(kmax)[np.newaxis, :]
    valid = kidx < counts[:, np.newaxis]
    wrap = (t_frames - 1 - last) + first
    mnrl = np.where(valid, np.maximum(mnrl, wrap.astype(np.int32)), 0).astype(np.int32)

    limit = params.mnrl_prune_frac * t_frames
    keep = valid & (mnrl <= limit)
    # never empty a pixel: keep its lowest-mnrl codeword (lowest index on ties)
    dead = valid.any(axis=1) & ~keep.any(axis=1)
    if dead.any():
        mn = np.where(valid, mnrl, np.iinfo(np.int32).max)
        best = mn.argmin(axis=1)
        keep[dead, best[dead]] = True

    model = CodebookModel(
        w, h, params,
        *_compact(keep, mean_cb, mean_cr, lo, hi, freq, mnrl, first, last),
        train_len=t_frames,
    )
    return model


def _compact(keep, *arrays):
    """Left-pack the kept codewords of each pixel; returns arrays + counts."""
    p, kmax = keep.shape
    new_counts = keep.sum(axis=1).astype(np.int32)
    new_kmax = int(new_counts.max()) if p else 0
    order = np.argsort(~keep, axis=1, kind="stable")[:, :new_kmax]
    rows = np.arange(p)[:, np.newaxis]
    slot_valid = np.arange(new_kmax)[np.newaxis, :] < new_counts[:, np.newaxis]
    out = []
    for a in arrays:
        packed = a[rows, order]
        packed[~slot_valid] = 0
        out.append(np.ascontiguousarray(packed))
    out.append(new_counts)
    return out


def extract_foreground(model: CodebookModel, frame: Frame) -> BinaryMask:
    """First binary mask: true where no codeword matches under eps_detect."""
    if (frame.height, frame.width) != (model.height, model.width):
        raise TrainingError("frame dimensions do not match the model")
    k = kernels.active()
    if frame.channels == 3:
        ycbcr = k.rgb_to_ycbcr(frame.data)
    else:
        ycbcr = np.empty((frame.height, frame.width, 3), dtype=np.uint8)
        ycbcr[..., 0] = frame.data
        ycbcr[..., 1] = 128
        ycbcr[..., 2] = 128
    fg = k.codebook_extract(
        model.mean_cb,
        model.mean_cr,
        model.luma_lo,
        model.luma_hi,
        model.counts,
        ycbcr,
        model.params.eps_detect,
        model.params.alpha,
        model.params.beta,
    )
    return BinaryMask(fg)


# ---------------------------------------------------------------------------
# persistence: little-endian binary, magic CBK1

_HEADER = struct.Struct("<4sIIq5d")  # magic, width, height, train_len, params
# codeword record, packed little-endian, field order as in Codeword
_CWDTYPE = np.dtype(
    [
        ("cb", "<f8"), ("cr", "<f8"),
        ("lo", "u1"), ("hi", "u1"),
        ("freq", "<i4"), ("mnrl", "<i4"),
        ("first", "<i4"), ("last", "<i4"),
    ]
)


def save_codebook(model: CodebookModel, path):
    p = model.params
    counts = model.counts
    kmax = model.mean_cb.shape[1]
    valid = np.arange(kmax)[np.newaxis, :] < counts[:, np.newaxis]
    recs = np.empty(int(counts.sum()), dtype=_CWDTYPE)
    recs["cb"] = model.mean_cb[valid]
    recs["cr"] = model.mean_cr[valid]
    recs["lo"] = model.luma_lo[valid].astype(np.uint8)
    recs["hi"] = model.luma_hi[valid].astype(np.uint8)
    recs["freq"] = model.freq[valid]
    recs["mnrl"] = model.mnrl[valid]
    recs["first"] = model.first_seen[valid]
    recs["last"] = model.last_seen[valid]
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC, model.width, model.height, model.train_len,
                p.eps_train, p.eps_detect, p.alpha, p.beta, p.mnrl_prune_frac,
            )
        )
        fh.write(counts.astype("<u2").tobytes())
        fh.write(recs.tobytes())


def load_codebook(path) -> CodebookModel:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, width, height, train_len, e_t, e_d, alpha, beta, frac = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise TrainingError(f"bad codebook magic {magic!r}")
        params = CodebookParams(e_t, e_d, alpha, beta, frac)
        p = width * height
        counts = np.frombuffer(fh.read(2 * p), dtype="<u2").astype(np.int32)
        recs = np.frombuffer(fh.read(), dtype=_CWDTYPE)
    if len(recs) != int(counts.sum()):
        raise TrainingError("truncated codebook file")
    kmax = int(counts.max()) if p else 0
    valid = np.arange(kmax)[np.newaxis, :] < counts[:, np.newaxis]

    def unpack(name, dtype):
        arr = np.zeros((p, kmax), dtype=dtype)
        arr[valid] = recs[name]
        return arr

    return CodebookModel(
        width, height, params,
        unpack("cb", np.float64), unpack("cr", np.float64),
        unpack("lo", np.float64), unpack("hi", np.float64),
        unpack("freq", np.int32), unpack("mnrl", np.int32),
        unpack("first", np.int32), unpack("last", np.int32),
        counts, train_len=train_len,
    )
