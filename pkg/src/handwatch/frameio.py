"""PPM/PGM frame files and directory-backed frame sources.

Frames live as frame_%06d.ppm (color) or .pgm (gray) in a directory;
binary (P5/P6) and ASCII (P2/P3) variants are accepted, maxval 255 only.
Timestamps are index/fps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgcore import Frame


class FrameIOError(ValueError):
    pass


_FRAME_RE = re.compile(r"^frame_(\d{6})\.(ppm|pgm)$")


def read_pnm(path) -> np.ndarray:
    """Read P2/P3/P5/P6 with maxval 255; returns (H, W) or (H, W, 3) uint8."""
    raw = Path(path).read_bytes()
    # header tokens: magic, width, height, maxval; '#' comments allowed
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(raw):
            raise FrameIOError(f"{path}: truncated header")
        ch = raw[pos : pos + 1]
        if ch == b"#":
            nl = raw.find(b"\n", pos)
            pos = len(raw) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(raw) and not raw[end : end + 1].isspace() and raw[end : end + 1] != b"#":
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    magic = tokens[0].decode("ascii")
    if magic not in ("P2", "P3", "P5", "P6"):
        raise FrameIOError(f"{path}: unsupported magic {magic}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise FrameIOError(f"{path}: unsupported maxval {maxval} (only 255)")
    channels = 3 if magic in ("P3", "P6") else 1
    count = width * height * channels
    if magic in ("P5", "P6"):
        pos += 1  # single whitespace byte after maxval
        data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos)
    else:
        vals = raw[pos:].split()
        if len(vals) < count:
            raise FrameIOError(f"{path}: expected {count} samples, got {len(vals)}")
        data = np.array([int(v) for v in vals[:count]], dtype=np.uint8)
    if channels == 3:
        return data.reshape(height, width, 3).copy()
    return data.reshape(height, width).copy()


def write_pnm(path, data: np.ndarray, binary: bool = True):
    """Write uint8 (H, W) as PGM or (H, W, 3) as PPM."""
    if data.dtype != np.uint8:
        raise FrameIOError("pnm data must be uint8")
    if data.ndim == 2:
        magic = "P5" if binary else "P2"
        h, w = data.shape
    elif data.ndim == 3 and data.shape[2] == 3:
        magic = "P6" if binary else "P3"
        h, w = data.shape[:2]
    else:
        raise FrameIOError(f"cannot write shape {data.shape}")
    header = f"{magic}\n{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            fh.write(np.ascontiguousarray(data).tobytes())
        else:
            flat = data.reshape(-1)
            lines = []
            for i in range(0, len(flat), 16):
                lines.append(" ".join(str(int(v)) for v in flat[i : i + 16]))
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


@dataclass
class FrameSource:
    """Ordered frame file list; timestamps are index/fps."""

    paths: list
    fps: float = 10.0

    def __post_init__(self):
        if self.fps <= 0:
            raise FrameIOError("fps must be positive")

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        for i, p in enumerate(self.paths):
            data = read_pnm(p)
            yield Frame(data, timestamp=i / self.fps)

    def frame(self, i: int) -> Frame:
        return Frame(read_pnm(self.paths[i]), timestamp=i / self.fps)


def load_frames(directory, fps: float = 10.0) -> FrameSource:
    """Scan a directory for frame_%06d.(ppm|pgm); indices must be contiguous."""
    d = Path(directory)
    found = {}
    for p in sorted(d.iterdir()):
        m = _FRAME_RE.match(p.name)
        if m:
            idx = int(m.group(1))
            if idx in found:
                raise FrameIOError(f"duplicate frame index {idx} in {d}")
            found[idx] = p
    if not found:
        raise FrameIOError(f"no frame_%06d.ppm/.pgm files in {d}")
    indices = sorted(found)
    lo, hi = indices[0], indices[-1]
    for i in range(lo, hi + 1):
        if i not in found:
            raise FrameIOError(f"missing frame file frame_{i:06d} in {d}")
    first = read_pnm(found[lo])
    for i in (lo, hi):
        shape = read_pnm(found[i]).shape[:2]
        if shape != first.shape[:2]:
            raise FrameIOError("frame dimensions differ within the sequence")
    return FrameSource([found[i] for i in range(lo, hi + 1)], fps)
