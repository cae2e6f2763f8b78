"""Binary event frame reconstruction and denoising (ESP front end).

Frames accumulate event presence over a temporal window: one bit per pixel,
set iff at least one event of either polarity fell on it. The denoiser is an
8-neighbor support filter evaluated on the input frame: a pixel survives iff
at least one of its 8 neighbors is also set. Pure functions, thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .events import Event, SensorGeometry


@dataclass(frozen=True)
class BinaryEventFrame:
    geometry: SensorGeometry
    t_start: int
    t_end: int
    bits: np.ndarray = field(repr=False)  # bool, shape (height, width), row-major

    def __post_init__(self) -> None:
        if self.t_start >= self.t_end:
            raise ValueError(f"t_start {self.t_start} must precede t_end {self.t_end}")
        if self.bits.shape != (self.geometry.height, self.geometry.width):
            raise ValueError(f"bitmap shape {self.bits.shape} does not match geometry")
        if self.bits.dtype != np.bool_:
            raise ValueError("bitmap must be boolean")

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryEventFrame):
            return NotImplemented
        return (self.geometry == other.geometry and self.t_start == other.t_start
                and self.t_end == other.t_end and np.array_equal(self.bits, other.bits))


def build_frame(events: Iterable[Event], geometry: SensorGeometry,
                t_start: int, t_end: int) -> BinaryEventFrame:
    """Set bit (x, y) for every event coordinate in [t_start, t_end).

    Polarity is ignored; duplicate coordinates collapse to one bit. An empty
    window is not an error and yields an all-zero frame.
    """
    bits = np.zeros((geometry.height, geometry.width), dtype=np.bool_)
    for e in events:
        if not (t_start <= e.t < t_end):
            raise ValueError(f"event at t={e.t} outside window [{t_start},{t_end})")
        if not geometry.contains(e.x, e.y):
            raise ValueError(f"event at ({e.x},{e.y}) outside geometry")
        bits[e.y, e.x] = True
    return BinaryEventFrame(geometry=geometry, t_start=t_start, t_end=t_end, bits=bits)


def neighbor_counts(bits: np.ndarray) -> np.ndarray:
    """Count of set pixels among each pixel's 8 neighbors (edges see fewer)."""
    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = bits
    counts = np.zeros((h, w), dtype=np.uint8)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            counts += padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]
    return counts


def denoise_frame(frame: BinaryEventFrame) -> BinaryEventFrame:
    """Drop pixels with no set 8-neighbor in the input frame (non-iterated)."""
    keep = frame.bits & (neighbor_counts(frame.bits) >= 1)
    return BinaryEventFrame(geometry=frame.geometry, t_start=frame.t_start,
                            t_end=frame.t_end, bits=keep)


def save_pbm(bits: np.ndarray, path: str | Path) -> None:
    """Write a boolean bitmap as binary PBM (P4)."""
    h, w = bits.shape
    packed = np.packbits(bits.astype(np.uint8), axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())


def load_pbm(path: str | Path) -> np.ndarray:
    """Read a P1 or P4 PBM into a boolean array."""
    data = Path(path).read_bytes()
    magic, rest = data[:2], data[2:]
    if magic == b"P1":
        tokens = _pnm_tokens(rest)
        w, h = int(tokens[0]), int(tokens[1])
        flat = np.array([int(t) for t in tokens[2:2 + w * h]], dtype=np.uint8)
        return flat.reshape(h, w).astype(np.bool_)
    if magic == b"P4":
        header, raw = _split_pnm_header(rest, n_fields=2)
        w, h = header
        rows = np.frombuffer(raw, dtype=np.uint8).reshape(h, -1)
        return np.unpackbits(rows, axis=1)[:, :w].astype(np.bool_)
    raise ValueError(f"not a PBM file: magic {magic!r}")


def save_pgm(pixels: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.astype(np.uint8).tobytes())


def load_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"not a binary PGM file: magic {data[:2]!r}")
    header, raw = _split_pnm_header(data[2:], n_fields=3)
    w, h, maxval = header
    if maxval > 255:
        raise ValueError("16-bit PGM not supported")
    return np.frombuffer(raw[:w * h], dtype=np.uint8).reshape(h, w).copy()


def _pnm_tokens(data: bytes) -> list[str]:
    out: list[str] = []
    for line in data.decode("ascii").splitlines():
        line = line.split("#", 1)[0]
        out.extend(line.split())
    return out


def _split_pnm_header(data: bytes, n_fields: int) -> tuple[list[int], bytes]:
    fields: list[int] = []
    i = 0
    while len(fields) < n_fields:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        fields.append(int(data[i:j]))
        i = j
    return fields, data[i + 1:]
