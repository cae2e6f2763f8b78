"""Run-length encoding of frame rows into slices, the RPU's input unit.

A slice is one maximal horizontal run of set pixels: ``(row, x_start,
x_end)`` with an inclusive right edge. ``encode_frame`` emits slices in
(row, x_start) order; ``decode_slices`` is its exact inverse on canonical
slice lists. Pure functions, thread-safe.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import OverlappingSlices
from .events import SensorGeometry
from .frames import BinaryEventFrame


class Slice(NamedTuple):
    row: int
    x_start: int
    x_end: int  # inclusive

    @property
    def length(self) -> int:
        return self.x_end - self.x_start + 1


def encode_bits(bits: np.ndarray) -> list[Slice]:
    """Maximal runs of set pixels per row, ordered by (row, x_start)."""
    h, w = bits.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = bits
    delta = np.diff(padded, axis=1)
    start_rows, start_cols = np.nonzero(delta == 1)
    end_cols = np.nonzero(delta == -1)[1]
    # nonzero is row-major, so starts and ends pair up within each row
    return list(map(Slice._make, zip(start_rows.tolist(), start_cols.tolist(),
                                     (end_cols - 1).tolist())))


def encode_frame(frame: BinaryEventFrame) -> list[Slice]:
    return encode_bits(frame.bits)


def decode_slices(slices: list[Slice], geometry: SensorGeometry,
                  t_start: int = 0, t_end: int = 1) -> BinaryEventFrame:
    """Paint slices back into a frame; the exact inverse of encode_frame.

    Raises OverlappingSlices if two slices in one row intersect, and
    ValueError for degenerate slices or slices outside the geometry.
    """
    bits = np.zeros((geometry.height, geometry.width), dtype=np.bool_)
    if not slices:
        return BinaryEventFrame(geometry=geometry, t_start=t_start, t_end=t_end, bits=bits)

    rows = np.fromiter((s.row for s in slices), dtype=np.int64, count=len(slices))
    starts = np.fromiter((s.x_start for s in slices), dtype=np.int64, count=len(slices))
    ends = np.fromiter((s.x_end for s in slices), dtype=np.int64, count=len(slices))

    if (starts > ends).any():
        bad = int(np.argmax(starts > ends))
        raise ValueError(f"slice {slices[bad]} has x_start > x_end")
    if ((rows < 0) | (rows >= geometry.height) | (starts < 0)
            | (ends >= geometry.width)).any():
        bad = int(np.argmax((rows < 0) | (rows >= geometry.height) | (starts < 0)
                            | (ends >= geometry.width)))
        raise ValueError(f"slice {slices[bad]} outside "
                         f"{geometry.width}x{geometry.height}")

    order = np.lexsort((starts, rows))
    r_sorted, s_sorted, e_sorted = rows[order], starts[order], ends[order]
    same_row = r_sorted[1:] == r_sorted[:-1]
    if (same_row & (s_sorted[1:] <= e_sorted[:-1])).any():
        bad = int(np.argmax(same_row & (s_sorted[1:] <= e_sorted[:-1])))
        raise OverlappingSlices(f"slices {slices[order[bad]]} and "
                                f"{slices[order[bad + 1]]} intersect")

    lengths = ends - starts + 1
    flat_starts = rows * geometry.width + starts
    offsets = np.arange(int(lengths.sum())) - np.repeat(
        np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
    bits.ravel()[np.repeat(flat_starts, lengths) + offsets] = True
    return BinaryEventFrame(geometry=geometry, t_start=t_start, t_end=t_end, bits=bits)
