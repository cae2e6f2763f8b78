"""16x16 output-stationary PE array with zero-skipping MAC accounting.

Each output tile claims the array, clears its accumulators, folds the whole
reduction in, then drains to the output map. A MAC slot executes only when
both operands are nonzero; skipped slots are tallied per PE. Operands are
8-bit, accumulation 32-bit (overflow is checked, not wrapped).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

ARRAY_DIM = 16
ARRAY_SIZE = ARRAY_DIM * ARRAY_DIM

ACC_MIN = -(1 << 31)
ACC_MAX = (1 << 31) - 1


@dataclass
class PeArray:
    """Accumulator state of the most recent tile plus cumulative skip counters."""

    accumulators: np.ndarray = field(
        default_factory=lambda: np.zeros((ARRAY_DIM, ARRAY_DIM), dtype=np.int64))
    skip_counters: np.ndarray = field(
        default_factory=lambda: np.zeros((ARRAY_DIM, ARRAY_DIM), dtype=np.int64))

    def clear(self) -> None:
        self.accumulators[:] = 0


@dataclass
class MacReport:
    """dense = total MAC slots; executed = both operands nonzero; skipped = rest."""

    dense: int = 0
    executed: int = 0
    pe_skip_counts: np.ndarray = field(
        default_factory=lambda: np.zeros((ARRAY_DIM, ARRAY_DIM), dtype=np.int64),
        repr=False)

    @property
    def skipped(self) -> int:
        return self.dense - self.executed

    def merge(self, other: "MacReport") -> "MacReport":
        return MacReport(dense=self.dense + other.dense,
                         executed=self.executed + other.executed,
                         pe_skip_counts=self.pe_skip_counts + other.pe_skip_counts)


def _check_acc_range(acc: np.ndarray) -> None:
    if acc.size and (acc.max() > ACC_MAX or acc.min() < ACC_MIN):
        raise OverflowError("accumulator exceeded signed 32-bit range")


def conv_output_shape(in_h: int, in_w: int, kernel: int, stride: int,
                      pad: int) -> tuple[int, int]:
    out_h = (in_h + 2 * pad - kernel) // stride + 1
    out_w = (in_w + 2 * pad - kernel) // stride + 1
    return out_h, out_w


def _im2col(activations: np.ndarray, kernel: int, stride: int,
            pad: int) -> tuple[np.ndarray, int, int]:
    c, h, w = activations.shape
    out_h, out_w = conv_output_shape(h, w, kernel, stride, pad)
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"kernel {kernel} with pad {pad} does not fit {h}x{w} input")
    padded = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.int64)
    padded[:, pad:pad + h, pad:pad + w] = activations
    cols = np.empty((c, kernel, kernel, out_h, out_w), dtype=np.int64)
    for ky in range(kernel):
        for kx in range(kernel):
            cols[:, ky, kx] = padded[:, ky:ky + stride * out_h:stride,
                                     kx:kx + stride * out_w:stride]
    return cols.reshape(c * kernel * kernel, out_h * out_w), out_h, out_w


def conv2d_output_stationary(
    activations: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray | None = None,
    stride: int = 1,
    pad: int = 0,
    pe_array: PeArray | None = None,
) -> tuple[np.ndarray, MacReport]:
    """Convolve int8 activations (C,H,W) with int8 weights (O,C,K,K).

    Returns raw int32 accumulator outputs (O,Ho,Wo) and the zero-skip
    ledger. Output pixels tile onto the 16x16 array per output channel.
    """
    if activations.ndim != 3 or weights.ndim != 4:
        raise ShapeMismatch(f"expected (C,H,W) and (O,C,K,K), got "
                            f"{activations.shape} and {weights.shape}")
    out_c, in_c, kernel, kernel2 = weights.shape
    if kernel != kernel2 or in_c != activations.shape[0]:
        raise ShapeMismatch(f"weights {weights.shape} do not match input {activations.shape}")
    if bias is not None and bias.shape != (out_c,):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({out_c},)")
    pe = pe_array if pe_array is not None else PeArray()

    cols, out_h, out_w = _im2col(activations, kernel, stride, pad)
    reduction = cols.shape[0]
    w_mat = weights.reshape(out_c, reduction).astype(np.int64)
    cols_nz = (cols != 0).astype(np.int64)
    w_nz = (w_mat != 0).astype(np.int64)

    out = np.empty((out_c, out_h * out_w), dtype=np.int64)
    executed_map = np.empty((out_c, out_h * out_w), dtype=np.int64)
    acc_flat = pe.accumulators.reshape(-1)
    skip_flat = pe.skip_counters.reshape(-1)
    for o in range(out_c):
        for ty in range(0, out_h, ARRAY_DIM):
            for tx in range(0, out_w, ARRAY_DIM):
                ys = np.arange(ty, min(ty + ARRAY_DIM, out_h))
                xs = np.arange(tx, min(tx + ARRAY_DIM, out_w))
                flat = (ys[:, None] * out_w + xs[None, :]).ravel()
                pe_idx = ((ys - ty)[:, None] * ARRAY_DIM + (xs - tx)[None, :]).ravel()
                pe.clear()
                acc = w_mat[o] @ cols[:, flat]
                executed = w_nz[o] @ cols_nz[:, flat]
                acc_flat[pe_idx] = acc
                skip_flat[pe_idx] += reduction - executed
                out[o, flat] = acc
                executed_map[o, flat] = executed

    if bias is not None:
        out += bias.astype(np.int64)[:, None]
    _check_acc_range(out)
    report = MacReport(dense=out_c * out_h * out_w * reduction,
                       executed=int(executed_map.sum()),
                       pe_skip_counts=pe.skip_counters.copy())
    return out.reshape(out_c, out_h, out_w).astype(np.int32), report


def fc_output_stationary(
    activations: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray | None = None,
    pe_array: PeArray | None = None,
) -> tuple[np.ndarray, MacReport]:
    """Fully connected layer: int8 vector (N,) times int8 weights (O,N)."""
    if activations.ndim != 1 or weights.ndim != 2:
        raise ShapeMismatch(f"expected (N,) and (O,N), got "
                            f"{activations.shape} and {weights.shape}")
    out_dim, in_dim = weights.shape
    if in_dim != activations.shape[0]:
        raise ShapeMismatch(f"weights {weights.shape} do not match input {activations.shape}")
    if bias is not None and bias.shape != (out_dim,):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({out_dim},)")
    pe = pe_array if pe_array is not None else PeArray()

    a = activations.astype(np.int64)
    w = weights.astype(np.int64)
    a_nz = (a != 0).astype(np.int64)
    w_nz = (w != 0).astype(np.int64)
    out = np.empty(out_dim, dtype=np.int64)
    executed = np.empty(out_dim, dtype=np.int64)
    for start in range(0, out_dim, ARRAY_SIZE):
        tile = slice(start, min(start + ARRAY_SIZE, out_dim))
        pe.clear()
        acc = w[tile] @ a
        out[tile] = acc
        executed[tile] = w_nz[tile] @ a_nz
        idx = np.arange(start, tile.stop) - start
        pe.accumulators.reshape(-1)[idx] = acc
        pe.skip_counters.reshape(-1)[idx] += in_dim - executed[tile]

    if bias is not None:
        out += bias.astype(np.int64)
    _check_acc_range(out)
    report = MacReport(dense=out_dim * in_dim, executed=int(executed.sum()),
                       pe_skip_counts=pe.skip_counters.copy())
    return out.astype(np.int32), report


def pool2d(activations: np.ndarray, window: int, stride: int,
           mode: str = "max") -> np.ndarray:
    """Max or average pooling over int8 activations (C,H,W).

    Average uses floor division of the int32 window sum.
    """
    c, h, w = activations.shape
    out_h = (h - window) // stride + 1
    out_w = (w - window) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"pool window {window} does not fit {h}x{w} input")
    windows = np.empty((c, window * window, out_h, out_w), dtype=np.int32)
    k = 0
    for wy in range(window):
        for wx in range(window):
            windows[:, k] = activations[:, wy:wy + stride * out_h:stride,
                                        wx:wx + stride * out_w:stride]
            k += 1
    if mode == "max":
        return windows.max(axis=1).astype(np.int8)
    if mode == "avg":
        return (windows.sum(axis=1) // (window * window)).astype(np.int8)
    raise ValueError(f"unknown pool mode {mode!r}")


def relu_requantize(acc: np.ndarray, scale: float, relu: bool) -> np.ndarray:
    """Map int32 accumulators to int8 by the layer's requant scale."""
    acc64 = acc.astype(np.int64)
    if relu:
        acc64 = np.maximum(acc64, 0)
    return np.clip(np.rint(acc64 * scale), -128, 127).astype(np.int8)
