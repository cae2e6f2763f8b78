"""Independent reference implementations used to check the package.

Everything here is deliberately written with different algorithms from the
code under test: BFS flood fill instead of union-find, pure-Python nested
loops instead of vectorized matmuls, exact Fractions instead of integer
division tricks.
"""

from collections import deque
from fractions import Fraction

import numpy as np


def flood_fill_components(bits: np.ndarray) -> set[tuple[tuple[int, int, int, int], int]]:
    """8-connectivity components as {(bbox, pixel_count)} via BFS."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    out = set()
    for y in range(h):
        for x in range(w):
            if not bits[y, x] or seen[y, x]:
                continue
            queue = deque([(x, y)])
            seen[y, x] = True
            xs, ys, count = [x], [y], 0
            while queue:
                cx, cy = queue.popleft()
                count += 1
                xs.append(cx)
                ys.append(cy)
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        nx, ny = cx + dx, cy + dy
                        if 0 <= nx < w and 0 <= ny < h and bits[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((nx, ny))
            out.add(((min(xs), min(ys), max(xs), max(ys)), count))
    return out


def brute_denoise(bits: np.ndarray) -> np.ndarray:
    """Per-pixel 8-neighborhood support filter, nested loops."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            if not bits[y, x]:
                continue
            support = 0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dy == 0 and dx == 0:
                        continue
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and bits[ny, nx]:
                        support += 1
            out[y, x] = support >= 1
    return out


def nested_loop_conv(act, weights, bias=None, stride=1, pad=0):
    """Plain-Python convolution; returns (out int list array, executed count)."""
    c_in, h, w = act.shape
    o_c, _, k, _ = weights.shape
    out_h = (h + 2 * pad - k) // stride + 1
    out_w = (w + 2 * pad - k) // stride + 1
    out = np.zeros((o_c, out_h, out_w), dtype=np.int64)
    executed = 0
    for o in range(o_c):
        for oy in range(out_h):
            for ox in range(out_w):
                acc = int(bias[o]) if bias is not None else 0
                for ci in range(c_in):
                    for ky in range(k):
                        for kx in range(k):
                            iy = oy * stride + ky - pad
                            ix = ox * stride + kx - pad
                            a = int(act[ci, iy, ix]) if 0 <= iy < h and 0 <= ix < w else 0
                            wv = int(weights[o, ci, ky, kx])
                            if a != 0 and wv != 0:
                                executed += 1
                            acc += a * wv
                out[o, oy, ox] = acc
    return out, executed


def nested_loop_fc(act, weights, bias=None):
    o_c, n = weights.shape
    out = np.zeros(o_c, dtype=np.int64)
    executed = 0
    for o in range(o_c):
        acc = int(bias[o]) if bias is not None else 0
        for i in range(n):
            a, wv = int(act[i]), int(weights[o, i])
            if a != 0 and wv != 0:
                executed += 1
            acc += a * wv
        out[o] = acc
    return out, executed


def fraction_line(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Reference line raster: round-half-up of exact rational interpolation."""
    n = max(abs(x1 - x0), abs(y1 - y0))
    if n == 0:
        return [(x0, y0)]
    pts = []
    for k in range(n + 1):
        fx = Fraction(x0) + Fraction(k * (x1 - x0), n)
        fy = Fraction(y0) + Fraction(k * (y1 - y0), n)
        pts.append((_round_half_up(fx), _round_half_up(fy)))
    return pts


def _round_half_up(f: Fraction) -> int:
    import math
    return math.floor(f + Fraction(1, 2))


def box_components(boxes: list[tuple[int, int, int, int]], margin: int) -> list[set[int]]:
    """Transitive closure of 'dilated boxes intersect' via BFS on the graph."""
    def dil(b):
        return (b[0] - margin, b[1] - margin, b[2] + margin, b[3] + margin)

    def hits(a, b):
        return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]

    n = len(boxes)
    dilated = [dil(b) for b in boxes]
    unvisited = set(range(n))
    groups = []
    while unvisited:
        seed = min(unvisited)
        group = {seed}
        frontier = deque([seed])
        unvisited.discard(seed)
        while frontier:
            i = frontier.popleft()
            for j in list(unvisited):
                if hits(dilated[i], dilated[j]):
                    unvisited.discard(j)
                    group.add(j)
                    frontier.append(j)
        groups.append(group)
    return groups


def quantized_forward_oracle(model, pixels: np.ndarray) -> np.ndarray:
    """Independent forward pass over a quantized model; returns float logits.

    Uses numpy directly (no tiling, no im2col sharing with the code under
    test) and plain loops for the convolutions.
    """
    from evtrack.npu.model import ConvLayer, FcLayer, PoolLayer

    act = np.rint(pixels.astype(np.float64) * 127.0 / 255.0).astype(np.int64)[None]
    logits = None
    for layer in model.layers:
        if isinstance(layer, ConvLayer):
            out, _ = nested_loop_conv(act, layer.weights, layer.bias,
                                      stride=layer.stride, pad=layer.pad)
            out = out.astype(np.float64)
            if layer.relu:
                out = np.maximum(out, 0)
            act = np.clip(np.rint(out * layer.scale), -128, 127).astype(np.int64)
        elif isinstance(layer, PoolLayer):
            c, h, w = act.shape
            oh = (h - layer.window) // layer.stride + 1
            ow = (w - layer.window) // layer.stride + 1
            nxt = np.zeros((c, oh, ow), dtype=np.int64)
            for ci in range(c):
                for y in range(oh):
                    for x in range(ow):
                        win = act[ci, y * layer.stride:y * layer.stride + layer.window,
                                  x * layer.stride:x * layer.stride + layer.window]
                        if layer.mode == "max":
                            nxt[ci, y, x] = win.max()
                        else:
                            nxt[ci, y, x] = win.sum() // (layer.window ** 2)
            act = nxt
        elif isinstance(layer, FcLayer):
            acc, _ = nested_loop_fc(act.reshape(-1), layer.weights, layer.bias)
            logits = acc.astype(np.float64) * layer.scale
    assert logits is not None
    return logits
