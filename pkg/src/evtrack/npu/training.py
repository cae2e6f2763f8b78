"""Offline trainer for the toy classifier: float CNN in numpy, then
post-training quantization into the int8 blob the simulator executes.

Architecture mirrors the shipped model: three 3x3 convolutions with ReLU
and 2x2 max pooling, then a fully connected head. Training is plain SGD
with momentum on the synthetic two-class data and is deterministic given
the seed. This is tooling for regenerating the packaged blob, not part of
the pipeline runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import make_dataset
from .model import DEFAULT_CLASSES, CnnModel, ConvLayer, FcLayer, PoolLayer


@dataclass
class FloatParams:
    conv_w: list[np.ndarray]
    conv_b: list[np.ndarray]
    fc_w: np.ndarray
    fc_b: np.ndarray


def init_params(rng: np.random.Generator) -> FloatParams:
    def he(shape, fan_in):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), shape).astype(np.float64)

    conv_shapes = [(8, 1, 3, 3), (16, 8, 3, 3), (16, 16, 3, 3)]
    conv_w = [he(s, s[1] * 9) for s in conv_shapes]
    conv_b = [np.zeros(s[0]) for s in conv_shapes]
    return FloatParams(conv_w=conv_w, conv_b=conv_b,
                       fc_w=he((2, 256), 256), fc_b=np.zeros(2))


def _im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((n, c, k, k, h, w))
    for ky in range(k):
        for kx in range(k):
            cols[:, :, ky, kx] = xp[:, :, ky:ky + h, kx:kx + w]
    return cols.reshape(n, c * k * k, h * w)


def _col2im(dcols: np.ndarray, x_shape: tuple, k: int, pad: int) -> np.ndarray:
    n, c, h, w = x_shape
    d = dcols.reshape(n, c, k, k, h, w)
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad))
    for ky in range(k):
        for kx in range(k):
            dxp[:, :, ky:ky + h, kx:kx + w] += d[:, :, ky, kx]
    return dxp[:, :, pad:pad + h, pad:pad + w]


def conv_fwd(x, w, b):
    n = x.shape[0]
    o, c, k, _ = w.shape
    cols = _im2col(x, k, pad=1)
    out = np.einsum("or,nrp->nop", w.reshape(o, -1), cols) + b[None, :, None]
    return out.reshape(n, o, x.shape[2], x.shape[3]), cols


def conv_bwd(dout, cols, w, x_shape):
    n, o = dout.shape[:2]
    dflat = dout.reshape(n, o, -1)
    dw = np.einsum("nop,nrp->or", dflat, cols).reshape(w.shape)
    db = dflat.sum(axis=(0, 2))
    dcols = np.einsum("or,nop->nrp", w.reshape(o, -1), dflat)
    return _col2im(dcols, x_shape, w.shape[2], pad=1), dw, db


def pool_fwd(x):
    n, c, h, w = x.shape
    xr = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    xr = xr.reshape(n, c, h // 2, w // 2, 4)
    idx = xr.argmax(axis=-1)
    out = np.take_along_axis(xr, idx[..., None], axis=-1)[..., 0]
    return out, idx


def pool_bwd(dout, idx, x_shape):
    n, c, h, w = x_shape
    dxr = np.zeros((n, c, h // 2, w // 2, 4))
    np.put_along_axis(dxr, idx[..., None], dout[..., None], axis=-1)
    dxr = dxr.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return dxr.reshape(n, c, h, w)


def forward(params: FloatParams, x: np.ndarray, record_ranges: list | None = None):
    """Float forward pass; optionally records per-stage activation maxima."""
    caches = []
    a = x
    for w, b in zip(params.conv_w, params.conv_b):
        pre, cols = conv_fwd(a, w, b)
        post = np.maximum(pre, 0.0)
        pooled, idx = pool_fwd(post)
        caches.append((a.shape, cols, pre, idx, post.shape))
        if record_ranges is not None:
            record_ranges.append(float(np.abs(pooled).max()))
        a = pooled
    flat = a.reshape(a.shape[0], -1)
    logits = flat @ params.fc_w.T + params.fc_b
    caches.append((a.shape, flat))
    return logits, caches


def backward(params: FloatParams, caches, dlogits):
    grads = FloatParams(conv_w=[None] * 3, conv_b=[None] * 3, fc_w=None, fc_b=None)
    a_shape, flat = caches[-1]
    grads.fc_w = dlogits.T @ flat
    grads.fc_b = dlogits.sum(axis=0)
    da = (dlogits @ params.fc_w).reshape(a_shape)
    for i in range(2, -1, -1):
        x_shape, cols, pre, idx, post_shape = caches[i]
        dpost = pool_bwd(da, idx, post_shape)
        dpre = dpost * (pre > 0)
        da, dw, db = conv_bwd(dpre, cols, params.conv_w[i], x_shape)
        grads.conv_w[i] = dw
        grads.conv_b[i] = db
    return grads


def train_float(x: np.ndarray, y: np.ndarray, seed: int, epochs: int = 10,
                lr: float = 0.03, momentum: float = 0.9, batch: int = 32) -> FloatParams:
    rng = np.random.default_rng(seed)
    params = init_params(rng)
    vel = FloatParams(conv_w=[np.zeros_like(w) for w in params.conv_w],
                      conv_b=[np.zeros_like(b) for b in params.conv_b],
                      fc_w=np.zeros_like(params.fc_w), fc_b=np.zeros_like(params.fc_b))
    n = len(x)
    xf = x.astype(np.float64) / 255.0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            sel = order[start:start + batch]
            xb, yb = xf[sel], y[sel]
            logits, caches = forward(params, xb[:, None, :, :])
            shifted = logits - logits.max(axis=1, keepdims=True)
            probs = np.exp(shifted)
            probs /= probs.sum(axis=1, keepdims=True)
            dlogits = probs.copy()
            dlogits[np.arange(len(yb)), yb] -= 1.0
            dlogits /= len(yb)
            grads = backward(params, caches, dlogits)
            step = lr * (0.2 if epoch >= epochs - 3 else 1.0)
            triples = list(zip(params.conv_w + [params.fc_w] + params.conv_b + [params.fc_b],
                               vel.conv_w + [vel.fc_w] + vel.conv_b + [vel.fc_b],
                               grads.conv_w + [grads.fc_w] + grads.conv_b + [grads.fc_b]))
            for p, v, g in triples:
                v *= momentum
                v -= step * g
                p += v
    return params


def float_accuracy(params: FloatParams, x: np.ndarray, y: np.ndarray) -> float:
    logits, _ = forward(params, (x.astype(np.float64) / 255.0)[:, None, :, :])
    return float((logits.argmax(axis=1) == y).mean())


def _f32(value: float) -> float:
    return float(np.float32(value))


def quantize(params: FloatParams, calib_x: np.ndarray) -> CnnModel:
    """Post-training symmetric quantization calibrated on a sample batch.

    The float net consumes pixels/255 while the simulator consumes
    round(pixels * 127/255), so the input activation scale is 1/127 in
    float-net units.
    """
    ranges: list[float] = []
    forward(params, (calib_x.astype(np.float64) / 255.0)[:, None, :, :], record_ranges=ranges)

    layers: list = []
    s_in = 1.0 / 127.0
    for i, (w, b) in enumerate(zip(params.conv_w, params.conv_b)):
        s_w = max(float(np.abs(w).max()), 1e-12) / 127.0
        w_q = np.clip(np.rint(w / s_w), -127, 127).astype(np.int8)
        b_q = np.rint(b / (s_in * s_w)).astype(np.int32)
        s_out = max(ranges[i], 1e-12) / 127.0
        layers.append(ConvLayer(weights=w_q, bias=b_q,
                                scale=_f32(s_in * s_w / s_out), stride=1, pad=1, relu=True))
        layers.append(PoolLayer(window=2, stride=2, mode="max"))
        s_in = s_out
    s_w = max(float(np.abs(params.fc_w).max()), 1e-12) / 127.0
    w_q = np.clip(np.rint(params.fc_w / s_w), -127, 127).astype(np.int8)
    b_q = np.rint(params.fc_b / (s_in * s_w)).astype(np.int32)
    layers.append(FcLayer(weights=w_q, bias=b_q, scale=_f32(s_in * s_w)))
    return CnnModel(layers=layers, classes=DEFAULT_CLASSES)


def train_toy_model(seed: int = 7, n_per_class_per_kind: int = 300,
                    epochs: int = 10) -> tuple[CnnModel, float]:
    """Train on synthetic data and quantize; returns the model and its float
    holdout accuracy (the int8 path is evaluated by the test suite)."""
    x, y = make_dataset(n_per_class_per_kind, seed=seed)
    n_holdout = len(x) // 5
    x_train, y_train = x[:-n_holdout], y[:-n_holdout]
    x_hold, y_hold = x[-n_holdout:], y[-n_holdout:]
    params = train_float(x_train, y_train, seed=seed, epochs=epochs)
    acc = float_accuracy(params, x_hold, y_hold)
    model = quantize(params, x_train[:256])
    return model, acc
