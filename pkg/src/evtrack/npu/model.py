"""Quantized CNN model container and the versioned weight blob format.

Blob layout (little-endian): magic ``NPU1``, u32 layer count, then per
layer a u8 type tag (0 conv, 1 pool, 2 fc), u8 dim count, that many u32
dims, the requant scale as float32, a u64 payload byte length, and the
payload (int8 weights followed by int32 biases; empty for pool layers).
Conv dims are (out_c, in_c, k, k, stride, pad, relu); pool dims are
(window, stride, mode); fc dims are (out_dim, in_dim, relu).
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ModelShapeMismatch
from .array import conv_output_shape

BLOB_MAGIC = b"NPU1"
INPUT_SIDE = 32
DEFAULT_CLASSES = ("uav", "non_uav")

_LAYER_CONV = 0
_LAYER_POOL = 1
_LAYER_FC = 2


@dataclass(eq=False)
class ConvLayer:
    weights: np.ndarray  # int8 (O, C, K, K)
    bias: np.ndarray     # int32 (O,)
    scale: float         # requant multiplier applied to the int32 accumulator
    stride: int = 1
    pad: int = 1
    relu: bool = True


@dataclass(eq=False)
class PoolLayer:
    window: int = 2
    stride: int = 2
    mode: str = "max"


@dataclass(eq=False)
class FcLayer:
    weights: np.ndarray  # int8 (O, N)
    bias: np.ndarray     # int32 (O,)
    scale: float         # dequant multiplier: logits = acc * scale


Layer = ConvLayer | PoolLayer | FcLayer


@dataclass(eq=False)
class CnnModel:
    layers: list[Layer]
    classes: tuple[str, ...] = DEFAULT_CLASSES
    input_shape: tuple[int, int, int] = (1, INPUT_SIDE, INPUT_SIDE)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Check the layer shape chain; raises ModelShapeMismatch."""
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            shape = _propagate(shape, layer, i)
        if not isinstance(self.layers[-1], FcLayer):
            raise ModelShapeMismatch("model must end with a fully connected layer")
        if shape[0] != len(self.classes):
            raise ModelShapeMismatch(f"final layer emits {shape[0]} logits for "
                                     f"{len(self.classes)} classes")

    def input_shapes(self) -> list[tuple[int, ...]]:
        """Input shape seen by each layer, in order."""
        shapes = []
        shape: tuple[int, ...] = self.input_shape
        for i, layer in enumerate(self.layers):
            shapes.append(shape)
            shape = _propagate(shape, layer, i)
        return shapes

    def weighted_layers(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if not isinstance(l, PoolLayer)]

    def layer_payload_bytes(self, index: int) -> int:
        layer = self.layers[index]
        if isinstance(layer, PoolLayer):
            return 0
        return layer.weights.size + 4 * layer.bias.size


def _propagate(shape: tuple[int, ...], layer: Layer, index: int) -> tuple[int, ...]:
    if isinstance(layer, ConvLayer):
        if len(shape) != 3 or shape[0] != layer.weights.shape[1]:
            raise ModelShapeMismatch(f"layer {index}: conv expects "
                                     f"{layer.weights.shape[1]} channels, input is {shape}")
        out_h, out_w = conv_output_shape(shape[1], shape[2], layer.weights.shape[2],
                                         layer.stride, layer.pad)
        if out_h < 1 or out_w < 1:
            raise ModelShapeMismatch(f"layer {index}: kernel does not fit {shape}")
        return (layer.weights.shape[0], out_h, out_w)
    if isinstance(layer, PoolLayer):
        if len(shape) != 3:
            raise ModelShapeMismatch(f"layer {index}: pool needs a feature map, got {shape}")
        out_h = (shape[1] - layer.window) // layer.stride + 1
        out_w = (shape[2] - layer.window) // layer.stride + 1
        if out_h < 1 or out_w < 1:
            raise ModelShapeMismatch(f"layer {index}: pool window does not fit {shape}")
        return (shape[0], out_h, out_w)
    if isinstance(layer, FcLayer):
        flat = int(np.prod(shape))
        if flat != layer.weights.shape[1]:
            raise ModelShapeMismatch(f"layer {index}: fc expects {layer.weights.shape[1]} "
                                     f"inputs, feature map flattens to {flat}")
        return (layer.weights.shape[0],)
    raise ModelShapeMismatch(f"layer {index}: unknown layer type {type(layer).__name__}")


def quantize_input(pixels: np.ndarray) -> np.ndarray:
    """Map uint8 pixels onto non-negative int8 activations (0..127)."""
    return np.rint(pixels.astype(np.float64) * 127.0 / 255.0).astype(np.int8)


def save_blob(model: CnnModel, path: str | Path) -> None:
    buf = bytearray(BLOB_MAGIC)
    buf += struct.pack("<I", len(model.layers))
    for layer in model.layers:
        if isinstance(layer, ConvLayer):
            tag = _LAYER_CONV
            dims = (*layer.weights.shape, layer.stride, layer.pad, int(layer.relu))
            payload = (layer.weights.astype(np.int8).tobytes()
                       + layer.bias.astype("<i4").tobytes())
            scale = layer.scale
        elif isinstance(layer, PoolLayer):
            tag = _LAYER_POOL
            dims = (layer.window, layer.stride, 1 if layer.mode == "avg" else 0)
            payload = b""
            scale = 1.0
        else:
            tag = _LAYER_FC
            dims = (*layer.weights.shape, 0)
            payload = (layer.weights.astype(np.int8).tobytes()
                       + layer.bias.astype("<i4").tobytes())
            scale = layer.scale
        buf += struct.pack("<BB", tag, len(dims))
        buf += struct.pack(f"<{len(dims)}I", *dims)
        buf += struct.pack("<f", scale)
        buf += struct.pack("<Q", len(payload))
        buf += payload
    Path(path).write_bytes(bytes(buf))


def load_blob(path: str | Path, classes: tuple[str, ...] = DEFAULT_CLASSES) -> CnnModel:
    data = Path(path).read_bytes()
    if data[:4] != BLOB_MAGIC:
        raise ValueError(f"not a weight blob: magic {data[:4]!r}")
    (n_layers,) = struct.unpack_from("<I", data, 4)
    offset = 8
    layers: list[Layer] = []
    for _ in range(n_layers):
        tag, ndim = struct.unpack_from("<BB", data, offset)
        offset += 2
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        (scale,) = struct.unpack_from("<f", data, offset)
        offset += 4
        (nbytes,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        payload = data[offset:offset + nbytes]
        offset += nbytes
        if tag == _LAYER_CONV:
            o, c, k, k2, stride, pad, relu = dims
            w_len = o * c * k * k2
            weights = np.frombuffer(payload[:w_len], dtype=np.int8).reshape(o, c, k, k2)
            bias = np.frombuffer(payload[w_len:], dtype="<i4").astype(np.int32)
            layers.append(ConvLayer(weights=weights.copy(), bias=bias, scale=float(scale),
                                    stride=stride, pad=pad, relu=bool(relu)))
        elif tag == _LAYER_POOL:
            window, stride, mode = dims
            layers.append(PoolLayer(window=window, stride=stride,
                                    mode="avg" if mode else "max"))
        elif tag == _LAYER_FC:
            o, n, _ = dims
            weights = np.frombuffer(payload[:o * n], dtype=np.int8).reshape(o, n)
            bias = np.frombuffer(payload[o * n:], dtype="<i4").astype(np.int32)
            layers.append(FcLayer(weights=weights.copy(), bias=bias, scale=float(scale)))
        else:
            raise ValueError(f"unknown layer tag {tag}")
    return CnnModel(layers=layers, classes=classes)


_default_model: CnnModel | None = None
_default_lock = threading.Lock()


def default_model() -> CnnModel:
    """The packaged toy classifier, loaded once."""
    global _default_model
    with _default_lock:
        if _default_model is None:
            blob = resources.files("evtrack.npu").joinpath("data/toy_cnn.npu")
            with resources.as_file(blob) as path:
                _default_model = load_blob(path)
        return _default_model
