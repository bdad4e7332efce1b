"""Feedforward weight stack, forward map, SSE and the ``.pilnet`` file format.

Layout of a ``.pilnet`` file (all integers little-endian)::

    magic        6 bytes   b"PILNET"
    version      uint16
    header_len   uint32
    header       UTF-8 JSON: layer shapes, activations, bias policy, meta
    payload      float64 LE, each layer row-major, in layer order

Nothing may follow the payload.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .activation import Activation, apply
from .errors import ConfigError, FormatError, ShapeMismatch
from .linalg import as_matrix, frobenius_error

MAGIC = b"PILNET"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<6sHI")


@dataclass(frozen=True)
class BiasPolicy:
    # input rows are expected to carry a leading constant-1 column
    input_bias: bool = True
    # a constant-1 column is prepended to every hidden output
    hidden_bias: bool = False

    def to_dict(self) -> dict:
        return {"input_bias": self.input_bias, "hidden_bias": self.hidden_bias}


@dataclass
class PilNetwork:
    """Weight stack ``[W^0, ..., W^L]``.

    ``hidden_activation`` is applied after every layer except the last; the
    last product is passed through ``output_activation`` (``linear`` leaves
    it bare). A one-layer network is a plain linear (or squashed linear)
    readout of the input, as produced by ePIL when ``X`` already has full
    row rank.
    """

    layers: list[np.ndarray]
    hidden_activation: Activation = field(default_factory=Activation)
    output_activation: Activation = field(default_factory=lambda: Activation("linear"))
    bias_policy: BiasPolicy = field(default_factory=BiasPolicy)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ShapeMismatch("network needs at least one weight matrix")
        self.layers = [as_matrix(w, f"layer {i}") for i, w in enumerate(self.layers)]
        if not self.output_activation.invertible:
            raise ConfigError(
                f"output activation must be invertible, got {self.output_activation.kind!r}"
            )
        extra = 1 if self.bias_policy.hidden_bias else 0
        for i in range(1, len(self.layers)):
            need = self.layers[i - 1].shape[1] + extra
            if self.layers[i].shape[0] != need:
                raise ShapeMismatch(
                    f"layer {i} has {self.layers[i].shape[0]} rows, expected {need} "
                    f"from layer {i - 1} output width"
                )

    @property
    def input_width(self) -> int:
        return self.layers[0].shape[0]

    @property
    def output_width(self) -> int:
        return self.layers[-1].shape[1]

    @property
    def depth(self) -> int:
        return len(self.layers)


def _with_hidden_bias(y: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((y.shape[0], 1)), y])


def hidden_outputs(net: PilNetwork, x) -> list[np.ndarray]:
    """Inputs seen by each layer: ``[x, Y^1, ..., Y^L]`` (hidden bias included)."""
    x = as_matrix(x, "x")
    if x.shape[1] != net.input_width:
        raise ShapeMismatch(
            f"input has {x.shape[1]} columns but the network expects {net.input_width}"
        )
    ys = [x]
    y = x
    for w in net.layers[:-1]:
        y = apply(net.hidden_activation, y @ w)
        if net.bias_policy.hidden_bias:
            y = _with_hidden_bias(y)
        ys.append(y)
    return ys


def forward(net: PilNetwork, x) -> np.ndarray:
    """Network output ``o = out(sigma(...sigma(x W^0)...) W^L)``."""
    y = hidden_outputs(net, x)[-1]
    return apply(net.output_activation, y @ net.layers[-1])


def sse(net: PilNetwork, data) -> float:
    """Training cost ``||O - T||_F^2 / (2N)`` of ``net`` on ``data``."""
    o = forward(net, data.x)
    if o.shape != data.t.shape:
        raise ShapeMismatch(f"network output {o.shape} vs targets {data.t.shape}")
    return frobenius_error(o, data.t)


def serialize(net: PilNetwork) -> bytes:
    header = {
        "layers": [list(w.shape) for w in net.layers],
        "hidden_activation": net.hidden_activation.to_dict(),
        "output_activation": net.output_activation.to_dict(),
        "bias_policy": net.bias_policy.to_dict(),
        "meta": net.meta,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)), hbytes]
    parts += [np.ascontiguousarray(w, dtype="<f8").tobytes() for w in net.layers]
    return b"".join(parts)


def deserialize(data: bytes) -> PilNetwork:
    data = bytes(data)
    if len(data) < _PREFIX.size:
        raise FormatError(f"truncated prefix: {len(data)} of {_PREFIX.size} bytes", len(data))
    magic, version, hlen = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version: expected {FORMAT_VERSION}, found {version}", 6
        )
    pos = _PREFIX.size
    if len(data) < pos + hlen:
        raise FormatError(f"truncated header: need {hlen} bytes", len(data))
    try:
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        shapes = [tuple(int(v) for v in s) for s in header["layers"]]
        hidden = Activation.from_dict(header["hidden_activation"])
        output = Activation.from_dict(header["output_activation"])
        policy = BiasPolicy(**header["bias_policy"])
        meta = header.get("meta", {})
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"corrupt header: {exc}", pos) from None
    pos += hlen
    layers = []
    for r, c in shapes:
        nbytes = 8 * r * c
        if r < 1 or c < 1:
            raise FormatError(f"invalid layer shape {(r, c)}", pos)
        if len(data) < pos + nbytes:
            raise FormatError(f"truncated payload: layer {len(layers)} needs {nbytes} bytes", len(data))
        w = np.frombuffer(data, dtype="<f8", count=r * c, offset=pos).reshape(r, c)
        layers.append(w.astype(np.float64))
        pos += nbytes
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after payload", pos)
    try:
        return PilNetwork(layers, hidden, output, policy, meta)
    except (ValueError, ShapeMismatch) as exc:
        raise FormatError(f"inconsistent model: {exc}", _PREFIX.size) from None


def save(net: PilNetwork, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load(path: str | os.PathLike) -> PilNetwork:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
