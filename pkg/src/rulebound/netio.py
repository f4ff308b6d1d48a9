"""Binary serialization for Network objects.

Layout (all little-endian):

    header   4s  magic  b"RBNC"
             H   format version (currently 1)
             H   reserved, written as 0
             I   number of layers
    per layer
             I   input width
             I   output width
             B   activation code (0 linear, 1 relu, 2 tanh)
             3x  padding
    payload  for each layer in order: float64 weights row-major
             (out * in values) followed by float64 bias (out values)

The same float64 payload framing, without the header, is reused for
optimizer moment buffers via params_to_bytes / params_from_bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .nn import ACTIVATIONS, Layer, Network

MAGIC = b"RBNC"
VERSION = 1

_HEADER = struct.Struct("<4sHHI")
_LAYER = struct.Struct("<IIB3x")

_ACT_CODE = {name: code for code, name in enumerate(ACTIVATIONS)}
_CODE_ACT = dict(enumerate(ACTIVATIONS))


class CheckpointFormatError(ValueError):
    """Raised when checkpoint bytes are malformed or from an unknown format."""


def network_to_bytes(net: Network) -> bytes:
    chunks = [_HEADER.pack(MAGIC, VERSION, 0, len(net.layers))]
    for layer in net.layers:
        chunks.append(_LAYER.pack(layer.in_dim, layer.out_dim, _ACT_CODE[layer.activation]))
    for layer in net.layers:
        chunks.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(chunks)


def network_from_bytes(data: bytes) -> Network:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("checkpoint truncated before header")
    magic, version, _, n_layers = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported format version {version}")
    offset = _HEADER.size
    shapes: list[tuple[int, int, str]] = []
    for _ in range(n_layers):
        if offset + _LAYER.size > len(data):
            raise CheckpointFormatError("checkpoint truncated in layer table")
        d_in, d_out, code = _LAYER.unpack_from(data, offset)
        offset += _LAYER.size
        if code not in _CODE_ACT:
            raise CheckpointFormatError(f"unknown activation code {code}")
        shapes.append((d_in, d_out, _CODE_ACT[code]))
    layers = []
    for d_in, d_out, act in shapes:
        n_w = d_out * d_in
        need = (n_w + d_out) * 8
        if offset + need > len(data):
            raise CheckpointFormatError("checkpoint truncated in parameter payload")
        w = np.frombuffer(data, dtype="<f8", count=n_w, offset=offset).reshape(d_out, d_in)
        offset += n_w * 8
        b = np.frombuffer(data, dtype="<f8", count=d_out, offset=offset)
        offset += d_out * 8
        layers.append(Layer(w.astype(np.float64), b.astype(np.float64), act))
    if offset != len(data):
        raise CheckpointFormatError(f"{len(data) - offset} trailing bytes after payload")
    return Network(layers)


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_bytes(network_to_bytes(net))


def load_network(path: str | Path) -> Network:
    return network_from_bytes(Path(path).read_bytes())


def params_to_bytes(arrays: list[np.ndarray]) -> bytes:
    """Raw float64 payload for a sequence of arrays (no header)."""
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def params_from_bytes(data: bytes, like: list[np.ndarray]) -> list[np.ndarray]:
    """Parse a params_to_bytes payload using `like` for shapes."""
    expected = sum(a.size for a in like) * 8
    if len(data) != expected:
        raise CheckpointFormatError(
            f"parameter payload has {len(data)} bytes, expected {expected}"
        )
    out = []
    offset = 0
    for ref in like:
        arr = np.frombuffer(data, dtype="<f8", count=ref.size, offset=offset)
        out.append(arr.reshape(ref.shape).astype(np.float64))
        offset += ref.size * 8
    return out
