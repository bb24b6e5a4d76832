"""Weight files and 8-bit storage quantization.

File layout (little-endian)::

    b"VMW1"  u32 version  u8 quantized  u32 tensor_count
    per tensor: u32 name_len, name (utf-8), u32 rank, rank x u32 dims,
                float32 payload                        (quantized == 0)
                int8 payload, f32 scale, i8 zero_point (quantized == 1)

Tensors are written in ParamStore insertion order.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import WeightFileError
from .params import ParamStore

MAGIC = b"VMW1"
VERSION = 1


@dataclass(frozen=True)
class QuantizedBlob:
    scale: float
    zero_point: int
    payload: np.ndarray  # int8, original shape

    def dequantize(self) -> np.ndarray:
        return (self.payload.astype(np.float64) - self.zero_point) * self.scale


def quantize_tensor(x: np.ndarray) -> QuantizedBlob:
    """Symmetric per-tensor int8: scale = max|x| / 127, zero point 0; an all-zero tensor gets scale 1."""
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    # store the scale as float32 so the in-memory blob matches what a file round-trip yields
    scale = float(np.float32(peak / 127.0)) if peak > 0 else 1.0
    q = np.clip(np.rint(x / scale), -127, 127).astype(np.int8)
    return QuantizedBlob(scale, 0, q)


def quantize8(store: ParamStore) -> dict[str, QuantizedBlob]:
    return {name: quantize_tensor(p) for name, p in store.items()}


def dequantize8(blobs: dict[str, QuantizedBlob]) -> ParamStore:
    store = ParamStore()
    for name, blob in blobs.items():
        store.add(name, blob.dequantize())
    return store


def _write_header(fh, name: str, shape) -> None:
    raw = name.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<I", len(shape)))
    fh.write(struct.pack(f"<{len(shape)}I", *shape))


def dump_weights(store: ParamStore, quantized: bool = False) -> bytes:
    fh = io.BytesIO()
    fh.write(MAGIC)
    fh.write(struct.pack("<IBI", VERSION, int(quantized), len(store)))
    for name, p in store.items():
        _write_header(fh, name, p.shape)
        if quantized:
            blob = quantize_tensor(p)
            fh.write(blob.payload.astype("<i1").tobytes())
            fh.write(struct.pack("<fb", blob.scale, blob.zero_point))
        else:
            fh.write(p.astype("<f4").tobytes())
    return fh.getvalue()


def save_weights(path: str | Path, store: ParamStore, quantized: bool = False) -> int:
    """Write a weight file and return its size in bytes."""
    data = dump_weights(store, quantized)
    Path(path).write_bytes(data)
    return len(data)


def parse_weights(data: bytes) -> tuple[dict[str, np.ndarray], bool]:
    """Decode a weight file into float64 arrays (dequantizing if needed) and the quantized flag."""
    if data[:4] != MAGIC:
        raise WeightFileError("not a weight file (bad magic)")
    try:
        version, quantized, count = struct.unpack_from("<IBI", data, 4)
        if version != VERSION:
            raise WeightFileError(f"unsupported weight file version {version}")
        pos = 4 + struct.calcsize("<IBI")
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            size = int(np.prod(shape))
            if quantized:
                payload = np.frombuffer(data, dtype="<i1", count=size, offset=pos).reshape(shape)
                pos += size
                scale, zp = struct.unpack_from("<fb", data, pos)
                pos += struct.calcsize("<fb")
                arrays[name] = QuantizedBlob(float(scale), int(zp), payload).dequantize()
            else:
                arrays[name] = np.frombuffer(data, dtype="<f4", count=size, offset=pos).reshape(shape).astype(np.float64)
                pos += 4 * size
    except (struct.error, ValueError) as exc:
        if isinstance(exc, WeightFileError):
            raise
        raise WeightFileError(f"truncated or corrupt weight file: {exc}") from None
    if pos != len(data):
        raise WeightFileError(f"{len(data) - pos} trailing bytes in weight file")
    return arrays, bool(quantized)


def load_weights(path: str | Path) -> tuple[dict[str, np.ndarray], bool]:
    return parse_weights(Path(path).read_bytes())
