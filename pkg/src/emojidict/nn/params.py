"""Named parameter storage and initializers."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from ..errors import WeightFileError

DTYPE = np.float64


class ParamStore:
    """Ordered name -> array map with a parallel gradient map.

    Arrays are held in float64 so finite-difference checks stay meaningful;
    weight files store float32 or int8.
    """

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        value = np.ascontiguousarray(value, dtype=DTYPE)
        if value.ndim == 0 or 0 in value.shape:
            raise ValueError(f"parameter {name!r} needs a non-empty shape, got {value.shape}")
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        return value

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def items(self):
        return self.params.items()

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        """Copy values in place; names and shapes must match exactly."""
        if set(arrays) != set(self.params):
            missing = set(self.params) - set(arrays)
            extra = set(arrays) - set(self.params)
            raise WeightFileError(f"parameter mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name, value in arrays.items():
            if value.shape != self.params[name].shape:
                raise WeightFileError(f"{name}: shape {value.shape} != {self.params[name].shape}")
            self.params[name][...] = value

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}


def param_count(store: ParamStore) -> int:
    return int(sum(p.size for p in store.params.values()))


def glorot_uniform(rng: np.random.Generator, shape: Sequence[int], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


def load_glove(path: str | Path, words: Sequence[str], table: np.ndarray) -> int:
    """Overwrite rows of ``table`` with vectors from a ``word v1 v2 ...`` text file.

    Returns the number of rows filled. Words missing from the file keep their values.
    """
    index = {w: i for i, w in enumerate(words)}
    dim = table.shape[1]
    filled = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                continue
            row = index.get(parts[0])
            if row is not None:
                table[row] = np.asarray(parts[1:], dtype=DTYPE)
                filled += 1
    return filled
