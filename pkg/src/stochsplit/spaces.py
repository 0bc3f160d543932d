"""Block vectors over finite products of Euclidean spaces."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import LayoutError


@dataclass(frozen=True)
class SpaceLayout:
    """Dimensions of the factors of a product space."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims:
            raise LayoutError("a layout needs at least one block")
        if any(d < 1 for d in dims):
            raise LayoutError(f"block dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.block_dims)]))

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    def slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    def concat(self, other: "SpaceLayout") -> "SpaceLayout":
        return SpaceLayout(self.block_dims + other.block_dims)

    def zeros(self) -> "BlockVector":
        return BlockVector(self, np.zeros(self.dim))

    def from_blocks(self, blocks: Sequence) -> "BlockVector":
        if len(blocks) != self.n_blocks:
            raise LayoutError(f"expected {self.n_blocks} blocks, got {len(blocks)}")
        parts = []
        for i, b in enumerate(blocks):
            b = np.atleast_1d(np.asarray(b, dtype=float))
            if b.shape != (self.block_dims[i],):
                raise LayoutError(f"block {i} has shape {b.shape}, expected ({self.block_dims[i]},)")
            parts.append(b)
        return BlockVector(self, np.concatenate(parts))

    def split(self, data) -> list[np.ndarray]:
        data = np.asarray(data, dtype=float)
        if data.shape != (self.dim,):
            raise LayoutError(f"data has shape {data.shape}, expected ({self.dim},)")
        return [data[self.slice(i)] for i in range(self.n_blocks)]


class BlockVector:
    """A flat float64 buffer addressed block by block.

    The buffer is read-only; algebra returns new vectors.
    """

    __slots__ = ("layout", "data")

    def __init__(self, layout: SpaceLayout, data):
        arr = np.array(data, dtype=np.float64).reshape(-1)
        if arr.shape[0] != layout.dim:
            raise LayoutError(f"data length {arr.shape[0]} != layout dimension {layout.dim}")
        arr.flags.writeable = False
        self.layout = layout
        self.data = arr

    def block(self, i: int) -> np.ndarray:
        return self.data[self.layout.slice(i)]

    def blocks(self) -> list[np.ndarray]:
        return [self.block(i) for i in range(self.layout.n_blocks)]

    def _check(self, other: "BlockVector"):
        if not isinstance(other, BlockVector):
            raise LayoutError(f"expected BlockVector, got {type(other).__name__}")
        if other.layout != self.layout:
            raise LayoutError(f"layout mismatch: {self.layout.block_dims} vs {other.layout.block_dims}")

    def __add__(self, other):
        self._check(other)
        return BlockVector(self.layout, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return BlockVector(self.layout, self.data - other.data)

    def __mul__(self, a):
        return BlockVector(self.layout, float(a) * self.data)

    __rmul__ = __mul__

    def __neg__(self):
        return BlockVector(self.layout, -self.data)

    def __eq__(self, other):
        return (
            isinstance(other, BlockVector)
            and other.layout == self.layout
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.layout, self.data.tobytes()))

    def __repr__(self):
        return f"BlockVector(dims={self.layout.block_dims}, data={self.data!r})"


def _pair(x, y):
    if isinstance(x, BlockVector) or isinstance(y, BlockVector):
        if not isinstance(x, BlockVector):
            raise LayoutError("cannot mix BlockVector with a bare array")
        x._check(y)
        return x.data, y.data
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LayoutError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def inner(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.dot(a.ravel(), b.ravel()))


def norm(x) -> float:
    a = x.data if isinstance(x, BlockVector) else np.asarray(x, dtype=float)
    return float(np.sqrt(np.dot(a.ravel(), a.ravel())))


def axpy(a: float, x, y):
    """Return ``a*x + y``."""
    xd, yd = _pair(x, y)
    out = float(a) * xd + yd
    if isinstance(x, BlockVector):
        return BlockVector(x.layout, out)
    return out
