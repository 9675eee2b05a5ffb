"""Sliding k x k windows unrolled into the columns of a matrix.

Window centres are visited row-major: left to right along a row, rows top to
bottom. Scan indices ``j`` are 1-based, as are the pixel coordinates returned
by :func:`center_of`. Border pixels without a full window never appear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .image_io import ImageFragment

__all__ = ["WindowConfig", "ColumnMatrix", "build_columns", "center_of", "scan_index", "interior_shape"]


@dataclass(frozen=True)
class WindowConfig:
    k: int = 5

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1 or self.k % 2 == 0:
            raise ValueError(f"window side k must be an odd integer >= 1, got {self.k!r}")

    @property
    def r(self) -> int:
        return self.k * self.k

    @property
    def center(self) -> int:
        """1-based position of the central pixel inside an unrolled window."""
        return (self.r + 1) // 2

    @property
    def half(self) -> int:
        return self.k // 2


def interior_shape(n: int, m: int, cfg: WindowConfig) -> tuple[int, int]:
    if n < cfg.k or m < cfg.k:
        raise ShapeError(f"fragment {n}x{m} is smaller than the {cfg.k}x{cfg.k} window")
    return n - cfg.k + 1, m - cfg.k + 1


@dataclass(frozen=True, eq=False)
class ColumnMatrix:
    """r x q matrix whose j-th column is the j-th window unrolled row-major."""

    data: np.ndarray
    n: int
    m: int
    cfg: WindowConfig

    @property
    def r(self) -> int:
        return self.data.shape[0]

    @property
    def q(self) -> int:
        return self.data.shape[1]

    def column(self, j: int) -> np.ndarray:
        """Column for 1-based scan index ``j``."""
        if not 1 <= j <= self.q:
            raise IndexError(f"scan index {j} outside 1..{self.q}")
        return self.data[:, j - 1]

    def centers(self) -> np.ndarray:
        """Central pixel of every window, in scan order."""
        return self.data[self.cfg.center - 1]


def build_columns(X: ImageFragment | np.ndarray, cfg: WindowConfig) -> ColumnMatrix:
    pixels = X.pixels if isinstance(X, ImageFragment) else np.asarray(X)
    n, m = pixels.shape
    rows, cols = interior_shape(n, m, cfg)
    windows = sliding_window_view(pixels, (cfg.k, cfg.k))
    # (rows, cols, k, k) -> (q, r): C order already gives row-major scan and row-major unroll
    data = windows.reshape(rows * cols, cfg.r).T
    data = np.ascontiguousarray(data)
    data.setflags(write=False)
    return ColumnMatrix(data, n, m, cfg)


def center_of(j: int, cfg: WindowConfig, n: int, m: int) -> tuple[int, int]:
    """1-based image coordinate of the centre of window ``j``."""
    rows, cols = interior_shape(n, m, cfg)
    q = rows * cols
    if not 1 <= j <= q:
        raise IndexError(f"scan index {j} outside 1..{q}")
    a, b = divmod(j - 1, cols)
    return a + cfg.half + 1, b + cfg.half + 1


def scan_index(row: int, col: int, cfg: WindowConfig, n: int, m: int) -> int:
    """Inverse of :func:`center_of`."""
    rows, cols = interior_shape(n, m, cfg)
    a, b = row - cfg.half - 1, col - cfg.half - 1
    if not (0 <= a < rows and 0 <= b < cols):
        raise IndexError(f"pixel ({row}, {col}) is not an interior window centre")
    return a * cols + b + 1
