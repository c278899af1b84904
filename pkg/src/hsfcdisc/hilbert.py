"""Hilbert curve in any dimension, with exact integer arithmetic.

The curve is built with Skilling's transpose/Gray-code transform. At level
``k`` the cube is split into ``2**(k*d)`` dyadic cells of side ``2**-k``; the
index of a cell is its position along the curve. In two dimensions the level-1
visit order is lower-left, upper-left, upper-right, lower-right, i.e. integer
cells ``(0, 0), (0, 1), (1, 1), (1, 0)`` with coordinates listed as
``(x1, x2)``.

All functions are vectorised over numpy arrays of indices / coordinates and
are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Widest curve index supported, in bits (``level * d`` must not exceed it).
INDEX_BITS = 62
#: Bits of a float64 fraction usable as an exact dyadic address.
FRACTION_BITS = 52


class PrecisionError(ValueError):
    """Raised when ``level * d`` exceeds the supported index width."""


@dataclass(frozen=True)
class HilbertIndex:
    d: int
    level: int
    index: int

    def __post_init__(self):
        _check_depth(self.d, self.level)
        if not 0 <= self.index < 1 << (self.level * self.d):
            raise ValueError(
                f"index {self.index} outside [0, 2**{self.level * self.d})"
            )


@dataclass(frozen=True)
class HilbertCell:
    """Dyadic subcube ``anchor + [0, side)^d`` visited at ``index``."""

    anchor: tuple
    side: float
    level: int
    index: int

    @property
    def d(self) -> int:
        return len(self.anchor)

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.anchor)
        return bool(np.all(x >= lo) and np.all(x <= lo + self.side))


def _check_depth(d: int, level: int) -> None:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if level * d > INDEX_BITS:
        raise PrecisionError(
            f"level*d = {level * d} bits exceeds the {INDEX_BITS}-bit index "
            f"width; need level <= {INDEX_BITS // d} for d={d}"
        )


def _transpose_to_axes(X: list[np.ndarray], bits: int) -> None:
    # In-place: Hilbert transpose -> axis coordinates.
    n = len(X)
    top = np.uint64(2 << (bits - 1))
    t = X[n - 1] >> np.uint64(1)
    for i in range(n - 1, 0, -1):
        X[i] ^= X[i - 1]
    X[0] ^= t
    Q = np.uint64(2)
    while Q != top:
        P = Q - np.uint64(1)
        for i in range(n - 1, -1, -1):
            hit = (X[i] & Q) != 0
            X[0] = np.where(hit, X[0] ^ P, X[0])
            t = np.where(hit, np.uint64(0), (X[0] ^ X[i]) & P)
            X[0] ^= t
            X[i] ^= t
        Q <<= np.uint64(1)


def _axes_to_transpose(X: list[np.ndarray], bits: int) -> None:
    # In-place inverse of _transpose_to_axes.
    n = len(X)
    M = np.uint64(1 << (bits - 1))
    Q = M
    while Q > 1:
        P = Q - np.uint64(1)
        for i in range(n):
            hit = (X[i] & Q) != 0
            X[0] = np.where(hit, X[0] ^ P, X[0])
            t = np.where(hit, np.uint64(0), (X[0] ^ X[i]) & P)
            X[0] ^= t
            X[i] ^= t
        Q >>= np.uint64(1)
    for i in range(1, n):
        X[i] ^= X[i - 1]
    t = np.zeros_like(X[0])
    Q = M
    while Q > 1:
        t = np.where((X[n - 1] & Q) != 0, t ^ (Q - np.uint64(1)), t)
        Q >>= np.uint64(1)
    for i in range(n):
        X[i] ^= t


def decode_array(indices, d: int, level: int) -> np.ndarray:
    """Integer cell coordinates, shape ``(n, d)``, of curve positions."""
    _check_depth(d, level)
    h = np.atleast_1d(np.asarray(indices)).astype(np.uint64)
    if np.any(h >= np.uint64(1) << np.uint64(level * d)):
        raise ValueError(f"indices must lie in [0, 2**{level * d})")
    if level == 0:
        return np.zeros((h.size, d), dtype=np.int64)
    if d == 1:
        return h.astype(np.int64).reshape(-1, 1)
    # Spread the index bits over the d transposed words, most significant first.
    X = [np.zeros_like(h) for _ in range(d)]
    for b in range(level):
        for i in range(d):
            shift = np.uint64(b * d + (d - 1 - i))
            X[i] |= ((h >> shift) & np.uint64(1)) << np.uint64(b)
    _transpose_to_axes(X, level)
    return np.stack(X, axis=1).astype(np.int64)


def encode_array(coords, level: int) -> np.ndarray:
    """Curve positions of integer cell coordinates ``coords`` (shape ``(n, d)``)."""
    c = np.asarray(coords)
    if c.ndim == 1:
        c = c.reshape(1, -1)
    n, d = c.shape
    _check_depth(d, level)
    if np.any(c < 0) or np.any(c >= (1 << level)):
        raise ValueError(f"cell coordinates must lie in [0, 2**{level})")
    if level == 0:
        return np.zeros(n, dtype=np.int64)
    if d == 1:
        return c[:, 0].astype(np.int64)
    X = [c[:, i].astype(np.uint64) for i in range(d)]
    _axes_to_transpose(X, level)
    h = np.zeros(n, dtype=np.uint64)
    for b in range(level):
        for i in range(d):
            shift = np.uint64(b * d + (d - 1 - i))
            h |= ((X[i] >> np.uint64(b)) & np.uint64(1)) << shift
    return h.astype(np.int64)


def decode(h: HilbertIndex) -> HilbertCell:
    coords = decode_array([h.index], h.d, h.level)[0]
    side = 2.0 ** -h.level
    return HilbertCell(
        anchor=tuple(float(c) * side for c in coords),
        side=side,
        level=h.level,
        index=h.index,
    )


def encode(coords, level: int) -> HilbertIndex:
    coords = np.asarray(coords, dtype=np.int64).reshape(1, -1)
    return HilbertIndex(coords.shape[1], level, int(encode_array(coords, level)[0]))


def cell_of_point(x, level: int) -> np.ndarray:
    """Curve index of the level-``level`` cell containing each row of ``x``.

    Points on the upper face of the cube are assigned to the last cell.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    scale = 1 << level
    c = np.minimum(np.floor(x * scale).astype(np.int64), scale - 1)
    return encode_array(c, level)


def point_from_unit(t, d: int, level: int, offset=None) -> np.ndarray:
    """Map fractions ``t`` in [0, 1) to points of the cube through the curve.

    The leading ``level * d`` bits of ``t`` select a curve cell; the point is
    placed at ``anchor + side * offset`` inside it. ``offset`` (shape ``(n, d)``
    with entries in [0, 1)) carries the residual mass when sampling; by
    default the cell centre is used.
    """
    _check_depth(d, level)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0.0) or np.any(t >= 1.0):
        raise ValueError("t must lie in [0, 1)")
    bits = level * d
    idx = np.floor(t * 2.0 ** bits).astype(np.int64)
    idx = np.minimum(idx, (1 << bits) - 1)
    cells = decode_array(idx, d, level).astype(float)
    if offset is None:
        u = np.full(cells.shape, 0.5)
    else:
        u = np.broadcast_to(np.asarray(offset, dtype=float), cells.shape)
    if level <= FRACTION_BITS:
        # Snap offsets to a dyadic grid so cell + offset is exact and stays
        # strictly inside the cell.
        q = 2.0 ** (FRACTION_BITS - level)
        u = np.floor(u * q) / q
    return (cells + u) * 2.0 ** -level


def deep_level(d: int) -> int:
    """Deepest level whose curve address fits in a float64 fraction."""
    return FRACTION_BITS // d


def diameter_bound(d: int, N: float) -> float:
    """Upper bound ``2 sqrt(d + 3) N**(-1/d)`` on the diameter of a stratum."""
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    return 2.0 * math.sqrt(d + 3) * N ** (-1.0 / d)
