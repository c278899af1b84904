"""Point-set generators: HSFC stratified, Monte Carlo, jittered, Latin
hypercube and the theta-split equivolume partition.

Every generator takes an explicit :class:`RngStream`, so a sample is a pure
function of ``(parameters, seed, label)``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert

GENERATORS = ("hsfc", "mc", "jittered", "lhs", "theta")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _label_word(part) -> int:
    if isinstance(part, (int, np.integer)) and 0 <= part < 2**32:
        return int(part)
    digest = hashlib.blake2b(repr(part).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(seed, label)``.

    Identical keys give identical streams; streams with different labels are
    independent (numpy ``SeedSequence`` spawn keys).
    """

    seed: int
    label: tuple = ()

    def child(self, *parts) -> "RngStream":
        return RngStream(self.seed, self.label + tuple(parts))

    def _seq(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            self.seed, spawn_key=tuple(_label_word(p) for p in self.label)
        )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self._seq()))

    def key64(self) -> np.uint64:
        """64-bit key for counter-based draws (lazy permutation trees)."""
        return self._seq().generate_state(1, np.uint64)[0]

    @property
    def label_str(self) -> str:
        return ":".join(str(p) for p in (self.seed,) + self.label)


@dataclass
class SampleSet:
    d: int
    points: np.ndarray
    generator: str
    seed: int
    label: str = ""
    strata: np.ndarray | None = None
    unit: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.points)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, self.d)
        if np.any(self.points < 0.0) or np.any(self.points > 1.0):
            raise ValueError("sample points must lie in [0, 1]^d")


# --------------------------------------------------------------------------
# van der Corput and nested uniform scrambling
# --------------------------------------------------------------------------


def van_der_corput(i: int, b: int) -> float:
    """Radical inverse of ``i - 1`` in base ``b`` (the ``i``-th point)."""
    if i < 1 or b < 2:
        raise ValueError("need i >= 1 and b >= 2")
    n, x, scale = i - 1, 0.0, 1.0 / b
    while n:
        n, digit = divmod(n, b)
        x += digit * scale
        scale /= b
    return x


def vdc_digits(n: int, b: int, depth: int) -> np.ndarray:
    """Base-``b`` digits ``a_{ij}``, shape ``(n, depth)``, of the first ``n``
    van der Corput points (digit ``j`` has weight ``b**-(j+1)``)."""
    k = np.arange(n, dtype=np.int64)
    out = np.zeros((n, depth), dtype=np.int64)
    for j in range(depth):
        k, out[:, j] = np.divmod(k, b)
    return out


def _hashed_permutations(nodes: np.ndarray, b: int) -> np.ndarray:
    # One uniform permutation of range(b) per node key: argsort of b hashes.
    with np.errstate(over="ignore"):
        keys = _splitmix(nodes[:, None] * np.uint64(b) + np.arange(b, dtype=np.uint64))
    return np.argsort(keys, axis=1, kind="stable")


def scramble_digits(digits, b: int, rng: RngStream, permuter=None) -> np.ndarray:
    """Nested uniform scrambling of digit expansions.

    Digit ``j`` of row ``i`` is mapped through a permutation keyed by the
    input prefix ``a_{i1} .. a_{i,j-1}``. Permutations are drawn lazily from
    a counter-based hash of ``(rng key, prefix)``; the tree is never stored.
    ``permuter(level, nodes) -> (n, b)`` overrides the draw (used in tests).
    """
    digits = np.asarray(digits, dtype=np.int64)
    n, depth = digits.shape
    out = np.empty_like(digits)
    nodes = np.full(n, _splitmix(np.array([rng.key64()]))[0], dtype=np.uint64)
    rows = np.arange(n)
    for j in range(depth):
        perms = permuter(j, nodes) if permuter else _hashed_permutations(nodes, b)
        out[:, j] = np.asarray(perms)[rows, digits[:, j]]
        with np.errstate(over="ignore"):
            nodes = _splitmix(nodes ^ (digits[:, j].astype(np.uint64) + np.uint64(1)) * _GOLDEN)
    return out


def digits_to_unit(digits, b: int, residual=None) -> np.ndarray:
    """Value of base-``b`` digit rows plus an optional residual in [0, 1)
    scaled to the last digit, clipped below 1."""
    digits = np.asarray(digits)
    depth = digits.shape[1]
    x = np.zeros(len(digits)) if residual is None else np.asarray(residual, dtype=float)
    for j in range(depth - 1, -1, -1):
        x = (digits[:, j] + x) / b
    return np.minimum(x, np.nextafter(1.0, 0.0))


def default_depth(m: int, b: int) -> int:
    """Digit depth resolving beyond float64 precision of a stratum width."""
    return m + math.ceil(52 / math.log2(b))


def scramble_owen(digits, b: int, rng: RngStream, depth: int | None = None,
                  permuter=None, residual: bool = True) -> np.ndarray:
    """Scramble digit expansions and return reals in [0, 1).

    Digits past ``depth`` are replaced by one uniform residual in
    ``[0, b**-depth)`` unless ``residual`` is false.
    """
    digits = np.asarray(digits, dtype=np.int64)
    if depth is None:
        depth = digits.shape[1]
    if depth < 1:
        raise ValueError("digit depth must be >= 1")
    if digits.shape[1] < depth:
        pad = np.zeros((len(digits), depth - digits.shape[1]), dtype=np.int64)
        digits = np.hstack([digits, pad])
    scrambled = scramble_digits(digits[:, :depth], b, rng, permuter)
    tail = rng.child("residual").generator().random(len(digits)) if residual else None
    return digits_to_unit(scrambled, b, tail)


# --------------------------------------------------------------------------
# HSFC stratified sampling
# --------------------------------------------------------------------------


def _stratum_offsets_scrambled(N: int, m: int, b: int, rng: RngStream):
    depth = default_depth(m, b)
    scrambled = scramble_digits(vdc_digits(N, b, depth), b, rng)
    weights = b ** np.arange(m - 1, -1, -1, dtype=np.int64)
    strata = scrambled[:, :m] @ weights if m else np.zeros(N, dtype=np.int64)
    tail = rng.child("residual").generator().random(N)
    offsets = digits_to_unit(scrambled[:, m:], b, tail)
    order = np.argsort(strata, kind="stable")
    return strata[order], offsets[order]


def hsfc_stratified(d: int, m: int, rng: RngStream, mode: str = "scrambled_vdc",
                    base: int | None = None) -> SampleSet:
    """One point per Hilbert stratum ``H(I_i)``, ``I_i = [(i-1)/N, i/N)``.

    ``N = base**m`` with ``base = 2**d`` by default, in which case every
    stratum is exactly a level-``m`` curve cell. In mode ``scrambled_vdc``
    the unit fractions are the nested-scrambled first ``N`` van der Corput
    points sorted into strata; in mode ``direct_offset`` they are
    ``(i - 1 + U_i) / N`` with independent uniforms.
    """
    if d < 1 or m < 0:
        raise ValueError("need d >= 1 and m >= 0")
    b = 2 ** d if base is None else base
    if b < 2:
        raise ValueError("base must be >= 2")
    aligned = b == 2 ** d
    if m * math.log2(b) > hilbert.FRACTION_BITS:
        raise hilbert.PrecisionError(
            f"N = {b}**{m} exceeds the {hilbert.FRACTION_BITS}-bit stratum resolution"
        )
    N = b ** m
    if mode == "scrambled_vdc":
        strata, offsets = _stratum_offsets_scrambled(N, m, b, rng)
    elif mode == "direct_offset":
        strata = np.arange(N, dtype=np.int64)
        offsets = rng.child("offset").generator().random(N)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if aligned:
        # Exact dyadic fraction strictly inside its stratum.
        q = 2.0 ** (hilbert.FRACTION_BITS - m * d)
        unit = (strata + np.floor(offsets * q) / q) / N
    else:
        unit = np.minimum((strata + offsets) / N, np.nextafter(1.0, 0.0))
    level = hilbert.deep_level(d)
    jitter = rng.child("cell").generator().random((N, d))
    points = hilbert.point_from_unit(unit, d, level, offset=jitter)
    return SampleSet(
        d, points, "hsfc", rng.seed, rng.label_str, strata=strata, unit=unit,
        meta={"m": m, "base": b, "mode": mode, "aligned": aligned},
    )


# --------------------------------------------------------------------------
# Baselines
# --------------------------------------------------------------------------


def monte_carlo(d: int, N: int, rng: RngStream) -> SampleSet:
    if N < 1:
        raise ValueError("N must be >= 1")
    pts = rng.generator().random((N, d))
    return SampleSet(d, pts, "mc", rng.seed, rng.label_str)


def jittered(d: int, m: int, rng: RngStream) -> SampleSet:
    """One uniform point in each of the ``m**d`` grid cells of side ``1/m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    grid = np.indices((m,) * d).reshape(d, -1).T
    u = rng.generator().random(grid.shape)
    pts = np.minimum((grid + u) / m, 1.0)
    strata = np.ravel_multi_index(grid.T, (m,) * d)
    return SampleSet(d, pts, "jittered", rng.seed, rng.label_str, strata=strata,
                     meta={"m": m})


def latin_hypercube(d: int, N: int, rng: RngStream) -> SampleSet:
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = rng.generator()
    bins = np.stack([gen.permutation(N) for _ in range(d)], axis=1)
    pts = (bins + gen.random((N, d))) / N
    return SampleSet(d, pts, "lhs", rng.seed, rng.label_str)


# --------------------------------------------------------------------------
# theta-split equivolume partition (d = 2)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaPartitionSpec:
    """Grid of ``m x m`` squares whose two upper-right squares are merged
    into ``[a1, a1 + 2b] x [a2, a2 + b]`` and re-split by the line through
    the rectangle's centre at angle ``theta`` to the horizontal."""

    m: int
    theta: float

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("theta partition needs m >= 2")
        if not 0.0 <= self.theta <= math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")

    @property
    def N(self) -> int:
        return self.m * self.m

    @property
    def rectangle(self) -> tuple[float, float, float]:
        m = self.m
        return (m - 2) / m, (m - 1) / m, 1.0 / m

    @property
    def center(self) -> np.ndarray:
        a1, a2, b = self.rectangle
        return np.array([a1 + b, a2 + b / 2])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    def half(self, pts) -> np.ndarray:
        """0 for the half on the normal's side of the cut (incl. the line), else 1."""
        s = (np.atleast_2d(pts) - self.center) @ self.normal
        return np.where(s >= 0.0, 0, 1)

    def half_polygon(self, which: int) -> np.ndarray:
        """Vertices (counter-clockwise) of one half of the merged rectangle."""
        a1, a2, b = self.rectangle
        corners = np.array([[a1, a2], [a1 + 2 * b, a2], [a1 + 2 * b, a2 + b], [a1, a2 + b]])
        sign = 1.0 if which == 0 else -1.0
        s = sign * ((corners - self.center) @ self.normal)
        poly = []
        for k in range(4):
            p, q = corners[k], corners[(k + 1) % 4]
            sp, sq = s[k], s[(k + 1) % 4]
            if sp >= 0:
                poly.append(p)
            if (sp > 0 > sq) or (sp < 0 < sq):
                poly.append(p + (q - p) * sp / (sp - sq))
        return np.array(poly)


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


class RejectionBudgetExceeded(RuntimeError):
    pass


def theta_partition_sample(spec: ThetaPartitionSpec, rng: RngStream,
                           max_attempts: int = 10_000) -> SampleSet:
    """One uniform point per cell of the theta partition (``N = m**2``).

    The two halves of the merged rectangle are sampled by rejection from the
    rectangle; all other cells are the plain grid squares.
    """
    m = spec.m
    gen = rng.generator()
    grid = np.indices((m, m)).reshape(2, -1).T
    a1, a2, b = spec.rectangle
    merged = (grid[:, 1] == m - 1) & (grid[:, 0] >= m - 2)
    squares = grid[~merged]
    pts = [(squares + gen.random(squares.shape)) / m]
    strata = [np.arange(2, m * m)]
    lo, span = np.array([a1, a2]), np.array([2 * b, b])
    for which in (0, 1):
        for _ in range(max_attempts):
            p = lo + span * gen.random(2)
            if spec.half(p)[0] == which:
                break
        else:
            raise RejectionBudgetExceeded(
                f"no point accepted in half {which} after {max_attempts} draws"
            )
        pts.insert(which, p[None, :])
    points = np.vstack(pts)
    strata = np.concatenate([[0, 1], strata[0]])
    return SampleSet(2, np.minimum(points, 1.0), "theta", rng.seed, rng.label_str,
                     strata=strata, meta={"m": m, "theta": spec.theta})
