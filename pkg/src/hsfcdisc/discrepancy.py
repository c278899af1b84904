"""Star discrepancy: exact, via delta-covers, weighted, restricted to a convex
region, and averaged over replications."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

#: Default cap on the number of grid vertices enumerated by one evaluation.
GRID_BUDGET = 10**8
#: Default cap on the dimension for subset enumeration (2**d - 1 projections).
MAX_SUBSET_DIM = 12
# Vertices processed per vectorised block.
_BLOCK = 1 << 21


class BudgetExceeded(RuntimeError):
    """Raised instead of starting a computation larger than its budget."""

    def __init__(self, what: str, required: int, budget: int):
        super().__init__(f"{what} needs {required} grid cells, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class DiscrepancyEstimate:
    """A discrepancy value and what it certifies.

    ``exact``: the value itself. ``cover_interval``: the exact value lies in
    ``[value, upper]`` with ``upper = value + delta``. ``sampled_lower``: a
    lower bound up to volume-oracle error ``oracle_se``.
    """

    value: float
    kind: str
    delta: float | None = None
    upper: float | None = None
    witness: tuple | None = None
    oracle_se: float | None = None

    @property
    def certified_upper(self) -> float:
        return self.value if self.upper is None else self.upper


def _as_points(P) -> np.ndarray:
    pts = getattr(P, "points", P)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.size and (np.any(pts < 0.0) or np.any(pts > 1.0)):
        raise ValueError("points must lie in [0, 1]^d")
    return pts


def box_volume(x) -> float:
    return float(np.prod(np.asarray(x, dtype=float)))


def _grid_extreme(pts: np.ndarray, axes: list[np.ndarray], strict: bool, sign: int):
    """Max of ``sign * (count/N - vol)`` over all vertices of the product grid.

    A point counts at vertex ``g`` when ``p <= g`` componentwise (``p < g``
    if ``strict``). Counts come from a histogram of per-axis insertion ranks
    followed by cumulative sums, processed in blocks along the first axis.
    """
    N, d = pts.shape
    shape = tuple(len(a) for a in axes)
    side = "right" if strict else "left"
    idx = np.stack([np.searchsorted(axes[j], pts[:, j], side=side) for j in range(d)], axis=1)
    keep = np.all(idx < np.array(shape), axis=1)
    idx = idx[keep]
    rest = shape[1:]
    rest_size = int(np.prod(rest)) if rest else 1
    rows = max(1, _BLOCK // rest_size)
    carry = np.zeros(rest, dtype=np.int64)
    vol_rest = np.ones(rest)
    for j, a in enumerate(axes[1:]):
        vol_rest = vol_rest * a.reshape((-1,) + (1,) * (d - 2 - j))
    best, where = -np.inf, None
    order = np.argsort(idx[:, 0], kind="stable")
    idx = idx[order]
    starts = np.searchsorted(idx[:, 0], np.arange(0, shape[0] + rows, rows))
    for bi, start in enumerate(range(0, shape[0], rows)):
        stop = min(start + rows, shape[0])
        sel = idx[starts[bi]:starts[bi + 1]]
        block = np.zeros((stop - start,) + rest, dtype=np.int64)
        np.add.at(block, (sel[:, 0] - start,) + tuple(sel[:, 1:].T), 1)
        for ax in range(1, d):
            np.cumsum(block, axis=ax, out=block)
        np.cumsum(block, axis=0, out=block)
        block += carry
        carry = block[-1].copy()
        vol = axes[0][start:stop].reshape((-1,) + (1,) * (d - 1)) * vol_rest
        diff = sign * (block / N - vol)
        k = int(np.argmax(diff))
        if diff.flat[k] > best:
            best = float(diff.flat[k])
            corner = np.unravel_index(k, diff.shape)
            where = (corner[0] + start,) + tuple(corner[1:])
    witness = tuple(float(axes[j][where[j]]) for j in range(d))
    return best, witness


def _check_budget(axes, budget: int, what: str) -> None:
    cells = math.prod(len(a) for a in axes)
    if cells > budget:
        raise BudgetExceeded(what, cells, budget)


def _extremes(pts: np.ndarray, axes: list[np.ndarray]):
    # count/N - vol is maximised with closed boxes, vol - count/N with open ones.
    over, w_over = _grid_extreme(pts, axes, strict=False, sign=+1)
    under, w_under = _grid_extreme(pts, axes, strict=True, sign=-1)
    return (over, w_over) if over >= under else (under, w_under)


def star_discrepancy_exact(P, budget: int = GRID_BUDGET) -> DiscrepancyEstimate:
    """Exact star discrepancy by enumerating the critical grid.

    Per axis the candidate corner coordinates are the point coordinates plus
    1. Closed-box counts give the sup of ``count/N - vol`` and open-box
    counts (the limit from below) give the sup of ``vol - count/N``.
    """
    pts = _as_points(P)
    N, d = pts.shape
    if N == 0:
        raise ValueError("empty point set")
    axes = [np.union1d(pts[:, j], [1.0]) for j in range(d)]
    _check_budget(axes, budget, "exact star discrepancy")
    value, witness = _extremes(pts, axes)
    return DiscrepancyEstimate(max(value, 0.0), "exact", witness=witness)


@dataclass(frozen=True)
class DeltaCover:
    """Uniform grid ``{k/M : k = 1..M}^d`` with ``M = ceil(d / delta)``."""

    d: int
    delta: float
    M: int

    @property
    def axis(self) -> np.ndarray:
        return np.arange(1, self.M + 1) / self.M

    @property
    def cardinality(self) -> int:
        return self.M ** self.d

    @property
    def points(self) -> np.ndarray:
        grid = np.indices((self.M,) * self.d).reshape(self.d, -1).T + 1
        return grid / self.M

    def bracket(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Cover points ``x <= y <= z`` (``x`` may be the origin) for ``y``."""
        y = np.asarray(y, dtype=float)
        lo = np.floor(y * self.M + 1e-12)
        hi = np.maximum(np.ceil(y * self.M - 1e-12), 1)
        x = np.zeros_like(y) if np.any(lo == 0) else lo / self.M
        return x, np.minimum(hi, self.M) / self.M


def build_delta_cover(d: int, delta: float, budget: int = GRID_BUDGET) -> DeltaCover:
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    M = math.ceil(d / delta)
    if M ** d > budget:
        raise BudgetExceeded(f"delta-cover (d={d}, delta={delta})", M ** d, budget)
    return DeltaCover(d, delta, M)


def star_discrepancy_cover(P, delta: float, budget: int = GRID_BUDGET) -> DiscrepancyEstimate:
    """Max of ``|vol - count/N|`` over a delta-cover; the exact star
    discrepancy lies in ``[value, value + delta]``."""
    pts = _as_points(P)
    cover = build_delta_cover(pts.shape[1], delta, budget)
    axes = [cover.axis] * cover.d
    value, witness = _extremes(pts, axes)
    value = max(value, 0.0)
    return DiscrepancyEstimate(value, "cover_interval", delta=delta,
                               upper=value + delta, witness=witness)


# --------------------------------------------------------------------------
# weighted discrepancy
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Coordinate weights: product form ``gamma_u = prod_{j in u} gamma_j``
    or an explicit map from subsets (tuples of 0-based axes) to weights."""

    form: str
    gamma: object

    @classmethod
    def product(cls, gammas) -> "WeightSpec":
        g = tuple(float(x) for x in gammas)
        if any(x < 0 for x in g):
            raise ValueError("weights must be >= 0")
        return cls("product", g)

    @classmethod
    def explicit(cls, mapping: dict) -> "WeightSpec":
        m = {tuple(sorted(k)): float(v) for k, v in mapping.items()}
        if any(v < 0 for v in m.values()) or () in m:
            raise ValueError("weights must be >= 0 and defined on nonempty subsets")
        return cls("explicit", m)

    @classmethod
    def ones(cls, d: int) -> "WeightSpec":
        return cls.product([1.0] * d)

    def weight(self, u: tuple) -> float:
        if self.form == "product":
            return math.prod(self.gamma[j] for j in u)
        return self.gamma.get(tuple(sorted(u)), 0.0)


def nonempty_subsets(d: int):
    for r in range(1, d + 1):
        yield from itertools.combinations(range(d), r)


def weighted_star_discrepancy(P, w: WeightSpec, method: str = "exact",
                              delta: float | None = None,
                              max_dim: int = MAX_SUBSET_DIM,
                              budget: int = GRID_BUDGET) -> float:
    """``max_u gamma_u * D*(P(u))`` over nonempty coordinate subsets ``u``.

    With ``method="cover"`` each projection uses the cover upper edge, so
    the result is an upper bound on the weighted discrepancy.
    """
    pts = _as_points(P)
    d = pts.shape[1]
    if d > max_dim:
        raise BudgetExceeded(f"weighted discrepancy over {2**d - 1} subsets",
                             2**d - 1, 2**max_dim - 1)
    best = 0.0
    for u in nonempty_subsets(d):
        g = w.weight(u)
        if g == 0.0:
            continue
        proj = pts[:, list(u)]
        if method == "exact":
            val = star_discrepancy_exact(proj, budget).value
        elif method == "cover":
            val = star_discrepancy_cover(proj, delta, budget).certified_upper
        else:
            raise ValueError(f"unknown method {method!r}")
        best = max(best, g * val)
    return best


# --------------------------------------------------------------------------
# restricted (convex-region) discrepancy
# --------------------------------------------------------------------------


class ConvexRegion:
    """Convex subset of the unit cube with a box-intersection volume oracle.

    ``A @ x <= b`` halfspaces define membership. Volumes of ``region ∩ box``
    are exact for the whole cube and otherwise estimated from a fixed
    scrambled Sobol' point set, so repeated queries are reproducible.
    """

    def __init__(self, d: int, A=None, b=None, kind: str = "halfspace_list",
                 params: dict | None = None, oracle_log2: int = 16, oracle_seed: int = 0):
        self.d = d
        self.A = np.zeros((0, d)) if A is None else np.asarray(A, dtype=float)
        self.b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
        self.kind = kind
        self.params = params or {}
        self.oracle_log2 = oracle_log2
        self.oracle_seed = oracle_seed
        self._probe = None

    @classmethod
    def unit_cube(cls, d: int) -> "ConvexRegion":
        return cls(d, kind="cube")

    @classmethod
    def simplex_eps(cls, d: int, eps: float, **kw) -> "ConvexRegion":
        """``{x1 >= ... >= xd >= eps, 1 - sum(x) >= eps}``."""
        if eps <= 0:
            raise ValueError("eps must be > 0")
        rows, rhs = [], []
        for j in range(d - 1):
            r = np.zeros(d)
            r[j], r[j + 1] = -1.0, 1.0
            rows.append(r)
            rhs.append(0.0)
        r = np.zeros(d)
        r[d - 1] = -1.0
        rows.append(r)
        rhs.append(-eps)
        rows.append(np.ones(d))
        rhs.append(1.0 - eps)
        return cls(d, rows, rhs, kind="simplex_eps", params={"eps": eps}, **kw)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        if len(self.b):
            inside &= np.all(x @ self.A.T <= self.b + 1e-15, axis=1)
        return inside

    @property
    def exact(self) -> bool:
        return self.kind == "cube"

    def probe(self) -> np.ndarray:
        """Oracle points lying in the region (subset of a Sobol' set)."""
        if self._probe is None:
            s = qmc.Sobol(self.d, scramble=True, seed=self.oracle_seed).random_base2(self.oracle_log2)
            self._probe = s[self.contains(s)]
        return self._probe

    @property
    def oracle_n(self) -> int:
        return 1 << self.oracle_log2

    def box_volume(self, lo, hi, closed_upper=None) -> tuple[np.ndarray, np.ndarray]:
        """Volumes of ``region ∩ [lo, hi]`` for rows of ``lo``/``hi`` and
        their standard errors (zero when exact)."""
        lo = np.atleast_2d(lo)
        hi = np.atleast_2d(hi)
        if self.exact:
            vol = np.prod(np.clip(hi - lo, 0.0, None), axis=1)
            return vol, np.zeros_like(vol)
        S = self.probe()
        n = self.oracle_n
        out = np.empty(len(lo))
        chunk = max(1, (1 << 22) // max(len(S), 1))
        for s in range(0, len(lo), chunk):
            l, h = lo[s:s + chunk, None, :], hi[s:s + chunk, None, :]
            inside = np.all((S[None] >= l) & (S[None] <= h), axis=2)
            out[s:s + chunk] = inside.sum(axis=1) / n
        se = np.sqrt(out * (1.0 - out) / n)
        return out, se


def _count_in_boxes(pts, region, lo, hi, closed_upper):
    inr = pts[region.contains(pts)]
    counts = np.empty(len(lo))
    chunk = max(1, (1 << 22) // max(len(inr), 1))
    for s in range(0, len(lo), chunk):
        l, h = lo[s:s + chunk, None, :], hi[s:s + chunk, None, :]
        c = closed_upper[s:s + chunk, None, None]
        upper_ok = np.where(c, inr[None] <= h, inr[None] < h)
        counts[s:s + chunk] = np.all((inr[None] >= l) & upper_ok, axis=2).sum(axis=1)
    return counts


def candidate_boxes(pts: np.ndarray, n_random: int, rng) -> tuple:
    """Anchored boxes at every point (closed and open) and at the far corner,
    followed by ``n_random`` random axis-parallel boxes.

    Random boxes are drawn as a prefix-stable stream, so a larger budget
    yields a superset of boxes.
    """
    N, d = pts.shape
    zeros = np.zeros((2 * N + 1, d))
    hi = np.vstack([pts, pts, np.ones((1, d))])
    closed = np.concatenate([np.ones(N, bool), np.zeros(N, bool), [True]])
    gen = rng.generator()
    corners = gen.random((n_random, 2, d))
    rlo, rhi = corners.min(axis=1), corners.max(axis=1)
    return (np.vstack([zeros, rlo]), np.vstack([hi, rhi]),
            np.concatenate([closed, np.ones(n_random, bool)]))


def restricted_discrepancy(P, region: ConvexRegion, boxes: int, rng) -> DiscrepancyEstimate:
    """Lower estimate of ``2^d sup_A |count(region ∩ A)/N - vol(region ∩ A)|``
    over axis-parallel boxes ``A``, taken over the candidate boxes."""
    pts = _as_points(P)
    N, d = pts.shape
    lo, hi, closed = candidate_boxes(pts, boxes, rng)
    counts = _count_in_boxes(pts, region, lo, hi, closed)
    vol, se = region.box_volume(lo, hi)
    diff = np.abs(counts / N - vol)
    k = int(np.argmax(diff))
    return DiscrepancyEstimate(
        2**d * float(diff[k]), "sampled_lower",
        witness=(tuple(lo[k]), tuple(hi[k])),
        oracle_se=2**d * float(se[k]),
    )


# --------------------------------------------------------------------------
# replications
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicationSummary:
    mean: float
    std: float
    ci_low: float
    ci_high: float
    values: tuple

    @property
    def R(self) -> int:
        return len(self.values)


def summarize(values, z: float = 1.959963984540054) -> ReplicationSummary:
    v = np.asarray(values, dtype=float)
    R = len(v)
    mean = math.fsum(v) / R
    std = math.sqrt(math.fsum((v - mean) ** 2) / (R - 1)) if R > 1 else 0.0
    half = z * std / math.sqrt(R) if R > 1 else 0.0
    return ReplicationSummary(mean, std, mean - half, mean + half, tuple(v.tolist()))


def discrepancy_of(P, method: str = "exact", delta: float | None = None,
                   budget: int = GRID_BUDGET) -> float:
    if method == "exact":
        return star_discrepancy_exact(P, budget).value
    if method == "cover":
        return star_discrepancy_cover(P, delta, budget).value
    raise ValueError(f"unknown method {method!r}")


def expected_discrepancy(generate: Callable, R: int, seed: int, method: str = "exact",
                         delta: float | None = None, label: tuple = (),
                         workers: int = 1) -> ReplicationSummary:
    """Mean, sample std and normal 95% CI of the discrepancy over ``R``
    replications; replication ``r`` draws from ``RngStream(seed, label + (r,))``.

    ``generate(rng) -> SampleSet``. Output does not depend on ``workers``.
    """
    from .sampler import RngStream

    if R < 1:
        raise ValueError("R must be >= 1")
    base = RngStream(seed, tuple(label))

    def one(r):
        return discrepancy_of(generate(base.child(r)), method, delta)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            values = list(ex.map(one, range(R)))
    else:
        values = [one(r) for r in range(R)]
    return summarize(values)
