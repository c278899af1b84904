"""Closed-form star-discrepancy and integration-error bounds.

All functions are pure and evaluated in double precision; the combinatorial
constant ``(2e)^d / sqrt(2 pi d)`` is accumulated in log space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .discrepancy import WeightSpec, nonempty_subsets
from .hilbert import diameter_bound

# Probabilistic Monte Carlo bounds: C * sqrt(K - ln(1-q)/d) * sqrt(d/N).
AISTLEITNER_C = 5.7
AISTLEITNER_K = 4.9
GNEWUCH_C = 0.7729
GNEWUCH_K = 10.7042


def _check(d, q=None, N=None):
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if q is not None and not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if N is not None and N < 0:
        raise ValueError(f"N must be >= 0, got {N}")


def _log_cover_constant(d: int) -> float:
    # ln((2e)^d / sqrt(2 pi d))
    return d * (math.log(2.0) + 1.0) - 0.5 * math.log(2.0 * math.pi * d)


def c_dq(d: int, q: float) -> float:
    """``ln((2e)^d / (sqrt(2 pi d) (1 - q)))``."""
    _check(d, q)
    return _log_cover_constant(d) - math.log1p(-q)


def a_dqn(d: int, q: float, N: float) -> float:
    """``d ln(2e) + d ln(N+1) - ln(2 pi d)/2 - ln(1-q)``."""
    _check(d, q, N)
    return c_dq(d, q) + d * math.log1p(N)


def hsfc_bound(d: int, q: float, N: float) -> float:
    """Star-discrepancy bound holding with probability >= q for HSFC samples:
    ``6 d^(3/4) N^(-1/2-1/(2d)) sqrt(d ln(N+1) + c(d,q)) + 2 c(d,q) / (3N)``."""
    _check(d, q, N)
    if N < 1:
        raise ValueError("N must be >= 1")
    c = c_dq(d, q)
    return (6.0 * d ** 0.75 * N ** (-0.5 - 0.5 / d) * math.sqrt(d * math.log1p(N) + c)
            + 2.0 * c / (3.0 * N))


def _mc_bound(C: float, K: float, d: int, q: float, N: float) -> float:
    _check(d, q, N)
    if N < 1:
        raise ValueError("N must be >= 1")
    return C * math.sqrt(K - math.log1p(-q) / d) * math.sqrt(d / N)


def mc_bound_aistleitner(d: int, q: float, N: float) -> float:
    return _mc_bound(AISTLEITNER_C, AISTLEITNER_K, d, q, N)


def mc_bound_gnewuch(d: int, q: float, N: float) -> float:
    return _mc_bound(GNEWUCH_C, GNEWUCH_K, d, q, N)


def cover_cardinality_bound(d: int, delta: float) -> float:
    """Upper bound ``2^d e^d / sqrt(2 pi d) (1/delta + 1)^d`` on the size of a
    smallest delta-cover."""
    _check(d)
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return math.exp(_log_cover_constant(d) + d * math.log1p(1.0 / delta))


def kh_error_bound(dstar: float, variation: float) -> float:
    if dstar < 0 or variation < 0:
        raise ValueError("discrepancy and variation must be >= 0")
    return dstar * variation


def weighted_bound_rhs(d: int, q: float, N: float, w: WeightSpec, max_dim: int = 12) -> float:
    """``max_u gamma_u * hsfc_bound(|u|, q, N)`` over nonempty subsets ``u``."""
    _check(d, q, N)
    if d > max_dim:
        raise ValueError(f"subset enumeration limited to d <= {max_dim}")
    per_size = {}
    best = 0.0
    for u in nonempty_subsets(d):
        g = w.weight(u)
        if g == 0.0:
            continue
        k = len(u)
        if k not in per_size:
            per_size[k] = hsfc_bound(k, q, N)
        best = max(best, g * per_size[k])
    return best


@dataclass(frozen=True)
class BoundReport:
    d: int
    N: int
    q: float
    c_dq: float
    a_dqn: float
    hsfc_bound: float
    mc_bound_aistleitner: float
    mc_bound_gnewuch: float
    diameter_bound: float
    cover_cardinality: float | None = None
    delta: float | None = None

    @property
    def clamped(self) -> dict:
        """Discrepancy bounds capped at 1 (the star discrepancy never exceeds 1)."""
        return {k: min(getattr(self, k), 1.0)
                for k in ("hsfc_bound", "mc_bound_aistleitner", "mc_bound_gnewuch")}

    def as_dict(self) -> dict:
        out = asdict(self)
        out["clamped"] = self.clamped
        return out


def bound_report(d: int, N: int, q: float, delta: float | None = None) -> BoundReport:
    return BoundReport(
        d=d, N=N, q=q,
        c_dq=c_dq(d, q),
        a_dqn=a_dqn(d, q, N),
        hsfc_bound=hsfc_bound(d, q, N),
        mc_bound_aistleitner=mc_bound_aistleitner(d, q, N),
        mc_bound_gnewuch=mc_bound_gnewuch(d, q, N),
        diameter_bound=diameter_bound(d, N),
        cover_cardinality=None if delta is None else cover_cardinality_bound(d, delta),
        delta=delta,
    )
