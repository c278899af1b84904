"""Built-in integrands, sample-mean estimation and Koksma-Hlawka checks.

Variation is the sum over all coordinate subsets ``u`` (empty and full set
included) of ``2^(d-|u|) * integral |d^|u| f / dx_u|``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .discrepancy import ConvexRegion, DiscrepancyEstimate, _as_points, star_discrepancy_exact

ORACLE_FILE = "oracles.json"
ORACLE_SCHEMA = 1
# Oracle standard errors tolerated before declaring a K-H violation.
SLACK_SIGMAS = 4.0


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Integrand:
    id: str
    d: int
    func: Callable[[np.ndarray], np.ndarray]
    exact_integral: float
    variation: float
    integral_se: float = 0.0
    variation_se: float = 0.0
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.func(np.atleast_2d(x))


def constant(d: int) -> Integrand:
    return Integrand("constant", d, lambda x: np.ones(len(x)), 1.0, 2.0 ** d)


def product_poly(d: int) -> Integrand:
    """``f(x) = x_1 * ... * x_d``; every subset contributes 1 to the variation."""
    return Integrand("product_poly", d, lambda x: np.prod(x, axis=1), 2.0 ** -d, 2.0 ** d)


def indicator_box(x0) -> Integrand:
    """Indicator of the anchored box ``[0, x0]``.

    Its mixed derivatives are measures; their total masses give
    ``V = prod_j (1 + 2 x0_j)``.
    """
    x0 = np.asarray(x0, dtype=float)
    d = len(x0)
    return Integrand(
        "indicator_box", d,
        lambda x: np.all(x <= x0, axis=1).astype(float),
        float(np.prod(x0)), float(np.prod(1.0 + 2.0 * x0)),
        params={"x0": x0.tolist()},
    )


# --------------------------------------------------------------------------
# simplex integrand f(x) = (1 - sum x) / prod x on Sigma(eps)
# --------------------------------------------------------------------------


def simplex_f_values(x: np.ndarray) -> np.ndarray:
    return (1.0 - x.sum(axis=1)) / np.prod(x, axis=1)


def simplex_f_partial_abs(x: np.ndarray, u: tuple) -> np.ndarray:
    """``|d^|u| f / dx_u|`` for ``f = (1 - sum x) / prod x``.

    Differentiating gives ``(-1)^|u| (1 - sum_{k not in u} x_k) /
    (prod x * prod_{j in u} x_j)``.
    """
    d = x.shape[1]
    rest = [k for k in range(d) if k not in u]
    num = np.abs(1.0 - x[:, rest].sum(axis=1)) if rest else np.ones(len(x))
    den = np.prod(x, axis=1) * (np.prod(x[:, list(u)], axis=1) if u else 1.0)
    return num / den


def _all_subsets(d: int):
    for mask in range(1 << d):
        yield tuple(j for j in range(d) if mask >> j & 1)


def simplex_oracle(d: int, eps: float, log2_points: int = 16, reps: int = 16,
                   seed: int = 20240101, max_points: int = 1 << 24) -> dict:
    """Randomised-QMC values of ``integral_Sigma f``, ``vol(Sigma)`` and the
    variation of ``f`` restricted to ``Sigma``, with standard errors across
    ``reps`` independently scrambled Sobol' sets."""
    if reps * (1 << log2_points) > max_points:
        raise OracleBudgetExceeded(f"{reps} x 2**{log2_points} points exceeds {max_points}")
    region = ConvexRegion.simplex_eps(d, eps)
    seeds = np.random.SeedSequence(seed).spawn(reps)
    integ, var, vol = [], [], []
    n = 1 << log2_points
    for s in seeds:
        x = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(s)).random_base2(log2_points)
        x = x[region.contains(x)]
        integ.append(simplex_f_values(x).sum() / n)
        vol.append(len(x) / n)
        var.append(sum(2.0 ** (d - len(u)) * simplex_f_partial_abs(x, u).sum() / n
                       for u in _all_subsets(d)))

    def est(v):
        v = np.asarray(v)
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))

    (I, Ise), (V, Vse), (A, Ase) = est(integ), est(var), est(vol)
    return {"integrand": "simplex_f", "d": d, "eps": eps, "integral": I,
            "integral_se": Ise, "variation": V, "variation_se": Vse,
            "volume": A, "volume_se": Ase, "method": "rqmc-sobol",
            "seed": seed, "reps": reps, "points_per_rep": n}


def load_oracles() -> list[dict]:
    text = resources.files("hsfcdisc.data").joinpath(ORACLE_FILE).read_text()
    data = json.loads(text)
    if data.get("schema") != ORACLE_SCHEMA:
        raise ValueError(f"unsupported oracle schema {data.get('schema')}")
    return data["entries"]


def lookup_oracle(d: int, eps: float) -> dict | None:
    for e in load_oracles():
        if e["integrand"] == "simplex_f" and e["d"] == d and math.isclose(e["eps"], eps):
            return e
    return None


@dataclass(frozen=True)
class RegionIntegrand:
    """``f * 1_region``: evaluations outside the region contribute 0."""

    base: Callable[[np.ndarray], np.ndarray]
    region: ConvexRegion
    integral: float
    integral_se: float
    variation: float
    variation_se: float
    id: str = "region"

    @property
    def d(self) -> int:
        return self.region.d

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        inside = self.region.contains(x)
        out[inside] = self.base(x[inside])
        return out


def simplex_f(d: int, eps: float, oracle: dict | None = None) -> RegionIntegrand:
    """``(1 - sum x) / prod x`` restricted to ``Sigma(eps)``; integral and
    variation come from the shipped oracle fixtures, or are computed."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    o = oracle or lookup_oracle(d, eps) or simplex_oracle(d, eps)
    return RegionIntegrand(simplex_f_values, ConvexRegion.simplex_eps(d, eps),
                           o["integral"], o["integral_se"], o["variation"],
                           o["variation_se"], id="simplex_f")


def from_id(name: str, d: int, **params):
    if name == "constant":
        return constant(d)
    if name == "product_poly":
        return product_poly(d)
    if name == "indicator_box":
        return indicator_box(params.get("x0", [0.7] * d))
    if name == "simplex_f":
        return simplex_f(d, params.get("eps", 0.2))
    raise ValueError(f"unknown integrand {name!r}")


# --------------------------------------------------------------------------
# estimation and error checks
# --------------------------------------------------------------------------


def sample_mean(f, P) -> float:
    pts = _as_points(P)
    if pts.shape[1] != f.d:
        raise ValueError(f"integrand dimension {f.d} != point dimension {pts.shape[1]}")
    return math.fsum(f(pts)) / len(pts)


@dataclass(frozen=True)
class IntegrationError:
    value: float
    oracle_se: float = 0.0


def integration_error(f, P) -> IntegrationError:
    exact = f.exact_integral if isinstance(f, Integrand) else f.integral
    return IntegrationError(abs(exact - sample_mean(f, P)), f.integral_se)


def _variation_grid(func, d: int, n: int, h: float) -> float:
    mid = (np.arange(n) + 0.5) / n
    x = np.stack(np.meshgrid(*([mid] * d), indexing="ij"), axis=-1).reshape(-1, d)
    total = 0.0
    for u in _all_subsets(d):
        # central mixed difference over the axes in u
        acc = np.zeros(len(x))
        for signs in itertools.product((1.0, -1.0), repeat=len(u)):
            shift = np.zeros(d)
            shift[list(u)] = np.asarray(signs) * h
            acc += math.prod(signs) * func(np.clip(x + shift, 0.0, 1.0))
        deriv = np.abs(acc) / (2.0 * h) ** len(u)
        total += 2.0 ** (d - len(u)) * deriv.mean()
    return float(total)


def variation_numeric(func, d: int, n: int = 64, h: float = 1e-4,
                      budget: int = 10**7) -> tuple[float, float]:
    """Variation of a smooth ``func`` from finite-difference mixed partials
    on an ``n**d`` midpoint grid.

    Returns the estimate and the change against an ``n/2`` grid as an error
    indicator.
    """
    if n ** d * 3 ** d > budget:
        raise OracleBudgetExceeded(f"{n}**{d} grid with {2**d} subsets exceeds {budget}")
    fine = _variation_grid(func, d, n, h)
    coarse = _variation_grid(func, d, max(n // 2, 1), h)
    return fine, abs(fine - coarse)


def variation_hk(f, numeric: bool = False, **kw) -> float:
    """Closed-form (or cached oracle) variation; ``numeric=True`` recomputes
    it by finite differences instead."""
    if numeric:
        base = f.func if isinstance(f, Integrand) else f
        return variation_numeric(base, f.d, **kw)[0]
    return f.variation


@dataclass(frozen=True)
class KHCheck:
    holds: bool
    margin: float
    error: float
    bound: float


def kh_check(f: Integrand, P, dstar: DiscrepancyEstimate) -> KHCheck:
    """Check ``|error| <= D* V(f)``. Cover estimates use their upper edge."""
    err = integration_error(f, P)
    bound = dstar.certified_upper * f.variation
    slack = SLACK_SIGMAS * err.oracle_se + 1e-12
    return KHCheck(err.value <= bound + slack, bound - err.value, err.value, bound)


@dataclass(frozen=True)
class RestrictedResult:
    estimate: float
    error: float
    bound: float
    holds: bool
    margin: float
    oracle_se: float


def restricted_integrate(rf: RegionIntegrand, P, dstar: DiscrepancyEstimate | None = None
                         ) -> RestrictedResult:
    """Sample mean of ``f * 1_region`` against the oracle integral, and the
    bound ``2^d D*(P) V(f)``."""
    pts = _as_points(P)
    if dstar is None:
        dstar = star_discrepancy_exact(pts)
    est = sample_mean(rf, pts)
    err = abs(est - rf.integral)
    scale = 2.0 ** rf.d * dstar.certified_upper
    bound = scale * rf.variation
    slack = SLACK_SIGMAS * (rf.integral_se + scale * rf.variation_se) + 1e-12
    return RestrictedResult(est, err, bound, err <= bound + slack, bound - err, rf.integral_se)


def write_oracles(path, configs=((2, 0.2), (3, 0.1))) -> None:
    entries = [simplex_oracle(d, eps) for d, eps in configs]
    with open(path, "w") as fh:
        json.dump({"schema": ORACLE_SCHEMA, "entries": entries}, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    import sys

    write_oracles(sys.argv[1] if len(sys.argv) > 1 else ORACLE_FILE)
