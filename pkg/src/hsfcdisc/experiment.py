"""Replicated comparison experiments: configuration, CSV rows, summaries and
log-log convergence fits."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import bounds, integrate, sampler
from .discrepancy import star_discrepancy_cover, star_discrepancy_exact, summarize

SCHEMA = 1
COLUMNS = ("sampler", "d", "N", "replication", "seed_label", "dstar",
           "bound_hsfc", "bound_mc_gnewuch", "integ_error", "kh_margin")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def integer_root(N: int, d: int) -> int | None:
    """``m`` with ``m**d == N``, or None."""
    m = round(N ** (1.0 / d))
    for c in (m - 1, m, m + 1):
        if c >= 1 and c ** d == N:
            return c
    return None


def _valid_powers(d: int, N: int, base_of=lambda m, d: m ** d) -> str:
    vals, m = [], 1
    while len(vals) < 6 and base_of(m, d) <= max(N, 1) * 64:
        vals.append(base_of(m, d))
        m += 1
    return ", ".join(str(v) for v in vals)


def sampler_id(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "hsfc" and spec.get("mode", "scrambled_vdc") == "direct_offset":
        return "hsfc-direct"
    if kind == "theta":
        return f"theta@{float(spec['theta']):.6g}"
    return kind


def make_generator(spec: dict, d: int, N: int) -> Callable[[sampler.RngStream], sampler.SampleSet]:
    """Generator ``rng -> SampleSet`` for one sampler spec at size ``N``.

    Raises ConfigError when ``N`` is not a size the sampler can produce.
    """
    kind = spec.get("kind")
    if kind == "mc":
        return lambda rng: sampler.monte_carlo(d, N, rng)
    if kind == "lhs":
        return lambda rng: sampler.latin_hypercube(d, N, rng)
    if kind == "jittered":
        m = integer_root(N, d)
        if m is None:
            raise ConfigError([f"jittered needs N = m**{d}; got N={N}, valid N: "
                               f"{_valid_powers(d, N)}, ..."])
        return lambda rng: sampler.jittered(d, m, rng)
    if kind == "hsfc":
        mode = spec.get("mode", "scrambled_vdc")
        if mode not in ("scrambled_vdc", "direct_offset"):
            raise ConfigError([f"unknown hsfc mode {mode!r}"])
        k = round(math.log2(N) / d) if N >= 1 else -1
        if N < 1 or 2 ** (d * k) != N:
            raise ConfigError([f"hsfc needs N = 2**({d}*m); got N={N}, valid N: "
                               f"{_valid_powers(d, N, lambda m, d: 2 ** (d * (m - 1)))}, ..."])
        return lambda rng: sampler.hsfc_stratified(d, k, rng, mode)
    if kind == "theta":
        if d != 2:
            raise ConfigError(["theta partition is two-dimensional (d=2)"])
        m = integer_root(N, 2)
        if m is None or m < 2:
            raise ConfigError([f"theta partition needs N = m**2 with m >= 2; got N={N}"])
        if "theta" not in spec:
            raise ConfigError(["theta sampler needs a 'theta' angle"])
        ps = sampler.ThetaPartitionSpec(m, float(spec["theta"]))
        return lambda rng: sampler.theta_partition_sample(ps, rng)
    raise ConfigError([f"unknown sampler kind {kind!r}; expected one of {sampler.GENERATORS}"])


@dataclass
class ExperimentConfig:
    samplers: list
    d: int
    N: list
    R: int
    seed: int
    method: str = "exact"
    delta: float | None = None
    q: list = field(default_factory=lambda: [0.9])
    integrand: str | None = None
    integrand_params: dict = field(default_factory=dict)
    output: str | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        problems = []
        raw = dict(raw)
        if "sampler" in raw and "samplers" not in raw:
            raw["samplers"] = [raw.pop("sampler")]
        known = set(cls.__dataclass_fields__)
        for k in sorted(set(raw) - known):
            problems.append(f"unknown field {k!r}")
        for k in ("samplers", "d", "N", "R", "seed"):
            if k not in raw:
                problems.append(f"missing required field {k!r}")
        if problems:
            raise ConfigError(problems)
        samplers = [s if isinstance(s, dict) else {"kind": s} for s in raw["samplers"]]
        N = raw["N"] if isinstance(raw["N"], list) else [raw["N"]]
        q = raw.get("q", [0.9])
        q = q if isinstance(q, list) else [q]
        cfg = cls(samplers=samplers, d=raw["d"], N=N, R=raw["R"], seed=raw["seed"],
                  method=raw.get("method", "exact"), delta=raw.get("delta"), q=q,
                  integrand=raw.get("integrand"),
                  integrand_params=raw.get("integrand_params", {}),
                  output=raw.get("output"), workers=raw.get("workers", 1))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
        if not isinstance(raw, dict):
            raise ConfigError(["config must be a JSON object"])
        return cls.from_dict(raw)

    def validate(self) -> None:
        p = []
        if not isinstance(self.d, int) or self.d < 1:
            p.append("d must be an integer >= 1")
        if not self.N or not all(isinstance(n, int) and n >= 1 for n in self.N):
            p.append("N must be a nonempty list of integers >= 1")
        if not isinstance(self.R, int) or self.R < 1:
            p.append("R must be an integer >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            p.append("seed must be a 64-bit unsigned integer")
        if self.method not in ("exact", "cover"):
            p.append("method must be 'exact' or 'cover'")
        if self.method == "cover" and not (isinstance(self.delta, (int, float))
                                           and 0 < self.delta <= 1):
            p.append("method 'cover' needs delta in (0, 1]")
        if not all(isinstance(x, (int, float)) and 0 < x < 1 for x in self.q) or not self.q:
            p.append("q must be a nonempty list of probabilities in (0, 1)")
        if self.integrand not in (None, "constant", "product_poly", "indicator_box", "simplex_f"):
            p.append(f"unknown integrand {self.integrand!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            p.append("workers must be an integer >= 1")
        ids = [sampler_id(s) if "kind" in s else None for s in self.samplers]
        if len(set(ids)) != len(ids):
            p.append("sampler ids must be distinct")
        if p:
            raise ConfigError(p)
        for s in self.samplers:
            for n in self.N:
                make_generator(s, self.d, n)


@dataclass(frozen=True)
class ExperimentRow:
    sampler: str
    d: int
    N: int
    replication: int
    seed_label: str
    dstar: float
    bound_hsfc: float
    bound_mc_gnewuch: float
    integ_error: float | None
    kh_margin: float | None
    kh_holds: bool | None = None

    def cells(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            return format(v, ".17g") if isinstance(v, float) else str(v)
        return [fmt(getattr(self, c)) for c in COLUMNS]


def _one_replication(cfg: ExperimentConfig, spec: dict, N: int, r: int, f) -> ExperimentRow:
    sid = sampler_id(spec)
    rng = sampler.RngStream(cfg.seed, (sid, N, r))
    P = make_generator(spec, cfg.d, N)(rng)
    if cfg.method == "exact":
        est = star_discrepancy_exact(P)
    else:
        est = star_discrepancy_cover(P, cfg.delta)
    err = margin = holds = None
    if isinstance(f, integrate.RegionIntegrand):
        res = integrate.restricted_integrate(f, P, est)
        err, margin, holds = res.error, res.margin, res.holds
    elif f is not None:
        res = integrate.kh_check(f, P, est)
        err, margin, holds = res.error, res.margin, res.holds
    q0 = cfg.q[0]
    return ExperimentRow(sid, cfg.d, N, r, rng.label_str, est.value,
                         bounds.hsfc_bound(cfg.d, q0, N), bounds.mc_bound_gnewuch(cfg.d, q0, N),
                         err, margin, holds)


def run_rows(cfg: ExperimentConfig) -> list[ExperimentRow]:
    f = None
    if cfg.integrand:
        f = integrate.from_id(cfg.integrand, cfg.d, **cfg.integrand_params)
    jobs = [(s, N, r) for s in cfg.samplers for N in cfg.N for r in range(cfg.R)]
    work = lambda job: _one_replication(cfg, *job, f)  # noqa: E731
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            rows = list(ex.map(work, jobs))
    else:
        rows = [work(j) for j in jobs]
    return sorted(rows, key=lambda row: (row.sampler, row.N, row.replication))


@dataclass(frozen=True)
class ConvergenceFit:
    slope: float
    intercept: float
    stderr: float
    n_points: int


def fit_convergence(rows, sampler_name: str | None = None) -> ConvergenceFit:
    """OLS of ``log(mean D*)`` on ``log N`` (per-N means over replications)."""
    by_n: dict[int, list[float]] = {}
    for row in rows:
        if sampler_name is None or row.sampler == sampler_name:
            by_n.setdefault(int(row.N), []).append(float(row.dstar))
    if len(by_n) < 3:
        raise ValueError(f"need at least 3 distinct N values, got {len(by_n)}")
    Ns = sorted(by_n)
    x = np.log(Ns)
    y = np.log([math.fsum(by_n[n]) / len(by_n[n]) for n in Ns])
    res = stats.linregress(x, y)
    return ConvergenceFit(float(res.slope), float(res.intercept), float(res.stderr), len(Ns))


def summarize_rows(rows, cfg: ExperimentConfig) -> dict:
    out = {"schema": SCHEMA, "samplers": {}}
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault((row.sampler, row.N), []).append(row)
    for (sid, N), grp in sorted(groups.items()):
        s = summarize([r.dstar for r in grp])
        entry = {"R": s.R, "mean": s.mean, "std": s.std, "ci95": [s.ci_low, s.ci_high],
                 "bound_coverage": {str(q): sum(r.dstar <= bounds.hsfc_bound(cfg.d, q, N)
                                                for r in grp) / len(grp) for q in cfg.q}}
        if grp[0].kh_holds is not None:
            entry["kh_holds_fraction"] = sum(bool(r.kh_holds) for r in grp) / len(grp)
            entry["mean_integ_error"] = math.fsum(r.integ_error for r in grp) / len(grp)
        out["samplers"].setdefault(sid, {"per_N": {}})["per_N"][str(N)] = entry
    for sid, block in out["samplers"].items():
        if len(block["per_N"]) >= 3:
            fit = fit_convergence(rows, sid)
            block["fit"] = {"slope": fit.slope, "intercept": fit.intercept, "stderr": fit.stderr}
    return out


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.cells())
    return buf.getvalue()


def read_rows_csv(text: str) -> list[ExperimentRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        num = lambda k: float(rec[k]) if rec[k] != "" else None  # noqa: E731
        out.append(ExperimentRow(rec["sampler"], int(rec["d"]), int(rec["N"]),
                                 int(rec["replication"]), rec["seed_label"], float(rec["dstar"]),
                                 float(rec["bound_hsfc"]), float(rec["bound_mc_gnewuch"]),
                                 num("integ_error"), num("kh_margin")))
    return out


def run(cfg: ExperimentConfig) -> tuple[str, dict]:
    """Run every (sampler, N, replication); return CSV text and a summary."""
    rows = run_rows(cfg)
    text = rows_to_csv(rows)
    if cfg.output and cfg.output != "-":
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    return text, summarize_rows(rows, cfg)
