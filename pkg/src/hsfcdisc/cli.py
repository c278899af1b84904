"""Command-line front end.

Subcommands take ``key=value`` parameters::

    hsfcdisc sample hsfc d=2 m=3 seed=7 [mode=direct_offset] [out=points.csv]
    hsfcdisc discrepancy exact points.csv
    hsfcdisc discrepancy cover points.csv delta=0.05
    hsfcdisc bound d=2 N=1024 q=0.9 [delta=0.1]
    hsfcdisc integrate product_poly sampler=hsfc d=2 m=3 seed=1
    hsfcdisc experiment config.json

Exit codes: 0 success, 2 configuration error, 3 budget refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import bounds, experiment, integrate, sampler
from .discrepancy import (BudgetExceeded, WeightSpec, star_discrepancy_cover,
                          star_discrepancy_exact, weighted_star_discrepancy)
from .experiment import ConfigError

EXIT_CONFIG = 2
EXIT_BUDGET = 3


def parse_params(tokens, required=(), ints=(), floats=(), allowed=None) -> dict:
    params, problems = {}, []
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or not key:
            problems.append(f"expected key=value, got {tok!r}")
            continue
        params[key] = val
    if allowed is not None:
        problems += [f"unknown parameter {k!r}" for k in params if k not in allowed]
    problems += [f"missing parameter {k!r}" for k in required if k not in params]
    for k in ints:
        if k in params:
            try:
                params[k] = int(params[k])
            except ValueError:
                problems.append(f"{k} must be an integer")
    for k in floats:
        if k in params:
            try:
                params[k] = float(params[k])
            except ValueError:
                problems.append(f"{k} must be a number")
    if problems:
        raise ConfigError(problems)
    return params


def read_points_csv(path) -> np.ndarray:
    """Points CSV: optional ``#`` comment lines, a header ``x1..xd``, one row per point."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    except OSError as exc:
        raise ConfigError([f"cannot read points file: {exc}"]) from exc
    rows = list(csv.reader(lines))
    if not rows:
        raise ConfigError(["points file is empty"])
    try:
        pts = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError([f"bad number in points file: {exc}"]) from exc
    return pts.reshape(-1, len(rows[0]))


def points_csv(points: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(points.shape[1])])
    for p in points:
        w.writerow([format(float(v), ".17g") for v in p])
    return buf.getvalue()


def _sample_from_params(kind: str, p: dict) -> sampler.SampleSet:
    if "seed" not in p:
        raise ConfigError(["missing parameter 'seed' (no ambient randomness)"])
    d = p.get("d")
    if d is None:
        raise ConfigError(["missing parameter 'd'"])
    rng = sampler.RngStream(p["seed"], (kind,))
    if kind == "hsfc":
        if "m" in p:
            m = p["m"]
        elif "N" in p:
            experiment.make_generator({"kind": "hsfc"}, d, p["N"])
            m = round(np.log2(p["N"]) / d)
        else:
            raise ConfigError(["hsfc needs m= or N="])
        return sampler.hsfc_stratified(d, m, rng, p.get("mode", "scrambled_vdc"))
    if kind == "jittered":
        m = p.get("m")
        if m is None:
            if "N" not in p:
                raise ConfigError(["jittered needs m= or N="])
            m = experiment.integer_root(p["N"], d)
            if m is None:
                experiment.make_generator({"kind": "jittered"}, d, p["N"])
        return sampler.jittered(d, m, rng)
    if kind == "theta":
        m = p.get("m") or experiment.integer_root(p.get("N", 0), 2)
        if d != 2 or not m:
            raise ConfigError(["theta needs d=2 and m= (or N=m**2)"])
        return sampler.theta_partition_sample(
            sampler.ThetaPartitionSpec(m, p.get("theta", 0.0)), rng)
    if kind in ("mc", "lhs"):
        if "N" not in p:
            raise ConfigError([f"{kind} needs N="])
        fn = sampler.monte_carlo if kind == "mc" else sampler.latin_hypercube
        return fn(d, p["N"], rng)
    raise ConfigError([f"unknown sampler {kind!r}; expected one of {sampler.GENERATORS}"])


_SAMPLE_KEYS = {"d", "m", "N", "seed", "theta", "mode", "out"}


def cmd_sample(args) -> int:
    p = parse_params(args.params, ints=("d", "m", "N", "seed"), floats=("theta",),
                     allowed=_SAMPLE_KEYS)
    S = _sample_from_params(args.kind, p)
    text = points_csv(S.points)
    if p.get("out"):
        with open(p["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_discrepancy(args) -> int:
    p = parse_params(args.params, floats=("delta", "budget"), allowed={"delta", "budget", "gamma"})
    pts = read_points_csv(args.points)
    budget = int(p.get("budget", 10**8))
    if args.method == "exact":
        est = star_discrepancy_exact(pts, budget)
    elif args.method == "cover":
        if "delta" not in p:
            raise ConfigError(["cover needs delta="])
        est = star_discrepancy_cover(pts, p["delta"], budget)
    else:
        gam = [float(g) for g in p.get("gamma", ",".join(["1"] * pts.shape[1])).split(",")]
        val = weighted_star_discrepancy(pts, WeightSpec.product(gam), budget=budget)
        print(json.dumps({"kind": "weighted_exact", "value": val, "N": len(pts)}))
        return 0
    out = {"kind": est.kind, "value": est.value, "N": len(pts), "d": pts.shape[1]}
    if est.delta is not None:
        out.update(delta=est.delta, upper=est.upper)
    print(json.dumps(out))
    return 0


def cmd_bound(args) -> int:
    p = parse_params(args.params, required=("d", "N", "q"), ints=("d", "N"),
                     floats=("q", "delta"), allowed={"d", "N", "q", "delta"})
    try:
        rep = bounds.bound_report(p["d"], p["N"], p["q"], p.get("delta"))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    print(json.dumps(rep.as_dict(), indent=2))
    return 0


def cmd_integrate(args) -> int:
    p = parse_params(args.params, ints=("d", "m", "N", "seed"), floats=("theta", "eps"),
                     allowed=_SAMPLE_KEYS | {"sampler", "eps", "points"})
    if "points" in p:
        pts = read_points_csv(p["points"])
        d = pts.shape[1]
    else:
        S = _sample_from_params(p.get("sampler", "hsfc"), p)
        pts, d = S.points, S.d
    params = {"eps": p["eps"]} if "eps" in p else {}
    f = integrate.from_id(args.integrand, d, **params)
    dstar = star_discrepancy_exact(pts)
    if isinstance(f, integrate.RegionIntegrand):
        res = integrate.restricted_integrate(f, pts, dstar)
        out = {"estimate": res.estimate, "integral": f.integral, "error": res.error,
               "bound": res.bound, "holds": res.holds, "margin": res.margin,
               "dstar": dstar.value, "variation": f.variation}
    else:
        res = integrate.kh_check(f, pts, dstar)
        out = {"estimate": integrate.sample_mean(f, pts), "integral": f.exact_integral,
               "error": res.error, "bound": res.bound, "holds": res.holds,
               "margin": res.margin, "dstar": dstar.value, "variation": f.variation}
    print(json.dumps(out, indent=2))
    return 0


def cmd_experiment(args) -> int:
    cfg = experiment.ExperimentConfig.load(args.config)
    if args.output:
        cfg.output = args.output
    text, summary = experiment.run(cfg)
    if not cfg.output or cfg.output == "-":
        sys.stdout.write(text)
    print(json.dumps(summary, indent=2), file=sys.stderr if cfg.output in (None, "-") else sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsfcdisc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="generate a point set as CSV")
    s.add_argument("kind", choices=sampler.GENERATORS)
    s.add_argument("params", nargs="*")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("discrepancy", help="star discrepancy of a points CSV")
    s.add_argument("method", choices=("exact", "cover", "weighted"))
    s.add_argument("points")
    s.add_argument("params", nargs="*")
    s.set_defaults(func=cmd_discrepancy)

    s = sub.add_parser("bound", help="closed-form bounds for (d, N, q)")
    s.add_argument("params", nargs="*")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("integrate", help="integrate a built-in integrand and check K-H")
    s.add_argument("integrand", choices=("constant", "product_poly", "indicator_box", "simplex_f"))
    s.add_argument("params", nargs="*")
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("experiment", help="run a JSON experiment config")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="override the config's output path")
    s.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for prob in exc.problems:
            print(f"error: {prob}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
