import itertools
import math

import numpy as np
import pytest
from scipy import integrate as sint

from hsfcdisc import integrate as I
from hsfcdisc.discrepancy import ConvexRegion, DiscrepancyEstimate, star_discrepancy_exact
from hsfcdisc.sampler import RngStream, hsfc_stratified, monte_carlo


def exact(v):
    return DiscrepancyEstimate(v, "exact")


class TestSampleMean:
    def test_constant(self, np_rng):
        assert I.sample_mean(I.constant(3), np_rng.random((17, 3))) == 1.0

    def test_product_single_point(self):
        assert I.sample_mean(I.product_poly(2), [[0.5, 0.5]]) == 0.25

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            I.sample_mean(I.product_poly(2), [[0.5, 0.5, 0.5]])

    def test_permutation_invariant(self, np_rng):
        pts = np_rng.random((50, 2))
        f = I.product_poly(2)
        assert I.sample_mean(f, pts) == I.sample_mean(f, pts[::-1])


class TestError:
    def test_constant(self):
        assert I.integration_error(I.constant(2), [[0.1, 0.2]]).value == 0.0

    def test_product_1d_centre(self):
        assert I.integration_error(I.product_poly(1), [[0.5]]).value == 0.0

    def test_product_2d_corner(self):
        assert I.integration_error(I.product_poly(2), [[1.0, 1.0]]).value == pytest.approx(0.75)

    def test_oracle_se_attached(self):
        f = I.simplex_f(2, 0.2)
        assert I.integration_error(f, [[0.5, 0.3]]).oracle_se == f.integral_se > 0


class TestVariation:
    @pytest.mark.parametrize("d,v", [(1, 2.0), (2, 4.0), (3, 8.0)])
    def test_product_poly(self, d, v):
        f = I.product_poly(d)
        assert I.variation_hk(f) == v
        assert I.variation_hk(f, numeric=True, n=16) == pytest.approx(v, rel=1e-6)

    @pytest.mark.parametrize("d", [1, 2, 4])
    def test_constant(self, d):
        assert I.variation_hk(I.constant(d)) == 2.0 ** d
        assert I.variation_hk(I.constant(d), numeric=True, n=4) == pytest.approx(2.0 ** d)

    def test_indicator_as_limit_of_ramps(self):
        # smooth ramps 1 -> 0 over [x0 - w, x0]: variation tends to prod(1 + 2 x0)
        x0, w = np.array([0.7, 0.4]), 0.05

        def ramp(x):
            return np.prod(np.clip((x0 - x) / w, 0.0, 1.0), axis=1)

        v, err = I.variation_numeric(ramp, 2, n=400, h=1e-5)
        assert v == pytest.approx(np.prod(1 + 2 * x0 - w), abs=0.02)
        f = I.indicator_box(x0)
        assert f.variation == pytest.approx(np.prod(1 + 2 * x0))
        assert f.exact_integral == pytest.approx(0.28)

    def test_budget(self):
        with pytest.raises(I.OracleBudgetExceeded):
            I.variation_numeric(lambda x: x[:, 0], 6, n=64)


def test_simplex_partial_matches_finite_differences(np_rng):
    h = 1e-4
    for d in (2, 3):
        x = 0.2 + 0.1 * np_rng.random((20, d))
        for u in I._all_subsets(d):
            acc = np.zeros(len(x))
            for signs in itertools.product((1, -1), repeat=len(u)):
                signs = np.array(signs)
                s = np.zeros(d)
                s[list(u)] = signs * h
                acc += np.prod(signs) * I.simplex_f_values(x + s)
            fd = np.abs(acc) / (2 * h) ** len(u)
            assert np.allclose(I.simplex_f_partial_abs(x, u), fd, rtol=1e-4)


class TestOracleFixture:
    def test_schema(self):
        entries = I.load_oracles()
        assert {(e["d"], e["eps"]) for e in entries} >= {(2, 0.2)}
        for e in entries:
            assert e["integral_se"] > 0 and e["variation_se"] > 0

    def test_reproducible(self):
        e = I.lookup_oracle(2, 0.2)
        assert I.simplex_oracle(2, 0.2)["integral"] == pytest.approx(e["integral"], rel=1e-12)

    def test_matches_adaptive_quadrature_2d(self):
        e = I.lookup_oracle(2, 0.2)
        eps = 0.2
        # Sigma(eps) in 2d: eps <= x2 <= x1, x1 + x2 <= 1 - eps
        lo2, hi2 = eps, (1 - eps) / 2
        f = lambda x1, x2: (1 - x1 - x2) / (x1 * x2)
        integral, _ = sint.dblquad(lambda x1, x2: f(x1, x2), lo2, hi2,
                                   lambda x2: x2, lambda x2: 1 - eps - x2, epsabs=1e-11)

        def var_density(x1, x2):
            x = np.array([[x1, x2]])
            return sum(2.0 ** (2 - len(u)) * I.simplex_f_partial_abs(x, u)[0]
                       for u in I._all_subsets(2))

        variation, _ = sint.dblquad(lambda x1, x2: var_density(x1, x2), lo2, hi2,
                                    lambda x2: x2, lambda x2: 1 - eps - x2, epsabs=1e-9)
        assert abs(e["integral"] - integral) <= 4 * e["integral_se"]
        assert abs(e["variation"] - variation) <= 4 * e["variation_se"]
        assert e["volume"] == pytest.approx(0.04, abs=4 * e["volume_se"] + 1e-4)

    def test_budget(self):
        with pytest.raises(I.OracleBudgetExceeded):
            I.simplex_oracle(2, 0.2, log2_points=22, reps=16)


class TestKH:
    def test_constant(self, np_rng):
        pts = np_rng.random((8, 3))
        r = I.kh_check(I.constant(3), pts, exact(0.3))
        assert r.holds and r.margin == pytest.approx(0.3 * 8)

    def test_product_centre(self):
        r = I.kh_check(I.product_poly(2), [[0.5, 0.5]], star_discrepancy_exact([[0.5, 0.5]]))
        assert r.holds and r.error == 0.0 and r.bound == pytest.approx(3.0)

    def test_cover_uses_upper_edge(self):
        est = DiscrepancyEstimate(0.1, "cover_interval", delta=0.2, upper=0.3)
        assert I.kh_check(I.product_poly(2), [[0.5, 0.5]], est).bound == pytest.approx(1.2)

    @pytest.mark.parametrize("make", [lambda d: I.product_poly(d), lambda d: I.constant(d),
                                      lambda d: I.indicator_box([0.7] * d)])
    @pytest.mark.parametrize("d,m", [(1, 4), (2, 2), (3, 1)])
    def test_holds_on_hsfc_replications(self, make, d, m):
        f = make(d)
        for r in range(25):
            S = hsfc_stratified(d, m, RngStream(77, ("kh", d, r)))
            assert I.kh_check(f, S, star_discrepancy_exact(S)).holds


class TestRestricted:
    def test_cube_constant(self, np_rng):
        rf = I.RegionIntegrand(lambda x: np.ones(len(x)), ConvexRegion.unit_cube(2), 1.0, 0.0, 4.0, 0.0)
        res = I.restricted_integrate(rf, np_rng.random((10, 2)))
        assert res.estimate == 1.0 and res.error == 0.0 and res.holds

    def test_no_points_inside(self):
        rf = I.simplex_f(2, 0.2)
        res = I.restricted_integrate(rf, [[0.9, 0.9], [0.05, 0.05]])
        assert res.estimate == 0.0 and res.error == pytest.approx(rf.integral)

    def test_eps_rejected(self):
        with pytest.raises(ValueError):
            I.simplex_f(2, 0.0)

    def test_holds_on_hsfc(self):
        rf = I.simplex_f(2, 0.2)
        for r in range(20):
            S = hsfc_stratified(2, 3, RngStream(5, ("restricted", r)))
            assert I.restricted_integrate(rf, S).holds


def test_from_id():
    assert I.from_id("product_poly", 3).variation == 8.0
    assert I.from_id("indicator_box", 2).params["x0"] == [0.7, 0.7]
    with pytest.raises(ValueError):
        I.from_id("nope", 2)


def test_variance_reduction_indicator():
    f = I.indicator_box([0.7, 0.7])
    h = [I.sample_mean(f, hsfc_stratified(2, 2, RngStream(3, ("vr-h", r)))) for r in range(500)]
    m = [I.sample_mean(f, monte_carlo(2, 16, RngStream(3, ("vr-m", r)))) for r in range(500)]
    assert np.var(h, ddof=1) < np.var(m, ddof=1)
    assert abs(np.mean(m) - 0.49) < 4 * math.sqrt(0.49 * 0.51 / 16 / 500)
