import inspect

import mpmath as mp
import pytest

from hsfcdisc import bounds
from hsfcdisc.bounds import (a_dqn, bound_report, c_dq, cover_cardinality_bound, hsfc_bound,
                             kh_error_bound, mc_bound_aistleitner, mc_bound_gnewuch,
                             weighted_bound_rhs)
from hsfcdisc.discrepancy import WeightSpec

mp.mp.dps = 40


def c_hp(d, q):
    return mp.log((2 * mp.e) ** d / (mp.sqrt(2 * mp.pi * d) * (1 - mp.mpf(q))))


def hsfc_hp(d, q, N):
    c = c_hp(d, q)
    return (6 * mp.mpf(d) ** 0.75 * mp.mpf(N) ** (-mp.mpf(1) / 2 - mp.mpf(1) / (2 * d))
            * mp.sqrt(d * mp.log(N + 1) + c) + 2 * c / (3 * N))


def mc_hp(C, K, d, q, N):
    return mp.mpf(C) * mp.sqrt(mp.mpf(K) - mp.log(1 - mp.mpf(q)) / d) * mp.sqrt(mp.mpf(d) / N)


@pytest.mark.parametrize("d,q", [(1, 0.5), (2, 0.9), (3, 0.1), (40, 0.99)])
def test_c_dq_high_precision(d, q):
    assert c_dq(d, q) == pytest.approx(float(c_hp(d, q)), rel=1e-12)


def test_c_dq_examples():
    assert c_dq(1, 1e-15) == pytest.approx(0.7742, abs=1e-4)
    assert c_dq(2, 0.9) == pytest.approx(4.423, abs=1e-3)


def test_a_dqn():
    assert a_dqn(2, 0.9, 1024) == pytest.approx(18.29, abs=0.01)
    assert a_dqn(2, 0.9, 1024) == pytest.approx(c_dq(2, 0.9) + 2 * mp.log(1025), rel=1e-12)
    assert a_dqn(3, 0.5, 0) == pytest.approx(c_dq(3, 0.5))


def test_a_dqn_lower_value():
    # A >= 3 holds for d >= 2 but not at d = 1 with small N
    assert a_dqn(1, 1e-12, 1) < 3.0
    assert a_dqn(1, 1e-12, 1) == pytest.approx(float(c_hp(1, 0) + mp.log(2)), abs=1e-9)
    assert min(a_dqn(d, 1e-12, N) for d in range(2, 8) for N in range(1, 50)) >= 3.0
    assert min(a_dqn(1, 1e-12, N) for N in range(9, 500)) >= 3.0


def test_hsfc_bound_values():
    assert hsfc_bound(2, 0.9, 1024) == pytest.approx(0.241, abs=1e-3)
    assert hsfc_bound(1, 0.5, 1) == pytest.approx(float(hsfc_hp(1, 0.5, 1)), rel=1e-12)
    for d, q, N in [(2, 0.9, 1024), (3, 0.99, 10**5), (5, 0.5, 7)]:
        assert hsfc_bound(d, q, N) == pytest.approx(float(hsfc_hp(d, q, N)), rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hsfc_bound_decreasing_in_N(d):
    prev = hsfc_bound(d, 0.9, 2)
    for N in range(3, 2**20 + 1, 37):
        cur = hsfc_bound(d, 0.9, N)
        assert cur < prev
        prev = cur


def test_bounds_increasing_in_q():
    qs = [0.01, 0.1, 0.5, 0.9, 0.999]
    for f in (hsfc_bound, mc_bound_aistleitner, mc_bound_gnewuch):
        vals = [f(2, q, 256) for q in qs]
        assert vals == sorted(vals)


def test_mc_bounds():
    assert mc_bound_gnewuch(2, 0.9, 1024) == pytest.approx(0.1176, abs=1e-4)
    # evaluated formula; see the decisions ledger about a quoted 0.628
    assert mc_bound_aistleitner(2, 0.9, 1024) == pytest.approx(
        float(mc_hp(5.7, 4.9, 2, 0.9, 1024)), rel=1e-12)
    assert mc_bound_aistleitner(2, 0.9, 1024) == pytest.approx(0.6197, abs=1e-4)
    assert mc_bound_gnewuch(3, 0.7, 4000) / mc_bound_gnewuch(3, 0.7, 1000) == pytest.approx(0.5, rel=1e-14)
    assert mc_bound_gnewuch(1, 1e-12, 4) == pytest.approx(0.7729 * mp.sqrt(10.7042) / 2, rel=1e-9)


def test_constants_in_source():
    src = inspect.getsource(bounds)
    for c in ("5.7", "4.9", "0.7729", "10.7042"):
        assert c in src


def test_aistleitner_dominates_gnewuch():
    for d in range(1, 8):
        for q in (0.01, 0.5, 0.9, 0.999):
            for N in (1, 10, 1000, 10**6):
                assert mc_bound_aistleitner(d, q, N) > mc_bound_gnewuch(d, q, N)


def test_hsfc_crossover_with_aistleitner():
    Ns = range(1, 2**14)
    below = [N for N in Ns if hsfc_bound(2, 0.9, N) < mc_bound_aistleitner(2, 0.9, N)]
    N0 = below[0]
    assert all(hsfc_bound(2, 0.9, N) < mc_bound_aistleitner(2, 0.9, N)
               for N in list(range(N0, 2**14)) + [2**k for k in range(14, 30)])


def test_cover_cardinality():
    assert cover_cardinality_bound(2, 0.5) == pytest.approx(75.0, abs=0.05)
    assert cover_cardinality_bound(1, 1.0) == pytest.approx(float(4 * mp.e / mp.sqrt(2 * mp.pi)))
    vals = [cover_cardinality_bound(3, d) for d in (1.0, 0.5, 0.1, 0.01)]
    assert vals == sorted(vals)


def test_kh_error_bound():
    assert kh_error_bound(0.1, 4.0) == pytest.approx(0.4)
    assert kh_error_bound(0.0, 10.0) == 0.0
    assert kh_error_bound(0.75, 0.0) == 0.0
    assert kh_error_bound(0.75, 4.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        kh_error_bound(-0.1, 1.0)


def test_weighted_rhs():
    assert weighted_bound_rhs(2, 0.9, 1024, WeightSpec.ones(2)) == pytest.approx(hsfc_bound(2, 0.9, 1024))
    w = WeightSpec.product([1.0, 0.5])
    terms = [hsfc_bound(1, 0.9, 1024), 0.5 * hsfc_bound(1, 0.9, 1024), 0.5 * hsfc_bound(2, 0.9, 1024)]
    assert weighted_bound_rhs(2, 0.9, 1024, w) == pytest.approx(max(terms))
    # the two-dimensional term is the largest one at these parameters
    assert max(terms) == terms[2]
    assert weighted_bound_rhs(2, 0.9, 1024, WeightSpec.product([0, 0])) == 0.0


@pytest.mark.parametrize("args", [(0, 0.5, 10), (2, 0.0, 10), (2, 1.0, 10), (2, 0.5, 0)])
def test_domain_errors(args):
    with pytest.raises(ValueError):
        hsfc_bound(*args)


def test_report_clamped():
    rep = bound_report(3, 4, 0.9, 0.1)
    assert rep.hsfc_bound > 1 and rep.clamped["hsfc_bound"] == 1.0
    assert rep.as_dict()["cover_cardinality"] == pytest.approx(cover_cardinality_bound(3, 0.1))
