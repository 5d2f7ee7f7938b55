import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgs.graphs import build_graph
from qgs.polytrig import IntervalUnion
from qgs.sampling import (Cover, CoverViolation, GammaResult, PeriodicTail,
                          SamplingParams, SamplingSet, gap_analysis,
                          graph_params, necessary_check, optimal_gamma,
                          optimal_rho, periodic_params, periodic_uniform_gamma,
                          svc_set, verify_cover)


def single_edge_set(iu):
    return SamplingSet(finite={"e": iu})


def single_edge_cover(bps):
    return Cover(breakpoints={"e": tuple(bps)})


class TestSvcConstruction:
    def test_depth0(self):
        iu, meas = svc_set(0)
        assert iu.intervals == ((0.0, 1.0),)
        assert meas == 1

    def test_depth1(self):
        iu, meas = svc_set(1)
        assert iu.intervals == ((0.0, 0.375), (0.625, 1.0))
        assert meas == Fraction(3, 4)

    def test_measures(self):
        for n in range(8):
            iu, meas = svc_set(n)
            assert meas == Fraction(1, 2) + Fraction(1, 2 ** (n + 1))
            assert iu.measure == pytest.approx(float(meas), abs=1e-15)

    def test_depth_cap(self):
        with pytest.raises(ValueError, match="depth"):
            svc_set(21)


class TestVerifyCover:
    def test_svc_half_half(self):
        iu, _ = svc_set(6)
        res = verify_cover(single_edge_set(iu), single_edge_cover([0.0, 0.5, 1.0]),
                           gamma=0.5, rho=0.5)
        assert isinstance(res, SamplingParams)
        assert res.gamma >= 0.5 and res.rho == 0.5

    def test_svc_four_ninths(self):
        iu, _ = svc_set(6)
        cover = single_edge_cover([0.0, 7 / 32, 0.5, 25 / 32, 1.0])
        res = verify_cover(single_edge_set(iu), cover, gamma=4 / 9, rho=9 / 32)
        assert isinstance(res, SamplingParams)
        # every window of the limit set holds measure exactly 1/8; the depth-6
        # superset keeps each window at or above that
        assert all(d * w >= 1 / 8 - 1e-12 for d, w in
                   zip(res.densities["e"], np.diff(cover.breakpoints["e"])))

    def test_half_open_set_fails_small_rho(self):
        ell = 1.0
        iu = IntervalUnion([(0.0, ell / 2)], length=ell)
        res = verify_cover(single_edge_set(iu), single_edge_cover([0.0, 0.5, 1.0]),
                           gamma=0.1, rho=0.5)
        assert isinstance(res, CoverViolation)
        assert any("holds measure" in msg for msg in res.issues)

    def test_achieved_parameters(self):
        iu = IntervalUnion([(0.0, 0.25), (0.5, 0.75)], length=1.0)
        res = verify_cover(single_edge_set(iu), single_edge_cover([0.0, 0.5, 1.0]),
                           gamma=0.4, rho=0.6)
        assert isinstance(res, SamplingParams)
        assert res.gamma == pytest.approx(0.5)
        assert res.rho == pytest.approx(0.5)

    def test_edge_mismatch(self):
        iu = IntervalUnion([(0.0, 1.0)], length=1.0)
        with pytest.raises(ValueError, match="different edges"):
            verify_cover(single_edge_set(iu), Cover(breakpoints={"x": (0.0, 1.0)}),
                         0.5, 1.0)

    def test_monotone_in_parameters(self):
        iu, _ = svc_set(4)
        cover = single_edge_cover([0.0, 0.5, 1.0])
        sset = single_edge_set(iu)
        base = verify_cover(sset, cover, gamma=0.5, rho=0.5)
        assert isinstance(base, SamplingParams)
        for gamma in (0.5, 0.3, 0.1):
            for rho in (0.5, 0.7, 1.0):
                res = verify_cover(sset, cover, gamma=gamma, rho=rho)
                assert isinstance(res, SamplingParams)


class TestGaps:
    def test_whole_edge(self):
        iu = IntervalUnion([(0.0, 1.0)], length=1.0)
        gaps = gap_analysis(single_edge_set(iu))
        ok, _ = necessary_check(gaps, 0.99, 0.01)
        assert ok
        assert gaps["e"].left == 0.0 and gaps["e"].max_interior == 0.0

    def test_svc_interior_gap(self):
        iu, _ = svc_set(5)
        gaps = gap_analysis(single_edge_set(iu))
        assert gaps["e"].max_interior == pytest.approx(0.25)
        # not sampling for rho <= 1/8, whatever gamma
        for gamma in (1e-6, 0.3, 0.9):
            ok, issues = necessary_check(gaps, gamma, 0.125)
            assert not ok and issues

    def test_centered_window_endpoint_gaps(self):
        ell = 2.0
        iu = IntervalUnion([(ell / 4, 3 * ell / 4)], length=ell)
        gaps = gap_analysis(single_edge_set(iu))
        assert gaps["e"].left == pytest.approx(ell / 4)
        assert gaps["e"].right == pytest.approx(ell / 4)
        for gamma in (0.01, 0.5):
            ok, _ = necessary_check(gaps, gamma, ell / 4)
            assert not ok


class TestOptimalGamma:
    def test_full_edge(self):
        iu = IntervalUnion([(0.0, 1.0)], length=1.0)
        res = optimal_gamma(iu, 1.0, rho=0.3)
        assert res.feasible and res.gamma == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("rho_frac", [0.55, 0.62, 0.75, 0.9])
    def test_half_interval_closed_form(self, rho_frac):
        ell = 1.0
        rho = rho_frac * ell
        iu = IntervalUnion([(0.0, ell / 2)], length=ell)
        res = optimal_gamma(iu, ell, rho=rho)
        assert res.feasible
        assert res.gamma == pytest.approx(1.0 - ell / (2.0 * rho), abs=1e-6)

    def test_half_interval_infeasible(self):
        iu = IntervalUnion([(0.0, 0.5)], length=1.0)
        res = optimal_gamma(iu, 1.0, rho=0.5)
        assert not res.feasible and res.gamma == 0.0
        assert "gap" in res.gap_witness

    def test_self_certifying(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            pts = np.sort(rng.uniform(0.0, 1.0, size=8))
            iu = IntervalUnion([(pts[2 * i], pts[2 * i + 1]) for i in range(4)],
                               length=1.0)
            if iu.measure < 1e-3:
                continue
            rho = float(rng.uniform(0.3, 1.0))
            res = optimal_gamma(iu, 1.0, rho=rho)
            if not res.feasible:
                continue
            check = verify_cover(single_edge_set(iu),
                                 single_edge_cover(res.breakpoints),
                                 gamma=res.gamma, rho=rho)
            assert isinstance(check, SamplingParams)
            assert check.gamma == pytest.approx(res.gamma, abs=1e-12)

    def test_matches_independent_maxmin_on_same_grid(self):
        # independent oracle: recursive max-min over the identical candidate set
        from qgs.sampling import _candidates, _cover_dp  # noqa: PLC2701

        rng = np.random.default_rng(17)
        for _ in range(12):
            pts = np.sort(rng.uniform(0.0, 1.0, size=10))
            iu = IntervalUnion([(pts[2 * i], pts[2 * i + 1]) for i in range(5)],
                               length=1.0)
            if iu.measure < 0.05:
                continue
            rho = float(rng.uniform(0.4, 0.9))
            ts = _candidates(iu, 1.0, rho, 50)
            pref = iu.prefix_measures(ts)

            import functools

            @functools.lru_cache(maxsize=None)
            def best_from(i):
                if i == ts.size - 1:
                    return 1.0
                out = 0.0
                for j in range(i + 1, ts.size):
                    w = ts[j] - ts[i]
                    if w > rho + 1e-12:
                        break
                    if w <= 0:
                        continue
                    dens = (pref[j] - pref[i]) / w
                    out = max(out, min(dens, best_from(j)))
                return out

            want = best_from(0)
            lo, hi = 0.0, 1.0
            best = None
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                bps = _cover_dp(ts, pref, rho, mid, 1.0)
                if bps is None:
                    hi = mid
                else:
                    lo, best = mid, bps
            got = min((pref[list(ts).index(b)] - pref[list(ts).index(a)]) / (b - a)
                      for a, b in zip(best, best[1:])) if best else 0.0
            assert got == pytest.approx(want, abs=1e-6)

    def test_necessary_check_consistency(self):
        # a gap-criterion failure implies the optimiser cannot reach that gamma
        iu = IntervalUnion([(0.0, 0.2), (0.8, 1.0)], length=1.0)
        gaps = gap_analysis(single_edge_set(iu))
        rho = 0.4
        gamma_req = 0.5
        ok, _ = necessary_check(gaps, gamma_req, rho)
        assert not ok  # interior gap 0.6 > 2*(1-0.5)*0.4
        res = optimal_gamma(iu, 1.0, rho=rho)
        assert (not res.feasible) or res.gamma < gamma_req


class TestOptimalRho:
    def test_full_edge(self):
        iu = IntervalUnion([(0.0, 1.0)], length=1.0)
        res = optimal_rho(iu, 1.0, gamma=1.0)
        assert res.feasible and res.rho <= 1.0

    def test_quarters_closed_form(self):
        ell = 1.0
        iu = IntervalUnion([(0.0, ell / 4), (3 * ell / 4, ell)], length=ell)
        res = optimal_rho(iu, ell, gamma=0.5)
        assert res.feasible
        assert res.rho == pytest.approx(ell / 2, abs=1e-8)

    def test_svc_four_ninths(self):
        iu, _ = svc_set(6)
        res = optimal_rho(iu, 1.0, gamma=4 / 9)
        assert res.feasible and res.rho <= 9 / 32 + 1e-9

    def test_infeasible_reports_density(self):
        iu = IntervalUnion([(0.0, 0.25)], length=1.0)
        res = optimal_rho(iu, 1.0, gamma=0.5)
        assert not res.feasible
        assert res.global_density == pytest.approx(0.25)

    @settings(max_examples=30, deadline=None)
    @given(gamma=st.floats(0.05, 0.95), seed=st.integers(0, 10 ** 6))
    def test_certificate_verifies(self, gamma, seed):
        rng = np.random.default_rng(seed)
        pts = np.sort(rng.uniform(0.0, 1.0, size=6))
        iu = IntervalUnion([(pts[0], pts[1]), (pts[2], pts[3]), (pts[4], pts[5])],
                           length=1.0)
        res = optimal_rho(iu, 1.0, gamma=gamma, grid_n=60)
        if res.feasible:
            check = verify_cover(single_edge_set(iu),
                                 single_edge_cover(res.breakpoints),
                                 gamma=gamma, rho=res.rho)
            assert isinstance(check, SamplingParams)


class TestPeriodic:
    def test_branch_values(self):
        assert periodic_params(0.5, 1.0) == pytest.approx(0.5)
        assert periodic_params(0.5, 1.5) == pytest.approx(1.0 / 3.0)
        assert periodic_params(0.5, 0.75) == pytest.approx(1.0 - 0.5 / 0.75)

    def test_uniform_floor(self):
        assert periodic_uniform_gamma(0.5) == pytest.approx(1.0 / 3.0)
        for rho in np.linspace(1.0, 6.0, 40):
            assert periodic_params(0.5, float(rho)) >= 1.0 / 3.0 - 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            periodic_params(0.5, 0.4)
        with pytest.raises(ValueError):
            periodic_params(1.2, 1.0)


class TestGraphAggregation:
    def test_min_max_rule(self):
        gamma, rho = graph_params({"a": 0.5, "b": 0.25}, {"a": 0.3, "b": 0.6})
        assert gamma == 0.25 and rho == 0.6


class TestJsonRoundTrip:
    def test_sampling_set_io(self, tmp_path):
        g = build_graph(["a", "b"], [("e", "a", "b", 1.0)])
        data = {"edges": {"e": [[0.0, 0.25], [0.5, 0.75]]}}
        s = SamplingSet.from_dict(g, data)
        assert s.finite["e"].measure == pytest.approx(0.5)
        p = tmp_path / "set.json"
        p.write_text(__import__("json").dumps(s.to_json()))
        again = SamplingSet.load(g, p)
        assert again.finite["e"] == s.finite["e"]

    def test_external_set(self):
        from qgs.graphs import Edge, MetricGraph
        g = MetricGraph(["v"], [Edge("r", "v", None, math.inf)])
        data = {"external": {"r": {"head": [[0.0, 0.5]], "period": 1.0,
                                   "body": [[0.25, 0.75]]}}}
        s = SamplingSet.from_dict(g, data)
        tail = s.external["r"]
        assert tail.head_span == 0.5
        gaps = gap_analysis(s)
        assert gaps["r"].left == 0.0
        assert gaps["r"].max_interior == pytest.approx(0.5)

    def test_external_cover_verified(self):
        from qgs.graphs import Edge, MetricGraph
        g = MetricGraph(["v"], [Edge("r", "v", None, math.inf)])
        s = SamplingSet.from_dict(g, {"external": {
            "r": {"head": [[0.0, 0.5]], "period": 1.0, "body": [[0.25, 0.75]]}}})
        cover = Cover(breakpoints={}, external={"r": ((0.0, 0.5), (0.0, 1.0))})
        res = verify_cover(s, cover, gamma=0.5, rho=1.0)
        assert isinstance(res, SamplingParams)
        assert res.gamma == pytest.approx(0.5)
        bad = verify_cover(s, cover, gamma=0.8, rho=1.0)
        assert isinstance(bad, CoverViolation)
