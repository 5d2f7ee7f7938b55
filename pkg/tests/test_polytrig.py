import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgs.graphs import build_graph
from qgs.polytrig import (GraphFunction, IntervalUnion, PolyTrigTerm,
                          cosine_power_terms, differentiate, inner_product,
                          integrate_powexp, norm_sq, sup_on_disk_neighborhood,
                          whole_edge)

from oracles import adaptive_simpson, eval_terms, integral_pairs_simpson


def interval_graph(ell=math.pi, name="e"):
    return build_graph(["a", "b"], [(name, "a", "b", ell)])


def cos_fn(graph, k, eid="e", amp=1.0):
    return GraphFunction(graph, {eid: [PolyTrigTerm(0.5 * amp, 0, k),
                                       PolyTrigTerm(0.5 * amp, 0, -k)]})


def sin_fn(graph, k, eid="e", amp=1.0):
    return GraphFunction(graph, {eid: [PolyTrigTerm(-0.5j * amp, 0, k),
                                       PolyTrigTerm(0.5j * amp, 0, -k)]})


class TestIntervalUnion:
    def test_measure_and_merge(self):
        iu = IntervalUnion([(0.5, 1.0), (0.0, 0.5)], length=2.0)
        assert iu.intervals == ((0.0, 1.0),)
        assert iu.measure == 1.0

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            IntervalUnion([(0.0, 0.6), (0.5, 1.0)])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            IntervalUnion([(0.2, 1.5)], length=1.0)
        with pytest.raises(ValueError):
            IntervalUnion([(-0.2, 0.5)], length=1.0)

    def test_gaps(self):
        iu = IntervalUnion([(0.25, 0.375), (0.625, 0.75)], length=1.0)
        left, interior, right = iu.gaps()
        assert left == 0.25 and right == 0.25
        assert interior == [0.25]

    def test_prefix_measures(self):
        iu = IntervalUnion([(0.0, 0.25), (0.5, 1.0)], length=1.0)
        pts = np.array([0.0, 0.125, 0.3, 0.75, 1.0])
        np.testing.assert_allclose(iu.prefix_measures(pts),
                                   [0.0, 0.125, 0.25, 0.5, 0.75], atol=1e-15)


class TestDifferentiate:
    def test_cos_second_derivative(self):
        g = interval_graph()
        k = 3.0
        f = cos_fn(g, k)
        d2 = differentiate(f, 2)
        want = cos_fn(g, k, amp=-k * k)
        diff = d2 - want
        assert norm_sq(diff) < 1e-24

    def test_polynomial_vanishes(self):
        g = interval_graph(1.0)
        f = GraphFunction(g, {"e": [PolyTrigTerm(1.0, 2, 0.0)]})
        assert differentiate(f, 3).is_zero()

    def test_order_zero_identity(self):
        g = interval_graph(1.0)
        f = GraphFunction(g, {"e": [PolyTrigTerm(2.0, 1, 1.5)]})
        assert norm_sq(differentiate(f, 0) - f) < 1e-28

    def test_torsion_profile_norms(self):
        # u = ell*x - x^2/2 on [0, ell]: u'' = -1, so |u''|^2 integrates to ell
        ell = 2.7
        g = interval_graph(ell)
        u = GraphFunction(g, {"e": [PolyTrigTerm(ell, 1, 0.0), PolyTrigTerm(-0.5, 2, 0.0)]})
        u2 = differentiate(u, 2)
        assert norm_sq(u2) == pytest.approx(ell, rel=1e-14)

    def test_compose_orders(self):
        g = interval_graph(1.0)
        f = GraphFunction(g, {"e": [PolyTrigTerm(1.0 + 0.5j, 2, 2.0),
                                    PolyTrigTerm(-0.25, 1, -3.0)]})
        lhs = differentiate(differentiate(f, 2), 3)
        rhs = differentiate(f, 5)
        assert norm_sq(lhs - rhs) < 1e-20


class TestQuadrature:
    def test_cos_norm_on_half_period(self):
        g = interval_graph(math.pi)
        f = cos_fn(g, 1.0)
        assert norm_sq(f) == pytest.approx(math.pi / 2.0, rel=1e-14)

    def test_constant_on_subset(self):
        g = interval_graph(1.0)
        one = GraphFunction(g, {"e": [PolyTrigTerm(1.0, 0, 0.0)]})
        gamma = 0.37
        region = {"e": IntervalUnion([(0.0, gamma)], length=1.0)}
        assert norm_sq(one, region) == pytest.approx(gamma, rel=1e-14)

    def test_sin_integer_modes(self):
        g = interval_graph(math.pi)
        for k in (1, 2, 5):
            assert norm_sq(sin_fn(g, float(k))) == pytest.approx(math.pi / 2, rel=1e-13)

    def test_zero_function(self):
        g = interval_graph(1.0)
        assert norm_sq(GraphFunction.zero(g)) == 0.0

    def test_cos_squared_against_simpson(self):
        # cos^2(2 pi x) mass in a centred window, closed form vs oracle
        g = interval_graph(1.0)
        terms = cosine_power_terms(2, 2.0 * math.pi)
        f = GraphFunction(g, {"e": list(terms)})
        gamma = 0.4
        a, b = 0.25 * (1 - gamma), 0.25 * (1 + gamma)
        region = {"e": IntervalUnion([(a, b)], length=1.0)}
        got = norm_sq(f, region)
        want = integral_pairs_simpson(terms, terms, a, b)
        assert got == pytest.approx(want.real, abs=1e-10)

    def test_low_frequency_branch_matches_series(self):
        # near-zero combined frequency takes the series path; compare to oracle
        for w in (0.0, 1e-12, 1e-7, 1e-3):
            vals = integrate_powexp(np.array([3]), np.array([w]), 0.2, 1.7)
            want = adaptive_simpson(lambda x: x ** 3 * cmath.exp(1j * w * x), 0.2, 1.7)
            assert abs(vals[0] - want) < 1e-12 * max(1.0, abs(want))

    def test_randomized_against_simpson(self):
        rng = np.random.default_rng(7)
        g = interval_graph(1.3)
        for _ in range(100):
            nf = rng.integers(1, 4)
            tf = [PolyTrigTerm(complex(*rng.normal(size=2)), int(rng.integers(0, 3)),
                               float(rng.uniform(-12, 12))) for _ in range(nf)]
            tg = [PolyTrigTerm(complex(*rng.normal(size=2)), int(rng.integers(0, 3)),
                               float(rng.uniform(-12, 12))) for _ in range(nf)]
            a, b = sorted(rng.uniform(0, 1.3, size=2))
            if b - a < 1e-3:
                continue
            f = GraphFunction(g, {"e": tf})
            h = GraphFunction(g, {"e": tg})
            got = inner_product(f, h, {"e": IntervalUnion([(a, b)], length=1.3)})
            want = integral_pairs_simpson(list(f.terms["e"]), list(h.terms["e"]), a, b)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_region_outside_edge_rejected(self):
        g = interval_graph(1.0)
        f = GraphFunction(g, {"e": [PolyTrigTerm(1.0, 0, 0.0)]})
        with pytest.raises(ValueError):
            norm_sq(f, {"e": [(0.5, 1.5)]})

    def test_monotone_and_additive(self):
        g = interval_graph(2.0)
        f = GraphFunction(g, {"e": [PolyTrigTerm(1.0, 1, 4.0), PolyTrigTerm(0.5j, 0, -2.0)]})
        s1 = {"e": IntervalUnion([(0.2, 0.7)], length=2.0)}
        s2 = {"e": IntervalUnion([(0.2, 0.7), (1.1, 1.9)], length=2.0)}
        n1 = norm_sq(f, s1)
        n2 = norm_sq(f, s2)
        assert n1 <= n2
        part = norm_sq(f, {"e": IntervalUnion([(1.1, 1.9)], length=2.0)})
        assert n1 + part == pytest.approx(n2, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        a=st.floats(0.0, 0.9),
        width=st.floats(0.01, 0.5),
        w1=st.floats(-15.0, 15.0),
        w2=st.floats(-15.0, 15.0),
        p=st.integers(0, 2),
    )
    def test_kernel_matches_oracle_property(self, a, width, w1, w2, p):
        b = min(a + width, 1.0)
        vals = integrate_powexp(np.array([p]), np.array([w1 - w2]), a, b)
        want = adaptive_simpson(lambda x: x ** p * cmath.exp(1j * (w1 - w2) * x), a, b)
        assert abs(vals[0] - want) <= 1e-10


class TestParsevalStyle:
    def test_orthonormal_eigen_family(self):
        # sqrt(2/pi) cos(k x) on [0, pi] are orthonormal
        g = interval_graph(math.pi)
        amp = math.sqrt(2.0 / math.pi)
        fns = [cos_fn(g, float(k), amp=amp) for k in range(1, 6)]
        for i, fi in enumerate(fns):
            for j, fj in enumerate(fns):
                want = 1.0 if i == j else 0.0
                assert abs(inner_product(fi, fj) - want) < 1e-8


class TestCosinePower:
    def test_jensen_lower_bound(self):
        # |cos|^(2 alpha) mass over a period is at least ell (2/pi)^(2 alpha)
        ell = 1.0
        for alpha in (2, 3, 5, 8):
            g = interval_graph(ell)
            f = GraphFunction(g, {"e": list(cosine_power_terms(alpha, 2 * math.pi / ell))})
            assert norm_sq(f) >= ell * (2.0 / math.pi) ** (2 * alpha)

    def test_expansion_pointwise(self):
        terms = cosine_power_terms(7, 3.0)
        for x in (0.1, 0.5, 1.3):
            assert abs(eval_terms(terms, x) - math.cos(3.0 * x) ** 7) < 1e-12


class TestSupBound:
    def test_constant(self):
        assert sup_on_disk_neighborhood([PolyTrigTerm(1.0, 0, 0.0)], 1.0, 4.0) \
            == pytest.approx(1.0, rel=1e-12)

    def test_linear(self):
        # F(z) = z on (0,1)+D_4 peaks at z = 5
        got = sup_on_disk_neighborhood([PolyTrigTerm(1.0, 1, 0.0)], 1.0, 4.0, samples=8192)
        assert 5.0 <= got <= 5.05

    def test_plane_wave(self):
        k, ell = 2.0, 1.0
        got = sup_on_disk_neighborhood([PolyTrigTerm(1.0, 0, k)], ell, 4.0, samples=32768)
        true = math.exp(4.0 * k * ell)
        assert true <= got <= 1.01 * true
