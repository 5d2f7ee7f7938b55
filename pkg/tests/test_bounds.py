import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from qgs.bounds import (BernsteinProfile, h_bound, heat_trace_bound,
                        observability_constant, spectral_bound, standard_range,
                        torsion_profile)
from qgs.graphs import build_graph, metrics
from qgs.spectral import solve_torsion


def decimal_log_bound(gamma, h, digits=50):
    """Extended-precision oracle for log(12 (gamma/48)^(4 log2 h + 5))."""
    getcontext().prec = digits
    g = Decimal(gamma)
    hh = Decimal(h)
    expo = 4 * hh.ln() / Decimal(2).ln() + 5
    return float(Decimal(12).ln() + expo * (g / Decimal(48)).ln())


def interval(ell):
    return build_graph(["a", "b"], [("e", "a", "b", ell)])


class TestHBound:
    def test_reference_value(self):
        rep = h_bound(1.0, h=1.0)
        want = 12.0 / 48.0 ** 5
        assert rep.value == pytest.approx(want, rel=1e-12)
        assert rep.value == pytest.approx(4.7e-8, rel=3e-3)

    def test_domain(self):
        with pytest.raises(ValueError):
            h_bound(48.0, h=1.0)
        with pytest.raises(ValueError):
            h_bound(0.0, h=1.0)
        with pytest.raises(ValueError):
            h_bound(0.5, h=0.5)

    def test_against_decimal_oracle(self):
        for gamma, h in [(0.5, 48.0), (0.9, 2.0), (0.1, 1e6), (1.0, 1.0)]:
            rep = h_bound(gamma, h=h)
            want = decimal_log_bound(gamma, h)
            assert rep.log_value == pytest.approx(want, rel=1e-12)

    def test_underflow_flagged(self):
        rep = h_bound(0.01, h=1e40)
        assert rep.underflow and rep.value == 0.0
        assert math.isfinite(rep.log_value)


class TestSpectralBound:
    def test_lambda_zero_collapses(self):
        rep = spectral_bound(0.7, 0.3, 0.0)
        assert rep.value == pytest.approx(12.0 * (0.7 / 48.0) ** 5, rel=1e-12)

    def test_identity_with_h_route(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            gamma = float(rng.uniform(0.01, 1.0))
            rho = float(rng.uniform(0.01, 2.0))
            lam = float(rng.uniform(0.0, 400.0))
            direct = spectral_bound(gamma, rho, lam)
            via = h_bound(gamma, log_h=10.0 * rho * math.sqrt(lam))
            assert direct.log_value == pytest.approx(via.log_value, rel=1e-12)

    def test_specific_h_match(self):
        direct = spectral_bound(0.5, 0.5, math.pi ** 2)
        via = h_bound(0.5, log_h=5.0 * math.pi)
        assert direct.log_value == pytest.approx(via.log_value, rel=1e-12)

    def test_monotonicity(self):
        base = spectral_bound(0.5, 0.5, 10.0)
        assert spectral_bound(0.6, 0.5, 10.0).log_value > base.log_value
        assert spectral_bound(0.5, 0.6, 10.0).log_value < base.log_value
        assert spectral_bound(0.5, 0.5, 11.0).log_value < base.log_value

    def test_bound_below_prefactor_cap(self):
        for gamma in (0.1, 0.5, 1.0):
            for lam in (0.0, 5.0, 100.0):
                rep = spectral_bound(gamma, 0.4, lam)
                assert 0.0 <= rep.value <= 12.0 / 48.0 ** 5 + 1e-20


class TestStandardRange:
    def test_interval_ordering(self):
        m = metrics(interval(math.pi))
        rng = standard_range(m, k=2, gamma=1.0, rho=math.pi / 2)
        assert rng.lower_length.log_value <= rng.upper.log_value + 1e-12

    def test_rho_to_zero_limit(self):
        m = metrics(interval(1.0))
        rng = standard_range(m, k=3, gamma=1.0, rho=1e-12)
        cap = 12.0 / 48.0 ** 5
        for rep in (rng.lower_length, rng.upper, rng.lower_diameter):
            assert rep.value == pytest.approx(cap, rel=1e-6)

    def test_lasso_betti_enters(self):
        lasso = build_graph(["v", "w"], [("loop", "v", "v", 1.0),
                                         ("tail", "v", "w", 1.0)])
        m = metrics(lasso)
        assert m.betti == 1
        rng = standard_range(m, k=2, gamma=0.5, rho=0.25)
        flat = standard_range(metrics(interval(2.0)), k=2, gamma=0.5, rho=0.25)
        # extra cycle makes the guaranteed lower constant smaller
        assert rng.lower_length.log_value < flat.lower_length.log_value

    def test_k_domain(self):
        with pytest.raises(ValueError):
            standard_range(metrics(interval(1.0)), k=1, gamma=0.5, rho=0.1)


class TestTrace:
    def test_bound_dominates_exact(self):
        # Neumann interval of length pi: lambda = n^2, full-mass control set
        masses = [(float(n * n), 1.0) for n in range(11)]
        for t in (0.5, 1.0, 2.0):
            rep = heat_trace_bound(masses, gamma=1.0, rho=0.02, t=t,
                                   total_length=math.pi)
            exact = sum(math.exp(-n * n * t) for n in range(2000))
            assert rep.exact_partial == pytest.approx(exact, abs=1e-10)
            assert rep.bound >= exact
            assert rep.tail_bound >= 0.0

    def test_prefactor_only_limit(self):
        # rho -> 0: bound tends to 48^5/12 times the mass-weighted heat sum
        masses = [(float(n * n), 1.0) for n in range(11)]
        rep = heat_trace_bound(masses, gamma=1.0, rho=1e-9, t=1.0,
                               total_length=math.pi)
        exact = sum(math.exp(-n * n) for n in range(11))
        assert rep.bound == pytest.approx(48.0 ** 5 / 12.0 * exact, rel=1e-6)

    def test_cutoff_below_peak_rejected(self):
        masses = [(0.0, 1.0), (1.0, 1.0)]
        with pytest.raises(ValueError, match="peak"):
            heat_trace_bound(masses, gamma=0.5, rho=1.0, t=0.1,
                             total_length=math.pi)

    def test_tail_covers_early_truncation(self):
        # only lambda <= 16 supplied: the rigorous tail must still dominate
        # the full trace
        masses = [(float(n * n), 1.0) for n in range(5)]
        rep = heat_trace_bound(masses, gamma=1.0, rho=0.01, t=1.0,
                               total_length=math.pi)
        exact = sum(math.exp(-n * n) for n in range(2000))
        assert rep.bound >= 48.0 ** 5 / 12.0 * exact
        assert rep.tail_bound > 0.0


class TestObservability:
    def test_d0_value(self):
        rep = observability_constant(1.0, 0.5, 1.0)
        assert rep.d0 == pytest.approx(48.0 ** 5 / 12.0, rel=1e-12)
        assert rep.d0 == pytest.approx(2.123e7, rel=1e-3)

    def test_d1_value(self):
        rho = 0.7
        rep = observability_constant(1.0, rho, 1.0)
        assert rep.d1 == pytest.approx(40.0 * rho / math.log(2.0) * math.log(48.0),
                                       rel=1e-12)

    def test_vanishes_as_horizon_grows(self):
        vals = [observability_constant(0.5, 0.5, T).c_squared.log_value
                for T in (1.0, 2.0, 4.0, 8.0, 1e6)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            observability_constant(0.5, 0.5, 0.0)
        with pytest.raises(ValueError):
            observability_constant(0.5, 0.5, 1.0, c1=-1.0)

    def test_default_marker(self):
        rep = observability_constant(0.5, 0.5, 1.0)
        assert any("default" in n for n in rep.c_squared.notes)
        rep2 = observability_constant(0.5, 0.5, 1.0, defaults_used=False)
        assert not rep2.c_squared.notes


class TestBernsteinProfile:
    def test_power_law_budget(self):
        lam, rho = 7.3, 0.42
        p = BernsteinProfile.power_law(lam)
        closed = p.h_series(rho)
        series = sum(math.sqrt(lam ** m) * (10 * rho) ** m / math.factorial(m)
                     for m in range(60))
        assert closed == pytest.approx(series, rel=1e-12)

    def test_power_law_zero(self):
        assert BernsteinProfile.power_law(0.0).h_series(1.0) == 1.0

    def test_finite_profile(self):
        p = BernsteinProfile.finite((1.0, 4.0, 9.0))
        assert p.value(1) == 4.0 and p.value(7) == 0.0
        rho = 0.1
        assert p.h_series(rho) == pytest.approx(1 + 2 * 1.0 + 3 * 0.5, rel=1e-12)


class TestTorsionProfile:
    def test_one_dirichlet_end(self):
        ell = 1.0
        g = interval(ell)
        sol = solve_torsion(g, ["a"])
        rep = torsion_profile(g, sol, rho=ell / 2.0, gamma=0.5)
        want = 1.0 + 5.0 * math.sqrt(3.0) + 75.0 / 2.0
        assert rep.h_prime == pytest.approx(want, rel=1e-12)
        assert rep.h_prime < 48.0
        assert rep.h <= rep.h_prime

    def test_two_dirichlet_ends(self):
        ell = 1.0
        g = interval(ell)
        sol = solve_torsion(g, ["a", "b"])
        rep = torsion_profile(g, sol, rho=ell / 2.0, gamma=0.5)
        want = 1.0 + 10.0 * math.sqrt(3.0) + 150.0
        assert rep.h_prime == pytest.approx(want, rel=1e-12)
        assert rep.h_prime < 169.0

    def test_scale_free_h_prime(self):
        # h' at rho = ell/2 is independent of the interval length
        for ell in (0.5, 2.0, 7.0):
            g = interval(ell)
            sol = solve_torsion(g, ["a"])
            rep = torsion_profile(g, sol, rho=ell / 2.0, gamma=0.5)
            assert rep.h_prime == pytest.approx(1.0 + 5.0 * math.sqrt(3.0) + 37.5,
                                                rel=1e-12)

    def test_profile_validity(self):
        g = build_graph(["c", "w1", "w2", "w3"],
                        [("e1", "c", "w1", 1.0), ("e2", "c", "w2", 1.3),
                         ("e3", "c", "w3", 0.7)])
        sol = solve_torsion(g, ["w1", "w3"])
        rep = torsion_profile(g, sol, rho=0.4, gamma=0.3)
        # Bernstein inequality for m = 0, 1, 2 holds with the exact norms
        assert rep.norms["du"] <= rep.profile.value(1) * rep.norms["u"] * (1 + 1e-12)
        assert rep.norms["d2u"] == pytest.approx(rep.profile.value(2) * rep.norms["u"],
                                                 rel=1e-10)
