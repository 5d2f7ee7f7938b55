"""Explicit constants of the sampling inequalities, heat-trace and
observability estimates, and Bernstein profiles.

All constant arithmetic runs in natural-log space; a report carries both the
log value and the linear value, with an underflow flag once the linear value
drops below exp(-700).  The two bound routes (directly from (rho, lambda), or
through the series budget h) are asserted against each other on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .graphs import GraphMetrics

LOG2 = math.log(2.0)
UNDERFLOW_LOG = -700.0
BASE_CONSTANT = 12.0        # prefactor of the sampling bounds
DENOMINATOR = 48.0          # gamma is compared against this scale
SERIES_RADIUS = 10.0        # the (10*rho)^m / m! budget series


@dataclass
class BoundReport:
    formula: str
    value: float
    log_value: float
    inputs: dict
    underflow: bool = False
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"formula": self.formula, "value": self.value,
                "log_value": self.log_value, "inputs": dict(self.inputs),
                "underflow": self.underflow, "notes": list(self.notes)}


def _report(formula: str, log_value: float, inputs: dict,
            notes: tuple[str, ...] = ()) -> BoundReport:
    under = log_value < UNDERFLOW_LOG
    return BoundReport(formula=formula, value=0.0 if under else math.exp(log_value),
                       log_value=log_value, inputs=inputs, underflow=under,
                       notes=notes)


@dataclass(frozen=True)
class BernsteinProfile:
    """Derivative-growth budget: C(m) bounds ||f^(m)||^2 / ||f||^2.

    Either a power law lam**m (spectral subspaces up to energy lam) or a
    finite list of coefficients that vanish beyond the list (edgewise
    polynomials such as the torsion function)."""

    kind: str
    lam: float = 0.0
    coeffs: tuple[float, ...] = ()

    @classmethod
    def power_law(cls, lam: float) -> "BernsteinProfile":
        if lam < 0.0:
            raise ValueError("lam must be nonnegative")
        return cls(kind="power", lam=float(lam))

    @classmethod
    def finite(cls, coeffs: Iterable[float]) -> "BernsteinProfile":
        cs = tuple(float(c) for c in coeffs)
        if any(c < 0.0 for c in cs):
            raise ValueError("profile values must be nonnegative")
        return cls(kind="finite", coeffs=cs)

    def value(self, m: int) -> float:
        if m < 0:
            raise ValueError("derivative order must be nonnegative")
        if self.kind == "power":
            return self.lam ** m
        return self.coeffs[m] if m < len(self.coeffs) else 0.0

    __call__ = value

    def h_series(self, rho: float) -> float:
        """sum_m sqrt(C(m)) (10 rho)^m / m!; closed form exp(10 rho sqrt(lam))
        for power laws, an exact finite sum otherwise."""
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        if self.kind == "power":
            return math.exp(SERIES_RADIUS * rho * math.sqrt(self.lam))
        return sum(math.sqrt(c) * (SERIES_RADIUS * rho) ** m / math.factorial(m)
                   for m, c in enumerate(self.coeffs))

    def log_h(self, rho: float) -> float:
        if self.kind == "power":
            return SERIES_RADIUS * rho * math.sqrt(self.lam)
        return math.log(self.h_series(rho))

    def to_json(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "lam": self.lam}
        return {"kind": "finite", "coeffs": list(self.coeffs)}


def h_bound(gamma: float, h: float | None = None, log_h: float | None = None,
            notes: tuple[str, ...] = ()) -> BoundReport:
    """Sampling-inequality constant 12 (gamma/48)^(4 log2(h) + 5) from the
    series budget h >= 1 (formula id thm26); log-space throughout."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if log_h is None:
        if h is None:
            raise ValueError("one of h, log_h is required")
        if h < 1.0:
            raise ValueError("h must be at least 1")
        log_h = math.log(h)
    elif log_h < 0.0:
        raise ValueError("log_h must be nonnegative")
    expo = 4.0 * log_h / LOG2 + 5.0
    log_c = math.log(BASE_CONSTANT) + expo * math.log(gamma / DENOMINATOR)
    return _report("thm26", log_c,
                   {"gamma": gamma, "h": math.exp(log_h) if log_h < 700 else None,
                    "log_h": log_h, "exponent": expo}, notes)


def spectral_bound(gamma: float, rho: float, lam: float,
                   notes: tuple[str, ...] = ()) -> BoundReport:
    """Constant 12 (gamma/48)^(40 rho sqrt(lam)/log 2 + 5) for spectral
    subspaces up to energy lam (formula id thm21); identical to h_bound with
    h = exp(10 rho sqrt(lam)), asserted on every call."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    log_h = SERIES_RADIUS * rho * math.sqrt(lam)
    via_h = h_bound(gamma, log_h=log_h)
    expo = 4.0 * SERIES_RADIUS * rho * math.sqrt(lam) / LOG2 + 5.0
    log_c = math.log(BASE_CONSTANT) + expo * math.log(gamma / DENOMINATOR)
    if abs(log_c - via_h.log_value) > 1e-12 * max(1.0, abs(log_c)):
        raise AssertionError("direct and h-route exponents disagree")
    return _report("thm21", log_c,
                   {"gamma": gamma, "rho": rho, "lam": lam, "exponent": expo}, notes)


@dataclass
class StandardRange:
    lower_length: BoundReport
    upper: BoundReport
    lower_diameter: BoundReport

    def to_json(self) -> dict:
        return {"lower_length": self.lower_length.to_json(),
                "upper": self.upper.to_json(),
                "lower_diameter": self.lower_diameter.to_json()}


def standard_range(m, k: int, gamma: float, rho: float) -> StandardRange:
    """Two-sided range for the constant covering combinations of the k lowest
    standard-Laplacian eigenfunctions, from the eigenvalue bracketing by total
    length, cycle count and leaf count, plus the diameter-based lower bound
    (formula id cor72).  Accepts a graph or its precomputed metrics."""
    if not isinstance(m, GraphMetrics):
        from .graphs import metrics as graph_metrics
        m = graph_metrics(m)
    if k < 2:
        raise ValueError("the eigenvalue bracketing is stated for k >= 2")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if not m.connected:
        raise ValueError("the range needs a connected compact graph")
    total = m.total_length
    if not math.isfinite(total):
        raise ValueError("the range needs a compact graph")
    lg = math.log(gamma / DENOMINATOR)
    log12 = math.log(BASE_CONSTANT)
    coef = 4.0 * SERIES_RADIUS * rho / LOG2

    expo_lower = coef * (k - 1 + 1.5 * m.betti + 0.5 * m.degree1_count) * math.pi / total + 5.0
    expo_upper = 0.5 * coef * k * math.pi / total + 5.0
    lower = _report("cor72-lower-length", log12 + expo_lower * lg,
                    {"gamma": gamma, "rho": rho, "k": k, "total_length": total,
                     "betti": m.betti, "leaves": m.degree1_count})
    upper = _report("cor72-upper", log12 + expo_upper * lg,
                    {"gamma": gamma, "rho": rho, "k": k, "total_length": total})
    if lower.log_value > upper.log_value + 1e-12:
        raise AssertionError("bracketing constants out of order")
    if m.diameter is None:
        raise ValueError("diameter unavailable")
    expo_diam = coef * (k + m.betti - 1) * math.pi / m.diameter + 5.0
    lower_d = _report("cor72-lower-diameter", log12 + expo_diam * lg,
                      {"gamma": gamma, "rho": rho, "k": k, "diameter": m.diameter,
                       "betti": m.betti})
    return StandardRange(lower_length=lower, upper=upper, lower_diameter=lower_d)


# ---------------------------------------------------------------------------
# heat trace


def _logsumexp(vals: Sequence[float]) -> float:
    if not vals:
        return -math.inf
    top = max(vals)
    if top == -math.inf:
        return top
    return top + math.log(sum(math.exp(v - top) for v in vals))


@dataclass
class TraceReport:
    bound: float
    log_bound: float
    exact_partial: float
    tail_bound: float
    inputs: dict
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"bound": self.bound, "log_bound": self.log_bound,
                "exact_partial": self.exact_partial, "tail_bound": self.tail_bound,
                "inputs": dict(self.inputs), "notes": list(self.notes)}


def heat_trace_bound(eigen_masses: Sequence[tuple[float, float]], gamma: float,
                     rho: float, t: float, total_length: float) -> TraceReport:
    """Upper bound on the heat-semigroup trace from the sampling inequality
    applied to every eigenpair (formula id trace).

    eigen_masses lists (lambda_k, control-set mass of the k-th eigenfunction)
    for all eigenvalues up to the computed cutoff; the remainder is bounded
    rigorously using mass <= 1 and the standard-conditions eigenvalue floor
    lambda_k >= k^2 pi^2 / (4 |G|^2).  The exponent is -lambda*t + c*sqrt(lambda)
    (the time factor is deliberate; see notes), so the tail is summable; the
    call refuses cutoffs that do not reach the decaying regime.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if not eigen_masses:
        raise ValueError("need at least one eigenpair")
    lam_cut = max(lam for lam, _ in eigen_masses)
    c_lin = (4.0 * SERIES_RADIUS * rho / LOG2) * math.log(DENOMINATOR / gamma)
    peak = (c_lin / (2.0 * t)) ** 2
    if lam_cut < peak:
        raise ValueError(
            f"lambda cutoff {lam_cut} below the exponent peak {peak}: the tail "
            "is not summable below tolerance; raise lambda_max")
    log_pref = -math.log(BASE_CONSTANT) + 5.0 * math.log(DENOMINATOR / gamma)

    def log_term(lam: float, mass: float) -> float:
        if mass <= 0.0:
            return -math.inf
        return -lam * t + c_lin * math.sqrt(lam) + math.log(mass)

    logs = [log_term(lam, mass) for lam, mass in eigen_masses]
    # rigorous remainder: indices beyond the computed ones, lambda at least
    # max(cutoff, floor(index)); terms beyond the peak are decreasing
    a = math.pi ** 2 / (4.0 * total_length ** 2)
    idx = len(eigen_masses) + 1
    tail_logs: list[float] = []
    while True:
        lam_floor = max(lam_cut, a * idx * idx)
        lt = -lam_floor * t + c_lin * math.sqrt(lam_floor)
        if a * idx * idx > lam_cut:
            # consecutive log-ratio bound, monotone decreasing from here on
            dec = -a * t * (2 * idx + 1) + c_lin * math.sqrt(a)
            if dec < -1e-3:
                # close with the geometric series exp(lt) / (1 - exp(dec))
                tail_logs.append(lt - math.log(-math.expm1(dec)))
                break
        tail_logs.append(lt)
        idx += 1
        if idx > 10 ** 7:
            raise RuntimeError("trace tail did not converge")
    log_main = _logsumexp(logs)
    log_tail = _logsumexp(tail_logs)
    log_bound = log_pref + _logsumexp([log_main, log_tail])
    exact_partial = sum(math.exp(-lam * t) for lam, _ in eigen_masses)
    return TraceReport(
        bound=math.exp(log_bound) if log_bound < 700 else math.inf,
        log_bound=log_bound,
        exact_partial=exact_partial,
        tail_bound=math.exp(log_pref + log_tail),
        inputs={"gamma": gamma, "rho": rho, "t": t, "lambda_cut": lam_cut,
                "total_length": total_length, "terms": len(eigen_masses)},
        notes=("exponent uses -lambda*t (time restored for dimensional "
               "consistency with the semigroup trace)",))


# ---------------------------------------------------------------------------
# observability


@dataclass
class ObservabilityReport:
    c_squared: BoundReport
    envelope: BoundReport
    d0: float
    d1: float

    def to_json(self) -> dict:
        return {"c_squared": self.c_squared.to_json(),
                "envelope": self.envelope.to_json(), "d0": self.d0, "d1": self.d1}


def observability_constant(gamma: float, rho: float, horizon: float,
                           c1: float = 1.0, c2: float = 1.0, c3: float = 1.0,
                           k1: float = 1.0, k2: float = 5.0, k3: float = 1.0,
                           k4: float = 48.0,
                           defaults_used: bool = True) -> ObservabilityReport:
    """Explicit observability-constant shape (C1 d0 / T)(2 d0 + 1)^C2
    exp(C3 d1^2 / T) with d0 = (48/gamma)^5/12, d1 = (40 rho/log 2) log(48/gamma)
    (formula id observability), plus the envelope (K1 gamma^-K2 / T)
    exp(K3 rho^2 log^2(K4/gamma) / T).  The C and K constants are universal but
    not pinned down here; callers inject them, defaults are flagged."""
    if horizon <= 0.0:
        raise ValueError("time horizon must be positive")
    if min(c1, c2, c3, k1, k2, k3, k4) <= 0.0:
        raise ValueError("constants must be positive")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    log_d0 = -math.log(BASE_CONSTANT) + 5.0 * math.log(DENOMINATOR / gamma)
    d0 = math.exp(log_d0)
    d1 = (4.0 * SERIES_RADIUS * rho / LOG2) * math.log(DENOMINATOR / gamma)
    notes = ("non-paper default constants",) if defaults_used else ()
    log_c = (math.log(c1) + log_d0 - math.log(horizon)
             + c2 * math.log1p(2.0 * d0) + c3 * d1 * d1 / horizon)
    main = BoundReport(formula="observability", value=math.exp(log_c) if log_c < 700
                       else math.inf, log_value=log_c,
                       inputs={"gamma": gamma, "rho": rho, "T": horizon,
                               "c1": c1, "c2": c2, "c3": c3},
                       notes=notes)
    log_env = (math.log(k1) - k2 * math.log(gamma) - math.log(horizon)
               + k3 * rho * rho * math.log(k4 / gamma) ** 2 / horizon)
    env = BoundReport(formula="observability-envelope",
                      value=math.exp(log_env) if log_env < 700 else math.inf,
                      log_value=log_env,
                      inputs={"gamma": gamma, "rho": rho, "T": horizon,
                              "k1": k1, "k2": k2, "k3": k3, "k4": k4},
                      notes=notes)
    return ObservabilityReport(c_squared=main, envelope=env, d0=d0, d1=d1)


# ---------------------------------------------------------------------------
# the torsion-function profile


@dataclass
class TorsionProfileReport:
    profile: BernsteinProfile
    h: float
    h_prime: float
    bound: BoundReport
    norms: dict

    def to_json(self) -> dict:
        return {"profile": self.profile.to_json(), "h": self.h,
                "h_prime": self.h_prime, "bound": self.bound.to_json(),
                "norms": dict(self.norms)}


def torsion_profile(graph, torsion, rho: float, gamma: float) -> TorsionProfileReport:
    """Finite Bernstein profile (1, |G|/T, |G|/||u||^2, 0, ...) of the solved
    torsion function, its exact series budget h, the geometry-only majorant
    h' = 1 + 10 rho sqrt(|G|/T) + 50 rho^2 |G|/T, and the resulting sampling
    bound evaluated at h' (formula id torsion)."""
    from .polytrig import norm_sq

    total = sum(graph.edge_lengths.values())
    if not math.isfinite(total):
        raise ValueError("torsion profile needs a compact graph")
    rigidity = torsion.rigidity
    u = torsion.function
    n0 = norm_sq(u)
    n1 = norm_sq(u.derivative())
    n2 = norm_sq(u.derivative(2))
    cb1 = total / rigidity
    cb2 = total / n0
    if abs(n2 - total) > 1e-10 * max(1.0, total):
        raise AssertionError("||u''||^2 must equal the total length")
    if not cb2 < (total / rigidity) ** 2:
        raise AssertionError("Cauchy-Schwarz ordering of the profile failed")
    if not n1 <= cb1 * n0 * (1.0 + 1e-12):
        raise AssertionError("first-derivative budget violated")
    profile = BernsteinProfile.finite((1.0, cb1, cb2))
    h = profile.h_series(rho)
    h_prime = (1.0 + SERIES_RADIUS * rho * math.sqrt(cb1)
               + 0.5 * (SERIES_RADIUS * rho) ** 2 * cb1)
    if h > h_prime * (1.0 + 1e-12):
        raise AssertionError("exact budget exceeds its majorant")
    bound = h_bound(gamma, h=h_prime)
    bound.formula = "torsion"
    bound.inputs.update({"rho": rho, "total_length": total, "rigidity": rigidity})
    return TorsionProfileReport(profile=profile, h=h, h_prime=h_prime, bound=bound,
                                norms={"u": n0, "du": n1, "d2u": n2,
                                       "rigidity": rigidity, "total_length": total})
