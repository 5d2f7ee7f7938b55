"""Numerical certification harness: observed mass ratios against the explicit
bounds, good/bad edge classification, polynomial and single-edge desk checks,
the optimality example, matrix-level observability, the boundary trace
inequality, the loop counterexample and the randomized inequality audit.

All quadrature is exact (closed form); suprema use certified one-sided
estimates so that a reported pass is meaningful.
"""

from __future__ import annotations

import concurrent.futures
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bounds import BernsteinProfile, BoundReport, h_bound, spectral_bound
from .graphs import (BoundarySubspace, MetricGraph, build_graph, metrics,
                     standard_subspace, vertex_conditions_subspace)
from .polytrig import (GraphFunction, IntervalUnion, PolyTrigTerm,
                       cosine_power_terms, inner_product, integrate_powexp,
                       norm_sq, sup_on_disk_neighborhood, whole_edge)
from .sampling import Cover, SamplingParams, SamplingSet, verify_cover
from .spectral import EigenPair, eigenvalues_up_to, spectral_sample

PASS_REL_TOL = 1e-12      # strict ">" of the theorems at floating-point scale
DEFAULT_M_MAX = 40        # derivative orders checked per edge
DEFAULT_SEED = 20240 + 5


def worker_count() -> int:
    """Thread cap from QGS_THREADS (default 1: sequential, deterministic)."""
    try:
        return max(1, int(os.environ.get("QGS_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# mass ratios


@dataclass
class RatioReport:
    kind: str
    observed: float
    bound: BoundReport
    margin: float
    passed: bool
    vacuous: bool = False
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "observed": self.observed,
                "bound": self.bound.to_json(), "margin": self.margin,
                "passed": self.passed, "vacuous": self.vacuous,
                "extras": dict(self.extras)}


def _region_of(omega) -> dict[str, IntervalUnion]:
    if isinstance(omega, SamplingSet):
        return omega.region()
    return dict(omega)


def mass_ratio(f: GraphFunction, omega) -> float:
    """||chi_omega f||^2 / ||f||^2, both sides by exact quadrature."""
    total = norm_sq(f)
    if total <= 0.0:
        raise ValueError("mass ratio undefined for the zero function")
    ratio = norm_sq(f, _region_of(omega)) / total
    if ratio > 1.0 + 1e-12:
        raise AssertionError(f"ratio {ratio} exceeds 1")
    return min(ratio, 1.0)


def _passes(observed: float, bound: float) -> bool:
    return observed - bound > -PASS_REL_TOL * observed


def _resolve_bound(params: SamplingParams, lam: float | None,
                   profile: BernsteinProfile | None) -> BoundReport:
    if (lam is None) == (profile is None):
        raise ValueError("give exactly one of lam, profile")
    if lam is not None:
        return spectral_bound(params.gamma, params.rho, lam)
    return h_bound(params.gamma, h=profile.h_series(params.rho))


def compare(f: GraphFunction, omega, params: SamplingParams,
            lam: float | None = None,
            profile: BernsteinProfile | None = None) -> RatioReport:
    """Observed mass ratio against the sampling-inequality constant."""
    bound = _resolve_bound(params, lam, profile)
    observed = mass_ratio(f, omega)
    return RatioReport(kind="mass", observed=observed, bound=bound,
                       margin=observed - bound.value,
                       passed=_passes(observed, bound.value))


def derivative_ratio(f: GraphFunction, omega) -> float | None:
    """Mass ratio of f'; None when f' vanishes identically (the derivative
    inequality is vacuous for locally constant functions)."""
    fp = f.derivative()
    if fp.is_zero() or norm_sq(fp) <= 0.0:
        return None
    return mass_ratio(fp, omega)


def compare_derivative(f: GraphFunction, omega, params: SamplingParams,
                       lam: float | None = None,
                       profile: BernsteinProfile | None = None) -> RatioReport:
    """Derivative-mass ratio against the same constant, plus the combined
    first-order-norm ratio it implies."""
    bound = _resolve_bound(params, lam, profile)
    ratio = derivative_ratio(f, omega)
    if ratio is None:
        return RatioReport(kind="derivative", observed=math.nan, bound=bound,
                           margin=math.nan, passed=True, vacuous=True)
    region = _region_of(omega)
    fp = f.derivative()
    w12 = ((norm_sq(f, region) + norm_sq(fp, region))
           / (norm_sq(f) + norm_sq(fp)))
    return RatioReport(kind="derivative", observed=ratio, bound=bound,
                       margin=ratio - bound.value,
                       passed=_passes(ratio, bound.value),
                       extras={"w12_ratio": w12,
                               "w12_passed": _passes(w12, bound.value)})


# ---------------------------------------------------------------------------
# good/bad edge classification


def _gram_matrix(freqs: np.ndarray, a: float, b: float) -> np.ndarray:
    diff = np.subtract.outer(freqs, freqs)
    vals = integrate_powexp(np.zeros(diff.size, dtype=int), diff.ravel(), a, b)
    return vals.reshape(diff.shape)


@dataclass
class EdgeClassification:
    good: dict[str, bool]
    m_max: int
    good_mass: float
    bad_mass: float
    total_mass: float
    closure_complete: bool

    def to_json(self) -> dict:
        return {"good": dict(self.good), "m_max": self.m_max,
                "good_mass": self.good_mass, "bad_mass": self.bad_mass,
                "total_mass": self.total_mass,
                "closure_complete": self.closure_complete}


def classify_edges(f: GraphFunction, profile: BernsteinProfile,
                   m_max: int = DEFAULT_M_MAX) -> EdgeClassification:
    """Flag each edge good when ||f_e^(m)||^2 <= 2^(m+1) C(m) ||f_e||^2 for
    m = 1..m_max; good edges must then carry more than half the mass.

    The derivative-growth profile is asserted for f itself first.  For pure
    exponential edge data the per-order norms come from one Gram matrix per
    edge; if additionally the profile is a power law and the one-step
    derivative gain on every good edge is at most 2*lam, the classification
    extends to every order m (no truncation caveat).
    """
    if f.is_zero():
        raise ValueError("cannot classify the zero function")
    g = f.graph
    total = norm_sq(f)

    per_edge: dict[str, np.ndarray] = {}
    edge_norm0: dict[str, float] = {}
    gains: list[float] = []
    for eid, terms in f.terms.items():
        ell = g.edge_lengths[eid]
        if all(t.power == 0 for t in terms):
            freqs = np.array([t.freq for t in terms])
            coeff = np.array([t.coeff for t in terms])
            gram_t = _gram_matrix(freqs, 0.0, ell).T  # x^H (G^T) x is the norm
            iw = 1j * freqs
            norms = np.empty(m_max + 1)
            for m in range(m_max + 1):
                v = coeff * iw ** m
                norms[m] = float(np.real(np.conj(v) @ gram_t @ v))
            per_edge[eid] = norms
            # largest one-step derivative gain on the span of these modes
            d = np.diag(iw)
            try:
                gains.append(float(np.max(scipy.linalg.eigvalsh(
                    d.conj().T @ gram_t @ d, gram_t))))
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                gains.append(math.inf)
        else:
            fn = GraphFunction(g, {eid: list(terms)})
            norms = np.empty(m_max + 1)
            for m in range(m_max + 1):
                norms[m] = norm_sq(fn.derivative(m)) if m else norm_sq(fn)
            per_edge[eid] = norms
            gains.append(0.0 if all(t.freq == 0.0 for t in terms) else math.inf)
        edge_norm0[eid] = per_edge[eid][0]

    # the function itself must obey its profile before edges are judged by it
    for m in range(1, m_max + 1):
        lhs = sum(norms[m] for norms in per_edge.values())
        cap = profile.value(m) * total
        if lhs > cap * (1.0 + 1e-9) + 1e-12 * total:
            raise ValueError(f"profile violated at order {m}: "
                             f"||f^({m})||^2 = {lhs} > C({m})||f||^2 = {cap}")

    good: dict[str, bool] = {}
    for eid, norms in per_edge.items():
        n0 = norms[0]
        ok = all(norms[m] <= 2.0 ** (m + 1) * profile.value(m) * n0
                 * (1.0 + 1e-9) + 1e-14 * total for m in range(1, m_max + 1))
        good[eid] = bool(ok)

    closure = False
    if profile.kind == "power" and profile.lam > 0.0:
        closure = all(gain <= 2.0 * profile.lam * (1.0 + 1e-9) for gain in gains)
    elif profile.kind == "finite":
        # finite profiles pair with polynomial data: derivatives vanish beyond
        closure = all(gain == 0.0 for gain in gains)

    good_mass = sum(n for e, n in edge_norm0.items() if good[e])
    bad_mass = sum(n for e, n in edge_norm0.items() if not good[e])
    # edges where f vanishes identically are good and carry no mass
    if bad_mass >= 0.5 * total:
        raise AssertionError("bad edges carry at least half the mass")
    if not total < 2.0 * good_mass:
        raise AssertionError("good-edge mass bound failed")
    return EdgeClassification(good=good, m_max=m_max, good_mass=good_mass,
                              bad_mass=bad_mass, total_mass=total,
                              closure_complete=closure)


# ---------------------------------------------------------------------------
# desk-scale checks


@dataclass
class CheckReport:
    name: str
    passed: bool
    lhs: float
    rhs: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "lhs": self.lhs,
                "rhs": self.rhs, "details": dict(self.details)}


def _poly_eval(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z, dtype=complex)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def kovrijkine_check(coeffs, e_set: IntervalUnion, grid_n: int = 2000) -> CheckReport:
    """Check sup_[0,1] |phi| <= (12/|E|)^(2 log2 M) sup_E |phi| for a
    polynomial phi with |phi(0)| >= 1; the left supremum and M are certified
    upper bounds, the right supremum a grid lower bound, so a pass is
    meaningful.  A failing grid is refined before being reported."""
    coeffs = np.asarray([complex(c) for c in coeffs])
    if abs(coeffs[0]) < 1.0:
        raise ValueError("|phi(0)| must be at least 1")
    meas = e_set.measure
    if meas <= 0.0:
        raise ValueError("E must have positive measure")
    deriv_unit = sum(j * abs(c) for j, c in enumerate(coeffs))
    deriv_disk = sum(j * abs(c) * 4.0 ** (j - 1) for j, c in enumerate(coeffs) if j)

    for n in (grid_n, 8 * grid_n, 64 * grid_n):
        ts = np.linspace(0.0, 1.0, n)
        sup_unit = float(np.abs(_poly_eval(coeffs, ts)).max()) \
            + 0.5 * deriv_unit / (n - 1)
        sup_e = 0.0
        for a, b in e_set.intervals:
            pts = np.linspace(a, b, max(2, int(n * (b - a)) + 2))
            sup_e = max(sup_e, float(np.abs(_poly_eval(coeffs, pts)).max()))
        zs = 4.0 * np.exp(2j * math.pi * np.linspace(0.0, 1.0, n, endpoint=False))
        m_phi = float(np.abs(_poly_eval(coeffs, zs)).max()) \
            + 0.5 * deriv_disk * (8.0 * math.pi / n)
        m_phi = max(m_phi, 1.0)
        rhs = (12.0 / meas) ** (2.0 * math.log(m_phi) / math.log(2.0)) * sup_e
        if sup_unit <= rhs:
            return CheckReport(name="kovrijkine", passed=True, lhs=sup_unit,
                               rhs=rhs, details={"M": m_phi, "sup_E": sup_e,
                                                 "measure": meas, "grid": n})
    return CheckReport(name="kovrijkine", passed=False, lhs=sup_unit, rhs=rhs,
                       details={"M": m_phi, "sup_E": sup_e, "measure": meas,
                                "grid": n})


def _terms_norm_sq(terms, windows) -> float:
    c = np.array([t.coeff for t in terms])
    p = np.array([t.power for t in terms], dtype=int)
    w = np.array([t.freq for t in terms])
    cc = np.multiply.outer(c, np.conj(c)).ravel()
    pp = np.add.outer(p, p).ravel()
    ww = np.subtract.outer(w, w).ravel()
    val = 0.0
    for a, b in windows:
        val += float(np.real((cc * integrate_powexp(pp, ww, a, b)).sum()))
    return max(val, 0.0)


def local_estimate_check(terms, ell: float, s_set: IntervalUnion,
                         grid_n: int = 4096) -> CheckReport:
    """Single-edge estimate ||g||_{L2(S)}^2 >= 24 (|S|/(48 l))^(4 log2 M + 1)
    ||g||_{L2(0,l)}^2 with M a certified upper bound on the normalised sup of
    the analytic extension over the 4l-neighborhood; over-estimating M only
    weakens the right side, never falsifies a pass."""
    terms = [PolyTrigTerm(complex(c), int(p), float(w)) for c, p, w in terms]
    full = _terms_norm_sq(terms, ((0.0, ell),))
    if full <= 0.0:
        raise ValueError("function vanishes on the edge")
    lhs = _terms_norm_sq(terms, s_set.intervals)
    sup = sup_on_disk_neighborhood(terms, ell, 4.0, samples=grid_n)
    m_big = max(1.0, math.sqrt(ell) * sup / math.sqrt(full))
    expo = 4.0 * math.log(m_big) / math.log(2.0) + 1.0
    rhs = 24.0 * (s_set.measure / (48.0 * ell)) ** expo * full
    return CheckReport(name="local-estimate", passed=lhs >= rhs, lhs=lhs, rhs=rhs,
                       details={"M": m_big, "measure": s_set.measure, "ell": ell})


def optimality_example(ell: float, lam: float, gamma: float) -> dict:
    """Concentrated cosine-power profile: its observed ratio on the matched
    two-window control set sits between the proved lower constant and the
    explicit decaying upper envelope, pinning the sharpness of the exponent."""
    if not (0.0 < gamma <= 4.0 / math.pi ** 2):
        raise ValueError("gamma must lie in (0, 4/pi^2]")
    alpha = math.floor(ell * math.sqrt(lam) / (2.0 * math.pi))
    if alpha < 2:
        raise ValueError("energy too small: the profile exponent must be >= 2")
    g = build_graph(["a", "b"], [("e", "a", "b", ell)])
    f = GraphFunction(g, {"e": list(cosine_power_terms(alpha, 2.0 * math.pi / ell))})
    omega = {"e": IntervalUnion([
        (ell / 4.0 * (1.0 - gamma), ell / 4.0 * (1.0 + gamma)),
        (ell / 4.0 * (3.0 - gamma), ell / 4.0 * (3.0 + gamma))], length=ell)}
    ratio = mass_ratio(f, omega)
    upper = 0.2 * (math.pi ** 2 * gamma / 4.0) ** (ell * math.sqrt(lam) / math.pi - 1.0)
    lower = spectral_bound(gamma, ell / 2.0, lam)
    if not (lower.value < ratio <= upper * (1.0 + 1e-12)):
        raise AssertionError(f"optimality sandwich failed: {lower.value} < "
                             f"{ratio} <= {upper} is false")
    return {"alpha": alpha, "ratio": ratio, "upper": upper,
            "lower": lower.value, "gamma": gamma, "ell": ell, "lam": lam}


# ---------------------------------------------------------------------------
# observability at matrix level


@dataclass
class ObservabilityNumeric:
    observable: bool
    numeric_c_squared: float
    formula_c_squared: float | None
    modes: int
    horizon: float

    def to_json(self) -> dict:
        return {"observable": self.observable,
                "numeric_c_squared": self.numeric_c_squared,
                "formula_c_squared": self.formula_c_squared,
                "modes": self.modes, "horizon": self.horizon}


def observability_numeric(g: MetricGraph, y: BoundarySubspace, omega, horizon: float,
                          modes: int, params: SamplingParams | None = None,
                          pairs: list[EigenPair] | None = None) -> ObservabilityNumeric:
    """Largest ratio of final-state mass to time-integrated control-set mass
    over the span of the lowest eigenmodes: the generalized eigenvalue of the
    endpoint Gram pair.  A singular right-hand Gram means some mode is
    invisible from the control set (non-observable at this rank)."""
    if horizon <= 0.0:
        raise ValueError("time horizon must be positive")
    if modes < 1:
        raise ValueError("need at least one mode")
    if pairs is None:
        total = sum(g.edge_lengths.values())
        lam_max = max(4.0, ((modes + 3) * math.pi / total) ** 2)
        for _ in range(8):
            pairs = eigenvalues_up_to(g, y, lam_max)
            if len(pairs) >= modes:
                break
            lam_max *= 2.0
    if len(pairs) < modes:
        raise ValueError(f"could not compute {modes} modes")
    pairs = pairs[:modes]
    region = _region_of(omega) if omega is not None else None
    lam = np.array([p.lam for p in pairs])
    n = len(pairs)
    mass = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            val = inner_product(pairs[i].function, pairs[j].function, region)
            mass[i, j] = val
            mass[j, i] = np.conj(val)
    s = lam[:, None] + lam[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(s > 1e-14, -np.expm1(-s * horizon) / np.where(s > 1e-14, s, 1.0),
                          horizon)
    rhs = (mass * weight).T           # x^H rhs x gives the integrated mass
    lhs = np.diag(np.exp(-2.0 * lam * horizon))
    eigs = np.linalg.eigvalsh(rhs)
    if eigs.min() < 1e-12 * max(eigs.max(), 1e-300):
        return ObservabilityNumeric(observable=False, numeric_c_squared=math.inf,
                                    formula_c_squared=None, modes=modes,
                                    horizon=horizon)
    top = float(scipy.linalg.eigh(lhs, rhs, eigvals_only=True)[-1])
    formula = None
    if params is not None:
        from .bounds import observability_constant
        formula = observability_constant(params.gamma, params.rho, horizon)
        formula = formula.c_squared.value
    return ObservabilityNumeric(observable=True, numeric_c_squared=top,
                                formula_c_squared=formula, modes=modes,
                                horizon=horizon)


# ---------------------------------------------------------------------------
# boundary trace and the loop counterexample


def boundary_trace_check(f: GraphFunction, g: MetricGraph) -> CheckReport:
    """Endpoint-value mass against 2 coth(min edge) times the first-order norm."""
    vec = g.trace_plus(f)
    lhs = float(np.vdot(vec, vec).real)
    min_edge = min(g.edge_lengths.values())
    rhs = 2.0 / math.tanh(min_edge) * (norm_sq(f) + norm_sq(f.derivative()))
    return CheckReport(name="boundary-trace", passed=lhs <= rhs * (1.0 + 1e-12),
                       lhs=lhs, rhs=rhs, details={"min_edge": min_edge})


def lasso_counterexample() -> dict:
    """An eigenfunction supported on the loop of a loop-plus-tail graph: the
    tail alone holds half the total length yet sees none of the mass, so a
    volume fraction alone can never imply the sampling inequality."""
    g = build_graph(["v", "w"], [("loop", "v", "v", 1.0), ("tail", "v", "w", 1.0)])
    y = standard_subspace(g)
    k = 2.0 * math.pi
    amp = math.sqrt(2.0)  # L2-normalises sin(2 pi x) on the unit loop
    phi = GraphFunction(g, {"loop": [PolyTrigTerm(-0.5j * amp, 0, k),
                                     PolyTrigTerm(0.5j * amp, 0, -k)]})
    from .spectral import boundary_residual
    residual = boundary_residual(g, y, phi)
    if residual >= 1e-10:
        raise AssertionError(f"loop mode fails the vertex conditions: {residual}")
    nrm = norm_sq(phi)
    tail_only = {"tail": whole_edge(1.0)}
    loop_only = {"loop": whole_edge(1.0)}
    ratio_tail = mass_ratio(phi, tail_only)
    ratio_loop = mass_ratio(phi, loop_only)
    total = metrics(g).total_length
    return {"lambda": k * k, "norm_sq": nrm, "residual": residual,
            "tail_measure": 1.0, "total_length": total,
            "volume_fraction": 1.0 / total,
            "ratio_tail": ratio_tail, "ratio_loop": ratio_loop}


# ---------------------------------------------------------------------------
# randomized audit


@dataclass
class AuditResult:
    rows: list[dict]
    violations: int
    trials: int
    seed: int
    lam_max: float
    pool: tuple[str, ...]

    def to_json(self) -> dict:
        return {"seed": self.seed, "trials": self.trials,
                "lam_max": self.lam_max, "violations": self.violations,
                "pool": list(self.pool), "rows": self.rows}


def audit_pool(rng: np.random.Generator, lam_max: float):
    """Catalogue of compact graphs (at most 6 edges) with randomized lengths,
    a few non-standard conditions and one fluxed cycle, each solved once."""
    def L(lo=0.6, hi=1.4):
        return float(rng.uniform(lo, hi))

    entries = []
    g = build_graph(["a", "b"], [("e", "a", "b", L())])
    entries.append(("interval", g, standard_subspace(g)))
    g = build_graph(["a", "b"], [("e", "a", "b", L())])
    entries.append(("interval-dirichlet", g,
                    vertex_conditions_subspace(g, "dirichlet")))
    g = build_graph(["a", "b", "c"], [("e1", "a", "b", L()), ("e2", "b", "c", L())])
    entries.append(("path2", g, standard_subspace(g)))
    g = build_graph(["c", "w1", "w2", "w3"],
                    [("e1", "c", "w1", L()), ("e2", "c", "w2", L()),
                     ("e3", "c", "w3", L())])
    entries.append(("star3", g, standard_subspace(g)))
    g = build_graph(["c", "w1", "w2", "w3"],
                    [("e1", "c", "w1", L()), ("e2", "c", "w2", L()),
                     ("e3", "c", "w3", L())])
    entries.append(("star3-mixed", g, vertex_conditions_subspace(
        g, "standard", {"w1": "dirichlet", "w2": "neumann"})))
    g = build_graph(["v"], [("loop", "v", "v", L(1.0, 2.0))])
    entries.append(("cycle", g, standard_subspace(g)))
    g = build_graph(["v"], [("loop", "v", "v", L(1.0, 2.0), float(rng.uniform(0, math.pi)))])
    entries.append(("cycle-flux", g, standard_subspace(g)))
    g = build_graph(["v", "w"], [("loop", "v", "v", L()), ("tail", "v", "w", L())])
    entries.append(("lasso", g, standard_subspace(g)))
    g = build_graph(["a", "b", "c", "d"],
                    [("e1", "a", "b", L()), ("e2", "b", "c", L()),
                     ("e3", "c", "a", L()), ("e4", "c", "d", L())])
    entries.append(("triangle-tail", g, standard_subspace(g)))
    g = build_graph(["a", "b", "c", "d"],
                    [("e1", "a", "b", L()), ("e2", "b", "c", L()),
                     ("e3", "c", "d", L()), ("e4", "d", "a", L()),
                     ("e5", "a", "c", L()), ("e6", "b", "d", L())])
    entries.append(("k4", g, standard_subspace(g)))

    pool = []
    for name, g, y in entries:
        pairs = eigenvalues_up_to(g, y, lam_max)
        pool.append({"name": name, "graph": g, "subspace": y, "pairs": pairs})
    return pool


def _random_certified_set(rng: np.random.Generator, g: MetricGraph
                          ) -> tuple[SamplingParams, SamplingSet] | None:
    """Cover-first random control set: windows first, then mass gamma|J|
    inside each window, so certification is guaranteed by construction."""
    gamma_target = float(rng.uniform(0.15, 0.85))
    finite: dict[str, IntervalUnion] = {}
    breaks: dict[str, tuple[float, ...]] = {}
    for eid, ell in g.edge_lengths.items():
        n_windows = int(rng.integers(1, 5))
        cuts = np.concatenate([[0.0], np.sort(rng.uniform(0.0, ell, size=n_windows - 1)),
                               [ell]]) if n_windows > 1 else np.array([0.0, ell])
        cuts = np.unique(cuts)
        parts = []
        for t0, t1 in zip(cuts, cuts[1:]):
            w = t1 - t0
            m = gamma_target * w
            if rng.random() < 0.5 or m >= 0.5 * w:
                start = t0 + float(rng.uniform(0.0, w - m))
                parts.append((start, start + m))
            else:
                half = 0.5 * m
                s1 = t0 + float(rng.uniform(0.0, 0.5 * w - half))
                s2 = t0 + 0.5 * w + float(rng.uniform(0.0, 0.5 * w - half))
                parts.extend([(s1, s1 + half), (s2, s2 + half)])
        finite[eid] = IntervalUnion(parts, length=ell)
        breaks[eid] = tuple(float(c) for c in cuts)
    sset = SamplingSet(finite=finite)
    cover = Cover(breakpoints=breaks)
    res = verify_cover(sset, cover, gamma=gamma_target * (1.0 - 1e-9),
                       rho=max(g.edge_lengths.values()) * (1.0 + 1e-9))
    if not isinstance(res, SamplingParams):
        return None
    return res, sset


def _audit_trial(pool, seed: int, index: int, lam_max: float,
                 classify: bool) -> dict:
    rng = np.random.default_rng([seed, index])
    entry = pool[int(rng.integers(len(pool)))]
    g, pairs = entry["graph"], entry["pairs"]
    certified = None
    for _ in range(32):
        certified = _random_certified_set(rng, g)
        if certified is not None:
            break
    if certified is None:
        raise RuntimeError(f"trial {index}: could not certify a random set")
    params, sset = certified
    n_modes = int(rng.integers(1, 6))
    idx = rng.choice(len(pairs), size=min(n_modes, len(pairs)), replace=False)
    chosen = [pairs[i] for i in sorted(idx)]
    coeffs = rng.normal(size=len(chosen)) + 1j * rng.normal(size=len(chosen))
    f = spectral_sample(chosen, coeffs)
    lam = max(p.lam for p in chosen)
    omega = sset.region()
    rep = compare(f, omega, params, lam=lam)
    der = compare_derivative(f, omega, params, lam=lam)
    row = {
        "trial": index, "graph": entry["name"], "gamma": params.gamma,
        "rho": params.rho, "lam": lam, "modes": len(chosen),
        "mass_observed": rep.observed, "bound": rep.bound.value,
        "mass_margin": rep.margin, "mass_passed": rep.passed,
        "deriv_observed": der.observed, "deriv_margin": der.margin,
        "deriv_passed": der.passed, "deriv_vacuous": der.vacuous,
    }
    if classify:
        cls = classify_edges(f, BernsteinProfile.power_law(lam))
        row["bad_mass_fraction"] = cls.bad_mass / cls.total_mass
        row["classified_ok"] = (cls.bad_mass < 0.5 * cls.total_mass
                                and cls.total_mass < 2.0 * cls.good_mass)
        row["closure_complete"] = cls.closure_complete
    return row


def audit(trials: int = 10000, seed: int = DEFAULT_SEED, lam_max: float = 200.0,
          threads: int | None = None, classify: bool = False) -> AuditResult:
    """Randomized inequality campaign: certified random control sets against
    random spectral-subspace functions on the graph catalogue; every observed
    mass and derivative-mass ratio must clear the explicit constant.  With
    classify=True every audited function is also run through the good/bad
    edge classification and its mass bounds."""
    if trials < 1:
        raise ValueError("need at least one trial")
    pool = audit_pool(np.random.default_rng(seed), lam_max)
    n_workers = worker_count() if threads is None else max(1, threads)
    if n_workers == 1:
        rows = [_audit_trial(pool, seed, i, lam_max, classify)
                for i in range(trials)]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_workers) as pool_ex:
            rows = list(pool_ex.map(
                lambda i: _audit_trial(pool, seed, i, lam_max, classify),
                range(trials)))
    rows.sort(key=lambda r: r["trial"])
    violations = sum(1 for r in rows
                     if not r["mass_passed"]
                     or (not r["deriv_vacuous"] and not r["deriv_passed"])
                     or not r.get("classified_ok", True))
    return AuditResult(rows=rows, violations=violations, trials=trials, seed=seed,
                       lam_max=lam_max, pool=tuple(e["name"] for e in pool))
