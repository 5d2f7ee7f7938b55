"""Classification and optimisation of sampling sets on metric graphs.

A set is (gamma, rho)-sampling on an edge when the edge admits a cover by
adjacent closed intervals of length at most rho, each meeting the set in
relative measure at least gamma.  Finite edges carry finite interval unions;
infinite edges carry a head union plus an eventually periodic body.  The
optimisers run a feasibility dynamic program over a candidate breakpoint
grid, so the returned parameters are certified one-sided bounds: any
reported cover verifies exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .graphs import MetricGraph
from .polytrig import IntervalUnion

GAMMA_TOL = 1e-9         # binary search resolution on gamma
RHO_TOL_REL = 1e-9       # binary search resolution on rho, relative to the edge
_EQ_SLACK = 1e-12        # comparison slack for exact-measure boundary cases


@dataclass(frozen=True)
class PeriodicTail:
    """Set on an infinite edge: head on [0, W] then W + j*period + body."""

    head: IntervalUnion
    period: float
    body: IntervalUnion

    def __post_init__(self):
        if not (self.period > 0.0):
            raise ValueError("period must be positive")
        if self.body.length > self.period * (1 + 1e-12):
            raise ValueError("body must live inside one period")

    @property
    def head_span(self) -> float:
        return self.head.intervals[-1][1] if self.head.intervals else 0.0

    def unroll(self, periods: int = 2) -> IntervalUnion:
        """Head plus the first few periods, as a finite union."""
        w = self.head_span
        parts = list(self.head.intervals)
        for j in range(periods):
            parts.extend((w + j * self.period + a, w + j * self.period + b)
                         for a, b in self.body.intervals)
        return IntervalUnion(parts, length=w + periods * self.period)


class SamplingSet:
    """Per-edge control set: interval unions on finite edges, periodic tails
    on infinite ones."""

    def __init__(self, finite: Mapping[str, IntervalUnion] | None = None,
                 external: Mapping[str, PeriodicTail] | None = None):
        self.finite: dict[str, IntervalUnion] = dict(finite or {})
        self.external: dict[str, PeriodicTail] = dict(external or {})

    def region(self) -> dict[str, IntervalUnion]:
        """Finite-edge view, suitable for quadrature."""
        return dict(self.finite)

    @classmethod
    def from_dict(cls, g: MetricGraph, data: Mapping) -> "SamplingSet":
        finite: dict[str, IntervalUnion] = {}
        for eid, ivs in dict(data.get("edges", {})).items():
            if eid not in g.edge_lengths:
                raise ValueError(f"sampling set references unknown edge {eid!r}")
            ell = g.edge_lengths[eid]
            if not math.isfinite(ell):
                raise ValueError(f"edge {eid!r} is infinite; use the external section")
            finite[eid] = IntervalUnion(ivs, length=ell)
        external: dict[str, PeriodicTail] = {}
        for eid, spec in dict(data.get("external", {})).items():
            if eid not in g.edge_lengths or math.isfinite(g.edge_lengths[eid]):
                raise ValueError(f"external section references non-ray edge {eid!r}")
            period = float(spec["period"])
            head = IntervalUnion(spec.get("head", []))
            body = IntervalUnion(spec["body"], length=period)
            external[eid] = PeriodicTail(head=head, period=period, body=body)
        return cls(finite, external)

    @classmethod
    def load(cls, g: MetricGraph, path) -> "SamplingSet":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON at line {exc.lineno}, "
                                 f"column {exc.colno}") from exc
        return cls.from_dict(g, data)

    def to_json(self) -> dict:
        out: dict = {"edges": {e: iu.to_json() for e, iu in sorted(self.finite.items())}}
        if self.external:
            out["external"] = {
                e: {"head": t.head.to_json(), "period": t.period, "body": t.body.to_json()}
                for e, t in sorted(self.external.items())}
        return out


@dataclass(frozen=True)
class Cover:
    """Adjacent-interval covers: breakpoints per finite edge (0 = t0 < ... = len),
    and (head breakpoints, body breakpoints) per infinite edge."""

    breakpoints: Mapping[str, tuple[float, ...]]
    external: Mapping[str, tuple[tuple[float, ...], tuple[float, ...]]] = field(
        default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Cover":
        return cls(
            breakpoints={e: tuple(map(float, bps)) for e, bps in
                         dict(data.get("edges", {})).items()},
            external={e: (tuple(map(float, v["head"])), tuple(map(float, v["body"])))
                      for e, v in dict(data.get("external", {})).items()})

    def to_json(self) -> dict:
        out: dict = {"edges": {e: list(b) for e, b in sorted(dict(self.breakpoints).items())}}
        if self.external:
            out["external"] = {e: {"head": list(h), "body": list(b)}
                               for e, (h, b) in sorted(dict(self.external).items())}
        return out


@dataclass
class SamplingParams:
    """Certified parameters achieved by a concrete cover."""

    gamma: float
    rho: float
    cover: Cover
    densities: dict[str, list[float]]

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "rho": self.rho, "cover": self.cover.to_json(),
                "densities": {e: list(d) for e, d in sorted(self.densities.items())}}


@dataclass
class CoverViolation:
    gamma: float
    rho: float
    issues: list[str]

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "rho": self.rho, "issues": list(self.issues)}


def _check_edge_cover(eid: str, omega: IntervalUnion, bps, ell: float,
                      gamma: float, rho: float, issues: list[str],
                      densities: list[float]) -> tuple[float, float]:
    slack = _EQ_SLACK * max(1.0, ell)
    worst_gamma, worst_rho = 1.0, 0.0
    if len(bps) < 2 or abs(bps[0]) > slack or abs(bps[-1] - ell) > slack:
        issues.append(f"{eid}: breakpoints must run from 0 to {ell}")
        return worst_gamma, worst_rho
    for t0, t1 in zip(bps, bps[1:]):
        width = t1 - t0
        if width <= 0.0:
            issues.append(f"{eid}: breakpoints not increasing at {t0}")
            continue
        if width > rho + slack:
            issues.append(f"{eid}: interval [{t0}, {t1}] longer than rho={rho}")
        meas = omega.measure_in(t0, t1)
        dens = meas / width
        densities.append(dens)
        if meas + slack < gamma * width:
            issues.append(f"{eid}: [{t0}, {t1}] holds measure {meas} < "
                          f"gamma*|J| = {gamma * width}")
        worst_gamma = min(worst_gamma, dens)
        worst_rho = max(worst_rho, width)
    return worst_gamma, worst_rho


def verify_cover(omega: SamplingSet, cover: Cover, gamma: float, rho: float
                 ) -> SamplingParams | CoverViolation:
    """Exact check of the sampling definition for a concrete cover; on success
    reports the achieved (maximal gamma, minimal rho) this cover certifies."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    issues: list[str] = []
    densities: dict[str, list[float]] = {}
    if set(cover.breakpoints) != set(omega.finite) or \
            set(cover.external) != set(omega.external):
        raise ValueError("cover and sampling set address different edges")
    got_gamma, got_rho = 1.0, 0.0
    for eid, iu in omega.finite.items():
        dens: list[float] = []
        wg, wr = _check_edge_cover(eid, iu, cover.breakpoints[eid], iu.length,
                                   gamma, rho, issues, dens)
        densities[eid] = dens
        got_gamma, got_rho = min(got_gamma, wg), max(got_rho, wr)
    for eid, tail in omega.external.items():
        head_bps, body_bps = cover.external[eid]
        dens: list[float] = []
        if tail.head.intervals or len(head_bps) > 1:
            wg, wr = _check_edge_cover(f"{eid}(head)", tail.head, head_bps,
                                       tail.head_span, gamma, rho, issues, dens)
            got_gamma, got_rho = min(got_gamma, wg), max(got_rho, wr)
        wg, wr = _check_edge_cover(f"{eid}(body)", tail.body, body_bps,
                                   tail.period, gamma, rho, issues, dens)
        densities[eid] = dens
        got_gamma, got_rho = min(got_gamma, wg), max(got_rho, wr)
    if issues:
        return CoverViolation(gamma=gamma, rho=rho, issues=issues)
    return SamplingParams(gamma=got_gamma, rho=got_rho, cover=cover,
                          densities=densities)


# ---------------------------------------------------------------------------
# gap analysis


@dataclass
class EdgeGaps:
    left: float
    right: float          # infinite edges report the worst tail gap here
    max_interior: float

    def to_json(self) -> dict:
        return {"left": self.left, "right": self.right,
                "max_interior": self.max_interior}


def gap_analysis(omega: SamplingSet) -> dict[str, EdgeGaps]:
    out: dict[str, EdgeGaps] = {}
    for eid, iu in omega.finite.items():
        left, interior, right = iu.gaps()
        out[eid] = EdgeGaps(left=left, right=right,
                            max_interior=max(interior, default=0.0))
    for eid, tail in omega.external.items():
        left, interior, _ = tail.unroll(3).gaps()
        out[eid] = EdgeGaps(left=left, right=0.0,
                            max_interior=max(interior, default=0.0))
    return out


def necessary_check(gaps: Mapping[str, EdgeGaps], gamma: float, rho: float
                    ) -> tuple[bool, list[str]]:
    """Necessary condition from the maximal admissible gaps: endpoint gaps at
    most (1-gamma)*rho, interior gaps at most 2*(1-gamma)*rho.  Failure proves
    the set is not (gamma, rho)-sampling."""
    issues = []
    end_cap = (1.0 - gamma) * rho
    mid_cap = 2.0 * end_cap
    slack = _EQ_SLACK
    for eid, eg in gaps.items():
        if eg.left > end_cap + slack or eg.right > end_cap + slack:
            issues.append(f"{eid}: endpoint gap {max(eg.left, eg.right)} "
                          f"exceeds (1-gamma)*rho = {end_cap}")
        if eg.max_interior > mid_cap + slack:
            issues.append(f"{eid}: interior gap {eg.max_interior} exceeds "
                          f"2*(1-gamma)*rho = {mid_cap}")
    return not issues, issues


# ---------------------------------------------------------------------------
# optimisers


def _candidates(omega: IntervalUnion, ell: float, rho: float, grid_n: int) -> np.ndarray:
    pts = {0.0, ell}
    pts.update(omega.endpoints())
    for x in list(pts):
        for y in (x - rho, x + rho):
            if 0.0 < y < ell:
                pts.add(y)
    pts.update(ell * i / grid_n for i in range(1, grid_n))
    return np.array(sorted(p for p in pts if -1e-15 <= p <= ell * (1 + 1e-15)))


def _cover_dp(ts: np.ndarray, pref: np.ndarray, rho: float, gamma: float,
              ell: float) -> list[float] | None:
    """Feasibility DP: can [0, ell] be covered by candidate-aligned adjacent
    intervals of length <= rho and relative measure >= gamma?  Returns the
    breakpoints of one such cover (preferring long steps), or None."""
    n = ts.size
    slack_w = rho + _EQ_SLACK * max(1.0, ell)
    slack_m = _EQ_SLACK * max(1.0, ell)
    reach = np.zeros(n, dtype=bool)
    parent = np.full(n, -1, dtype=int)
    reach[0] = True
    lo = 0
    for i in range(1, n):
        while ts[i] - ts[lo] > slack_w:
            lo += 1
        js = np.arange(lo, i)
        if js.size == 0:
            continue
        ok = reach[js] & (pref[i] - pref[js] + slack_m >= gamma * (ts[i] - ts[js]))
        hits = np.flatnonzero(ok)
        if hits.size:
            parent[i] = js[hits[0]]  # earliest feasible predecessor: longest step
            reach[i] = True
    if not reach[n - 1]:
        return None
    bps = [float(ts[n - 1])]
    i = n - 1
    while parent[i] >= 0:
        i = parent[i]
        bps.append(float(ts[i]))
    return bps[::-1]


@dataclass
class GammaResult:
    gamma: float
    breakpoints: tuple[float, ...] | None
    feasible: bool
    gap_witness: str | None = None

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "feasible": self.feasible,
                "breakpoints": list(self.breakpoints) if self.breakpoints else None,
                "gap_witness": self.gap_witness}


@dataclass
class RhoResult:
    rho: float
    breakpoints: tuple[float, ...] | None
    feasible: bool
    global_density: float

    def to_json(self) -> dict:
        return {"rho": self.rho, "feasible": self.feasible,
                "breakpoints": list(self.breakpoints) if self.breakpoints else None,
                "global_density": self.global_density}


def _achieved(omega: IntervalUnion, bps: list[float]) -> tuple[float, float]:
    dens = [omega.measure_in(a, b) / (b - a) for a, b in zip(bps, bps[1:])]
    widths = [b - a for a, b in zip(bps, bps[1:])]
    return min(dens), max(widths)


def optimal_gamma(omega: IntervalUnion, ell: float, rho: float,
                  grid_n: int = 200) -> GammaResult:
    """Largest certified gamma such that omega is (gamma, rho)-sampling on
    [0, ell], by binary search over the cover-feasibility DP.  A guaranteed
    lower bound on the true optimum; exact when the optimal cover's
    breakpoints lie in the candidate set."""
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    if omega.measure <= 0.0:
        return GammaResult(gamma=0.0, breakpoints=None, feasible=False,
                           gap_witness="empty set")
    ts = _candidates(omega, ell, rho, grid_n)
    pref = omega.prefix_measures(ts)
    if _cover_dp(ts, pref, rho, 1e-12, ell) is None:
        left, interior, right = omega.gaps()
        worst = max([left, right] + interior)
        return GammaResult(gamma=0.0, breakpoints=None, feasible=False,
                           gap_witness=f"gap of length {worst} cannot be covered "
                                       f"at rho={rho}")
    lo, hi = 0.0, 1.0
    best = None
    while hi - lo > GAMMA_TOL:
        mid = 0.5 * (lo + hi)
        bps = _cover_dp(ts, pref, rho, mid, ell)
        if bps is None:
            hi = mid
        else:
            lo = mid
            best = bps
    if best is None:
        best = _cover_dp(ts, pref, rho, lo, ell)
    gamma_star, _ = _achieved(omega, best)
    if gamma_star <= 10.0 * _EQ_SLACK:
        # the comparison slack let a measure-zero window through the probe
        left, interior, right = omega.gaps()
        worst = max([left, right] + interior)
        return GammaResult(gamma=0.0, breakpoints=None, feasible=False,
                           gap_witness=f"gap of length {worst} cannot be covered "
                                       f"at rho={rho}")
    return GammaResult(gamma=gamma_star, breakpoints=tuple(best), feasible=True)


def optimal_rho(omega: IntervalUnion, ell: float, gamma: float,
                grid_n: int = 200) -> RhoResult:
    """Smallest certified rho for the given gamma (an upper bound on the true
    minimum), with its certificate cover."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    global_density = omega.measure / ell if ell > 0 else 0.0
    if global_density + _EQ_SLACK < gamma:
        return RhoResult(rho=math.inf, breakpoints=None, feasible=False,
                         global_density=global_density)
    lo, hi = 0.0, ell
    best = [0.0, ell]
    while hi - lo > RHO_TOL_REL * ell:
        mid = 0.5 * (lo + hi)
        ts = _candidates(omega, ell, mid, grid_n)
        bps = _cover_dp(ts, omega.prefix_measures(ts), mid, gamma, ell)
        if bps is None:
            lo = mid
        else:
            hi = mid
            best = bps
    _, rho_star = _achieved(omega, best)
    return RhoResult(rho=rho_star, breakpoints=tuple(best), feasible=True,
                     global_density=global_density)


def graph_params(per_edge_gamma: Mapping[str, float],
                 per_edge_rho: Mapping[str, float]) -> tuple[float, float]:
    """Aggregate per-edge parameters: the graph-level set is sampling at
    (min over edges of gamma, max over edges of rho)."""
    if set(per_edge_gamma) != set(per_edge_rho):
        raise ValueError("edge key mismatch")
    if not per_edge_gamma:
        raise ValueError("no edges")
    return min(per_edge_gamma.values()), max(per_edge_rho.values())


# ---------------------------------------------------------------------------
# catalogue sets


def periodic_params(density: float, rho: float) -> float:
    """Certified gamma for a 1-periodic set of per-period density on a ray,
    covered by adjacent windows of length exactly rho: the floor-based value
    (n*density + max(0, frac - (1-density))) / rho with n = floor(rho)."""
    if not (0.0 < density < 1.0):
        raise ValueError("density must lie in (0, 1)")
    if rho <= 1.0 - density:
        raise ValueError(f"rho must exceed the worst-case gap {1.0 - density}")
    n = math.floor(rho)
    frac = rho - n
    return (n * density + max(0.0, frac - (1.0 - density))) / rho


def periodic_uniform_gamma(density: float) -> float:
    """rho-independent fallback valid for every rho >= 1: density/(2-density)."""
    if not (0.0 < density < 1.0):
        raise ValueError("density must lie in (0, 1)")
    return density / (2.0 - density)


def svc_set(depth: int) -> tuple[IntervalUnion, Fraction]:
    """Depth-n approximant of the fat Cantor set built by removing middle
    intervals of length 4**-n; a superset of the limit set, with its exact
    dyadic measure 1/2 + 2**-(n+1) returned alongside."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > 20:
        raise ValueError("depth too large for exact endpoint arithmetic")
    intervals = [(Fraction(0), Fraction(1))]
    for step in range(1, depth + 1):
        remove = Fraction(1, 4 ** step)
        nxt = []
        for a, b in intervals:
            mid = (a + b) / 2
            nxt.append((a, mid - remove / 2))
            nxt.append((mid + remove / 2, b))
        intervals = nxt
    measure = sum((b - a for a, b in intervals), Fraction(0))
    iu = IntervalUnion([(float(a), float(b)) for a, b in intervals], length=1.0)
    return iu, measure
