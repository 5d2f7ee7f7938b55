"""Edgewise poly-trigonometric functions with exact closed-form quadrature.

Functions on a metric graph are stored per edge as finite sums of terms
``c * x**p * exp(1j*w*x)`` with p <= 2.  This class contains every
eigenfunction of a free Laplacian realisation (p = 0), edgewise quadratics
such as torsion functions (w = 0), and is closed under differentiation and
restriction.  Pairwise products reach p = 4, for which the antiderivative
is still closed form, so all L2 inner products over finite unions of
intervals are evaluated exactly (up to floating point), with a series
branch that handles the w -> 0 degeneration without cancellation.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

MAX_TERM_POWER = 2       # per-term polynomial degree cap; products reach 4
PRUNE_REL = 1e-15        # drop terms whose |coeff| is below this times the edge max
_SERIES_SWITCH = 0.5     # |w*d| below which the Taylor branch of the kernel is used

# Pascal triangle up to the largest power a pairwise product can reach.
_BINOM = np.array([[math.comb(p, q) if q <= p else 0 for q in range(5)] for p in range(5)],
                  dtype=float)


class PolyTrigTerm(NamedTuple):
    """One term c * x**power * exp(1j*freq*x)."""

    coeff: complex
    power: int
    freq: float


def canonical_terms(terms: Iterable[PolyTrigTerm]) -> tuple[PolyTrigTerm, ...]:
    """Merge terms sharing (power, freq), prune relatively negligible ones."""
    merged: dict[tuple[int, float], complex] = {}
    for t in terms:
        if t.power < 0 or t.power > MAX_TERM_POWER:
            raise ValueError(f"term power {t.power} outside 0..{MAX_TERM_POWER}")
        key = (int(t.power), float(t.freq) + 0.0)  # +0.0 folds -0.0 into 0.0
        merged[key] = merged.get(key, 0j) + complex(t.coeff)
    if not merged:
        return ()
    peak = max(abs(c) for c in merged.values())
    if peak == 0.0:
        return ()
    out = [PolyTrigTerm(c, p, w) for (p, w), c in merged.items()
           if abs(c) >= PRUNE_REL * peak]
    out.sort(key=lambda t: (t.power, t.freq))
    return tuple(out)


class IntervalUnion:
    """Sorted union of disjoint closed intervals inside [0, length].

    Touching intervals are merged; overlapping interiors are rejected.
    ``length`` is the ambient edge length (defaults to the last endpoint).
    """

    __slots__ = ("intervals", "length")

    def __init__(self, intervals: Iterable[Sequence[float]], length: float | None = None):
        ivs = sorted((float(a), float(b)) for a, b in intervals)
        ivs = [(a, b) for a, b in ivs if b > a]
        merged: list[tuple[float, float]] = []
        for a, b in ivs:
            if merged and a < merged[-1][1] - 1e-12 * max(1.0, merged[-1][1]):
                raise ValueError(f"intervals overlap near {a!r}")
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        if merged and merged[0][0] < -1e-12:
            raise ValueError("interval extends below 0")
        if length is None:
            length = merged[-1][1] if merged else 0.0
        length = float(length)
        if merged and merged[-1][1] > length * (1.0 + 1e-12) + 1e-300:
            raise ValueError(f"interval extends beyond edge length {length}")
        # clamp fp spill at the domain ends
        merged = [(min(max(a, 0.0), length), min(b, length)) for a, b in merged]
        self.intervals: tuple[tuple[float, float], ...] = tuple(merged)
        self.length = length

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    def __repr__(self):
        return f"IntervalUnion({list(self.intervals)!r}, length={self.length!r})"

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def endpoints(self) -> list[float]:
        out: list[float] = []
        for a, b in self.intervals:
            out.extend((a, b))
        return out

    def intersect(self, lo: float, hi: float) -> "IntervalUnion":
        """Intersection with the window [lo, hi], as a new union on the same edge."""
        parts = [(max(a, lo), min(b, hi)) for a, b in self.intervals
                 if min(b, hi) > max(a, lo)]
        return IntervalUnion(parts, length=self.length)

    def measure_in(self, lo: float, hi: float) -> float:
        return sum(min(b, hi) - max(a, lo) for a, b in self.intervals
                   if min(b, hi) > max(a, lo))

    def prefix_measures(self, points: np.ndarray) -> np.ndarray:
        """|self ∩ [0, t]| for each t in points, vectorised."""
        pts = np.asarray(points, dtype=float)
        if not self.intervals:
            return np.zeros_like(pts)
        a = np.array([iv[0] for iv in self.intervals])
        b = np.array([iv[1] for iv in self.intervals])
        clip = np.clip(pts[:, None], a[None, :], b[None, :]) - a[None, :]
        return clip.sum(axis=1)

    def gaps(self) -> tuple[float, list[float], float]:
        """(left endpoint gap, interior gaps, right endpoint gap) on [0, length]."""
        if not self.intervals:
            return self.length, [], self.length
        left = self.intervals[0][0]
        right = self.length - self.intervals[-1][1]
        interior = [self.intervals[i + 1][0] - self.intervals[i][1]
                    for i in range(len(self.intervals) - 1)]
        return left, [g for g in interior if g > 0.0], right

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        events = sorted(list(self.intervals) + list(other.intervals))
        merged: list[list[float]] = []
        for a, b in events:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return IntervalUnion(merged, length=max(self.length, other.length))

    def shifted(self, dx: float, length: float) -> "IntervalUnion":
        return IntervalUnion([(a + dx, b + dx) for a, b in self.intervals], length=length)

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in self.intervals]


def whole_edge(length: float) -> IntervalUnion:
    return IntervalUnion([(0.0, length)], length=length)


# ---------------------------------------------------------------------------
# exact quadrature kernel


def _exp_poly_base(freqs: np.ndarray, d: float, qmax: int) -> np.ndarray:
    """I[i, q] = ∫_{-d}^{d} y**q exp(1j*freqs[i]*y) dy for q = 0..qmax.

    Two branches: the antiderivative form away from w*d = 0 and a rapidly
    converging parity series near it, which avoids the 1/w**(q+1)
    cancellation blow-up of the closed form.
    """
    n = freqs.size
    out = np.zeros((n, qmax + 1), dtype=complex)
    s = freqs * d
    small = np.abs(s) <= _SERIES_SWITCH

    big = ~small
    if big.any():
        w = freqs[big]
        iw = 1j * w
        epd = np.exp(iw * d)
        emd = np.exp(-iw * d)
        for q in range(qmax + 1):
            acc_p = np.zeros(w.size, dtype=complex)
            acc_m = np.zeros(w.size, dtype=complex)
            for j in range(q + 1):
                coef = (-1.0) ** j * math.perm(q, j)
                ipow = iw ** (j + 1)
                acc_p += coef * d ** (q - j) / ipow
                acc_m += coef * (-d) ** (q - j) / ipow
            out[big, q] = epd * acc_p - emd * acc_m

    if small.any():
        w = freqs[small]
        iw2d2 = (1j * w) ** 2 * d * d
        for q in range(qmax + 1):
            n0 = q % 2  # only n with n + q even contribute
            term = (2.0 * (1j * w) ** n0 * d ** (n0 + q + 1)
                    / (math.factorial(n0) * (n0 + q + 1)))
            acc = term.copy()
            nn = n0
            for _ in range(40):
                term = term * iw2d2 * (nn + q + 1) / ((nn + 1) * (nn + 2) * (nn + q + 3))
                acc += term
                nn += 2
                if np.max(np.abs(term)) <= 1e-18 * max(np.max(np.abs(acc)), 1e-300):
                    break
            out[small, q] = acc
    return out


def integrate_powexp(powers: np.ndarray, freqs: np.ndarray, a: float, b: float) -> np.ndarray:
    """∫_a^b x**p exp(1j*w*x) dx, elementwise over the vectors p, w."""
    powers = np.asarray(powers, dtype=int)
    freqs = np.asarray(freqs, dtype=float)
    if b <= a:
        return np.zeros(powers.size, dtype=complex)
    m = 0.5 * (a + b)
    d = 0.5 * (b - a)
    qmax = int(powers.max(initial=0))
    base = _exp_poly_base(freqs, d, qmax)
    res = np.zeros(powers.size, dtype=complex)
    for q in range(qmax + 1):
        mask = powers >= q
        if not mask.any():
            continue
        p = powers[mask]
        res[mask] += _BINOM[p, q] * m ** (p - q) * base[mask, q]
    return np.exp(1j * freqs * m) * res


# ---------------------------------------------------------------------------
# graph functions


class GraphFunction:
    """Edgewise poly-trig function; edges absent from the map are zero."""

    __slots__ = ("graph", "terms")

    def __init__(self, graph, terms_by_edge: Mapping[str, Iterable[PolyTrigTerm]]):
        self.graph = graph
        terms: dict[str, tuple[PolyTrigTerm, ...]] = {}
        lengths = graph.edge_lengths
        for eid, ts in terms_by_edge.items():
            if eid not in lengths:
                raise ValueError(f"unknown edge {eid!r}")
            canon = canonical_terms(ts)
            if canon:
                terms[eid] = canon
        self.terms = terms

    @classmethod
    def zero(cls, graph) -> "GraphFunction":
        return cls(graph, {})

    def is_zero(self) -> bool:
        return not self.terms

    def edge_terms(self, eid: str) -> tuple[PolyTrigTerm, ...]:
        return self.terms.get(eid, ())

    def evaluate(self, eid: str, x: float) -> complex:
        val = 0j
        for c, p, w in self.terms.get(eid, ()):
            val += c * x ** p * cmath.exp(1j * w * x)
        return val

    def derivative(self, order: int = 1) -> "GraphFunction":
        return differentiate(self, order)

    def __add__(self, other: "GraphFunction") -> "GraphFunction":
        if other.graph is not self.graph:
            raise ValueError("functions live on different graphs")
        merged: dict[str, list[PolyTrigTerm]] = {e: list(ts) for e, ts in self.terms.items()}
        for e, ts in other.terms.items():
            merged.setdefault(e, []).extend(ts)
        return GraphFunction(self.graph, merged)

    def __mul__(self, scalar: complex) -> "GraphFunction":
        z = complex(scalar)
        return GraphFunction(self.graph, {
            e: [PolyTrigTerm(c * z, p, w) for c, p, w in ts]
            for e, ts in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other: "GraphFunction") -> "GraphFunction":
        return self + (other * (-1.0))

    def to_json(self) -> dict:
        return {"edges": {
            e: [{"re": t.coeff.real, "im": t.coeff.imag, "power": t.power, "freq": t.freq}
                for t in ts]
            for e, ts in sorted(self.terms.items())}}

    @classmethod
    def from_json(cls, graph, data: Mapping) -> "GraphFunction":
        return cls(graph, {
            e: [PolyTrigTerm(complex(t["re"], t.get("im", 0.0)), int(t["power"]), float(t["freq"]))
                for t in ts]
            for e, ts in data["edges"].items()})


def differentiate(f: GraphFunction, order: int = 1) -> GraphFunction:
    """Exact termwise derivative of the given order (order 0 is the identity)."""
    if order < 0:
        raise ValueError("derivative order must be >= 0")
    terms = {e: list(ts) for e, ts in f.terms.items()}
    for _ in range(order):
        nxt: dict[str, list[PolyTrigTerm]] = {}
        for e, ts in terms.items():
            acc: list[PolyTrigTerm] = []
            for c, p, w in ts:
                if p > 0:
                    acc.append(PolyTrigTerm(c * p, p - 1, w))
                if w != 0.0:
                    acc.append(PolyTrigTerm(c * 1j * w, p, w))
            if acc:
                nxt[e] = acc
        terms = nxt
    return GraphFunction(f.graph, terms)


def _coerce_region(f: GraphFunction, region) -> dict[str, IntervalUnion] | None:
    if region is None:
        return None
    out: dict[str, IntervalUnion] = {}
    lengths = f.graph.edge_lengths
    for eid, iv in dict(region).items():
        if eid not in lengths:
            raise ValueError(f"region references unknown edge {eid!r}")
        ell = lengths[eid]
        if not math.isfinite(ell):
            raise ValueError("quadrature region on an infinite edge")
        if not isinstance(iv, IntervalUnion):
            iv = IntervalUnion(iv, length=ell)
        elif iv.intervals and iv.intervals[-1][1] > ell * (1 + 1e-12):
            raise ValueError(f"region outside [0, {ell}] on edge {eid!r}")
        out[eid] = iv
    return out


def _edge_pair_arrays(tf, tg):
    c1 = np.array([t.coeff for t in tf], dtype=complex)
    p1 = np.array([t.power for t in tf], dtype=int)
    w1 = np.array([t.freq for t in tf], dtype=float)
    c2 = np.array([t.coeff for t in tg], dtype=complex)
    p2 = np.array([t.power for t in tg], dtype=int)
    w2 = np.array([t.freq for t in tg], dtype=float)
    C = np.multiply.outer(c1, np.conj(c2)).ravel()
    P = np.add.outer(p1, p2).ravel()
    W = np.subtract.outer(w1, w2).ravel()
    return C, P, W


def _inner_product_gross(f: GraphFunction, g: GraphFunction, region) -> tuple[complex, float]:
    if f.graph is not g.graph:
        raise ValueError("functions live on different graphs")
    reg = _coerce_region(f, region)
    lengths = f.graph.edge_lengths
    total = 0j
    gross = 0.0
    for eid, tf in f.terms.items():
        tg = g.terms.get(eid)
        if not tg:
            continue
        if reg is None:
            ell = lengths[eid]
            if not math.isfinite(ell):
                raise ValueError("whole-graph quadrature on a non-compact graph")
            windows = ((0.0, ell),)
        else:
            iv = reg.get(eid)
            if iv is None:
                continue
            windows = iv.intervals
        C, P, W = _edge_pair_arrays(tf, tg)
        for a, b in windows:
            vals = integrate_powexp(P, W, a, b)
            total += (C * vals).sum()
            gross += float(np.abs(C * vals).sum())
    return complex(total), gross


def inner_product(f: GraphFunction, g: GraphFunction, region=None) -> complex:
    """L2 inner product <f, g> = ∫ f conj(g), over the whole graph or a
    per-edge region given as a mapping edge id -> IntervalUnion."""
    val, _ = _inner_product_gross(f, g, region)
    return val


def norm_sq(f: GraphFunction, region=None) -> float:
    """Squared L2 norm over the region; asserts the imaginary residue is noise."""
    val, gross = _inner_product_gross(f, f, region)
    re, im = val.real, val.imag
    if abs(im) > 1e-10 * max(re, 0.0) + 1e-12 * gross + 1e-300:
        raise AssertionError(f"norm_sq lost hermiticity: {val!r}")
    return max(re, 0.0)


def sup_on_disk_neighborhood(terms: Iterable[PolyTrigTerm], ell: float,
                             radius_factor: float, samples: int = 4096) -> float:
    """Certified upper bound on sup |F(z)| over (0, ell) + D_{radius_factor*ell}.

    F is entire, so the sup is attained on the stadium boundary; we sample it
    and pad with a global Lipschitz bound, hence the result is always >= the
    true supremum (possibly loose, never low).
    """
    terms = canonical_terms(terms)
    if not terms:
        return 0.0
    R = radius_factor * ell
    if R <= 0.0:
        raise ValueError("radius factor must be positive")
    # boundary: bottom & top sides plus two half circles
    per = 2.0 * ell + 2.0 * math.pi * R
    n_side = max(8, int(samples * ell / per))
    n_cap = max(8, (samples - 2 * n_side) // 2)
    xs = np.linspace(0.0, ell, n_side)
    phi_l = np.linspace(0.5 * math.pi, 1.5 * math.pi, n_cap)
    phi_r = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_cap)
    zs = np.concatenate([
        xs - 1j * R, xs + 1j * R,
        R * np.exp(1j * phi_l),
        ell + R * np.exp(1j * phi_r),
    ])
    vals = np.zeros(zs.size, dtype=complex)
    for c, p, w in terms:
        vals += c * zs ** p * np.exp(1j * w * zs)
    peak = float(np.abs(vals).max())
    # Lipschitz padding: |F'| <= sum |c| (p r^(p-1) + |w| r^p) e^{|w| R} on the hull
    r_max = math.hypot(ell + R, R)
    lip = 0.0
    for c, p, w in terms:
        grow = math.exp(abs(w) * R)
        lip += abs(c) * (p * r_max ** max(p - 1, 0) + abs(w) * r_max ** p) * grow
    spacing = max(ell / max(n_side - 1, 1), math.pi * R / max(n_cap - 1, 1))
    return peak + 0.5 * lip * spacing


def cosine_power_terms(alpha: int, freq: float) -> tuple[PolyTrigTerm, ...]:
    """cos(freq*x)**alpha expanded into complex exponentials with exact
    integer binomial coefficients (alpha <= 30)."""
    if not 0 <= alpha <= 30:
        raise ValueError("alpha outside 0..30")
    scale = 2.0 ** (-alpha)
    return canonical_terms(
        PolyTrigTerm(math.comb(alpha, j) * scale, 0, (alpha - 2 * j) * freq)
        for j in range(alpha + 1))
