"""Eigenpairs of free and magnetic Laplacians on compact graphs, plus the
torsion-function solve.

The solver works with the wavenumber k (energy k^2).  On each edge the
eigenfunction ansatz is a*cos(kx) + b*sin(kx) (affine a + b*x at k = 0); the
secular matrix collects the boundary conditions "plus-trace in Y" and
"minus-trace of i*f' in the complement of Y" as linear constraints on the
2|E| coefficients.  Wavenumbers where the row-normalised matrix loses rank
are eigenvalues; the rank defect is the multiplicity.  Magnetic fluxes are
absorbed into the boundary subspace by the gauge rotation, so the solver
itself only ever sees a free Laplacian; the returned eigenfunctions are the
gauge-reduced representatives (same pointwise modulus as the magnetic ones).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import BoundarySubspace, MetricGraph, gauge_transform
from .polytrig import GraphFunction, PolyTrigTerm, inner_product, norm_sq

TOL_ACCEPT = 1e-8        # sigma_min acceptance threshold (rows scaled to O(1))
TOL_NULL = 1e-6          # singular-value threshold for multiplicity counting
REFINE_TOL = 1e-11       # golden-section window size on k
CLUSTER_GAP = 1e-7       # wavenumber gap below which roots are merged
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class EigenPair:
    k: float
    lam: float
    function: GraphFunction
    residual: float

    def to_json(self) -> dict:
        return {"k": self.k, "lambda": self.lam, "residual": self.residual,
                **self.function.to_json()}


@dataclass
class TorsionSolution:
    function: GraphFunction
    rigidity: float
    dirichlet: tuple[str, ...]


def secular_matrix(g: MetricGraph, y: BoundarySubspace, k: float) -> np.ndarray:
    """Square 2|E| matrix on the edgewise (cos, sin) coefficients whose rank
    defect at wavenumber k marks the eigenvalue k^2; k = 0 uses the affine
    ansatz a + b*x."""
    if not g.is_compact:
        raise ValueError("secular matrix requires a compact graph")
    if k < 0.0:
        raise ValueError("wavenumber must be nonnegative")
    ne = len(g.edges)
    nb = g.n_boundary
    b_plus = np.zeros((nb, 2 * ne), dtype=complex)
    b_minus = np.zeros((nb, 2 * ne), dtype=complex)
    col_a = {e.id: i for i, e in enumerate(g.edges)}
    for row, (eid, end) in enumerate(g.boundary_coords):
        ia = col_a[eid]
        ib = ia + ne
        ell = g.edge_lengths[eid]
        if k == 0.0:
            # f = a + b x, i f' = i b
            if end == 0:
                b_plus[row, ia] = 1.0
                b_minus[row, ib] = -1.0j
            else:
                b_plus[row, ia] = 1.0
                b_plus[row, ib] = ell
                b_minus[row, ib] = 1.0j
        else:
            c, s = math.cos(k * ell), math.sin(k * ell)
            if end == 0:
                b_plus[row, ia] = 1.0
                b_minus[row, ib] = -1.0j * k
            else:
                b_plus[row, ia] = c
                b_plus[row, ib] = s
                b_minus[row, ia] = -1.0j * k * s
                b_minus[row, ib] = 1.0j * k * c
    perp = y.perp()
    rows = []
    if perp.dim:
        rows.append(perp.basis.conj() @ b_plus)
    if y.dim:
        rows.append(y.basis.conj() @ b_minus)
    if not rows:
        return np.zeros((0, 2 * ne), dtype=complex)
    return np.vstack(rows)


def _conditioned(g, y, k) -> tuple[np.ndarray, float]:
    """Secular matrix with the sin-coefficient columns rescaled by 1/k below
    k = 1.  Those columns vanish like k as k -> 0 (the cos/sin ansatz
    degenerates toward the affine one), which would drive sigma_min to zero
    near k = 0 whether or not an eigenvalue sits there; the rescaled matrix
    instead converges to the k = 0 affine matrix.  Returns the matrix and the
    factor that maps conditioned sin-coefficients back to plain ones."""
    m = secular_matrix(g, y, k)
    if 0.0 < k < 1.0:
        m = m.copy()
        m[:, len(g.edges):] /= k
        return m, 1.0 / k
    return m, 1.0


def _normalized_svd(m: np.ndarray):
    # scale rows down to O(1) but never up: amplifying a vanishing row would
    # erase the rank-defect dip at exactly degenerate roots
    norms = np.linalg.norm(m, axis=1)
    scale = np.maximum(norms, 1.0)
    return np.linalg.svd(m / scale[:, None])


def _sigma_min(g, y, k) -> float:
    m, _ = _conditioned(g, y, k)
    _, s, _ = _normalized_svd(m)
    return float(s[-1])


def _null_vectors(g, y, k, tol_null) -> tuple[float, np.ndarray]:
    m, back = _conditioned(g, y, k)
    _, s, vh = _normalized_svd(m)
    nullity = max(int(np.sum(s < tol_null)), 1)
    vecs = np.conj(vh[-nullity:]).copy()
    vecs[:, len(g.edges):] *= back
    return float(s[-1]), vecs


def _coeffs_to_function(g: MetricGraph, k: float, coeffs: np.ndarray) -> GraphFunction:
    ne = len(g.edges)
    terms: dict[str, list[PolyTrigTerm]] = {}
    for i, e in enumerate(g.edges):
        a, b = coeffs[i], coeffs[i + ne]
        if k == 0.0:
            ts = [PolyTrigTerm(a, 0, 0.0), PolyTrigTerm(b, 1, 0.0)]
        else:
            # a cos(kx) + b sin(kx) in complex exponentials
            ts = [PolyTrigTerm(0.5 * (a - 1j * b), 0, k),
                  PolyTrigTerm(0.5 * (a + 1j * b), 0, -k)]
        terms[e.id] = ts
    return GraphFunction(g, terms)


def _golden_minimize(fun, lo, hi, tol):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
    return 0.5 * (a + b)


def _phase_fix(vec: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(vec)))
    piv = vec[i]
    if abs(piv) == 0.0:
        return vec
    return vec * (abs(piv) / piv)


def _weyl_floor(g: MetricGraph, lam_max: float) -> int:
    """Guaranteed eigenvalue count below lam_max for standard conditions on a
    connected compact graph that is not a single cycle, from the two-sided
    eigenvalue bracketing."""
    from .graphs import metrics as graph_metrics

    m = graph_metrics(g)
    total = m.total_length
    count = 1  # lambda_1 = 0
    k = 2
    while ((k - 1 + 1.5 * m.betti + 0.5 * m.degree1_count) * math.pi / total) ** 2 <= lam_max:
        count += 1
        k += 1
    return count


def _is_single_cycle(g: MetricGraph) -> bool:
    return all(g.degree(v) == 2 for v in g.vertices) and g.is_connected


def eigenvalues_up_to(g: MetricGraph, y: BoundarySubspace, lam_max: float, *,
                      grid_step: float | None = None,
                      tol_accept: float = TOL_ACCEPT,
                      tol_null: float = TOL_NULL,
                      refine_tol: float = REFINE_TOL,
                      cluster_gap: float = CLUSTER_GAP,
                      count_check: bool = True) -> list[EigenPair]:
    """All eigenpairs with eigenvalue in [0, lam_max], multiplicities included.

    Scans the smallest singular value of the secular matrix over a wavenumber
    grid (default step pi / (8 |G|)), refines each local minimum by golden
    section and accepts it below tol_accept.  Fluxes on the graph are folded
    into the subspace first.  For pure standard conditions the result is
    cross-checked against the eigenvalue-count floor implied by the two-sided
    spectral estimate; a shortfall raises (grid too coarse).
    """
    if not g.is_compact:
        raise ValueError("eigenvalue solve requires a compact graph")
    if lam_max <= 0.0:
        raise ValueError("lam_max must be positive")
    y_eff = gauge_transform(y, g) if any(e.flux != 0.0 for e in g.edges) else y
    total = sum(g.edge_lengths.values())
    base_step = grid_step if grid_step is not None else math.pi / (8.0 * total)
    k_max = math.sqrt(lam_max)

    def scan(step: float) -> list[EigenPair]:
        pairs: list[EigenPair] = []

        def harvest(k_root: float):
            sig, vecs = _null_vectors(g, y_eff, k_root, tol_null)
            if sig >= tol_accept:
                return
            lam = k_root * k_root
            if lam > lam_max * (1.0 + 1e-12):
                return
            fns = [_coeffs_to_function(g, k_root, _phase_fix(v)) for v in vecs]
            # L2-orthonormalise within the multiplicity cluster
            kept: list[GraphFunction] = []
            for f in fns:
                for u in kept:
                    f = f - inner_product(f, u) * u
                nrm2 = norm_sq(f)
                if nrm2 > 1e-12:
                    kept.append(f * (1.0 / math.sqrt(nrm2)))
            for f in kept:
                pairs.append(EigenPair(k=k_root, lam=lam, function=f, residual=sig))

        # k = 0: dedicated affine ansatz
        if _sigma_min(g, y_eff, 0.0) < tol_accept:
            harvest(0.0)

        ks = np.arange(step, k_max + step, step)
        ks = ks[ks <= k_max + 1e-12]
        n = len(ks)
        sig = np.array([_sigma_min(g, y_eff, float(k)) for k in ks])
        # suspicion flags: every strict local minimum, plus every sample low
        # enough that a root (or a close pair of roots) could hide nearby
        flagged = np.zeros(n, dtype=bool)
        for i in range(n):
            left = sig[i - 1] if i > 0 else math.inf
            right = sig[i + 1] if i + 1 < n else math.inf
            flagged[i] = sig[i] <= left and sig[i] <= right
        flagged |= sig < max(100.0 * tol_accept, 0.3 * float(np.median(sig)))

        roots: list[float] = []

        def refine_window(lo: float, hi: float, guard_zero: bool):
            # resample 16x finer, then golden-refine every dip: two distinct
            # roots inside one coarse cell get separate fine cells
            m = max(int(math.ceil((hi - lo) / step * 16.0)), 4)
            sub = np.linspace(lo, hi, m + 1)
            vals = np.array([_sigma_min(g, y_eff, float(k)) for k in sub])
            for j in range(m + 1):
                left = vals[j - 1] if j > 0 else math.inf
                right = vals[j + 1] if j + 1 <= m else math.inf
                if not (vals[j] <= left and vals[j] <= right):
                    continue
                a = sub[j - 1] if j > 0 else lo
                b = sub[j + 1] if j + 1 <= m else hi
                k_root = _golden_minimize(lambda k: _sigma_min(g, y_eff, k),
                                          a, b, refine_tol)
                if guard_zero and k_root < 1e-3 * step:
                    continue  # shoulder of the k = 0 root, already harvested
                if _sigma_min(g, y_eff, k_root) >= tol_accept:
                    continue
                if any(abs(k_root - r) < 2e-6 for r in roots):
                    continue
                roots.append(k_root)

        i = 0
        while i < n:
            if not flagged[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and flagged[j + 1]:
                j += 1
            lo = ks[i - 1] if i > 0 else step * 1e-6
            hi = ks[j + 1] if j + 1 < n else min(ks[j] + step, k_max)
            refine_window(float(lo), float(hi), guard_zero=(i == 0))
            i = j + 1

        roots.sort()
        merged: list[float] = []
        for r in roots:
            if merged and r - merged[-1] < cluster_gap:
                continue
            merged.append(r)
        for r in merged:
            if cluster_gap < r and r * r <= lam_max * (1.0 + 1e-12):
                harvest(r)
        pairs.sort(key=lambda p: p.k)
        return pairs

    check = (count_check and y_eff.kind == "standard" and g.is_connected
             and not _is_single_cycle(g))
    floor = _weyl_floor(g, lam_max) if check else 0
    step = base_step
    for attempt in range(4):
        pairs = scan(step)
        if not check or len(pairs) >= floor:
            return pairs
        step /= 4.0  # near-degenerate pair hiding inside one grid cell
    raise RuntimeError(
        f"scan grid too coarse: found {len(pairs)} eigenvalues but the "
        f"spectral estimate guarantees at least {floor} below {lam_max}")


def boundary_residual(g: MetricGraph, y: BoundarySubspace, f: GraphFunction) -> float:
    """Distance of (plus-trace, minus-trace of i f') from (Y, Y-perp)."""
    fp = f.derivative()
    plus = g.trace_plus(f)
    minus = 1.0j * g.trace_minus(fp)
    return y.residual(plus) + y.perp().residual(minus)


def spectral_sample(pairs: list[EigenPair], coeffs) -> GraphFunction:
    """Linear combination sum_j c_j phi_j of computed eigenfunctions."""
    coeffs = list(coeffs)
    if len(coeffs) != len(pairs):
        raise ValueError("one coefficient per eigenpair required")
    if not pairs:
        raise ValueError("empty eigenpair list")
    out = GraphFunction.zero(pairs[0].function.graph)
    for c, p in zip(coeffs, pairs):
        out = out + complex(c) * p.function
    return out


def solve_torsion(g: MetricGraph, dirichlet) -> TorsionSolution:
    """Edgewise quadratic solution of -u'' = 1 with u = 0 on the Dirichlet
    vertex set and continuity + flux balance (standard) elsewhere; also
    returns the total integral of u (the torsional rigidity)."""
    dirichlet = tuple(dict.fromkeys(str(v) for v in dirichlet))
    if not dirichlet:
        raise ValueError("Dirichlet vertex set must be nonempty")
    for v in dirichlet:
        if v not in g.vertices:
            raise ValueError(f"unknown vertex {v!r}")
    if not g.is_compact:
        raise ValueError("torsion solve requires a compact graph")
    ne = len(g.edges)
    # unknowns: (alpha_e, beta_e) with u_e = -x^2/2 + alpha x + beta
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    col_a = {e.id: i for i, e in enumerate(g.edges)}

    def value_row(eid: str, at_end: int) -> tuple[np.ndarray, float]:
        """(coefficient row, constant) with u(endpoint) = row @ x + constant."""
        r = np.zeros(2 * ne)
        ell = g.edge_lengths[eid]
        if at_end == 0:
            r[col_a[eid] + ne] = 1.0
            return r, 0.0
        r[col_a[eid]] = ell
        r[col_a[eid] + ne] = 1.0
        return r, -0.5 * ell * ell

    for v in g.vertices:
        incid = [(e.id, end) for e in g.edges
                 for end in ((0,) if e.source == v and e.target != v else ())
                 + ((0, 1) if e.source == v and e.target == v else ())
                 + ((1,) if e.target == v and e.source != v else ())]
        if not incid:
            continue
        if v in dirichlet:
            for eid, end in incid:
                r, c = value_row(eid, end)
                rows.append(r)
                rhs.append(-c)
        else:
            ref = value_row(*incid[0])
            for eid, end in incid[1:]:
                r, c = value_row(eid, end)
                rows.append(r - ref[0])
                rhs.append(ref[1] - c)
            # flux balance: sum over incoming u'(ell) minus outgoing u'(0) = 0,
            # with u'(x) = -x + alpha
            r = np.zeros(2 * ne)
            const = 0.0
            for eid, end in incid:
                if end == 1:
                    r[col_a[eid]] += 1.0
                    const += -g.edge_lengths[eid]
                else:
                    r[col_a[eid]] -= 1.0
            rows.append(r)
            rhs.append(-const)
    mat = np.array(rows)
    vec = np.array(rhs)
    if mat.shape[0] != 2 * ne:
        raise ValueError("vertex incidences do not close the torsion system")
    try:
        sol = np.linalg.solve(mat, vec)
    except np.linalg.LinAlgError as exc:
        raise ValueError("torsion system singular: some part of the graph is "
                         "not connected to the Dirichlet set") from exc
    terms = {}
    rigidity = 0.0
    for e in g.edges:
        alpha, beta = sol[col_a[e.id]], sol[col_a[e.id] + ne]
        terms[e.id] = [PolyTrigTerm(-0.5, 2, 0.0), PolyTrigTerm(alpha, 1, 0.0),
                       PolyTrigTerm(beta, 0, 0.0)]
        ell = e.length
        rigidity += -ell ** 3 / 6.0 + 0.5 * alpha * ell * ell + beta * ell
    return TorsionSolution(function=GraphFunction(g, terms), rigidity=rigidity,
                           dirichlet=dirichlet)
