"""Discrete viscosity certification of -Lam_lo <= F(D^2 u) <= Lam_hi.

Two schemes are exposed.  ``check_pointwise`` evaluates the discrete operator
on u directly — the right tool for solver output, meaningless for kinked
data.  ``check_touching`` never differentiates u: it tries a dictionary of
quadratic test functions phi(x) = u(x0) + p.(x-x0) + (1/2)(x-x0)' M (x-x0)
and, whenever phi - u attains its maximum over the rho-neighborhood at x0
(within slack h^2, since discrete maxima are resolution-limited), requires
F(M) <= Lam_hi; minima symmetrically require F(M) >= Lam_lo.  That is the
comparison-with-smooth-functions definition made finite.

The neighborhood radius rho should stay O(1) as the grid refines: with the
h^2 trigger slack, a radius of a few h lets parabolas with O(1) opening slip
through the slack and produce false failures.  The dictionary builder
defaults to ~1/8 of the domain extent, floored at 4h.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .fileio import write_csv
from .grids import Ball, GridFunction, SymMatrix, ball_node_mask
from .operators import EllipticOperator, op_eval, op_eval_comps2
from .stencils import StencilConfig, discrete_hessian, eval_discrete, operator_margin

__all__ = [
    "Bounds",
    "TouchingTest",
    "ViscosityReport",
    "default_tolerance",
    "check_pointwise",
    "check_touching",
    "make_touching_dictionary",
    "write_viscosity_report",
    "quartic_perturb",
    "holder_seminorm",
    "LimitStabilityReport",
    "limit_stability_experiment",
]

TRIGGER_SLACK = 1.0  # multiplies h^2 when deciding "attains its maximum"


@dataclass(frozen=True)
class Bounds:
    lam_lo: float
    lam_hi: float

    def __post_init__(self):
        if not (self.lam_lo <= self.lam_hi):
            raise ValueError("lam_lo must not exceed lam_hi")

    @classmethod
    def symmetric(cls, lam: float) -> "Bounds":
        return cls(-abs(lam), abs(lam))


@dataclass(frozen=True, eq=False)
class TouchingTest:
    """One candidate quadratic: gradient p, Hessian m, tried at node x0."""

    node: tuple  # multi-index
    p: tuple
    m: SymMatrix
    rho: float  # neighborhood radius (physical units)
    side: str  # "below": phi - u max at x0; "above": min at x0

    def __post_init__(self):
        if self.side not in ("below", "above"):
            raise ValueError("side must be 'below' or 'above'")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True, eq=False)
class ViscosityReport:
    scheme: str  # "pointwise" | "touching"
    passed: bool
    worst_upper: float  # max of F - lam_hi over checked entities
    worst_lower: float  # max of lam_lo - F
    tolerance: float
    grid: object
    node_indices: np.ndarray  # flat indices of nodes with a verdict
    node_upper: np.ndarray  # per-node worst upper margin (-inf if untested)
    node_lower: np.ndarray
    verdicts: np.ndarray  # per-node bool
    triggered: int = 0  # touching only: how many candidates fired


def default_tolerance(op: EllipticOperator, u: GridFunction) -> float:
    """c0 * h with c0 = 10 lam2 (1 + sup|u|)."""
    return 10.0 * op.params.lam2 * (1.0 + u.sup_norm()) * u.grid.h


def _finish(scheme, grid, tol, idx, upper, lower, triggered=0):
    verdicts = (upper <= tol) & (lower <= tol)
    w_up = float(np.max(upper)) if idx.size else float("-inf")
    w_lo = float(np.max(lower)) if idx.size else float("-inf")
    passed = bool(w_up <= tol and w_lo <= tol)
    return ViscosityReport(scheme, passed, w_up, w_lo, tol, grid,
                           idx, upper, lower, verdicts, triggered)


def check_pointwise(u: GridFunction, op: EllipticOperator, bounds: Bounds,
                    stencil: StencilConfig | None = None,
                    tol: float | None = None) -> ViscosityReport:
    """Evaluate F_h(u) on interior nodes and check membership in
    [lam_lo - tol, lam_hi + tol]; tol defaults to c0 h."""
    grid = u.grid
    if tol is None:
        tol = default_tolerance(op, u)
    fh = eval_discrete(op, u, stencil).values
    mask = grid.interior_mask(operator_margin(op, stencil, grid.ndim))
    idx = np.flatnonzero(mask)
    vals = fh[idx]
    upper = vals - bounds.lam_hi
    lower = bounds.lam_lo - vals
    return _finish("pointwise", grid, tol, idx, upper, lower)


def _shift_ladder(h: float) -> list:
    """Geometric Hessian shifts {h, 2h, 4h, ...} up through the first >= 1."""
    out = [0.0]
    s = h
    while True:
        out.append(s)
        if s >= 1.0:
            break
        s *= 2.0
    return out


def _ball_offsets(grid, rho: float) -> np.ndarray:
    """Integer lattice offsets (excluding 0) with |d| h <= rho."""
    m = int(math.floor(rho / grid.h + 1e-9))
    axes = [np.arange(-m, m + 1)] * grid.ndim
    pts = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")[::-1]], axis=-1)
    d2 = np.einsum("ij,ij->i", pts, pts)
    keep = (d2 > 0) & (d2 <= (rho / grid.h) ** 2 * (1 + 1e-12))
    return pts[keep]


def make_touching_dictionary(u: GridFunction, rho: float | None = None,
                             node_budget: int = 1500,
                             nodes=None) -> list:
    """Deterministic test dictionary: at each selected node, gradients from
    the central difference +/- h e_i and Hessians from discrete_hessian
    shifted by +/- s I over a geometric ladder of s.

    Nodes come either from ``nodes`` (multi-indices) or a deterministic
    stride over all nodes whose rho-ball stays inside the domain.
    """
    grid = u.grid
    h = grid.h
    n = grid.ndim
    if rho is None:
        extent = min(grid.domain.extent(a) for a in range(n))
        rho = max(0.125 * extent, 4.0 * h)
    if rho < 2.0 * h:
        raise ValueError("touching radius under-resolved: need rho >= 2h")
    reach = int(math.ceil(rho / h - 1e-9))
    margin = max(reach, 1)

    lat = u.lattice()
    hess = discrete_hessian(u)

    if nodes is None:
        eligible = np.flatnonzero(grid.interior_mask(margin))
        if eligible.size == 0:
            raise ValueError("no node has its touching ball inside the domain")
        step = max(1, eligible.size // node_budget)
        chosen = eligible[::step]
        nodes = [grid.multi_index(int(i)) for i in chosen]

    ladder = _shift_ladder(h)
    tests = []
    for multi in nodes:
        multi = tuple(int(i) for i in multi)
        if min(min(multi), min(grid.shape[a] - 1 - multi[a] for a in range(n))) < margin:
            raise ValueError("touching ball exits domain at node %r" % (multi,))
        lat_idx = tuple(multi[n - 1 - a] for a in range(n))
        grad = np.empty(n)
        for a in range(n):
            up = list(lat_idx)
            dn = list(lat_idx)
            up[n - 1 - a] += 1
            dn[n - 1 - a] -= 1
            grad[a] = (lat[tuple(up)] - lat[tuple(dn)]) / (2.0 * h)
        m0 = hess.matrix_at(multi)
        p_list = [tuple(grad)]
        for a in range(n):
            for sgn in (+1.0, -1.0):
                q = grad.copy()
                q[a] += sgn * h
                p_list.append(tuple(q))
        for p in p_list:
            for s in ladder:
                tests.append(TouchingTest(multi, p, m0.shifted(-s), rho, "below"))
                tests.append(TouchingTest(multi, p, m0.shifted(+s), rho, "above"))
    return tests


def _eval_candidates(op, mats) -> np.ndarray:
    """F(M) for a list of SymMatrix, vectorized where it pays off."""
    if not mats:
        return np.empty(0)
    n = mats[0].n
    if n == 2:
        m11 = np.array([m.mat[0, 0] for m in mats])
        m12 = np.array([m.mat[0, 1] for m in mats])
        m22 = np.array([m.mat[1, 1] for m in mats])
        return op_eval_comps2(op, m11, m12, m22)
    return np.array([op_eval(op, m) for m in mats])


def check_touching(u: GridFunction, op: EllipticOperator, bounds: Bounds,
                   dictionary, tol: float | None = None,
                   chunk: int = 4096) -> ViscosityReport:
    """Run every touching candidate; triggered maxima must respect lam_hi,
    triggered minima lam_lo.  Verdict tolerance defaults to c0 h."""
    tests = list(dictionary)
    if not tests:
        raise ValueError("touching dictionary is empty")
    grid = u.grid
    h = grid.h
    n = grid.ndim
    if tol is None:
        tol = default_tolerance(op, u)
    slack = TRIGGER_SLACK * h * h

    fvals = _eval_candidates(op, [t.m for t in tests])

    # group tests sharing a neighborhood radius so offsets are built once
    order = sorted(range(len(tests)), key=lambda i: (tests[i].rho, tests[i].side))
    node_upper: dict = {}
    node_lower: dict = {}
    triggered_count = 0

    for rho, grp_iter in itertools.groupby(order, key=lambda i: tests[i].rho):
        grp = list(grp_iter)
        if rho < 2.0 * h * (1 - 1e-12):
            raise ValueError("touching radius under-resolved: need rho >= 2h")
        offs = _ball_offsets(grid, rho)
        delta = offs * h  # physical offsets, (B, n)
        flat_off = offs[:, 0].copy()
        stride = 1
        for a in range(1, n):
            stride *= grid.shape[a - 1]
            flat_off += offs[:, a] * stride
        reach = int(np.max(np.abs(offs)))
        for t in grp:
            multi = tests[t].node
            if min(min(multi), min(grid.shape[a] - 1 - multi[a] for a in range(n))) < reach:
                raise ValueError("touching ball exits domain at node %r" % (multi,))

        quad = 0.5 * np.einsum("bi,bj->bij", delta, delta).reshape(len(offs), -1)
        for start in range(0, len(grp), chunk):
            part = grp[start:start + chunk]
            idx = np.array([grid.flat_index(tests[t].node) for t in part])
            pmat = np.array([tests[t].p for t in part])  # (T, n)
            mflat = np.array([tests[t].m.mat.reshape(-1) for t in part])
            below = np.array([tests[t].side == "below" for t in part])

            du = u.values[idx[:, None] + flat_off[None, :]] - u.values[idx][:, None]
            phi = pmat @ delta.T + mflat @ quad.T  # (T, B): phi(y) - phi(x0)
            # below: need max(phi - u) at x0  <->  max_y [phi_rel - du] <= slack
            # above: need min at x0           <->  max_y [du - phi_rel] <= slack
            gap = np.where(below[:, None], phi - du, du - phi)
            fired = gap.max(axis=1) <= slack
            triggered_count += int(np.count_nonzero(fired))
            for t_local in np.flatnonzero(fired):
                t = part[t_local]
                f = float(fvals[t])
                key = int(idx[t_local])
                if below[t_local]:
                    v = f - bounds.lam_hi
                    node_upper[key] = max(node_upper.get(key, float("-inf")), v)
                else:
                    v = bounds.lam_lo - f
                    node_lower[key] = max(node_lower.get(key, float("-inf")), v)

    all_nodes = sorted({grid.flat_index(t.node) for t in tests})
    idx_arr = np.array(all_nodes, dtype=int)
    upper = np.array([node_upper.get(i, float("-inf")) for i in all_nodes])
    lower = np.array([node_lower.get(i, float("-inf")) for i in all_nodes])
    return _finish("touching", grid, tol, idx_arr, upper, lower, triggered_count)


def write_viscosity_report(report: ViscosityReport, path):
    grid = report.grid
    coord_names = ["x", "y", "z"][: grid.ndim]
    header = ["node"] + coord_names + ["scheme", "upper_margin", "lower_margin", "verdict"]
    rows = []
    for j, flat in enumerate(report.node_indices):
        pt = grid.node_point(grid.multi_index(int(flat)))
        rows.append((int(flat), *[float(c) for c in pt], report.scheme,
                     float(report.node_upper[j]), float(report.node_lower[j]),
                     bool(report.verdicts[j])))
    footer = [
        ("# worst_upper", report.worst_upper),
        ("# worst_lower", report.worst_lower),
        ("# tolerance", report.tolerance),
        ("# triggered", report.triggered),
        ("# passed", bool(report.passed)),
    ]
    write_csv(path, header, rows, footer)


def quartic_perturb(phi: GridFunction, x0) -> GridFunction:
    """phi - |x - x0|^4: localizes maxima without moving value/gradient/Hessian
    at x0 (the quartic vanishes to third order there)."""
    x0 = np.asarray(x0, dtype=float)
    d = phi.grid.points() - x0[None, :]
    r2 = np.einsum("ij,ij->i", d, d)
    return phi.with_values(phi.values - r2 * r2)


def holder_seminorm(u: GridFunction, gamma: float, region: Ball,
                    pair_budget: int = 20000) -> float:
    """max |u(x)-u(y)| / |x-y|^gamma over all node pairs at distance <= 4h
    plus a deterministic stratified sample of about pair_budget pairs."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    grid = u.grid
    mask = ball_node_mask(grid, region)
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        raise ValueError("region has fewer than 2 nodes")
    pts = grid.points()[idx]
    vals = u.values[idx]

    best = 0.0
    # short-range: every pair within 4h, via half-space lattice offsets
    offs = _ball_offsets(grid, 4.0 * grid.h)
    half = offs[(offs[:, -1] > 0) | ((offs[:, -1] == 0) & (offs[:, 0] > 0))] \
        if grid.ndim > 1 else offs[offs[:, 0] > 0]
    in_ball = np.zeros(grid.node_count, dtype=bool)
    in_ball[idx] = True
    multis = np.stack([np.asarray(grid.multi_index(int(i))) for i in idx])
    for d in half:
        target = multis + d[None, :]
        ok = np.all((target >= 0) & (target < np.asarray(grid.shape)[None, :]), axis=1)
        if not ok.any():
            continue
        tflat = np.zeros(len(target), dtype=int)
        stride = 1
        for a in range(grid.ndim):
            tflat += target[:, a] * stride
            stride *= grid.shape[a]
        tflat = np.clip(tflat, 0, grid.node_count - 1)
        ok &= in_ball[tflat]
        if not ok.any():
            continue
        dist = float(np.sqrt(np.sum(d.astype(float) ** 2))) * grid.h
        diff = np.abs(u.values[tflat] - u.values[idx])
        best = max(best, float(np.max(diff[ok])) / dist**gamma)

    # long-range: evenly spaced node subset, all cross pairs
    m = max(2, int(math.isqrt(pair_budget)))
    sub = idx[np.unique(np.linspace(0, idx.size - 1, m).astype(int))]
    spts = grid.points()[sub]
    svals = u.values[sub]
    dmat = np.sqrt(np.sum((spts[:, None, :] - spts[None, :, :]) ** 2, axis=-1))
    vmat = np.abs(svals[:, None] - svals[None, :])
    np.fill_diagonal(dmat, np.inf)
    best = max(best, float(np.max(vmat / dmat**gamma)))
    return best


@dataclass(frozen=True, eq=False)
class LimitStabilityReport:
    lam_seq: tuple
    lam_limit: float
    deltas: tuple  # delta_k = sup_{j>=k} |lam_j - lam_limit| + c0 h
    self_pass: tuple  # each u_k pointwise-certified for (-lam_k, lam_k)
    pointwise_pass: tuple  # u_inf vs widened bounds, per k
    touching_pass: tuple
    passed: bool


def limit_stability_experiment(generator, k_max: int, op: EllipticOperator,
                               u_limit: GridFunction | None = None,
                               lam_limit: float | None = None,
                               stencil: StencilConfig | None = None,
                               node_budget: int = 300) -> LimitStabilityReport:
    """Stability of certificates under locally uniform limits.

    The generator yields (u_k, lam_k) pairs, each certified for symmetric
    bounds (-lam_k, lam_k); the limit is then certified with every tail bound
    lam_limit + delta_k, delta_k = sup_{j>=k} |lam_j - lam_limit| + c0 h.
    Deltas are nonincreasing by construction (monotone reporting).  The limit
    candidates default to the last iterate.
    """
    if callable(generator):
        pairs = [generator(k) for k in range(1, k_max + 1)]
    else:
        pairs = list(itertools.islice(iter(generator), k_max))
    if not pairs:
        raise ValueError("generator produced no iterates")
    us = [p[0] for p in pairs]
    lams = [float(p[1]) for p in pairs]
    u_inf = u_limit if u_limit is not None else us[-1]
    lam_inf = float(lam_limit) if lam_limit is not None else lams[-1]

    c0h = default_tolerance(op, u_inf)
    gaps = [abs(l - lam_inf) for l in lams]
    deltas = [max(gaps[k:]) + c0h for k in range(len(gaps))]

    self_pass = tuple(
        check_pointwise(uk, op, Bounds.symmetric(lk), stencil).passed
        for uk, lk in zip(us, lams)
    )
    base_pw = check_pointwise(u_inf, op, Bounds.symmetric(lam_inf), stencil)
    dictionary = make_touching_dictionary(u_inf, node_budget=node_budget)
    base_tt = check_touching(u_inf, op, Bounds.symmetric(lam_inf), dictionary)
    # widening the bounds by delta shifts every violation down by delta
    pw_pass = tuple(bool(max(base_pw.worst_upper, base_pw.worst_lower) - d
                         <= base_pw.tolerance) for d in deltas)
    tt_pass = tuple(bool(max(base_tt.worst_upper, base_tt.worst_lower) - d
                         <= base_tt.tolerance) for d in deltas)
    passed = all(self_pass) and all(pw_pass) and all(tt_pass)
    return LimitStabilityReport(tuple(lams), lam_inf, tuple(deltas),
                                self_pass, pw_pass, tt_pass, bool(passed))
