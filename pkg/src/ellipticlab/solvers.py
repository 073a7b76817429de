"""Damped-relaxation solvers for F_h(D^2 u) = f with Dirichlet data.

The update u <- u + tau (F_h(u) - f) is monotone for tau below the stability
ceiling h^2 / (4 n lam2); convergence is geometric but slow (Jacobi-like,
iteration counts scale like h^-2), which is fine at desk scale and keeps every
sweep deterministic and order-independent.  The obstacle variant projects each
sweep onto {u >= psi} with the zeroth-order term u * g_weight lagged at the
current iterate; its fixed points satisfy the discrete complementarity system

    F_h(u) - g u <= f  everywhere,  with equality off the contact set,

and on contact F_h(u) >= F_h(psi) by monotonicity of the scheme, which is what
lets us manufacture two-sided inequality bounds for the certificate checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grids import Grid, GridFunction
from .operators import EllipticOperator
from .stencils import StencilConfig, eval_discrete, operator_margin

__all__ = [
    "RelaxationConfig",
    "SolverError",
    "SolveResult",
    "ObstacleProblem",
    "ObstacleResult",
    "solve_dirichlet",
    "solve_obstacle",
    "residual",
    "sup_residual",
    "stability_tau",
]


class SolverError(RuntimeError):
    """Relaxation exhausted its iteration budget; carries the last residual."""

    def __init__(self, message, last_residual=float("nan")):
        super().__init__(message)
        self.last_residual = last_residual


@dataclass(frozen=True)
class RelaxationConfig:
    """Step size, budget and stopping rule for the relaxation sweeps.

    The stability ceiling tau <= h^2/(4 n lam2) involves the grid and the
    operator, so a user-supplied tau is validated when a solve starts, not
    here.  tau=None means "use the ceiling".
    """

    max_iterations: int = 1_000_000
    residual_tolerance: Optional[float] = None  # default 1e-9 * (1 + sup|f|)
    tau: Optional[float] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.residual_tolerance is not None and self.residual_tolerance <= 0:
            raise ValueError("residual_tolerance must be positive")
        if self.tau is not None and self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: GridFunction
    iterations: int
    residual: float  # sup-norm of F_h(u) - f over interior at return
    tau: float


def stability_tau(op: EllipticOperator, grid: Grid, g_max: float = 0.0) -> float:
    """Largest step size with a guaranteed monotone update."""
    h = grid.h
    return h * h / (4.0 * grid.ndim * op.params.lam2 + h * h * g_max)


def _node_field(grid: Grid, data, name: str) -> np.ndarray:
    """Coerce scalar / callable / GridFunction into a flat node array."""
    if isinstance(data, GridFunction):
        if data.grid != grid:
            raise ValueError("%s lives on a different grid" % name)
        return data.values.copy()
    if callable(data):
        return np.asarray(data(grid.points()), dtype=float).reshape(-1)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.node_count, float(arr))
    if arr.size != grid.node_count:
        raise ValueError("%s has the wrong number of values" % name)
    return arr.reshape(-1).copy()


def _pick_grid(*candidates) -> Grid:
    for c in candidates:
        if isinstance(c, GridFunction):
            return c.grid
        if isinstance(c, Grid):
            return c
    raise ValueError(
        "no grid in sight: pass grid= or provide f/boundary as a GridFunction"
    )


def residual(op: EllipticOperator, u: GridFunction, f,
             stencil: StencilConfig | None = None) -> GridFunction:
    """The field F_h(u) - f; NaN on the margin band where the scheme is undefined."""
    grid = u.grid
    fh = eval_discrete(op, u, stencil).values
    fv = _node_field(grid, f, "f")
    return GridFunction(grid, fh - fv, allow_non_finite=True)


def sup_residual(op: EllipticOperator, u: GridFunction, f,
                 stencil: StencilConfig | None = None) -> float:
    return residual(op, u, f, stencil).sup_norm()


def solve_dirichlet(op: EllipticOperator, f, boundary,
                    config: RelaxationConfig | None = None,
                    grid: Grid | None = None,
                    stencil: StencilConfig | None = None,
                    initial: GridFunction | None = None) -> SolveResult:
    """Relax F_h(u) = f on the interior; the whole margin band is pinned to
    the boundary data (for wide stencils that band is several nodes deep).

    f and boundary may be scalars, callables over points, or GridFunctions;
    at least one argument must reveal the grid.
    """
    config = config or RelaxationConfig()
    stencil = stencil or StencilConfig()
    grid = grid or _pick_grid(f, boundary, initial)
    margin = operator_margin(op, stencil, grid.ndim)
    mask = grid.interior_mask(margin)
    if not mask.any():
        raise ValueError("grid has no interior nodes at this stencil margin")
    mask_lat = grid.lattice(mask)

    fv = _node_field(grid, f, "f")
    bv = _node_field(grid, boundary, "boundary")
    if initial is not None and initial.grid != grid:
        raise ValueError("initial guess lives on a different grid")
    u = initial.values.copy() if initial is not None else bv.copy()
    u[~mask] = bv[~mask]

    tau = config.tau if config.tau is not None else stability_tau(op, grid)
    ceiling = stability_tau(op, grid)
    if tau > ceiling * (1.0 + 1e-12):
        raise ValueError("tau exceeds the stability ceiling %.6g" % ceiling)
    tol = config.residual_tolerance
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(fv[mask]))))

    f_lat = grid.lattice(fv)
    u_lat = grid.lattice(u).copy()
    r = float("inf")
    for it in range(config.max_iterations + 1):
        gf = GridFunction(grid, u_lat.reshape(-1))
        e = eval_discrete(op, gf, stencil).lattice() - f_lat
        e = np.where(mask_lat, e, 0.0)
        r = float(np.max(np.abs(e)))
        if r <= tol:
            return SolveResult(gf, it, r, tau)
        u_lat = u_lat + tau * e
    raise SolverError(
        "relaxation failed to converge: residual %.3e after %d iterations"
        " (tolerance %.3e)" % (r, config.max_iterations, tol), r
    )


@dataclass(frozen=True, eq=False)
class ObstacleProblem:
    """Constrained problem u >= psi for F_h(u) = f + u * g_weight.

    g_weight may be a scalar or a GridFunction and must be nonnegative (it is
    lagged inside the sweep, and g >= 0 keeps the update monotone).  Boundary
    data must dominate the obstacle on the boundary band.
    """

    op: EllipticOperator
    psi: GridFunction
    boundary: object
    f: object = 0.0
    g_weight: object = 0.0
    g_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = self.psi.grid
        g = _node_field(grid, self.g_weight, "g_weight")
        if np.min(g) < 0:
            raise ValueError("g_weight must be nonnegative for a monotone sweep")
        object.__setattr__(self, "g_values", g)

    def boundary_values(self, margin: int) -> np.ndarray:
        grid = self.psi.grid
        bv = _node_field(grid, self.boundary, "boundary")
        band = ~grid.interior_mask(margin)
        if np.min(bv[band] - self.psi.values[band]) < -1e-12:
            raise ValueError("boundary data must dominate the obstacle on the boundary band")
        return bv


@dataclass(frozen=True, eq=False)
class ObstacleResult:
    u: GridFunction
    contact: np.ndarray  # flat bool over nodes, True where u is pinned to psi
    contact_fraction: float  # share of interior nodes in contact
    lam_lo: float
    lam_hi: float
    iterations: int
    residual: float  # sup-norm of the projected update / tau at return
    tau: float


def solve_obstacle(problem: ObstacleProblem,
                   config: RelaxationConfig | None = None,
                   stencil: StencilConfig | None = None,
                   initial: GridFunction | None = None) -> ObstacleResult:
    """Projected relaxation u <- max(psi, u + tau (F_h(u) - f - u g)).

    At a fixed point, every interior node either satisfies the equation
    (residual ~ 0, off contact) or sits on the obstacle with
    F_h(u) >= F_h(psi) there.  The returned [lam_lo, lam_hi] are manufactured
    bounds the realized field F_h(u) provably satisfies on the interior:
    the upper one from complementarity (F_h(u) <= f + g u + tol), the lower
    one from monotonicity on the contact set, both cross-checked against the
    realized field before being reported.
    """
    grid = problem.psi.grid
    op = problem.op
    config = config or RelaxationConfig()
    stencil = stencil or StencilConfig()
    margin = operator_margin(op, stencil, grid.ndim)
    mask = grid.interior_mask(margin)
    if not mask.any():
        raise ValueError("grid has no interior nodes at this stencil margin")
    mask_lat = grid.lattice(mask)

    g = problem.g_values
    g_lat = grid.lattice(g)
    fv = _node_field(grid, problem.f, "f")
    psi_lat = problem.psi.lattice()
    bv = problem.boundary_values(margin)
    if initial is not None and initial.grid != grid:
        raise ValueError("initial guess lives on a different grid")
    u = initial.values.copy() if initial is not None else \
        np.maximum(bv, problem.psi.values)
    u[~mask] = bv[~mask]

    tau = config.tau if config.tau is not None else \
        stability_tau(op, grid, float(np.max(g)))
    ceiling = stability_tau(op, grid, float(np.max(g)))
    if tau > ceiling * (1.0 + 1e-12):
        raise ValueError("tau exceeds the stability ceiling %.6g" % ceiling)
    tol = config.residual_tolerance
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(fv[mask]))))

    f_lat = grid.lattice(fv)
    u_lat = grid.lattice(u).copy()
    r = float("inf")
    for it in range(config.max_iterations + 1):
        gf = GridFunction(grid, u_lat.reshape(-1))
        e = eval_discrete(op, gf, stencil).lattice() - g_lat * u_lat - f_lat
        e = np.where(mask_lat, e, 0.0)
        candidate = np.where(mask_lat, np.maximum(psi_lat, u_lat + tau * e), u_lat)
        r = float(np.max(np.abs(candidate - u_lat))) / tau
        if r <= tol:
            break
        u_lat = candidate
    else:
        raise SolverError(
            "projected relaxation failed to converge: residual %.3e after %d"
            " iterations (tolerance %.3e)" % (r, config.max_iterations, tol), r
        )

    u_fn = GridFunction(grid, u_lat.reshape(-1))
    fh = eval_discrete(op, u_fn, stencil).values
    # pinned-to-obstacle detection at solver accuracy
    contact = (np.abs(u_fn.values - problem.psi.values) <= tau * tol + 1e-13) & mask
    rhs = fv + g * u_fn.values
    slack = tol * (1.0 + float(np.max(np.abs(rhs[mask]))))
    lam_hi = float(np.max(np.abs(rhs[mask]))) + slack
    lo_terms = [float(np.min(rhs[mask]))]
    if contact.any():
        fh_psi = eval_discrete(op, problem.psi, stencil).values
        lo_terms.append(float(np.min(fh_psi[contact])))
    lam_lo = min(lo_terms) - slack
    # never report bounds the realized field violates
    lam_lo = min(lam_lo, float(np.min(fh[mask])) - slack)
    lam_hi = max(lam_hi, float(np.max(fh[mask])) + slack)
    frac = float(np.count_nonzero(contact)) / float(np.count_nonzero(mask))
    return ObstacleResult(u_fn, contact, frac, lam_lo, lam_hi, it, r, tau)
