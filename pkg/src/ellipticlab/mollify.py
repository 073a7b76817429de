"""Smoothing lab: discrete mollification, g = div(A grad u_eps) for constant
PSD A, the pointwise sandwich f1*eta <= g_eps <= f2*eta on the shrunken
domain, and L^p Hessian norms tracked across a schedule of smoothing radii.

The kernel is the polynomial bump (1 - |x/eps|^2)^4, sampled on lattice
offsets and renormalized to unit mass, so constants are exact fixed points
and affine functions pass through untouched (odd moments cancel by symmetry).
Because the kernel has constant coefficients, discrete convolution commutes
with centered differencing wherever both sides are defined; the sandwich
verdict for operators certified nodewise is therefore exact up to roundoff,
not up to a consistency error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fileio import write_csv
from .grids import (
    Ball,
    Domain,
    Grid,
    GridFunction,
    SymMatrix,
    ball_node_mask,
)
from .stencils import discrete_hessian

__all__ = [
    "MollifierKernel",
    "ShrunkenDomain",
    "SandwichReport",
    "SweepRow",
    "mollify",
    "compute_g",
    "sandwich_check",
    "hessian_lp_norm",
    "stability_sweep",
]


def _half_width(eps: float, h: float) -> int:
    # snap near-integer eps/h so eps = k*h computed in floats lands on k
    return int(math.floor(eps / h + 1e-9))


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """Unit-mass bump (1 - |x/eps|^2)^4 discretized on lattice offsets."""

    eps: float
    h: float
    ndim: int
    weights: np.ndarray  # lattice-shaped (2K+1,)^ndim, nonnegative, sum 1

    @classmethod
    def build(cls, grid: Grid, eps: float) -> "MollifierKernel":
        eps = float(eps)
        if eps < 3.0 * grid.h * (1.0 - 1e-12):
            raise ValueError("kernel under-resolved: need eps >= 3h")
        k = _half_width(eps, grid.h)
        off = np.arange(-k, k + 1) * grid.h
        r2 = np.zeros((2 * k + 1,) * grid.ndim)
        for a in range(grid.ndim):
            shape = [1] * grid.ndim
            shape[grid.ndim - 1 - a] = 2 * k + 1  # lattice order, x fastest
            r2 = r2 + (off**2).reshape(shape)
        w = np.maximum(0.0, 1.0 - r2 / eps**2) ** 4
        w /= w.sum()
        w.setflags(write=False)
        return cls(eps, grid.h, grid.ndim, w)

    @property
    def half_width(self) -> int:
        return (self.weights.shape[0] - 1) // 2

    def second_moment(self) -> float:
        """Common per-axis second moment sum_d w(d) (d_axis h)^2 (isotropic)."""
        k = self.half_width
        off2 = (np.arange(-k, k + 1) * self.h) ** 2
        shape = [1] * self.ndim
        shape[-1] = 2 * k + 1
        return float(np.sum(self.weights * off2.reshape(shape)))


def _trimmed_grid(grid: Grid, trim: int) -> Grid:
    shape = tuple(s - 2 * trim for s in grid.shape)
    if any(s < 3 for s in shape):
        raise ValueError("mollified domain is empty: the margin removes every interior node")
    lower = tuple(lo + trim * grid.h for lo in grid.domain.lower)
    upper = tuple(hi - trim * grid.h for hi in grid.domain.upper)
    return Grid(Domain(lower, upper), shape)


@dataclass(frozen=True, eq=False)
class ShrunkenDomain:
    """Nodes of the parent grid strictly farther than eps from its boundary."""

    parent: Grid
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("margin must be positive")
        self.grid  # validate emptiness eagerly

    @property
    def trim(self) -> int:
        # dist > eps strictly; the node at distance exactly eps is excluded
        return _half_width(self.eps, self.parent.h) + 1

    @property
    def grid(self) -> Grid:
        return _trimmed_grid(self.parent, self.trim)


def _convolve_valid(lat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Direct (shift-and-add) valid-mode convolution; deterministic order."""
    out_shape = tuple(n - m + 1 for n, m in zip(lat.shape, weights.shape))
    if any(s < 1 for s in out_shape):
        raise ValueError("mollified domain is empty: the margin removes every interior node")
    out = np.zeros(out_shape)
    for idx in np.ndindex(weights.shape):
        wv = weights[idx]
        if wv == 0.0:
            continue
        sl = tuple(slice(i, i + s) for i, s in zip(idx, out_shape))
        out += wv * lat[sl]
    return out


def mollify(u: GridFunction, eps: float) -> GridFunction:
    """eta_eps * u, reported on the shrunken domain only (no boundary
    extension; values outside it would need data the grid does not carry)."""
    kern = MollifierKernel.build(u.grid, eps)
    conv = _convolve_valid(u.lattice(), kern.weights)
    sub = ShrunkenDomain(u.grid, eps)
    inner = tuple(slice(1, s - 1) for s in conv.shape)
    return GridFunction(sub.grid, conv[inner].ravel())


def compute_g(u_eps: GridFunction, a: SymMatrix) -> GridFunction:
    """Sum_ij A_ij d2_ij u_eps by centered differences (constant A passes
    through div(A grad .)).  NaN on the boundary ring, like eval_discrete."""
    if a.n != u_eps.grid.ndim:
        raise ValueError("matrix rank must match the grid dimension")
    if float(a.eigenvalues().min()) <= 0.0:
        raise ValueError("diffusion matrix must be positive definite")
    amat = a.mat
    hf = discrete_hessian(u_eps)
    g = None
    for (i, j), arr in hf.comps.items():
        factor = amat[i, j] if i == j else 2.0 * amat[i, j]
        g = factor * arr if g is None else g + factor * arr
    return GridFunction(u_eps.grid, g.ravel(), allow_non_finite=True)


@dataclass(frozen=True, eq=False)
class SandwichReport:
    """Nodewise margins of f1*eta <= g_eps <= f2*eta on the shrunken domain."""

    eps: float
    tolerance: float
    grid: Grid  # the shrunken domain's grid
    lower: GridFunction  # g_eps - f1*eta
    upper: GridFunction  # f2*eta - g_eps
    worst_lower: float
    worst_upper: float
    passed: bool


def _as_field(grid: Grid, data, name: str) -> GridFunction:
    if isinstance(data, GridFunction):
        if data.grid is not grid and data.grid != grid:
            raise ValueError("%s lives on a different grid" % name)
        return data
    if callable(data):
        return GridFunction.from_callable(grid, data)
    return GridFunction(grid, np.full(grid.node_count, float(data)))


def sandwich_check(u: GridFunction, a: SymMatrix, f1, f2, eps: float,
                   tol: Optional[float] = None) -> SandwichReport:
    """Mollify u, f1, f2; form g_eps = div(A grad u_eps); compare nodewise.

    Default tolerance 10 h (1 + sup|f2| + |A|_F sup|u|) covers the roundoff
    of the convolution algebra with a wide O(h) consistency allowance.
    """
    grid = u.grid
    f1 = _as_field(grid, f1, "f1")
    f2 = _as_field(grid, f2, "f2")
    if np.any(f1.values > f2.values):
        raise ValueError("sandwich requires f1 <= f2 nodewise")
    if tol is None:
        tol = 10.0 * grid.h * (1.0 + f2.sup_norm() + a.frobenius() * u.sup_norm())

    kern = MollifierKernel.build(grid, eps)
    conv = _convolve_valid(u.lattice(), kern.weights)
    mid = GridFunction(_trimmed_grid(grid, kern.half_width), conv.ravel())
    g_all = compute_g(mid, a).lattice()
    inner = tuple(slice(1, s - 1) for s in g_all.shape)
    g = g_all[inner].ravel()  # finite exactly on the shrunken domain

    f1_eps = mollify(f1, eps)
    f2_eps = mollify(f2, eps)
    sub = f1_eps.grid
    lower = g - f1_eps.values
    upper = f2_eps.values - g
    worst_lower = float(lower.min())
    worst_upper = float(upper.min())
    passed = worst_lower >= -tol and worst_upper >= -tol
    return SandwichReport(float(eps), float(tol), sub,
                          GridFunction(sub, lower), GridFunction(sub, upper),
                          worst_lower, worst_upper, bool(passed))


def hessian_lp_norm(u_eps: GridFunction, p: float, ball: Ball) -> float:
    """(sum_nodes |D2_h u_eps|_F^p h^n)^(1/p) over the discrete ball
    (midpoint quadrature).  The ball must stay where the Hessian exists."""
    if not (1.0 <= p < math.inf):
        raise ValueError("p must lie in [1, inf)")
    grid = u_eps.grid
    hf = discrete_hessian(u_eps)
    frob2 = None
    for (i, j), arr in hf.comps.items():
        term = arr**2 if i == j else 2.0 * arr**2
        frob2 = term if frob2 is None else frob2 + term
    frob = np.sqrt(frob2).ravel()
    vals = frob[ball_node_mask(grid, ball)]
    if not np.all(np.isfinite(vals)):
        raise ValueError("ball touches nodes where the Hessian is undefined")
    return float(np.sum(vals**p) * grid.h**grid.ndim) ** (1.0 / p)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    norm_p: float
    passed: bool


def stability_sweep(u: GridFunction, a: SymMatrix, f1, f2, schedule, p: float,
                    r: float, path=None) -> list:
    """Sandwich verdict and |D2 u_eps|_{L^p(B(r))} for each eps in a
    decreasing schedule; the norm column staying bounded as eps shrinks is
    the desk-scale version of an eps-independent W^{2,p} estimate.

    Writes a CSV (columns eps, norm_p, pass-flag) when given a path.
    """
    schedule = [float(e) for e in schedule]
    if not schedule:
        raise ValueError("schedule is empty")
    if any(b >= a_ for a_, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly decreasing")
    if schedule[-1] < 3.0 * u.grid.h * (1.0 - 1e-12):
        raise ValueError("schedule under-resolved: every eps must be >= 3h")
    center = tuple(0.5 * (lo + hi) for lo, hi in
                   zip(u.grid.domain.lower, u.grid.domain.upper))
    rows = []
    for eps in schedule:
        report = sandwich_check(u, a, f1, f2, eps)
        u_eps = mollify(u, eps)
        norm = hessian_lp_norm(u_eps, p, Ball(center, r))
        rows.append(SweepRow(eps, norm, report.passed))
    if path is not None:
        write_csv(path, ["eps", "norm_p", "pass-flag"],
                  [(row.eps, row.norm_p, row.passed) for row in rows])
    return rows
