"""Oscillation-decay diagnostics: best affine fits on balls, the dyadic decay
profile, blow-up rescaling with slope bookkeeping, and kappa-normalization.

The raw quantity is psi(r) = inf_q osc_{B_r}(u - q . x); C^{1,beta} behaviour
at the center appears as psi ~ r^(1+beta).  The normalized functional
Phi(r) = r^(-1-beta) psi(r) then decays like r^sigma with
sigma = log 2 / (-log lam) along the dyadic ladder r_k = lam^k R, and the
blow-up copies

    u_k(x) = 2^k lam^(-k(1+beta)) (u(lam^k x) - q_k . lam^k x)

keep oscillation below 1 on the unit ball, with the slope corrections
accumulated by q_k = q_{k-1} + 2^(1-k) lam^((k-1) beta) q~_k.  (The update
exponent is re-derived from the two oscillation displays rather than copied:
the zoom at level k-1 magnifies slopes by 2^(k-1) lam^(-(k-1) beta), so the
fitted slope q~_k of that zoom converts back with the reciprocal factor; the
correction adds — it removes the slope the fit found.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fileio import write_csv
from .grids import Ball, Domain, Grid, GridFunction, ball_node_mask, oscillation, sample_bilinear
from .simplex import minimax_affine

__all__ = [
    "AffineFit",
    "best_affine",
    "DecayConfig",
    "DecayProfile",
    "decay_profile",
    "write_decay_profile",
    "verify_decay_chain",
    "RescaleState",
    "RescaleSequence",
    "rescale_sequence",
    "normalize",
    "campanato_sup",
    "unit_ball_grid",
]


@dataclass(frozen=True)
class AffineFit:
    """Optimal slope q and the minimized oscillation of u - q . x."""

    q: tuple
    osc_value: float
    intercept: float  # midpoint of the residual band; q . x + intercept is the
    # Chebyshev fit with uniform error osc_value / 2

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ np.asarray(self.q) + self.intercept


def best_affine(u: GridFunction, ball: Ball) -> AffineFit:
    """Minimize osc over the ball's nodes of u - q . x (a minimax LP).

    Note the optimum is over the discrete node set: for u = x^2/2 on a 1D
    ball of radius r the value is r^2/2 (q = 0), not the continuum Chebyshev
    remainder.
    """
    mask = ball_node_mask(u.grid, ball)
    pts = u.grid.points()[mask]
    fit = minimax_affine(pts, u.values[mask])
    return AffineFit(tuple(float(s) for s in fit.slope), fit.width,
                     0.5 * (fit.lower + fit.upper))


@dataclass(frozen=True)
class DecayConfig:
    """Parameters of the dyadic decay induction.

    The induction closes when 2 lam0^(1-beta) <= 1; equality is admitted
    (the quadratic model case lam = 1/4, beta = 1/2 sits exactly on it), and
    lam may equal lam0.  lam0 defaults to lam.
    """

    lam: float = 0.25
    beta: float = 0.5
    eps: float = 0.5
    levels: int = 4  # deepest dyadic level K; radii run lam^0 R .. lam^K R
    lam0: Optional[float] = None
    min_radius_nodes: int = 4

    def __post_init__(self):
        lam0 = self.lam if self.lam0 is None else self.lam0
        object.__setattr__(self, "lam0", float(lam0))
        if not (0.0 < self.lam <= self.lam0 < 1.0):
            raise ValueError("need 0 < lam <= lam0 < 1")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if 2.0 * self.lam0 ** (1.0 - self.beta) > 1.0 + 1e-12:
            raise ValueError("decay induction does not close: need 2 lam0^(1-beta) <= 1")
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if self.min_radius_nodes < 1:
            raise ValueError("min_radius_nodes must be positive")

    @property
    def sigma(self) -> float:
        return math.log(2.0) / (-math.log(self.lam))


@dataclass(frozen=True, eq=False)
class DecayProfile:
    center: tuple
    lam: float
    beta: float
    radius0: float
    radii: tuple  # r_k = lam^k radius0, k = 0..K
    psi: tuple  # raw inf_q osc per level
    phi: tuple  # normalized r^(-1-beta) psi
    usable: tuple  # levels entering the slope fit
    slope: float  # d log psi / d log r
    beta_hat: float  # slope - 1
    sigma: float  # log 2 / (-log lam)
    spread: float  # max deviation of leave-one-level-out slopes

    @property
    def usable_count(self) -> int:
        return sum(1 for f in self.usable if f)


def _slope_fit(log_r, log_psi) -> float:
    a = np.column_stack([log_r, np.ones_like(log_r)])
    coef, *_ = np.linalg.lstsq(a, log_psi, rcond=None)
    return float(coef[0])


def decay_profile(u: GridFunction, center, cfg: DecayConfig,
                  radius0: float) -> DecayProfile:
    """psi/Phi down the ladder plus a log-log slope with leave-one-out spread.

    Levels with psi below 100 eps_machine ||u||_inf are flagged unusable and
    excluded from the fit (they are numerical zeros — e.g. every level of an
    affine input).  Fewer than 3 usable levels is an error, as is a ladder
    whose deepest radius the grid cannot resolve.
    """
    grid = u.grid
    center = tuple(float(c) for c in center)
    if radius0 <= 0:
        raise ValueError("radius0 must be positive")
    if cfg.lam**cfg.levels * radius0 < cfg.min_radius_nodes * grid.h * (1 - 1e-12):
        raise ValueError(
            "resolution floor violated: lam^K radius0 < %d h" % cfg.min_radius_nodes
        )
    tiny = 100.0 * np.finfo(float).eps * u.sup_norm()
    radii, psis, usable = [], [], []
    for k in range(cfg.levels + 1):
        r = radius0 * cfg.lam**k
        val = best_affine(u, Ball(center, r)).osc_value
        radii.append(r)
        psis.append(val)
        usable.append(val > tiny)
    good = [k for k, f in enumerate(usable) if f]
    if len(good) < 3:
        raise ValueError("fewer than 3 usable levels")
    lr = np.log(np.asarray(radii)[good])
    lp = np.log(np.asarray(psis)[good])
    slope = _slope_fit(lr, lp)
    loo = [_slope_fit(np.delete(lr, i), np.delete(lp, i)) for i in range(len(good))] \
        if len(good) > 3 else [slope]
    spread = max(abs(s - slope) for s in loo)
    phis = [p / r ** (1.0 + cfg.beta) for p, r in zip(psis, radii)]
    return DecayProfile(center, cfg.lam, cfg.beta, radius0, tuple(radii),
                        tuple(psis), tuple(phis), tuple(bool(f) for f in usable),
                        slope, slope - 1.0, cfg.sigma, float(spread))


def write_decay_profile(profile: DecayProfile, path):
    rows = [(k, profile.radii[k], profile.psi[k], profile.phi[k], profile.usable[k])
            for k in range(len(profile.radii))]
    footer = [
        ("# slope", profile.slope),
        ("# beta_hat", profile.beta_hat),
        ("# sigma", profile.sigma),
        ("# bootstrap_spread", profile.spread),
    ]
    write_csv(path, ["k", "r", "psi", "phi", "usable"], rows, footer)


def verify_decay_chain(profile: DecayProfile, rel_tol: float = 1e-9) -> list:
    """Check Phi(r_k) <= C(lam) 2^-k Phi(r_0) level by level,
    C(lam) = lam^(-1-beta).  Returns (level, phi, bound, ok) tuples."""
    c_lam = profile.lam ** (-(1.0 + profile.beta))
    phi0 = profile.phi[0]
    out = []
    for k in range(len(profile.phi)):
        bound = c_lam * 2.0**-k * phi0
        ok = profile.phi[k] <= bound * (1.0 + rel_tol) + 1e-300
        out.append((k, profile.phi[k], bound, bool(ok)))
    return out


@dataclass(frozen=True, eq=False)
class RescaleState:
    level: int
    q: tuple  # accumulated slope correction, original coordinates
    u: GridFunction  # the zoomed copy on the fixed unit-ball grid
    osc: float  # its oscillation over B(0, 1)


@dataclass(frozen=True, eq=False)
class RescaleSequence:
    states: tuple
    truncated: bool  # resolution ran out before the requested level
    requested: int


def unit_ball_grid(ndim: int, nodes: int = 65) -> Grid:
    return Grid(Domain((-1.0,) * ndim, (1.0,) * ndim), (nodes,) * ndim)


def rescale_sequence(u: GridFunction, cfg: DecayConfig,
                     levels: Optional[int] = None,
                     unit_nodes: int = 65) -> RescaleSequence:
    """Blow-up copies u_k at scales lam^k, resampled on a fixed unit grid.

    u must contain the unit ball with osc_{B(0,1)} u < 1 (error otherwise) —
    run ``normalize`` first.  Every level resamples the *original* u
    (bilinear), never the previous zoom, so interpolation error does not
    compound; the previous zoom is used only to fit the slope correction.
    Levels the grid cannot resolve (lam^k < min_radius_nodes h) are not
    fabricated: the list truncates and says so.
    """
    levels = cfg.levels if levels is None else int(levels)
    grid = u.grid
    n = grid.ndim
    unit = unit_ball_grid(n, unit_nodes)
    unit_pts = unit.points()
    unit_ball = Ball((0.0,) * n, 1.0)
    entry_osc = oscillation(u, unit_ball)
    if not entry_osc < 1.0:
        raise ValueError("oscillation over the unit ball must be < 1 (got %g)" % entry_osc)
    floor = cfg.min_radius_nodes * grid.h

    states = []
    truncated = False
    q = np.zeros(n)
    for k in range(levels + 1):
        r = cfg.lam**k
        if r < floor * (1 - 1e-12):
            truncated = True
            break
        amp = 2.0**k * cfg.lam ** (-k * (1.0 + cfg.beta))
        phys = r * unit_pts
        vals = amp * (sample_bilinear(u, phys) - phys @ q)
        uk = GridFunction(unit, vals)
        states.append(RescaleState(k, tuple(q.tolist()), uk,
                                   float(oscillation(uk, unit_ball))))
        if k == levels:
            break
        fit = best_affine(uk, Ball((0.0,) * n, cfg.lam))
        q = q + np.asarray(fit.q) * (2.0**-k * cfg.lam ** (k * cfg.beta))
    return RescaleSequence(tuple(states), truncated, levels)


def normalize(u: GridFunction, radius: float, lam: float, eps: float,
              unit_nodes: int = 65):
    """kappa-rescaling onto the unit ball: returns (u_scaled, kappa) with
    u_scaled(x) = u(radius x) / kappa on B(0, 1) and

        kappa = lam/eps + radius^2 + osc_{B(0,radius)} u + 1.

    By construction osc_{B(0,1)} of the result is < 1, and for an operator
    that is 1-homogeneous, bounds |F_h(u)| <= lam turn into
    |F_h(u_scaled)| <= radius^2 lam / kappa <= eps whenever radius <= 1.
    """
    if eps <= 0 or radius <= 0:
        raise ValueError("radius and eps must be positive")
    if lam < 0:
        raise ValueError("lam is a magnitude bound and must be >= 0")
    grid = u.grid
    n = grid.ndim
    osc0 = oscillation(u, Ball((0.0,) * n, radius))
    kappa = lam / eps + radius**2 + osc0 + 1.0
    unit = unit_ball_grid(n, unit_nodes)
    vals = sample_bilinear(u, radius * unit.points()) / kappa
    return GridFunction(unit, vals), float(kappa)


def campanato_sup(u: GridFunction, box: Domain, beta: float,
                  radius_levels: int = 4, centers_per_axis: int = 3,
                  min_radius_nodes: int = 4) -> float:
    """sup over a deterministic net of centers in the box and dyadic radii of
    r^(-1-beta) inf_q osc_{B(center,r)}(u - q . x).

    Radii start just inside dist(center, domain boundary) and halve for
    radius_levels steps, floored at min_radius_nodes h.
    """
    grid = u.grid
    n = grid.ndim
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    axes = [np.linspace(box.lower[a], box.upper[a], centers_per_axis) for a in range(n)]
    mesh = np.meshgrid(*axes[::-1], indexing="ij")[::-1]
    centers = np.stack([m.ravel() for m in mesh], axis=-1)
    floor = min_radius_nodes * grid.h
    best = None
    for c in centers:
        dist = min(min(c[a] - grid.domain.lower[a], grid.domain.upper[a] - c[a])
                   for a in range(n))
        r = 0.999 * dist
        for _ in range(radius_levels):
            if r < floor:
                break
            val = best_affine(u, Ball(tuple(c), r)).osc_value / r ** (1.0 + beta)
            best = val if best is None else max(best, val)
            r *= 0.5
    if best is None:
        raise ValueError("net empty: no (center, radius) pair is resolvable")
    return float(best)
