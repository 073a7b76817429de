"""Uniform grids on axis-aligned boxes, the functions living on them, discrete
balls, and small symmetric matrices.

Storage convention: values are flat, row-major with the x index fastest, i.e.
node (ix, iy) of an (nx, ny) grid sits at flat index ``iy*nx + ix``.  The text
format serializes with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fileio import FLOAT_FMT, atomic_write_text

__all__ = [
    "Domain",
    "Grid",
    "GridFunction",
    "Ball",
    "SymMatrix",
    "ball_node_mask",
    "oscillation",
    "restrict",
    "sample_bilinear",
    "read_grid_function",
    "write_grid_function",
]


def _lock(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Domain:
    """Axis-aligned closed box [lower_i, upper_i], i = 0..n-1."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lower, dtype=float)))
        up = tuple(float(v) for v in np.atleast_1d(np.asarray(self.upper, dtype=float)))
        if len(lo) == 0 or len(lo) != len(up):
            raise ValueError("domain corners must be nonempty and of equal length")
        if any(u <= l for l, u in zip(lo, up)):
            raise ValueError("domain upper corner must exceed lower corner on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def ndim(self) -> int:
        return len(self.lower)

    def extent(self, axis: int) -> float:
        return self.upper[axis] - self.lower[axis]


@dataclass(frozen=True)
class Grid:
    """Isotropic uniform lattice over a Domain; every axis shares one spacing h."""

    domain: Domain
    shape: tuple

    def __post_init__(self):
        shape = tuple(int(s) for s in np.atleast_1d(np.asarray(self.shape)))
        if len(shape) != self.domain.ndim:
            raise ValueError("grid shape rank must match domain dimension")
        if any(s < 3 for s in shape):
            raise ValueError("grids need at least 3 nodes per axis")
        spacings = [self.domain.extent(a) / (shape[a] - 1) for a in range(len(shape))]
        h = spacings[0]
        if any(abs(s - h) > 1e-12 * h for s in spacings):
            raise ValueError(
                "grid must be isotropic: per-axis spacings %s differ" % (spacings,)
            )
        object.__setattr__(self, "shape", shape)

    @property
    def ndim(self) -> int:
        return self.domain.ndim

    @property
    def h(self) -> float:
        return self.domain.extent(0) / (self.shape[0] - 1)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    def coords(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.domain.lower[axis] + np.arange(n) * (self.domain.extent(axis) / (n - 1))

    def points(self) -> np.ndarray:
        """All node coordinates, shape (node_count, ndim), in storage order."""
        axes = [self.coords(a) for a in range(self.ndim)]
        # x must vary fastest: make it the last index of the C-ordered lattice.
        mesh = np.meshgrid(*axes[::-1], indexing="ij")[::-1]
        return np.stack([m.ravel() for m in mesh], axis=1)

    def flat_index(self, multi) -> int:
        multi = tuple(int(i) for i in multi)
        if len(multi) != self.ndim:
            raise ValueError("multi-index rank mismatch")
        idx = 0
        for axis in reversed(range(self.ndim)):
            i = multi[axis]
            if not 0 <= i < self.shape[axis]:
                raise IndexError("node index out of range")
            idx = idx * self.shape[axis] + i
        return idx

    def multi_index(self, flat: int) -> tuple:
        flat = int(flat)
        out = []
        for axis in range(self.ndim):
            out.append(flat % self.shape[axis])
            flat //= self.shape[axis]
        return tuple(out)

    def node_point(self, multi) -> tuple:
        return tuple(self.coords(a)[multi[a]] for a in range(self.ndim))

    def lattice(self, flat_values: np.ndarray) -> np.ndarray:
        """View flat storage as the (…, ny, nx) C-ordered lattice array."""
        return np.asarray(flat_values).reshape(self.shape[::-1])

    def interior_mask(self, margin: int) -> np.ndarray:
        """Flat mask of nodes at least ``margin`` node layers from every face."""
        mask = np.ones(self.shape[::-1], dtype=bool)
        for axis in range(self.ndim):
            ax = self.ndim - 1 - axis  # lattice axis for coordinate axis
            sl = [slice(None)] * self.ndim
            sl[ax] = slice(0, margin)
            mask[tuple(sl)] = False
            sl[ax] = slice(self.shape[axis] - margin, None)
            mask[tuple(sl)] = False
        return mask.ravel()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values attached to every node of a Grid (flat, x fastest)."""

    grid: Grid
    values: np.ndarray
    allow_non_finite: bool = field(default=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size != self.grid.node_count:
            raise ValueError(
                "value count mismatch: got %d values for %d nodes"
                % (vals.size, self.grid.node_count)
            )
        if not self.allow_non_finite and not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", _lock(vals.copy()))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        """Sample ``fn(points)`` (vectorized over an (N, n) point array)."""
        return cls(grid, np.asarray(fn(grid.points()), dtype=float))

    def with_values(self, values, allow_non_finite=False) -> "GridFunction":
        return GridFunction(self.grid, values, allow_non_finite)

    def lattice(self) -> np.ndarray:
        return self.grid.lattice(self.values)

    def sup_norm(self) -> float:
        finite = self.values[np.isfinite(self.values)]
        if finite.size == 0:
            return 0.0
        return float(np.max(np.abs(finite)))


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball; on a grid it collects nodes with |x - center| <= radius."""

    center: tuple
    radius: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(np.asarray(self.center, dtype=float)))
        radius = float(self.radius)
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)


def ball_node_mask(grid: Grid, ball: Ball) -> np.ndarray:
    """Flat boolean mask of grid nodes inside the closed ball.

    Raises if the ball is not contained in the domain box or catches no node.
    Distance ties at the boundary are included (closed ball, with a relative
    1e-12 grace for rounding).
    """
    if len(ball.center) != grid.ndim:
        raise ValueError("ball center rank must match grid dimension")
    slack = 1e-9 * grid.h
    for a in range(grid.ndim):
        if ball.center[a] - ball.radius < grid.domain.lower[a] - slack or \
           ball.center[a] + ball.radius > grid.domain.upper[a] + slack:
            raise ValueError("ball exits domain")
    d2 = np.zeros(grid.shape[::-1])
    for a in range(grid.ndim):
        diff = grid.coords(a) - ball.center[a]
        shape = [1] * grid.ndim
        shape[grid.ndim - 1 - a] = grid.shape[a]
        d2 = d2 + (diff ** 2).reshape(shape)
    mask = (d2 <= ball.radius ** 2 * (1.0 + 1e-12)).ravel()
    if not mask.any():
        raise ValueError("ball resolves to no nodes")
    return mask


def oscillation(u: GridFunction, ball: Ball) -> float:
    """max - min of u over the nodes of the discrete ball."""
    vals = u.values[ball_node_mask(u.grid, ball)]
    return float(vals.max() - vals.min())


def restrict(u: GridFunction, ball: Ball):
    """List of (point, value) pairs over the discrete ball, storage order."""
    mask = ball_node_mask(u.grid, ball)
    pts = u.grid.points()[mask]
    vals = u.values[mask]
    return [(tuple(p), float(v)) for p, v in zip(pts, vals)]


def sample_bilinear(u: GridFunction, points) -> np.ndarray:
    """Multilinear interpolation of u at arbitrary points inside the domain box."""
    grid = u.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.ndim:
        raise ValueError("point rank mismatch")
    slack = 1e-9 * grid.h
    idx = []
    frac = []
    for a in range(grid.ndim):
        x = pts[:, a]
        lo, hi = grid.domain.lower[a], grid.domain.upper[a]
        if np.any(x < lo - slack) or np.any(x > hi + slack):
            raise ValueError("interpolation point exits domain")
        t = (x - lo) / grid.h
        i0 = np.floor(t).astype(np.int64)
        i0 = np.clip(i0, 0, grid.shape[a] - 2)
        idx.append(i0)
        frac.append(np.clip(t - i0, 0.0, 1.0))
    lattice = u.lattice()
    out = np.zeros(pts.shape[0])
    for corner in range(1 << grid.ndim):
        weight = np.ones(pts.shape[0])
        loc = [None] * grid.ndim
        for a in range(grid.ndim):
            bit = (corner >> a) & 1
            weight = weight * (frac[a] if bit else 1.0 - frac[a])
            loc[grid.ndim - 1 - a] = idx[a] + bit
        out += weight * lattice[tuple(loc)]
    return out


# -- symmetric matrices -------------------------------------------------------


def _jacobi_eigenvalues(a: np.ndarray, tol=1e-12) -> np.ndarray:
    """Cyclic Jacobi rotations; returns eigenvalues ascending."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(100):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return np.sort(np.diag(a))


class SymMatrix:
    """Exactly symmetric n x n matrix; stores the upper triangle."""

    __slots__ = ("n", "_upper")

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        scale = 1.0 + float(np.max(np.abs(m))) if m.size else 1.0
        if np.max(np.abs(m - m.T)) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        self.n = m.shape[0]
        self._upper = tuple(float(m[i, j]) for i in range(self.n) for j in range(i, self.n))

    @classmethod
    def from_upper(cls, n, entries):
        m = np.zeros((n, n))
        it = iter(entries)
        for i in range(n):
            for j in range(i, n):
                v = float(next(it))
                m[i, j] = v
                m[j, i] = v
        return cls(m)

    @classmethod
    def diag(cls, *entries):
        return cls(np.diag(np.asarray(entries, dtype=float)))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def mat(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                m[i, j] = self._upper[k]
                m[j, i] = self._upper[k]
                k += 1
        return _lock(m)

    def trace(self) -> float:
        # diagonal entries sit at the start of each upper-triangle row block
        t, k = 0.0, 0
        for i in range(self.n):
            t += self._upper[k]
            k += self.n - i
        return t

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.mat))

    def eigenvalues(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self._upper[0]])
        if self.n == 2:
            a, b, c = self._upper  # m11, m12, m22
            mean = 0.5 * (a + c)
            rad = math.hypot(0.5 * (a - c), b)
            return np.array([mean - rad, mean + rad])
        return _jacobi_eigenvalues(self.mat)

    def shifted(self, s: float) -> "SymMatrix":
        return SymMatrix(self.mat + s * np.eye(self.n))

    def scaled(self, s: float) -> "SymMatrix":
        return SymMatrix(s * self.mat)

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.mat + other.mat)

    def __repr__(self):
        return f"SymMatrix({self.mat.tolist()})"


# -- text serialization -------------------------------------------------------


def write_grid_function(u: GridFunction, path):
    """Header: ``n nx [ny] xmin xmax [ymin ymax]``; then one value per line."""
    grid = u.grid
    head = [str(grid.ndim)] + [str(s) for s in grid.shape]
    for a in range(grid.ndim):
        head.append(FLOAT_FMT % grid.domain.lower[a])
        head.append(FLOAT_FMT % grid.domain.upper[a])
    if not np.all(np.isfinite(u.values)):
        raise ValueError("refusing to serialize non-finite values")
    lines = [" ".join(head)]
    lines.extend(FLOAT_FMT % v for v in u.values)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_grid_function(path) -> GridFunction:
    with open(path) as fh:
        tokens = fh.readline().split()
        if not tokens:
            raise ValueError("empty grid file")
        try:
            ndim = int(tokens[0])
            shape = tuple(int(t) for t in tokens[1 : 1 + ndim])
            bounds = [float(t) for t in tokens[1 + ndim :]]
        except (ValueError, IndexError) as exc:
            raise ValueError(f"malformed grid header: {tokens!r}") from exc
        if len(shape) != ndim or len(bounds) != 2 * ndim:
            raise ValueError(f"malformed grid header: {tokens!r}")
        lower = tuple(bounds[2 * a] for a in range(ndim))
        upper = tuple(bounds[2 * a + 1] for a in range(ndim))
        grid = Grid(Domain(lower, upper), shape)
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    if values.size != grid.node_count:
        raise ValueError(
            "value count mismatch: got %d values for %d nodes" % (values.size, grid.node_count)
        )
    return GridFunction(grid, values)
