import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticlab import (
    GridFunction,
    StencilConfig,
    discrete_hessian,
    eval_discrete,
    linear_operator,
    op_eval,
    operator_margin,
    parse_operator,
    pucci_max,
    pucci_min,
    trace_operator,
)
from ellipticlab.stencils import directional_second_difference

from conftest import field, quadratic_field, unit_square_grid


def interior(values_lattice, margin):
    return values_lattice[margin:-margin, margin:-margin]


# ---------------------------------------------------------------------------
# central-difference Hessians


def test_hessian_exact_on_quadratic(grid33):
    m = np.array([[2.0, 0.75], [0.75, -1.0]])
    hf = discrete_hessian(quadratic_field(grid33, m, p=(0.3, -0.2), c=1.0))
    for (i, j), want in (((0, 0), 2.0), ((0, 1), 0.75), ((1, 1), -1.0)):
        got = interior(hf.comps[(i, j)], 1)
        np.testing.assert_allclose(got, want, rtol=0, atol=5e-12)


def test_hessian_nan_ring(grid33):
    hf = discrete_hessian(quadratic_field(grid33, np.eye(2)))
    xx = hf.comps[(0, 0)]
    assert np.isnan(xx[0]).all() and np.isnan(xx[-1]).all()
    assert np.isnan(xx[:, 0]).all() and np.isnan(xx[:, -1]).all()
    with pytest.raises(ValueError, match="boundary ring"):
        hf.matrix_at((0, 5))


def test_hessian_matrix_at_interior(grid33):
    m = np.array([[1.0, -0.5], [-0.5, 3.0]])
    hf = discrete_hessian(quadratic_field(grid33, m))
    got = hf.matrix_at((16, 16)).mat
    np.testing.assert_allclose(got, m, rtol=0, atol=5e-12)


def test_hessian_1d():
    from ellipticlab import Domain, Grid

    g = Grid(Domain((0.0,), (1.0,)), (41,))
    u = field(g, lambda p: 3.0 * p[:, 0] ** 2)
    xx = discrete_hessian(u).comps[(0, 0)]
    np.testing.assert_allclose(xx[1:-1], 6.0, rtol=0, atol=1e-9)
    assert np.isnan(xx[0]) and np.isnan(xx[-1])


# ---------------------------------------------------------------------------
# margins


def test_operator_margins():
    cfg = StencilConfig(angle_count=8, stencil_radius=4)
    assert operator_margin(trace_operator(), cfg, 2) == 1
    assert operator_margin(linear_operator(np.eye(2)), cfg, 2) == 1
    assert operator_margin(pucci_max(1.0, 2.0), cfg, 2) == 4
    assert operator_margin(pucci_max(1.0, 2.0), cfg, 1) == 1


def test_stencil_config_validation():
    with pytest.raises(ValueError):
        StencilConfig(angle_count=3)
    with pytest.raises(ValueError):
        StencilConfig(stencil_radius=0)


# ---------------------------------------------------------------------------
# discrete evaluation vs the pointwise operator


def test_eval_discrete_trace_is_laplacian(grid33):
    u = quadratic_field(grid33, np.diag([2.0, -0.5]))
    e = eval_discrete(trace_operator(), u).lattice()
    np.testing.assert_allclose(interior(e, 1), 1.5, rtol=0, atol=5e-12)


def test_eval_discrete_linear_matches_matrix_oracle(grid33):
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    m = np.array([[1.0, -2.0], [-2.0, 0.25]])
    u = quadratic_field(grid33, m)
    e = eval_discrete(linear_operator(a), u).lattice()
    np.testing.assert_allclose(interior(e, 1), np.sum(a * m), rtol=0, atol=5e-12)


def test_eval_discrete_pucci_wide_stencil_consistency(grid65):
    """Wide-stencil Pucci on an axis-aligned quadratic: directions 0 and pi/2
    are interpolation-free, so the envelope is within the O((h/r)^2) slack."""
    op = pucci_max(1.0, 2.0)
    m = np.diag([1.0, -1.0])
    u = quadratic_field(grid65, m)
    exact = op_eval(op, m)  # = 2 - 1 = 1
    e = eval_discrete(op, u).lattice()
    vals = interior(e, operator_margin(op, None, 2))
    assert np.nanmax(np.abs(vals - exact)) <= 0.05 * (1 + abs(exact))


def test_eval_discrete_pucci_min_mirrors_max(grid65):
    u = quadratic_field(grid65, np.array([[1.0, 0.3], [0.3, -0.7]]))
    neg = u.with_values(-u.values)
    a = eval_discrete(pucci_min(1.0, 2.0), u).values
    b = -eval_discrete(pucci_max(1.0, 2.0), neg).values
    np.testing.assert_allclose(a[np.isfinite(a)], b[np.isfinite(b)], rtol=0, atol=1e-11)


def test_directional_dd_matches_quadratic():
    g = unit_square_grid(33)
    u = quadratic_field(g, np.diag([4.0, 1.0]))
    # along x (theta=0) the offsets are integers: exact second derivative
    val = directional_second_difference(u, (16, 16), 0.0, 3)
    assert val == pytest.approx(4.0, abs=1e-10)
    val = directional_second_difference(u, (16, 16), math.pi / 2, 3)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_directional_dd_boundary_guard():
    g = unit_square_grid(33)
    u = quadratic_field(g, np.eye(2))
    with pytest.raises(ValueError, match="exits domain"):
        directional_second_difference(u, (1, 16), 0.25, 3)


# ---------------------------------------------------------------------------
# scheme structure: homogeneity and monotonicity

SCHEME_OPS = [
    trace_operator(),
    linear_operator(np.diag([2.0, 0.5])),
    pucci_max(1.0, 2.0),
    pucci_min(1.0, 2.0),
]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 10.0))
def test_eval_discrete_positively_homogeneous(seed, sigma):
    g = unit_square_grid(17)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.standard_normal(g.node_count))
    for op in SCHEME_OPS:
        a = eval_discrete(op, u.with_values(sigma * u.values)).values
        b = sigma * eval_discrete(op, u).values
        fin = np.isfinite(a)
        np.testing.assert_allclose(a[fin], b[fin], rtol=1e-12, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 5.0))
def test_scheme_monotone_under_nonnegative_bump(seed, height):
    """Raising one node value never lowers the scheme at other nodes (the
    discrete comparison-principle ingredient)."""
    g = unit_square_grid(17)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.standard_normal(g.node_count))
    j = int(rng.integers(0, g.node_count))
    bumped_vals = u.values.copy()
    bumped_vals[j] += height
    bumped = u.with_values(bumped_vals)
    for op in SCHEME_OPS:
        before = eval_discrete(op, u).values
        after = eval_discrete(op, bumped).values
        ok = np.isfinite(before) & np.isfinite(after)
        ok[j] = False  # the center coefficient is negative by design
        drop = np.min(after[ok] - before[ok]) if ok.any() else 0.0
        assert drop >= -1e-10 * (1.0 + height), (op.kind, drop)


def test_eval_discrete_rejects_3d():
    from ellipticlab import Domain, Grid

    g = Grid(Domain((0.0,) * 3, (1.0,) * 3), (5, 5, 5))
    u = GridFunction(g, np.zeros(g.node_count))
    with pytest.raises(NotImplementedError):
        eval_discrete(parse_operator("trace"), u)
