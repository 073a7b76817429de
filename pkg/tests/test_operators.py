import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticlab import (
    EllipticityParams,
    check_homogeneity,
    check_uniform_ellipticity,
    linear_operator,
    max_of_linear,
    op_eval,
    parse_operator,
    pucci_max,
    pucci_min,
    trace_operator,
)
from ellipticlab.operators import eig2_arrays, operator_spec_string


def random_sym(rng, n, scale=3.0):
    a = rng.standard_normal((n, n)) * scale
    return (a + a.T) / 2


def spectrum_in_band(rng, n, lam1, lam2):
    """A random symmetric matrix with eigenvalues drawn inside [lam1, lam2]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = rng.uniform(lam1, lam2, size=n)
    return q @ np.diag(d) @ q.T


def pucci_oracle_max(m, lam1, lam2):
    """sup over tr(A M) with spec(A) in [lam1, lam2], via the eigenbasis of M."""
    w = np.linalg.eigvalsh(np.asarray(m, dtype=float))
    return float(np.sum(np.where(w > 0, lam2 * w, lam1 * w)))


# ---------------------------------------------------------------------------
# closed-form 2x2 eigenvalues


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_eig2_matches_lapack(seed):
    rng = np.random.default_rng(seed)
    m = random_sym(rng, 2, scale=10.0)
    lo, hi = eig2_arrays(np.array(m[0, 0]), np.array(m[0, 1]), np.array(m[1, 1]))
    ref = np.linalg.eigvalsh(m)
    assert float(lo) == pytest.approx(ref[0], abs=1e-10 * (1 + abs(ref[0])))
    assert float(hi) == pytest.approx(ref[1], abs=1e-10 * (1 + abs(ref[1])))


def test_eig2_vectorized_shapes():
    rng = np.random.default_rng(0)
    a, b, c = rng.standard_normal((3, 50))
    lo, hi = eig2_arrays(a, b, c)
    assert lo.shape == hi.shape == (50,)
    assert np.all(lo <= hi + 1e-15)


# ---------------------------------------------------------------------------
# Pucci envelopes


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 3))
def test_pucci_max_matches_eigen_oracle(seed, n):
    rng = np.random.default_rng(seed)
    m = random_sym(rng, n)
    got = op_eval(pucci_max(0.5, 2.5), m)
    want = pucci_oracle_max(m, 0.5, 2.5)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 3))
def test_pucci_min_is_reflected_max(seed, n):
    rng = np.random.default_rng(seed)
    m = random_sym(rng, n)
    lo = op_eval(pucci_min(0.5, 2.5), m)
    assert lo == pytest.approx(-op_eval(pucci_max(0.5, 2.5), -m), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_pucci_envelopes_bound_every_linear_operator(seed):
    """P-(M) <= tr(A M) <= P+(M) whenever spec(A) lies in the ellipticity band."""
    rng = np.random.default_rng(seed)
    lam1, lam2 = 0.5, 2.5
    m = random_sym(rng, 2)
    a = spectrum_in_band(rng, 2, lam1, lam2)
    val = float(np.trace(a @ m))
    slack = 1e-10 * (1 + abs(val))
    assert op_eval(pucci_min(lam1, lam2), m) - slack <= val
    assert val <= op_eval(pucci_max(lam1, lam2), m) + slack


def test_pucci_on_definite_matrices_is_scaled_trace():
    m = np.diag([1.0, 2.0])  # positive: the sup picks lam2 everywhere
    assert op_eval(pucci_max(0.5, 2.0), m) == pytest.approx(6.0)
    assert op_eval(pucci_min(0.5, 2.0), m) == pytest.approx(1.5)
    assert op_eval(pucci_max(0.5, 2.0), -m) == pytest.approx(-1.5)


def test_trace_and_linear_and_bellman_agree_on_samples():
    rng = np.random.default_rng(42)
    a1 = spectrum_in_band(rng, 2, 0.5, 2.0)
    a2 = spectrum_in_band(rng, 2, 0.5, 2.0)
    bell = max_of_linear([a1, a2])
    for _ in range(20):
        m = random_sym(rng, 2)
        assert op_eval(trace_operator(), m) == pytest.approx(np.trace(m))
        assert op_eval(linear_operator(a1), m) == pytest.approx(np.trace(a1 @ m))
        want = max(np.trace(a1 @ m), np.trace(a2 @ m))
        assert op_eval(bell, m) == pytest.approx(want)


# ---------------------------------------------------------------------------
# axiom checkers

BUILTINS = [
    trace_operator(),
    linear_operator([[2.0, 0.5], [0.5, 1.0]]),
    pucci_max(1.0, 2.0),
    pucci_min(1.0, 2.0),
    max_of_linear([np.diag([1.0, 2.0]), np.diag([2.0, 1.0])]),
]


@pytest.mark.parametrize("op", BUILTINS, ids=lambda o: o.kind)
def test_builtin_operators_are_uniformly_elliptic(op):
    rep = check_uniform_ellipticity(op, sample_count=400, seed=1)
    assert rep.passed, rep
    assert rep.worst_normalized <= 1e-10


@pytest.mark.parametrize("op", BUILTINS, ids=lambda o: o.kind)
def test_builtin_operators_are_one_homogeneous(op):
    rep = check_homogeneity(op, sample_count=400, seed=1)
    assert rep.passed, rep
    assert rep.worst_normalized <= 1e-10


def test_ellipticity_checker_catches_a_fraud():
    fraud = lambda m: float(np.trace(m)) ** 2
    rep = check_uniform_ellipticity(fraud, params=EllipticityParams(1.0, 1.0),
                                    sample_count=200, seed=0)
    assert not rep.passed


def test_homogeneity_checker_catches_an_offset():
    shifted = lambda m: float(np.trace(m)) + 1.0
    rep = check_homogeneity(shifted, sample_count=200, seed=0)
    assert not rep.passed


def test_bare_callable_needs_params():
    with pytest.raises(ValueError, match="params"):
        check_uniform_ellipticity(lambda m: 0.0, sample_count=10)


def test_reports_are_reproducible():
    a = check_uniform_ellipticity(pucci_max(1.0, 3.0), sample_count=300, seed=9)
    b = check_uniform_ellipticity(pucci_max(1.0, 3.0), sample_count=300, seed=9)
    assert a.worst_violation == b.worst_violation
    assert a.worst_normalized == b.worst_normalized


# ---------------------------------------------------------------------------
# spec strings


@pytest.mark.parametrize("spec", ["trace", "pucci+:1.0,2.0", "pucci-:0.5,3.0",
                                  "linear:2.0,0.5,1.0", "linear:1.5"])
def test_parse_round_trips(spec):
    op = parse_operator(spec)
    again = parse_operator(operator_spec_string(op))
    assert again.kind == op.kind
    rng = np.random.default_rng(3)
    for _ in range(5):
        m = random_sym(rng, op.mats[0].shape[0] if op.kind == "linear" else 2)
        assert op_eval(again, m) == op_eval(op, m)


@pytest.mark.parametrize("bad", ["", "puccimax:1,2", "pucci+:2,1", "pucci+:1",
                                 "pucci+:a,b", "trace:1", "linear:1,2"])
def test_parse_rejects_malformed_specs(bad):
    with pytest.raises(ValueError):
        parse_operator(bad)


def test_ellipticity_params_validated():
    with pytest.raises(ValueError):
        EllipticityParams(0.0, 1.0)
    with pytest.raises(ValueError):
        EllipticityParams(2.0, 1.0)
