import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticlab import (
    Ball,
    DecayConfig,
    Domain,
    GridFunction,
    best_affine,
    build_fixture,
    campanato_sup,
    decay_profile,
    normalize,
    oscillation,
    rescale_sequence,
    unit_ball_grid,
    verify_decay_chain,
    write_decay_profile,
)

from conftest import dense_minimax_width, field, unit_square_grid


# ---------------------------------------------------------------------------
# config invariants


def test_decay_config_defaults_and_sigma():
    cfg = DecayConfig()
    assert cfg.lam == 0.25 and cfg.beta == 0.5 and cfg.lam0 == 0.25
    assert cfg.sigma == pytest.approx(math.log(2.0) / -math.log(0.25))
    assert cfg.sigma == pytest.approx(0.5)


def test_decay_config_rejects_half_lambda():
    # 2 * lam0^(1-beta) = sqrt(2) > 1: the induction never closes at lam = 1/2
    with pytest.raises(ValueError, match="does not close"):
        DecayConfig(lam=0.5, beta=0.5)


@pytest.mark.parametrize("kw", [dict(lam=0.0), dict(lam=1.0), dict(beta=0.0),
                                dict(beta=1.0), dict(lam=0.25, lam0=0.1),
                                dict(eps=0.0), dict(levels=0)])
def test_decay_config_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        DecayConfig(**kw)


def test_decay_config_marginal_closure_allowed():
    # equality 2 lam^(1-beta) = 1 is the borderline induction; keep it legal
    DecayConfig(lam=0.25, beta=0.5)


# ---------------------------------------------------------------------------
# best affine fits


def test_parabola_fit_matches_chebyshev(grid65):
    u = build_fixture("quad", 65)
    fit = best_affine(u, Ball((0.0, 0.0), 0.5))
    np.testing.assert_allclose(fit.q, 0.0, atol=1e-12)
    assert fit.osc_value == pytest.approx(0.125, abs=1e-12)


def test_affine_fit_is_callable(grid33):
    u = field(grid33, lambda p: 1.0 + 2.0 * p[:, 0] - 0.5 * p[:, 1])
    fit = best_affine(u, Ball((0.0, 0.0), 0.5))
    assert fit.osc_value == pytest.approx(0.0, abs=1e-12)
    pts = np.array([[0.1, 0.2], [-0.3, 0.0]])
    np.testing.assert_allclose(fit(pts), 1.0 + 2.0 * pts[:, 0] - 0.5 * pts[:, 1],
                               atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_best_affine_equivariant_under_affine_shifts(seed, c, p0, p1):
    """Adding c + p.x moves the slope by exactly p and leaves the width alone."""
    g = unit_square_grid(17)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.standard_normal(g.node_count))
    ball = Ball((0.0, 0.0), 0.8)
    base = best_affine(u, ball)
    shifted = best_affine(
        field(g, lambda x: u.values + c + x @ np.array([p0, p1])), ball)
    assert shifted.osc_value == pytest.approx(base.osc_value, rel=1e-9, abs=1e-9)
    np.testing.assert_allclose(shifted.q, np.asarray(base.q) + [p0, p1],
                               rtol=0, atol=2e-7)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_best_affine_matches_dense_search(seed):
    g = unit_square_grid(21)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.standard_normal(g.node_count))
    ball = Ball((0.0, 0.0), 0.7)
    fit = best_affine(u, ball)
    pts = np.array([p for p, _ in __import__("ellipticlab").restrict(u, ball)])
    vals = np.array([v for _, v in __import__("ellipticlab").restrict(u, ball)])
    _, brute = dense_minimax_width(pts, vals)
    assert abs(fit.osc_value - brute) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.2, 0.4), st.floats(0.45, 0.9))
def test_corrected_oscillation_monotone_in_radius(seed, r1, r2):
    g = unit_square_grid(33)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.standard_normal(g.node_count))
    psi1 = best_affine(u, Ball((0.0, 0.0), r1)).osc_value
    psi2 = best_affine(u, Ball((0.0, 0.0), r2)).osc_value
    assert psi1 <= psi2 + 1e-12


# ---------------------------------------------------------------------------
# decay profiles


def test_profile_recovers_quadratic_exponent():
    u = build_fixture("quad", 257)
    cfg = DecayConfig(lam=0.25, beta=0.5, levels=2)
    prof = decay_profile(u, (0.0, 0.0), cfg, radius0=1.0)
    assert prof.slope == pytest.approx(2.0, abs=1e-9)
    assert prof.beta_hat == pytest.approx(1.0, abs=1e-9)
    assert all(prof.usable)
    assert prof.spread == 0.0  # leave-one-out needs more than 3 usable levels
    np.testing.assert_allclose(
        prof.phi, np.asarray(prof.psi) / np.asarray(prof.radii) ** 1.5, rtol=1e-12)


def test_profile_recovers_holder_exponent():
    u = build_fixture("radial-holder:0.5", 257)
    cfg = DecayConfig(lam=0.25, beta=0.5, levels=2)
    prof = decay_profile(u, (0.0, 0.0), cfg, radius0=1.0)
    assert prof.slope == pytest.approx(1.5, abs=1e-6)
    assert prof.beta_hat == pytest.approx(0.5, abs=1e-6)


def test_profile_spread_with_four_usable_levels():
    u = build_fixture("harmonic", 1025)
    cfg = DecayConfig(lam=0.25, beta=0.5, levels=3)
    prof = decay_profile(u, (0.0, 0.0), cfg, radius0=1.0)
    assert sum(prof.usable) == 4
    assert prof.beta_hat == pytest.approx(1.0, abs=1e-6)
    assert 0.0 <= prof.spread < 1e-6


def test_profile_resolution_floor():
    u = build_fixture("harmonic", 65)
    with pytest.raises(ValueError, match="resolution floor violated"):
        decay_profile(u, (0.0, 0.0), DecayConfig(levels=4), radius0=1.0)


def test_profile_needs_three_usable_levels():
    g = unit_square_grid(257)
    aff = field(g, lambda p: 0.25 + 0.5 * p[:, 0] - 0.125 * p[:, 1])
    with pytest.raises(ValueError, match="fewer than 3 usable levels"):
        decay_profile(aff, (0.0, 0.0), DecayConfig(levels=2), radius0=1.0)


def test_chain_certificate_on_harmonic():
    u = build_fixture("harmonic", 257)
    cfg = DecayConfig(lam=0.25, beta=0.5, levels=2)
    prof = decay_profile(u, (0.0, 0.0), cfg, radius0=1.0)
    rows = verify_decay_chain(prof)
    assert [ok for _, _, _, ok in rows] == [True] * 3
    # psi(r) = 2 r^2 exactly on dyadic grids: Phi_k = 2 * 2^-k vs 16 * 2^-k
    for k, phi, bound, _ in rows:
        assert phi == pytest.approx(2.0 * 2.0 ** -k, rel=1e-12)
        assert bound == pytest.approx(16.0 * 2.0 ** -k, rel=1e-12)


def test_profile_csv_is_deterministic(tmp_path):
    u = build_fixture("quad", 257)
    prof = decay_profile(u, (0.0, 0.0), DecayConfig(levels=2), radius0=1.0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_decay_profile(prof, a)
    write_decay_profile(prof, b)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    for footer in ("# slope", "# beta_hat", "# sigma", "# bootstrap_spread"):
        assert footer in text


# ---------------------------------------------------------------------------
# normalization and blow-up bookkeeping


def test_normalize_harmonic_kappa():
    u = build_fixture("harmonic", 257)
    w, kappa = normalize(u, radius=1.0, lam=0.0, eps=0.5)
    assert kappa == pytest.approx(4.0)  # 0/eps + 1 + osc 2 + 1
    assert oscillation(w, Ball((0.0, 0.0), 1.0)) == pytest.approx(0.5)


def test_normalize_epsilon_postcondition():
    u = build_fixture("quad", 129)
    for radius in (1.0, 0.5):
        for lam in (0.0, 1.0, 7.0):
            w, kappa = normalize(u, radius=radius, lam=lam, eps=0.5)
            assert radius ** 2 * lam / kappa <= 0.5 + 1e-15
            assert oscillation(w, Ball((0.0, 0.0), 1.0)) < 1.0


def test_rescale_requires_unit_oscillation():
    u = build_fixture("harmonic", 129)
    with pytest.raises(ValueError, match=r"must be < 1 \(got 2\)"):
        rescale_sequence(u, DecayConfig())


def test_rescale_marginal_case_is_pinned():
    """lam = 1/4, beta = 1/2 sits exactly on the induction boundary: the
    rescaled oscillation neither grows nor decays."""
    u = build_fixture("harmonic", 257)
    w, _ = normalize(u, radius=1.0, lam=0.0, eps=0.5, unit_nodes=257)
    seq = rescale_sequence(w, DecayConfig(lam=0.25, beta=0.5), levels=8)
    assert seq.truncated and seq.requested == 8
    assert len(seq.states) == 3  # floor: lam^k >= 4 h_source
    for s in seq.states:
        assert s.osc == pytest.approx(0.5, abs=1e-12)
        assert s.osc < 1.0
        np.testing.assert_allclose(s.q, 0.0, atol=1e-12)


def test_rescale_accumulates_affine_corrections():
    g = unit_square_grid(257)
    u = field(g, lambda p: (p[:, 0] ** 2 - p[:, 1] ** 2) / 4.0 + 0.1 * p[:, 0])
    seq = rescale_sequence(u, DecayConfig(lam=0.25, beta=0.5), levels=2)
    # the level-0 fit strips the planted slope from every later level
    assert seq.states[1].q[0] == pytest.approx(0.1, abs=1e-9)
    assert seq.states[1].q[1] == pytest.approx(0.0, abs=1e-9)


def test_unit_ball_grid_shape():
    g = unit_ball_grid(2, nodes=65)
    assert g.shape == (65, 65)
    assert g.domain.lower == (-1.0, -1.0) and g.domain.upper == (1.0, 1.0)


# ---------------------------------------------------------------------------
# Campanato sup over a net


def test_campanato_sup_harmonic_matches_closed_form():
    # psi(r) = 2 r^2 so Phi = 2 sqrt(r): the sup sits at the largest net radius
    u = build_fixture("harmonic", 129)
    got = campanato_sup(u, u.grid.domain, beta=0.5, radius_levels=3)
    assert 1.8 <= got <= 2.0
    assert got == campanato_sup(u, u.grid.domain, beta=0.5, radius_levels=3)


def test_campanato_sup_empty_net():
    u = build_fixture("quad", 33)
    with pytest.raises(ValueError, match="net empty"):
        campanato_sup(u, u.grid.domain, beta=0.5, min_radius_nodes=10 ** 6)
