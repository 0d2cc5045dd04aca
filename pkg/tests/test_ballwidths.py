"""Finite-dimensional width formulas, layer bodies, and the numeric search."""

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from widthlab import (
    INF,
    AbstractParams,
    BallSpec,
    IntersectionSpec,
    SchemaError,
    SearchConfig,
    SizeLimitError,
    SpaceParams,
    UnsupportedRegimeError,
    brute_force_width_oracle,
    exact_width,
    gluskin_order,
    interpolation_ball,
    intersection_width_upper,
    lq_distances,
    numeric_width_profile,
    numeric_width_upper,
    ring_level_body,
    ring_radii,
    sample_extreme_points,
)

FAST = SearchConfig(seed=0, restarts=6, samples_per_eval=300, refine_steps=15)


class TestExactWidth:
    def test_spot_values(self):
        assert exact_width(4, 1, INF, 1.0).value == pytest.approx(3.0)
        assert exact_width(3, 1, INF, 1.0).value == pytest.approx(2.0)
        assert exact_width(4, 3, 2.0, 2.0).value == pytest.approx(1.0)
        assert exact_width(8, 3, INF, 2.0).value == pytest.approx(math.sqrt(5))

    def test_radius_scaling(self):
        base = exact_width(8, 3, INF, 2.0).value
        assert exact_width(8, 3, INF, 2.0, radius=2.5).value == pytest.approx(2.5 * base)

    def test_full_rank_is_zero(self):
        assert exact_width(4, 4, INF, 2.0).value == 0.0

    def test_needs_q_le_p(self):
        with pytest.raises(UnsupportedRegimeError):
            exact_width(4, 1, 1.0, 2.0)


class TestGluskinOrder:
    def test_small_rank_saturates(self):
        # n^-1/2 N^1/q >= 1 keeps the min at 1
        est = gluskin_order(64, 2, 2.0, 4.0)
        assert est.value == pytest.approx(1.0)
        assert est.kind == "order"

    def test_half_rate_regime(self):
        # lambda = 1 when 1/p - 1/q >= 1/2 - 1/q
        est = gluskin_order(64, 32, 1.0, 4.0)
        want = min(1.0, 32 ** -0.5 * 64 ** 0.25)
        assert est.value == pytest.approx(want)

    def test_partial_exponent(self):
        est = gluskin_order(256, 64, 2.0, 4.0)
        lam = (0.5 - 0.25) / (0.5 - 0.25)
        assert est.value == pytest.approx(min(1.0, 64 ** -0.5 * 256 ** 0.25) ** lam)

    def test_easy_pair_is_order_one(self):
        assert gluskin_order(64, 16, 1.5, 2.0).value == pytest.approx(1.0)


def test_interpolation_ball_radius():
    spec = IntersectionSpec(N=8, ball0=BallSpec(8, 1.0, 2.0),
                            ball1=BallSpec(8, INF, 8.0))
    ball, lam = interpolation_ball(spec, 2.0)
    assert lam == pytest.approx(0.5)
    assert ball.radius == pytest.approx(4.0)
    with pytest.raises(UnsupportedRegimeError):
        interpolation_ball(spec, 0.9)


def test_ring_radii_frozen_oracle():
    a = AbstractParams(s_star=1.0, gamma_star=0.0, alpha_star=1.0, mu_star=2.0)
    s = SpaceParams(p0=2.0, p1=2.0, q=2.0)
    r0, r1 = ring_radii(a, s, 1.0, 0.0)
    assert r0 == pytest.approx(0.5)
    assert r1 == pytest.approx(4.0)
    # depth trades the radii at the stated per-level rates
    r0m, r1m = ring_radii(a, s, 1.0, 3.0)
    assert r0m == pytest.approx(0.5)  # p0 == q: no depth effect
    assert r1m == pytest.approx(4.0 * 2.0 ** -3.0)


def test_ring_level_body_frozen_oracle():
    a = AbstractParams(s_star=1.0, gamma_star=0.0, alpha_star=1.0, mu_star=2.0)
    s = SpaceParams(p0=2.0, p1=2.0, q=2.0)
    body = ring_level_body(a, s, 1, 0)
    assert body.N == 1
    assert body.ball0.radius == pytest.approx(0.5)
    assert body.ball1.radius == pytest.approx(4.0)
    est = intersection_width_upper(body, 0, 2.0)
    assert est.value == pytest.approx(0.5)
    assert est.method == "ball0-relax"


def test_ring_level_body_dimension_growth():
    a = AbstractParams(s_star=1.0, gamma_star=1.0, alpha_star=1.0, mu_star=2.0)
    s = SpaceParams(p0=2.0, p1=2.0, q=2.0)
    assert ring_level_body(a, s, 3, 2).N == 32
    with pytest.raises(SizeLimitError):
        ring_level_body(a, s, 70, 0)


def test_intersection_full_rank():
    body = ring_level_body(
        AbstractParams(s_star=1.0, gamma_star=1.0, alpha_star=1.0, mu_star=2.0),
        SpaceParams(p0=2.0, p1=2.0, q=2.0), 2, 0)
    est = intersection_width_upper(body, body.N, 2.0)
    assert est.value == 0.0 and est.method == "full-rank"


def test_lq_distances_l2_matches_projection():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 6))
    V = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    d = lq_distances(X, V, 2.0)
    want = np.linalg.norm(X - X @ V @ V.T, axis=1)
    assert np.allclose(d, want, atol=1e-10)


def test_lq_distances_l1_small_case():
    # distance from (1, 1) to span{(1, 0)} in l1 is 1
    X = np.array([[1.0, 1.0]])
    V = np.array([[1.0], [0.0]])
    assert lq_distances(X, V, 1.0)[0] == pytest.approx(1.0, abs=1e-8)


def test_lq_distances_linf():
    # distance from (1, 1, -1) to span{e1} in sup norm
    X = np.array([[1.0, 1.0, -1.0]])
    V = np.eye(3)[:, :1]
    assert lq_distances(X, V, INF)[0] == pytest.approx(1.0, abs=1e-8)


def test_sample_extreme_points_stay_in_body():
    body = IntersectionSpec(N=5, ball0=BallSpec(5, 2.0, 1.0),
                            ball1=BallSpec(5, INF, 0.3))
    X = sample_extreme_points(body, 200, seed=4)
    assert np.all(np.linalg.norm(X, axis=1) <= 1.0 + 1e-9)
    assert np.max(np.abs(X)) <= 0.3 + 1e-9


def test_numeric_profile_matches_closed_form():
    body = BallSpec(N=4, p=INF, radius=1.0)
    prof = numeric_width_profile(body, 4, 2.0, FAST)
    want = [2.0, math.sqrt(3.0), math.sqrt(2.0), 1.0, 0.0]
    got = [e.value for e in prof]
    assert got == pytest.approx(want, rel=5e-3)


def test_numeric_profile_monotone():
    body = IntersectionSpec(N=6, ball0=BallSpec(6, 2.0, 1.0),
                            ball1=BallSpec(6, 1.0, 2.0))
    vals = [e.value for e in numeric_width_profile(body, 6, 2.0, FAST)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_numeric_width_scale_equivariant_exact():
    cfg = FAST
    base = numeric_width_upper(BallSpec(N=5, p=INF, radius=1.0), 2, 2.0, cfg)
    scaled = numeric_width_upper(BallSpec(N=5, p=INF, radius=3.7), 2, 2.0, cfg)
    assert scaled.value == 3.7 * base.value  # bitwise: same normalized search


def test_numeric_width_dimension_cap():
    with pytest.raises(SizeLimitError):
        numeric_width_upper(BallSpec(N=80, p=2.0, radius=1.0), 1, 2.0, FAST)


def test_oracle_matches_closed_form():
    est = brute_force_width_oracle(BallSpec(N=4, p=INF, radius=1.0), 1, 2.0)
    assert est.value == pytest.approx(math.sqrt(3.0), rel=0.02)
    assert est.rel_tol == 0.02


def test_oracle_domain_cap():
    with pytest.raises(SizeLimitError):
        brute_force_width_oracle(BallSpec(N=6, p=2.0, radius=1.0), 1, 2.0)
    with pytest.raises(SizeLimitError):
        brute_force_width_oracle(BallSpec(N=4, p=2.0, radius=1.0), 3, 2.0)


def test_rank_bounds_checked():
    with pytest.raises(SchemaError):
        exact_width(4, 5, INF, 2.0)
    with pytest.raises(SchemaError):
        exact_width(4, -1, INF, 2.0)


@seed(23)
@settings(max_examples=25, deadline=None)
@given(radius=st.floats(0.01, 100.0), n=st.integers(0, 3))
def test_numeric_width_scales_linearly(radius, n):
    cfg = SearchConfig(seed=1, restarts=3, samples_per_eval=120, refine_steps=5)
    base = numeric_width_upper(BallSpec(N=4, p=2.0, radius=1.0), n, 2.0, cfg)
    scaled = numeric_width_upper(BallSpec(N=4, p=2.0, radius=radius), n, 2.0, cfg)
    assert scaled.value == pytest.approx(radius * base.value, rel=5e-15, abs=0.0)


@seed(29)
@settings(max_examples=10, deadline=None)
@given(n=st.integers(0, 2), q=st.sampled_from([1.0, 2.0]))
def test_numeric_never_beats_oracle(n, q):
    body = IntersectionSpec(N=4, ball0=BallSpec(4, 2.0, 1.0),
                            ball1=BallSpec(4, INF, 0.6))
    oracle = brute_force_width_oracle(body, n, q)
    upper = numeric_width_upper(body, n, q, FAST)
    assert upper.value >= oracle.value * (1.0 - oracle.rel_tol) - 1e-9


def test_oracle_intermediate_norm():
    # the damped-Newton distance path, against the lighter search budget
    body = IntersectionSpec(N=4, ball0=BallSpec(4, 2.0, 1.0),
                            ball1=BallSpec(4, INF, 0.6))
    cfg = SearchConfig(seed=0, restarts=8, samples_per_eval=1500,
                       refine_steps=20)
    oracle = brute_force_width_oracle(body, 1, 4.0, cfg)
    upper = numeric_width_upper(body, 1, 4.0, FAST)
    assert upper.value >= oracle.value * (1.0 - oracle.rel_tol) - 1e-9
    assert oracle.value == pytest.approx(0.744, rel=0.05)
