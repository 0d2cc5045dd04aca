"""Partitions, projections, critical scales, rank allocation, experiments."""

import math

import numpy as np
import pytest

from widthlab import (
    AbstractParams,
    DegenerateParameterError,
    DomainSpec,
    QuadratureSpec,
    SchemaError,
    SobolevProblem,
    SpaceParams,
    UnsupportedRegimeError,
    approximate,
    approximation_error,
    build_partition,
    check_membership,
    critical_scales,
    default_eps,
    default_quadrature,
    domain_for_problem,
    exponent_profile,
    concrete_exponents,
    l2_project,
    problem_to_abstract,
    project_eval,
    rank_allocation,
    refinement_children,
    ring_cells,
    ring_piece_count,
    ring_segments,
    run_experiment,
    target_norm,
    weight_functions,
    weighted_norm,
)
from widthlab.multiscale import EnsembleMember, _half_transfer

EXACT = 1e-12


def pinned_problem():
    return SobolevProblem.power_hset(
        r=1, d=1, theta=0.0, space=SpaceParams(p0=2.0, p1=2.0, q=2.0),
        beta=1.0, sigma=1.0, lam=0.25)


def line_problem():
    return SobolevProblem.power_rd(
        r=1, d=1, space=SpaceParams(p0=2.0, p1=2.0, q=2.0),
        beta=1.0, sigma=1.0, lam=0.25)


def log_problem():
    return SobolevProblem.log_hset(
        r=1, d=1, space=SpaceParams(p0=2.0, p1=2.0, q=2.0),
        gamma=0.0, mu=0.5, alpha=0.75, nu=0.25)


class TestGeometry:
    def test_domain_selection(self):
        assert domain_for_problem(pinned_problem(), t_max=8).geometry == \
            "interval_singular_origin"
        assert domain_for_problem(line_problem(), t_max=8).geometry == \
            "real_line"
        dom = domain_for_problem(log_problem(), t_max=5)
        assert dom.geometry == "interval_singular_origin" and dom.shell_blocks

    def test_positive_scaling_dimension_unsupported(self):
        p = SobolevProblem.power_hset(
            r=1, d=1, theta=0.5, space=SpaceParams(p0=2.0, p1=2.0, q=2.0),
            beta=1.0, sigma=1.0, lam=0.25)
        with pytest.raises(UnsupportedRegimeError):
            domain_for_problem(p, t_max=8)

    def test_interval_ring_cells(self):
        dom = domain_for_problem(pinned_problem(), t_max=8)
        assert ring_segments(dom, 2) == [(0.125, 0.25)]
        assert ring_piece_count(dom, 2) == 1
        cells = ring_cells(dom, 2, 3)
        assert len(cells) == 8
        widths = [c.b - c.a for c in cells]
        assert widths == pytest.approx([0.125 / 8] * 8, abs=EXACT)
        # cells tile the ring
        assert cells[0].a == pytest.approx(0.125)
        assert cells[-1].b == pytest.approx(0.25)

    def test_line_ring_cells(self):
        dom = domain_for_problem(line_problem(), t_max=8)
        assert ring_segments(dom, 0) == [(-1.0, 1.0)]
        segs = ring_segments(dom, 2)
        assert segs == [(-4.0, -2.0), (2.0, 4.0)]
        assert ring_piece_count(dom, 2) == 1
        # the undivided ring is one disconnected cell
        base = ring_cells(dom, 2, 0)
        assert len(base) == 1 and len(base[0].segments) == 2
        assert base[0].measure == pytest.approx(4.0)
        # depth m splits evenly across both components
        cells = ring_cells(dom, 2, 3)
        assert len(cells) == 8
        assert all(len(c.segments) == 1 for c in cells)

    def test_shell_ring_cells(self):
        dom = domain_for_problem(log_problem(), t_max=4)
        assert ring_piece_count(dom, 2) == 4  # shells 4..7
        cells = ring_cells(dom, 2, 1)
        assert len(cells) == 8
        widths = sorted({round(c.b - c.a, 15) for c in cells})
        assert widths == pytest.approx([2.0 ** -9, 2.0 ** -8,
                                        2.0 ** -7, 2.0 ** -6])

    def test_refinement_children_partition_parent(self):
        dom = domain_for_problem(line_problem(), t_max=8)
        parent = ring_cells(dom, 1, 1)[0]
        kids = refinement_children(dom, parent)
        assert len(kids) == 2
        assert sum(k.measure for k in kids) == pytest.approx(parent.measure)

    def test_build_partition_counts(self):
        dom = domain_for_problem(pinned_problem(), t_max=4)
        part = build_partition(dom, 2)
        assert set(part) == {(t, m) for t in range(5) for m in range(3)}
        assert len(part[(3, 2)]) == 4


class TestWeightsAndNorms:
    def test_power_weights(self):
        g, w, v = weight_functions(pinned_problem())
        assert g(0.5) == pytest.approx(2.0)       # x^-beta
        assert w(0.25) == pytest.approx(4.0)      # x^-sigma
        assert v(0.0625) == pytest.approx(2.0)    # x^-lambda
    def test_line_weights(self):
        g, w, v = weight_functions(line_problem())
        assert g(1.0) == pytest.approx(2.0)       # (1+|x|)^beta
        assert w(-3.0) == pytest.approx(4.0)
        assert v(15.0) == pytest.approx(2.0)

    def test_log_weights(self):
        p = log_problem()
        g, w, v = weight_functions(p)
        x = 2.0 ** -8
        want = x ** -p.beta * abs(math.log(x)) ** p.mu
        assert g(x) == pytest.approx(want, rel=1e-12)

    def test_weighted_norm_closed_form(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=10)
        quad = default_quadrature(p, dom)
        # integral of (x^-0.25 * x)^2 over (0,1) is 1/(2*1.5+1)... with the
        # domain truncated at 2^-11 the tail is below the quadrature noise
        val = weighted_norm(lambda x: np.asarray(x), lambda x: x ** -0.25,
                            2.0, dom, quad)
        assert val == pytest.approx((1.0 / 2.5) ** 0.5, rel=1e-9)

    def test_sup_norm(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=6)
        quad = default_quadrature(p, dom)
        from widthlab import INF
        val = weighted_norm(lambda x: np.ones_like(np.asarray(x)),
                            lambda x: np.ones_like(np.asarray(x)),
                            INF, dom, quad)
        assert val == pytest.approx(1.0, rel=1e-12)

    def test_divergent_norm_rejected(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=6)
        quad = default_quadrature(p, dom)
        with pytest.raises(UnsupportedRegimeError):
            weighted_norm(lambda x: np.ones_like(np.asarray(x)),
                          lambda x: x ** -2.0, 2.0, dom, quad,
                          singular_power=-2.0)

    def test_target_norm_uses_error_weight(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=12)
        # |x|^0.25 cancels the error weight x^-0.25 exactly
        val = target_norm(lambda x: np.asarray(x) ** 0.25, p, dom)
        assert val == pytest.approx(1.0, rel=1e-8)

    def test_membership_of_scaled_identity(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=12)
        member = EnsembleMember(
            name="linear", value=lambda x: np.asarray(x, float),
            deriv_r=lambda x: np.ones_like(np.asarray(x, float)))
        sob, zero = check_membership(member, p, dom)
        # derivative 1 against g = x^-1: integral of x^2 over (0,1) -> 1/3
        assert sob == pytest.approx((1.0 / 3.0) ** 0.5, rel=1e-9)
        # x against w = x^-1: interval length, graded tail below 2^-25
        assert zero == pytest.approx(1.0, rel=1e-7)


class TestProjections:
    def test_constant_projection_residual(self):
        dom = domain_for_problem(pinned_problem(), t_max=6)
        cell = ring_cells(dom, 0, 0)[0]  # (0.5, 1)
        coeffs = l2_project(lambda x: np.asarray(x), cell, 0)
        xs = np.linspace(0.5001, 0.9999, 400)
        resid = np.asarray(xs) - project_eval(cell, coeffs, xs)
        # best constant misses a linear by h^1.5/sqrt(12) in L2
        l2 = math.sqrt(np.trapezoid(resid ** 2, xs))
        assert l2 == pytest.approx(0.5 ** 1.5 / math.sqrt(12.0), rel=2e-3)

    def test_linear_projection_of_square(self):
        dom = domain_for_problem(pinned_problem(), t_max=6)
        cell = ring_cells(dom, 0, 0)[0]
        coeffs = l2_project(lambda x: np.asarray(x) ** 2, cell, 1)
        xs = np.linspace(0.5001, 0.9999, 2000)
        resid = np.asarray(xs) ** 2 - project_eval(cell, coeffs, xs)
        l2 = math.sqrt(np.trapezoid(resid ** 2, xs))
        # h^2.5/(6*sqrt(5)) at h = 1/2
        assert l2 == pytest.approx(0.5 ** 2.5 / (6 * math.sqrt(5)), rel=3e-3)

    def test_polynomial_reproduction(self):
        dom = domain_for_problem(pinned_problem(), t_max=6)
        cell = ring_cells(dom, 3, 2)[1]
        f = lambda x: 3.0 - 2.0 * np.asarray(x)
        coeffs = l2_project(f, cell, 1)
        xs = np.linspace(cell.a + 1e-9, cell.b - 1e-9, 50)
        assert np.allclose(project_eval(cell, coeffs, xs), f(xs), atol=1e-12)

    def test_disconnected_cell_projection(self):
        dom = domain_for_problem(line_problem(), t_max=6)
        cell = ring_cells(dom, 2, 0)[0]  # both components
        f = lambda x: np.asarray(x) ** 2
        coeffs = l2_project(f, cell, 2)
        for seg in cell.segments:
            xs = np.linspace(seg[0] + 1e-9, seg[1] - 1e-9, 30)
            assert np.allclose(project_eval(cell, coeffs, xs), f(xs),
                               atol=1e-10)

    def test_two_scale_transfer_reproduces_polynomials(self):
        for degree in range(4):
            TL, TR = _half_transfer(degree)
            rng = np.random.default_rng(degree)
            dom = domain_for_problem(pinned_problem(), t_max=6)
            cell = ring_cells(dom, 1, 0)[0]
            kids = refinement_children(dom, cell)
            coeffs = rng.standard_normal(degree + 1)
            xs_l = np.linspace(kids[0].a + 1e-12, kids[0].b - 1e-12, 25)
            xs_r = np.linspace(kids[1].a + 1e-12, kids[1].b - 1e-12, 25)
            assert np.allclose(project_eval(kids[0], TL @ coeffs, xs_l),
                               project_eval(cell, coeffs, xs_l), atol=1e-12)
            assert np.allclose(project_eval(kids[1], TR @ coeffs, xs_r),
                               project_eval(cell, coeffs, xs_r), atol=1e-12)


class TestCriticalScales:
    def a(self):
        return AbstractParams(s_star=1.0, gamma_star=0.0,
                              alpha_star=1.0, mu_star=2.0)

    def test_frozen_oracle(self):
        cs = critical_scales(self.a(), SpaceParams(2.0, 2.0, 2.0), 8)
        assert cs.m_hat(0.0) == pytest.approx(3.0, abs=EXACT)
        assert cs.m_hat(2.0) == pytest.approx(3.0, abs=EXACT)
        assert cs.m_tilde(1.0) == pytest.approx(3.0, abs=EXACT)
        assert cs.m_tilde(2.0) == pytest.approx(6.0, abs=EXACT)
        assert cs.t_tilde == pytest.approx(1.0, abs=EXACT)
        assert cs.t_flat == pytest.approx(1.0, abs=EXACT)

    def test_identity_residuals_vanish(self):
        cs = critical_scales(self.a(), SpaceParams(2.0, 2.0, 2.0), 64)
        res = cs.identity_residuals()
        assert max(abs(v) for v in res.values()) <= 1e-10

    def test_identity_residuals_q_above_two(self):
        a = AbstractParams(s_star=2.0, gamma_star=0.5,
                           alpha_star=0.7, mu_star=0.7)
        cs = critical_scales(a, SpaceParams(2.5, 4.0, 3.0), 128)
        res = cs.identity_residuals()
        assert max(abs(v) for v in res.values()) <= 1e-10
        assert cs.t_hat is not None

    def test_degenerate_drift(self):
        a = AbstractParams(s_star=1.0, gamma_star=0.0,
                           alpha_star=-1.0, mu_star=-2.0)
        with pytest.raises(DegenerateParameterError):
            critical_scales(a, SpaceParams(2.0, 2.0, 2.0), 8)


class TestAllocation:
    def test_pinned_allocation(self):
        p = pinned_problem()
        a = problem_to_abstract(p)
        prof = exponent_profile(p.space, 1.0, concrete_exponents(p))
        cs = critical_scales(a, p.space, 64)
        alloc = rank_allocation(cs, prof.case_id, 64, eps=0.2, r0=p.r)
        assert alloc.case_id == 1
        assert alloc.anchor_t == pytest.approx(6.0)
        assert alloc.t_cut == 7
        assert alloc.total_rank == 240
        assert alloc.corrections == ()

    def test_rank_grows_linearly(self):
        p = pinned_problem()
        a = problem_to_abstract(p)
        prof = exponent_profile(p.space, 1.0, concrete_exponents(p))
        ratios = []
        for n in (64, 256, 1024):
            cs = critical_scales(a, p.space, n)
            alloc = rank_allocation(cs, prof.case_id, n, eps=0.2, r0=p.r)
            ratios.append(alloc.total_rank / n)
        assert max(ratios) <= 2.0 * min(ratios)

    def test_budget_mismatch(self):
        p = pinned_problem()
        cs = critical_scales(problem_to_abstract(p), p.space, 64)
        with pytest.raises(SchemaError):
            rank_allocation(cs, 1, 32, eps=0.2)
        with pytest.raises(SchemaError):
            rank_allocation(cs, 1, 64, eps=0.0)

    def test_correction_layers_present_above_two(self):
        sp = SpaceParams(p0=2.5, p1=4.0, q=3.0)
        p = SobolevProblem.power_hset(r=2, d=1, theta=0.0, space=sp,
                                      beta=2.5, sigma=1.0, lam=0.25)
        a = problem_to_abstract(p)
        prof = exponent_profile(sp, a.s_star, concrete_exponents(p))
        cs = critical_scales(a, sp, 64)
        alloc = rank_allocation(cs, prof.case_id, 64,
                                eps=default_eps(prof), r0=p.r)
        assert alloc.case_id == 8
        assert len(alloc.corrections) > 0
        budgets = [l for (_, _, l) in alloc.corrections]
        assert all(b >= 1 for b in budgets)


class TestExperiment:
    def test_single_bump_error_decreases(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=10)
        from widthlab import membership_ensemble
        ens = membership_ensemble(p, dom, [(2, 0), (5, 0)])
        rows = run_experiment(p, dom, [16, 64], ens, eps=0.2)
        assert rows[1].error <= rows[0].error
        assert rows[0].rank <= 16 * 4
        assert all(r.seconds >= 0.0 for r in rows)

    def test_experiment_is_deterministic(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=10)
        from widthlab import membership_ensemble
        ens = membership_ensemble(p, dom, [(3, 0)])
        a = run_experiment(p, dom, [16, 32], ens, eps=0.2)
        b = run_experiment(p, dom, [16, 32], ens, eps=0.2)
        assert [r.error for r in a] == [r.error for r in b]
        assert [r.rank for r in a] == [r.rank for r in b]

    def test_budget_validation(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=6)
        with pytest.raises(SchemaError):
            run_experiment(p, dom, [16, 16], [object()], eps=0.2)
        with pytest.raises(SchemaError):
            run_experiment(p, dom, [16, 32], [], eps=0.2)

    def test_infeasible_member_rejected(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=8)
        big = EnsembleMember(
            name="too-big", value=lambda x: 7.0 * np.asarray(x, float),
            deriv_r=lambda x: 7.0 * np.ones_like(np.asarray(x, float)))
        with pytest.raises(SchemaError):
            run_experiment(p, dom, [16], [big], eps=0.2)

    def test_approximant_rank_matches_allocation(self):
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=10)
        f = lambda x: np.asarray(x, float) ** 1.5
        approx = approximate(f, p, dom, 32, eps=0.2)
        assert approx.alloc.total_rank <= 4 * 32
        err = approximation_error(f, approx)
        assert err.total > 0.0
        assert err.total >= err.tail - EXACT

    def test_smooth_function_approximates_well(self):
        # derivative bounded, supported away from the singularity
        p = pinned_problem()
        dom = domain_for_problem(p, t_max=10)
        f = lambda x: np.sin(6.0 * np.asarray(x, float))
        df = lambda x: 6.0 * np.cos(6.0 * np.asarray(x, float))
        e_small = approximation_error(f, approximate(f, p, dom, 16, eps=0.2))
        e_big = approximation_error(f, approximate(f, p, dom, 256, eps=0.2))
        assert e_big.total < 0.25 * e_small.total


def test_quadrature_validation():
    p = pinned_problem()
    dom = domain_for_problem(p, t_max=8)
    with pytest.raises(SchemaError):
        run_experiment(p, dom, [16], [object()], eps=0.2,
                       quad=QuadratureSpec(nodes=1, grading_depth=4))


def test_domain_spec_validation():
    with pytest.raises(SchemaError):
        DomainSpec(geometry="interval_singular_origin", t_max=1)
    with pytest.raises(SchemaError):
        DomainSpec(geometry="real_line", t_max=8, shell_blocks=True)
