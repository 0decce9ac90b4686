import inspect

import numpy as np
import pytest

from covext import cee
from covext.cee import (
    CEEProblem,
    SolveOptions,
    build_problem,
    cee_residual,
    companion,
    extract_filter,
    fixed_point_step,
    g_of_P,
    positive_degree,
    problem_from_covariances,
    rank_P,
    solve_cee,
)
from covext.covdata import CovarianceSequence, build_cov_params
from covext.errors import DataError, InvalidBranchError, SolverError
from covext.polyalg import (
    RationalPR,
    SchurPolynomial,
    factor_residual,
    laurent_coeffs,
    monic_numerator,
    reflection_to_tail,
    unit_variance_rho,
)


def scalar_problem(c1, sigma1):
    c = CovarianceSequence([1.0, c1])
    return problem_from_covariances(c, SchurPolynomial([sigma1]))


def forward_instance(rng, n, radius=0.9):
    a = SchurPolynomial(reflection_to_tail(rng.uniform(-radius, radius, n)))
    sigma = SchurPolynomial(reflection_to_tail(rng.uniform(-radius, radius, n)))
    rho = unit_variance_rho(a, sigma)
    b = monic_numerator(a, sigma, rho)
    c_tail = laurent_coeffs(RationalPR(a, b), n)
    c = CovarianceSequence(np.concatenate([[1.0], c_tail]))
    return a, sigma, rho, b, c


class TestAssembly:
    def test_gamma_structure(self):
        prob = CEEProblem(sigma=[0.3, -0.1], u=[0.5, 0.0],
                          U=[[0.0, 0.0], [0.5, 0.0]])
        assert np.allclose(prob.Gamma, [[-0.3, 1.0], [0.1, 0.0]])

    def test_scalar_case(self):
        prob = scalar_problem(0.5, 0.0)
        assert prob.Gamma.shape == (1, 1)
        assert prob.Gamma[0, 0] == 0.0
        assert np.allclose(prob.u, [0.5])
        assert np.allclose(prob.U, [[0.0]])

    def test_white_noise_params_vanish(self):
        c = CovarianceSequence([1.0, 0.0, 0.0])
        prob = problem_from_covariances(c, SchurPolynomial([0.2, -0.1]))
        assert np.allclose(prob.u, 0.0)
        assert np.allclose(prob.U, 0.0)

    def test_non_schur_sigma_rejected(self):
        with pytest.raises(DataError):
            CEEProblem(sigma=[-2.0], u=[0.5], U=[[0.0]])

    def test_dimension_mismatch(self):
        params = build_cov_params(CovarianceSequence([1.0, 0.5, 0.25]))
        with pytest.raises(DataError):
            build_problem(params, SchurPolynomial([0.5]))


class TestGofP:
    def test_zero_U_means_constant_g(self):
        prob = scalar_problem(0.5, 0.3)
        for p in (0.0, 0.2, 0.7):
            assert g_of_P(prob, np.array([[p]])) == pytest.approx(0.5)

    def test_worked_two_dim(self):
        c = CovarianceSequence([1.0, 0.5, 0.25])
        prob = problem_from_covariances(c, SchurPolynomial([0.0, 0.0]))
        g = g_of_P(prob, np.zeros((2, 2)))
        assert np.allclose(g, [0.5, 0.0])


class TestResidual:
    def test_white_noise_zero_at_zero(self):
        c = CovarianceSequence([1.0, 0.0, 0.0])
        prob = problem_from_covariances(c, SchurPolynomial([0.3, 0.1]))
        assert cee_residual(prob, np.zeros((2, 2))) == pytest.approx(0.0)

    def test_scalar_solution_and_miss(self):
        prob = scalar_problem(0.5, 0.0)
        assert cee_residual(prob, np.array([[0.25]])) == pytest.approx(0.0)
        assert cee_residual(prob, np.array([[0.0]])) == pytest.approx(0.25)


class TestSolve:
    def test_scalar_sigma_zero(self):
        sol = solve_cee(scalar_problem(0.5, 0.0))
        assert sol.P[0, 0] == pytest.approx(0.25, abs=1e-12)
        assert sol.rho == pytest.approx(np.sqrt(0.75), abs=1e-12)
        assert sol.a[0] == pytest.approx(-0.5, abs=1e-12)
        assert sol.rank == 1

    def test_scalar_sigma_half(self):
        sol = solve_cee(scalar_problem(0.5, 0.5))
        p_exact = (-3.0 + np.sqrt(13.0)) / 2.0
        assert sol.P[0, 0] == pytest.approx(p_exact, abs=1e-12)
        assert sol.a[0] == pytest.approx(-0.5 * p_exact, abs=1e-12)
        assert sol.rho == pytest.approx(np.sqrt(1.0 - p_exact), abs=1e-12)
        # the recovered function must reproduce c_1 = 0.5
        f = RationalPR(SchurPolynomial(sol.a), SchurPolynomial(sol.b))
        assert laurent_coeffs(f, 1)[0] == pytest.approx(0.5, abs=1e-12)

    def test_white_noise_any_sigma(self):
        c = CovarianceSequence([1.0, 0.0, 0.0, 0.0])
        sigma = SchurPolynomial([0.4, -0.2, 0.05])
        sol = solve_cee(problem_from_covariances(c, sigma))
        assert np.allclose(sol.P, 0.0)
        assert np.allclose(sol.a, sigma.coeffs)
        assert sol.rho == pytest.approx(1.0)
        assert sol.rank == 0

    def test_extract_at_zero(self):
        c = CovarianceSequence([1.0, 0.5, 0.25])
        sigma = SchurPolynomial([0.3, 0.1])
        prob = problem_from_covariances(c, sigma)
        a, rho = extract_filter(prob, np.zeros((2, 2)))
        expected = (np.eye(2) - prob.U) @ prob.sigma - prob.u
        assert np.allclose(a, expected)
        assert rho == 1.0

    def test_extract_invalid_branch(self):
        prob = scalar_problem(0.5, 0.0)
        with pytest.raises(InvalidBranchError):
            extract_filter(prob, np.array([[1.0]]))

    def test_methods_agree(self):
        # uniqueness probe: both methods land on the same P whenever the
        # plain fixed point converges at all
        rng = np.random.default_rng(21)
        compared = 0
        for _ in range(25):
            n = int(rng.integers(1, 7))
            _, sigma, _, _, c = forward_instance(rng, n)
            prob = problem_from_covariances(c, sigma)
            try:
                fp = solve_cee(prob, SolveOptions(method="fixed-point"))
            except SolverError:
                continue
            nw = solve_cee(prob, SolveOptions(method="newton"))
            assert np.max(np.abs(fp.P - nw.P)) <= 1e-8
            compared += 1
        assert compared >= 10

    def test_fixed_point_monotone_on_reference_cases(self):
        # monotone nondecreasing iterates are a regression property of these
        # closed-form cases only; random instances violate it structurally
        # (the quadratic g(P)g(P)' term is not matrix-monotone)
        cases = [
            scalar_problem(0.5, 0.0),
            scalar_problem(0.5, 0.5),
            problem_from_covariances(
                CovarianceSequence([1.0, 0.5, 0.25]), SchurPolynomial([0.0, 0.0])
            ),
            problem_from_covariances(
                CovarianceSequence([1.0, 0.0, 0.0]), SchurPolynomial([0.3, 0.1])
            ),
        ]
        for prob in cases:
            P = np.zeros((prob.n, prob.n))
            for _ in range(200):
                Pn = fixed_point_step(prob, P)
                lam = np.linalg.eigvalsh(Pn - P)
                assert lam[0] >= -1e-12
                P = Pn

    def test_roundtrip_recovery_small(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            a, sigma, rho, b, c = forward_instance(rng, n)
            sol = solve_cee(problem_from_covariances(c, sigma))
            assert np.max(np.abs(sol.a - a.coeffs)) <= 1e-6
            assert abs(sol.rho - rho) <= 1e-8
            assert factor_residual(
                np.concatenate([[1.0], sol.a]),
                np.concatenate([[1.0], sol.b]),
                sigma.full,
                sol.rho,
            ) <= 1e-10

    def test_divergence_guard(self):
        # (1, 0.2, 0.5) is positive, but (1, 0.99, 0.999) is far from it
        with pytest.raises(SolverError):
            c = CovarianceSequence([1.0, 0.99, 0.999, 0.9])
            solve_cee(problem_from_covariances(c, SchurPolynomial([0.0] * 3)))

    def test_nonconvergence_reports_residual(self):
        prob = scalar_problem(0.5, 0.5)
        with pytest.raises(SolverError, match="residual"):
            solve_cee(prob, SolveOptions(method="fixed-point", max_iter=2))

    def test_smooth_dependence_on_sigma(self):
        # finite-difference probe: small sigma perturbations move (a, rho)
        # proportionally
        rng = np.random.default_rng(55)
        _, sigma, _, _, c = forward_instance(rng, 3)
        base = solve_cee(problem_from_covariances(c, sigma))
        eps = 1e-6
        tail = sigma.coeffs.copy()
        tail[0] += eps
        pert = solve_cee(problem_from_covariances(c, SchurPolynomial(tail)))
        assert np.max(np.abs(pert.a - base.a)) < 100 * eps
        assert abs(pert.rho - base.rho) < 100 * eps


class TestRank:
    def test_zero(self):
        assert rank_P(np.zeros((3, 3))) == 0

    def test_scalar(self):
        assert rank_P(np.array([[0.25]])) == 1

    def test_geometric_embedded_rank_one(self):
        c = CovarianceSequence([1.0] + [0.5**k for k in range(1, 5)])
        sigma = SchurPolynomial([0.0, 0.0, 0.0, 0.0])  # z^4
        sol = solve_cee(problem_from_covariances(c, sigma))
        assert sol.rank == 1
        # pole-zero cancellation: a(z) = z^3 (z - 0.5)
        assert np.allclose(sol.a, [-0.5, 0.0, 0.0, 0.0], atol=1e-9)


class TestPositiveDegree:
    def test_white_noise(self):
        c = CovarianceSequence([1.0, 0.0, 0.0])
        res = positive_degree(c, grid=5)
        assert res.degree == 0

    def test_geometric_order_two(self):
        c = CovarianceSequence([1.0, 0.5, 0.25])
        res = positive_degree(c, grid=11)
        assert res.degree == 1

    def test_degenerate_instance_needs_full_degree(self):
        c = CovarianceSequence([1.0, 0.2, 0.5])
        res = positive_degree(c, grid=9)
        assert res.degree == 2

    def test_exceeds_algebraic_degree(self):
        from covext.covdata import algebraic_degree

        rng = np.random.default_rng(77)
        for _ in range(6):
            n = int(rng.integers(2, 4))
            a = SchurPolynomial(reflection_to_tail(rng.uniform(-0.8, 0.8, n)))
            sigma = SchurPolynomial(reflection_to_tail(rng.uniform(-0.8, 0.8, n)))
            rho = unit_variance_rho(a, sigma)
            b = monic_numerator(a, sigma, rho)
            c_tail = laurent_coeffs(RationalPR(a, b), n)
            c = CovarianceSequence(np.concatenate([[1.0], c_tail]))
            res = positive_degree(c, grid=7)
            assert res.degree >= algebraic_degree(c)


class TestUniversality:
    def test_solver_has_no_source_branches(self):
        # the identical code path serves covariance- and interpolation-
        # sourced parameters; the source tag must never steer the solver
        for fn in (
            cee.solve_cee,
            cee._fixed_point,
            cee._newton,
            cee.fixed_point_step,
            cee.g_of_P,
            cee.cee_residual,
            cee.extract_filter,
        ):
            assert ".source" not in inspect.getsource(fn)


class TestCompanion:
    def test_char_poly_matches(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(1, 13))
            tail = reflection_to_tail(rng.uniform(-0.9, 0.9, n))
            F = companion(tail)
            assert np.max(np.abs(np.poly(F)[1:] - tail)) <= 1e-10
