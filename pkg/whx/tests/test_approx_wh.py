import numpy as np
from django.test import SimpleTestCase

from whx.approx_wh import (
    ExponentialSystem,
    asymptotic_factor,
    exponential_coefficients,
    exponential_minus_part,
    exponential_plus_part,
    iterative_exponential_solve,
    rational_fit,
    rational_fit_factor,
    rational_fit_sweep,
    step_one_defect,
)
from whx.choices import FactorSide
from whx.contour_core import LaurentFunction, MatrixFunction
from whx.exceptions import DivergenceError, InvalidInputError

N = 128


def laurent(mapping):
    return LaurentFunction.from_dict(mapping, N)


def coupling_matrix():
    return MatrixFunction.from_rows([[laurent({1: 0.5}), laurent({-1: 0.2})],
                                     [laurent({0: 0.1}), laurent({1: 0.3, -1: 0.1})]])


class AsymptoticTests(SimpleTestCase):
    def test_right_factorization_converges(self):
        fact, state = asymptotic_factor(coupling_matrix(), 0.1)
        self.assertEqual(fact.side, FactorSide.RIGHT)
        self.assertEqual(fact.partial_indices, (0, 0))
        self.assertLess(fact.residual_inf, 1e-8)
        self.assertTrue(np.all(np.diff(state.delta_norm_history) < 0))

    def test_first_step_defect(self):
        G = coupling_matrix()
        eps = 0.1
        _, state = asymptotic_factor(G, eps, j_max=1)
        M = MatrixFunction.identity(2, N) + G * eps
        defect = (state.S_minus @ state.S_plus).samples(N) - M.samples(N)
        np.testing.assert_allclose(defect, step_one_defect(G, eps).samples(N), atol=1e-14)

    def test_defect_shrinks_with_eps(self):
        G = coupling_matrix()
        _, coarse = asymptotic_factor(G, 0.1, j_max=1)
        _, fine = asymptotic_factor(G, 0.05, j_max=1)
        ratio = fine.delta_norm_history[0] / coarse.delta_norm_history[0]
        self.assertAlmostEqual(ratio, 0.25, places=6)

    def test_defect_slope_follows_eps(self):
        for eps in (0.1, 0.2):
            _, state = asymptotic_factor(coupling_matrix(), eps)
            history = state.delta_norm_history
            self.assertGreaterEqual(history.size, 4)
            slope = np.polyfit(np.arange(history.size), np.log(history), 1)[0]
            self.assertLess(abs(slope - np.log(eps)), 0.2 * abs(np.log(eps)), msg=f'eps={eps}')

    def test_large_eps_rejected(self):
        with self.assertRaises(InvalidInputError):
            asymptotic_factor(coupling_matrix(), 10.0)


class RationalFitTests(SimpleTestCase):
    def setUp(self):
        self.K = LaurentFunction.from_callable(lambda t: (t + 0.5) / (t - 2.0), 64)

    def test_exact_recovery(self):
        fit = rational_fit(self.K, 1, 1)
        self.assertLess(fit.fit_error, 1e-10)
        self.assertFalse(fit.interlaced)

    def test_window_needs_nodes(self):
        with self.assertRaises(InvalidInputError):
            rational_fit(self.K, 20, 20, window=1e-3)

    def test_negative_degrees(self):
        with self.assertRaises(InvalidInputError):
            rational_fit(self.K, -1, 1)

    def test_sweep_improves(self):
        fits = rational_fit_sweep(self.K, [(0, 0), (1, 1)])
        self.assertEqual([fit.degrees for fit in fits], [(0, 0), (1, 1)])
        self.assertLess(fits[1].window_error, fits[0].window_error)
        self.assertNotIn('stagnation', fits[1].flags)

    def test_factor_of_fitted_kernel(self):
        K = laurent({0: 1.0, 1: 0.5}) * laurent({0: 1.0, -1: 0.25})
        fact, fit = rational_fit_factor(K, 2, 1)
        self.assertEqual(fact.partial_indices, (0,))
        self.assertLess(fit.fit_error, 1e-10)
        self.assertLess(fact.residual_inf, 1e-8)


    def test_branch_points_off_the_line(self):
        K = LaurentFunction.from_line(lambda a: np.sqrt((a ** 2 + 4.0) / (a ** 2 + 1.0)), 64, refine=False)
        fits = rational_fit_sweep(K, [(1, 1), (2, 2), (3, 3)])
        errors = [fit.fit_error for fit in fits]
        self.assertLess(errors[1], errors[0])
        self.assertLess(errors[2], errors[1])

    def test_cut_through_infinity_fits_only_on_window(self):
        K = LaurentFunction.from_line(lambda a: np.sqrt(a ** 2 - 2j) / (a + 1j), N, refine=False)
        fit = rational_fit(K, 3, 3, window=5.0)
        self.assertGreater(fit.outside_error, 0.5)
        self.assertGreater(fit.outside_error, 10 * fit.window_error)


class ExponentialProjectionTests(SimpleTestCase):
    def test_coefficients(self):
        for L in (0.5, 2.0):
            e = exponential_coefficients(L, 200)
            self.assertAlmostEqual(e[0], np.exp(-L))
            self.assertAlmostEqual(e[1], -2 * L * np.exp(-L))
            self.assertAlmostEqual(e[2], np.exp(-L) * (2 * L * L - 2 * L))
            self.assertAlmostEqual(np.sum(e * 0.5 ** np.arange(200)), np.exp(-3 * L))
            self.assertTrue(np.all(np.abs(e) <= 1.0))

    def test_plus_part_of_decaying_exponential(self):
        L = 1.5
        part = exponential_plus_part(LaurentFunction.monomial(1, 1.0, N), L)
        self.assertAlmostEqual(part.coefficient(1), np.exp(-L))
        self.assertAlmostEqual(part.coefficient(0), -2 * L * np.exp(-L))
        self.assertEqual(part.analyticity_defect('plus'), 0.0)

    def test_minus_part_of_growing_exponential(self):
        L = 1.5
        part = exponential_minus_part(LaurentFunction.monomial(-1, 1.0, N), L)
        self.assertAlmostEqual(part.coefficient(-1), np.exp(-L))
        self.assertEqual(part.coefficient(0), 0.0)
        self.assertEqual(part.k_min, -1)

    def test_one_sided_inputs_project_to_zero(self):
        analytic = laurent({0: 1.0, 2: 0.5})
        self.assertEqual(exponential_minus_part(analytic, 1.0).sup_norm(), 0.0)
        self.assertEqual(exponential_plus_part(laurent({-2: 1.0}), 1.0).sup_norm(), 0.0)


class ExponentialSystemTests(SimpleTestCase):
    def system(self, B, C, L=1.0, **options):
        return ExponentialSystem(A=laurent({0: 2.0, 1: 0.5}), B=laurent({0: B}), C=laurent({0: C}),
                                 f1=laurent({-1: 0.3, 0: 1.0}), f2=laurent({0: 0.5}), L=L, **options)

    def cross_coupled(self, L):
        return ExponentialSystem(A=laurent({0: 2.0}), B=laurent({-1: 1.0}), C=laurent({1: 1.0}),
                                 f1=laurent({0: 1.0}), f2=laurent({0: 0.5}), L=L)

    def test_decoupled_system_needs_one_iteration(self):
        solution = iterative_exponential_solve(self.system(0.0, 0.0))
        self.assertEqual(solution.iterations, 1)
        self.assertLess(max(solution.residuals), 1e-8)
        self.assertAlmostEqual(solution.psiL_plus.coefficient(0), 0.5)

    def test_one_way_coupling_needs_two_iterations(self):
        solution = iterative_exponential_solve(self.system(0.3, 0.0))
        self.assertEqual(solution.iterations, 2)
        self.assertEqual(solution.history[-1], 0.0)
        self.assertLess(max(solution.residuals), 1e-8)

    def test_iterations_fall_as_separation_grows(self):
        tol = 1e-8
        counts = []
        for L in (2.0, 5.0, 10.0):
            solution = iterative_exponential_solve(self.cross_coupled(L), tol=tol)
            counts.append(solution.iterations)
            self.assertLess(max(solution.residuals), 10 * tol)
            self.assertLess(max(solution.defects), 1e-8)
        self.assertEqual(counts, [5, 3, 2])

    def test_contraction_rate(self):
        L = 2.0
        history = iterative_exponential_solve(self.cross_coupled(L), tol=1e-8).history
        np.testing.assert_allclose(history[2:] / history[1:-1], np.exp(-2 * L) / 3, rtol=1e-6)

    def test_first_sweep_values(self):
        L = 10.0
        solution = iterative_exponential_solve(self.cross_coupled(L), tol=1e-8)
        self.assertAlmostEqual(solution.psiL_plus.coefficient(0), (0.5 + L * np.exp(-L)) / 1.5, places=9)
        self.assertAlmostEqual(solution.psiL_plus.coefficient(1), -np.exp(-L) / 3, places=9)

    def test_zero_block_is_opt_in(self):
        solution = iterative_exponential_solve(self.system(0.5, 0.5, zero_block=True))
        self.assertEqual(solution.iterations, 2)
        self.assertLess(max(solution.residuals), 1e-8)
        with self.assertRaises(InvalidInputError):
            iterative_exponential_solve(self.system(0.0, 0.5, zero_block=True))

    def test_iteration_budget(self):
        with self.assertRaises(DivergenceError):
            iterative_exponential_solve(self.cross_coupled(2.0), tol=1e-8, max_iter=1)

    def test_separation_must_be_positive(self):
        with self.assertRaises(InvalidInputError):
            iterative_exponential_solve(self.system(0.3, 0.3, L=0.0))
