import numpy as np
from django.test import SimpleTestCase

from whx.contour_core import LaurentFunction, MatrixFunction
from whx.exceptions import ContourSingularityError, InvalidInputError, NoSolutionError, NotCanonicalError
from whx.scalar_rh import (
    ScalarRHProblem,
    factor_scalar,
    factor_scalar_matrix,
    solve_dual,
    solve_paired_transpose,
    solve_scalar_rh,
    solve_wh_strip,
)

N = 256


def laurent(mapping):
    return LaurentFunction.from_dict(mapping, N)


def canonical_kernel():
    """(1 + t/2)(1 + 1/(4t)): index zero, factors known in closed form."""
    return laurent({0: 1.0, 1: 0.5}) * laurent({0: 1.0, -1: 0.25})


class FactorScalarTests(SimpleTestCase):
    def test_index_of_t(self):
        fact = factor_scalar(LaurentFunction.monomial(1, 1.0, N))
        self.assertEqual(fact.kappa, 1)
        np.testing.assert_allclose(fact.X_plus.samples(), 1.0, atol=1e-12)

    def test_closed_form_factors(self):
        fact = factor_scalar(canonical_kernel())
        self.assertEqual(fact.kappa, 0)
        self.assertAlmostEqual(abs(fact.X_plus.coefficient(1) - 0.5), 0.0, places=12)
        self.assertAlmostEqual(abs(fact.G_minus.coefficient(-1) - 0.25), 0.0, places=12)
        self.assertLess(fact.residual, 1e-12)

    def test_positive_index(self):
        G = canonical_kernel().shift(2)
        fact = factor_scalar(G)
        self.assertEqual(fact.kappa, 2)
        matrix = factor_scalar_matrix(MatrixFunction([[G]]))
        self.assertEqual(matrix.partial_indices, (2,))
        self.assertLess(matrix.residual_inf, 1e-10)
        self.assertLess(matrix.analyticity_defect, 1e-10)

    def test_vanishing_kernel(self):
        with self.assertRaises(ContourSingularityError):
            factor_scalar(laurent({0: 1.0, 1: 1.0}))

    def test_matrix_wrapper_needs_one_entry(self):
        with self.assertRaises(InvalidInputError):
            factor_scalar_matrix(MatrixFunction.identity(2, N))


class ScalarRHTests(SimpleTestCase):
    def test_canonical_problem(self):
        g = laurent({-1: 1.0, 0: 1.0, 1: 1.0})
        solution = solve_scalar_rh(ScalarRHProblem(canonical_kernel(), g))
        self.assertEqual(solution.kappa, 0)
        self.assertEqual(solution.polynomial_dof, 1)
        self.assertLess(solution.residual, 1e-10)

    def test_free_coefficients_for_positive_index(self):
        problem = ScalarRHProblem(LaurentFunction.monomial(1, 1.0, N), laurent({0: 0.0}))
        self.assertEqual(solve_scalar_rh(problem).polynomial_dof, 2)
        self.assertEqual(solve_scalar_rh(problem, vanish_at_infinity=True).polynomial_dof, 1)

    def test_negative_index_solvability(self):
        problem = ScalarRHProblem(LaurentFunction.monomial(-1, 1.0, N), laurent({-1: 1.0}))
        with self.assertRaises(NoSolutionError) as cm:
            solve_scalar_rh(problem, vanish_at_infinity=True)
        self.assertIn('moments', cm.exception.details)

    def test_coefficient_must_not_vanish(self):
        with self.assertRaises(ContourSingularityError):
            ScalarRHProblem(laurent({0: 1.0, 1: 1.0}), laurent({0: 1.0})).validate()


class StripTests(SimpleTestCase):
    def test_residual_and_dof(self):
        C = laurent({-1: 1.0, 1: 1.0})
        solution = solve_wh_strip(canonical_kernel(), C, 0)
        self.assertEqual(solution.j_dof, 1)
        self.assertLess(solution.residual, 1e-10)
        self.assertEqual(solve_wh_strip(canonical_kernel(), C, -1).j_dof, 0)

    def test_nonzero_index_rejected(self):
        with self.assertRaises(NotCanonicalError):
            solve_wh_strip(LaurentFunction.monomial(1, 1.0, N), laurent({0: 1.0}), 0)


class PairedTests(SimpleTestCase):
    def test_dual_equations(self):
        K1 = laurent({1: 0.2})
        K2 = laurent({-1: 0.1})
        g = laurent({-1: 0.5, 0: 1.0, 1: 0.3})
        solution = solve_dual(K1, K2, g)
        self.assertLess(solution.residual, 1e-10)
        self.assertEqual(solution.kappa, 0)

    def test_transpose_equation(self):
        A = canonical_kernel()
        B = laurent({0: 2.0, 1: 0.3})
        C = laurent({-1: 0.4, 0: 1.0})
        solution = solve_paired_transpose(A, B, C)
        self.assertLess(solution.residual, 1e-10)
