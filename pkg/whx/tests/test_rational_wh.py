import numpy as np
from django.test import SimpleTestCase

from whx.conf import Tolerances
from whx.contour_core import LaurentFunction, winding_index
from whx.exceptions import ContourSingularityError, InvalidInputError
from whx.rational_wh import (
    RationalMatrixFunction,
    RationalScalar,
    count_roots_inside,
    count_roots_upper,
    factor_rational,
    pole_removal_solve,
    solve_by_factorization,
)

# (alpha - i)/(alpha + i) is t on the circle
T = RationalScalar(np.array([-1j, 1.0]), np.array([1j, 1.0]))
T_INV = RationalScalar(np.array([1j, 1.0]), np.array([-1j, 1.0]))


class RationalScalarTests(SimpleTestCase):
    def test_circle_form_of_mobius_ratio(self):
        t = np.exp(1j * np.linspace(0.1, 6.0, 7))
        np.testing.assert_allclose(T.on_circle(t), t, atol=1e-12)

    def test_zeros_and_poles(self):
        np.testing.assert_allclose(T.zeros(), [1j], atol=1e-12)
        np.testing.assert_allclose(T.poles(), [-1j], atol=1e-12)

    def test_common_roots_cancel(self):
        entry = RationalScalar(np.array([-1j, 1.0]), np.array([-1j, 1.0]))
        self.assertTrue(entry.is_polynomial)

    def test_zero_denominator(self):
        with self.assertRaises(InvalidInputError):
            RationalScalar(np.array([1.0]), np.array([0.0]))

    def test_index_matches_zero_pole_count(self):
        # upper zero 2i and upper pole i cancel; -3i and -5i lie below
        entry = (RationalScalar(np.array([-2j, 1.0]), np.array([-1j, 1.0]))
                 * RationalScalar(np.array([3j, 1.0]), np.array([5j, 1.0])))
        f = LaurentFunction.from_callable(entry.on_circle, 256)
        self.assertEqual(winding_index(f), 0)
        self.assertEqual(winding_index(LaurentFunction.from_callable(T.on_circle, 64)), 1)


class RootCountTests(SimpleTestCase):
    def test_count_inside(self):
        self.assertEqual(count_roots_inside(np.array([-0.25, 1.0])), 1)
        self.assertEqual(count_roots_inside(np.array([-2.0, 1.0])), 0)

    def test_count_upper(self):
        self.assertEqual(count_roots_upper(np.array([1.0, 0.0, 1.0])), 1)
        # (alpha + i)(alpha + 2i)
        self.assertEqual(count_roots_upper(np.array([-2.0, 3j, 1.0])), 0)

    def test_callable_needs_radius(self):
        with self.assertRaises(InvalidInputError):
            count_roots_upper(lambda z: z - 1j)


class FactorRationalTests(SimpleTestCase):
    def test_diagonal_indices(self):
        fact = factor_rational(RationalMatrixFunction.diagonal([T, T_INV]))
        self.assertEqual(fact.partial_indices, (1, -1))
        self.assertLess(fact.residual_inf, 1e-8)
        self.assertLess(fact.analyticity_defect, 1e-9)

    def test_index_sum_equals_det_index(self):
        coupling = RationalScalar(np.array([1.0]), np.array([2j, 1.0]))
        M = RationalMatrixFunction.from_rows([[T, coupling], [0.0, 2.0]])
        fact = factor_rational(M)
        self.assertEqual(sum(fact.partial_indices), 1)
        self.assertLess(fact.residual_inf, 1e-8)
        self.assertLess(fact.notes['inverse_defect'], 1e-9)

    def test_pole_on_contour(self):
        entry = RationalScalar(np.array([1.0]), np.array([-1.0, 1.0]))
        with self.assertRaises(ContourSingularityError):
            factor_rational(RationalMatrixFunction.from_rows([[entry]]))

    def test_contour_distance_follows_tolerances(self):
        near = RationalScalar(np.array([-1e-3j, 1.0]), np.array([1j, 1.0]))
        M = RationalMatrixFunction.diagonal([near, RationalScalar.constant(1.0)])
        roots = M.det_roots()
        self.assertTrue(any(r.half == 'upper' and abs(r.alpha - 1e-3j) < 1e-8 for r in roots))
        with self.assertRaises(ContourSingularityError):
            M.det_roots(Tolerances(real_axis=1e-2))
        with self.assertRaises(ContourSingularityError):
            factor_rational(M, Tolerances(real_axis=1e-2))

    def test_non_square(self):
        with self.assertRaises(InvalidInputError):
            factor_rational(RationalMatrixFunction.from_rows([[T, 1.0]]))


class PoleRemovalTests(SimpleTestCase):
    def setUp(self):
        self.C = LaurentFunction.from_dict({-1: 0.5, 0: 1.0, 1: 0.3}, 256)

    def test_free_parameter_for_negative_index(self):
        A = RationalMatrixFunction.from_rows([[RationalScalar(np.array([2j, 1.0]), np.array([-1j, 1.0]))]])
        solution = pole_removal_solve(A, self.C)
        self.assertEqual(solution.dof, 1)

    def test_agrees_with_factorization_solve(self):
        A = RationalMatrixFunction.from_rows([[RationalScalar(np.array([-2j, 1.0]), np.array([-1j, 1.0]))]])
        removal = pole_removal_solve(A, self.C)
        factored = solve_by_factorization(A, self.C)
        n = max(removal.phi_plus.n_samples, factored.phi_plus.n_samples)
        difference = np.abs(removal.phi_plus.samples(n) - factored.phi_plus.samples(n)).max()
        self.assertLess(difference, 1e-7)
        self.assertLess(removal.residual, 1e-8)

    def test_right_hand_side_shape(self):
        A = RationalMatrixFunction.diagonal([T, T])
        with self.assertRaises(InvalidInputError):
            pole_removal_solve(A, self.C)


def _off_line(rng, upper):
    """A point with 0.5 <= |Im| <= 1.5 in the chosen half-plane."""
    sign = 1.0 if upper else -1.0
    return complex(rng.uniform(-1.0, 1.0), sign * rng.uniform(0.5, 1.5))


def random_rational_fixture(rng, size):
    """
    Diagonal entries (alpha - z)/(alpha - p) stay above 0.12 on the line and
    the off-diagonal rows sum below 0.04, so det never vanishes there.
    Returns the matrix and the expected index of its determinant.
    """
    rows, expected = [], 0
    for i in range(size):
        row = []
        for j in range(size):
            if i == j:
                z_upper, p_upper = rng.random() < 0.5, rng.random() < 0.5
                z, p = _off_line(rng, z_upper), _off_line(rng, p_upper)
                row.append(RationalScalar(np.array([-z, 1.0]), np.array([-p, 1.0])))
                expected += int(z_upper) - int(p_upper)
            else:
                q = _off_line(rng, rng.random() < 0.5)
                u = 0.01 * np.exp(2j * np.pi * rng.random())
                row.append(RationalScalar(np.array([u]), np.array([-q, 1.0])))
        rows.append(row)
    return RationalMatrixFunction.from_rows(rows), expected


class RandomFixtureSweepTests(SimpleTestCase):
    def test_random_two_and_three_square(self):
        rng = np.random.default_rng(20240611)
        for case in range(25):
            size = 2 + case % 2
            M, expected = random_rational_fixture(rng, size)
            with self.subTest(case=case, size=size):
                fact = factor_rational(M)
                scale = max(1.0, M.on_circle().sup_norm())
                self.assertEqual(sum(fact.partial_indices), expected)
                self.assertLess(fact.residual_inf, 1e-8 * scale)
                self.assertLess(fact.analyticity_defect, 1e-9)
                self.assertLess(fact.notes['inverse_defect'], 1e-9)
