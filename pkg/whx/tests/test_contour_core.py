import numpy as np
from django.test import SimpleTestCase

from whx.choices import FactorSide, MobiusDirection
from whx.contour_core import (
    LaurentFunction,
    MatrixFunction,
    MobiusMap,
    assess,
    check_grid,
    line_nodes,
    mobius_transport,
    unit_nodes,
    winding_index,
)
from whx.exceptions import ContourSingularityError, InvalidInputError


def t_power(k, n=64):
    return LaurentFunction.monomial(k, 1.0, n)


class GridTests(SimpleTestCase):
    def test_powers_of_two_accepted(self):
        self.assertEqual(check_grid(256), 256)

    def test_bad_grid_rejected(self):
        for n in (100, 2, True, 12.0):
            with self.assertRaises(InvalidInputError):
                check_grid(n)

    def test_line_nodes_map_onto_roots_of_unity(self):
        alpha = line_nodes(16)
        self.assertTrue(np.isinf(alpha[0]))
        t = MobiusMap()(alpha)
        np.testing.assert_allclose(t, unit_nodes(16), atol=1e-14)


class LaurentFunctionTests(SimpleTestCase):
    def test_monomial_samples(self):
        np.testing.assert_allclose(t_power(1, 16).samples(), unit_nodes(16), atol=1e-14)

    def test_split_puts_constant_in_plus_part(self):
        f = LaurentFunction.from_dict({-2: 1.0, 0: 3.0, 1: 2.0}, 32)
        plus, minus = f.split()
        self.assertAlmostEqual(plus.coefficient(0), 3.0)
        self.assertAlmostEqual(plus.coefficient(1), 2.0)
        self.assertEqual(minus.coefficient(0), 0)
        self.assertAlmostEqual(minus.coefficient(-2), 1.0)
        np.testing.assert_allclose((plus + minus).samples(), f.samples(), atol=1e-14)

    def test_product_is_exact_convolution(self):
        f = (1.0 + t_power(1)) * (1.0 + t_power(-1))
        self.assertAlmostEqual(f.coefficient(1), 1.0)
        self.assertAlmostEqual(f.coefficient(0), 2.0)
        self.assertAlmostEqual(f.coefficient(-1), 1.0)

    def test_division_by_vanishing_function(self):
        with self.assertRaises(ContourSingularityError):
            1.0 / (1.0 + t_power(1))

    def test_analyticity_defect(self):
        f = LaurentFunction.from_dict({-1: 1e-3, 0: 1.0, 2: 0.5}, 32)
        self.assertAlmostEqual(f.analyticity_defect('plus'), 1e-3)
        self.assertAlmostEqual(f.analyticity_defect('minus'), 0.5)

    def test_refinement_resolves_smooth_function(self):
        f = LaurentFunction.from_callable(lambda t: np.exp(0.5 * t + 0.25 / t), 16)
        self.assertLessEqual(f.tail_defect(), 1e-10)
        # sum_k (0.5 * 0.25)^k / (k!)^2
        self.assertAlmostEqual(f.coefficient(0).real, float(np.i0(2 * np.sqrt(0.125))), places=12)


class WindingTests(SimpleTestCase):
    def test_monomials(self):
        for k in (-3, 0, 2):
            self.assertEqual(winding_index(t_power(k)), k)

    def test_zero_outside_pole_inside(self):
        self.assertEqual(winding_index(1.0 + 2.0 * t_power(-1)), -1)
        self.assertEqual(winding_index(2.0 + t_power(-1)), 0)

    def test_vanishing_on_contour(self):
        with self.assertRaises(ContourSingularityError):
            winding_index(1.0 + t_power(1))


class MobiusTests(SimpleTestCase):
    def test_inverse_map(self):
        forward = MobiusMap()
        back = forward.inverse()
        self.assertEqual(back.direction, MobiusDirection.CIRCLE_TO_LINE)
        self.assertAlmostEqual(complex(forward(np.array([1j]))[0]), 0)
        self.assertAlmostEqual(complex(back(np.array([-1.0]))[0]), 0)

    def test_transport_of_callable(self):
        f = mobius_transport(lambda a: (a - 1j) / (a + 1j))
        self.assertAlmostEqual(abs(f.coefficient(1) - 1.0), 0.0, places=10)
        self.assertLess(abs(f.coefficient(0)), 1e-10)

    def test_transport_checks_locations(self):
        values = np.ones(8)
        locations = line_nodes(8).copy()
        locations[3] += 0.5
        with self.assertRaises(InvalidInputError):
            mobius_transport(values, locations=locations)

    def test_circle_to_line(self):
        samples = mobius_transport(t_power(1, 8), MobiusMap(MobiusDirection.CIRCLE_TO_LINE))
        np.testing.assert_allclose(samples.values, unit_nodes(8), atol=1e-14)


class MatrixFunctionTests(SimpleTestCase):
    def test_inverse(self):
        G = MatrixFunction.from_rows([[t_power(1), 1.0], [0.0, 1.0]])
        product = (G @ G.inverse()).samples()
        np.testing.assert_allclose(product, np.broadcast_to(np.eye(2), product.shape), atol=1e-12)

    def test_det(self):
        G = MatrixFunction.diagonal([t_power(1), t_power(-1)])
        np.testing.assert_allclose(G.det().samples(), 1.0, atol=1e-14)

    def test_rows_must_match(self):
        with self.assertRaises(InvalidInputError):
            MatrixFunction([[t_power(0), t_power(0)], [t_power(0)]])


class FactorizationTests(SimpleTestCase):
    def setUp(self):
        self.G = MatrixFunction.diagonal([t_power(-1), t_power(1)])
        self.identity = MatrixFunction.identity(2, 64)

    def test_assess_measures_residual(self):
        fact = assess(self.G, self.identity, self.identity, (-1, 1))
        self.assertLess(fact.residual_inf, 1e-14)
        self.assertEqual(fact.side, FactorSide.LEFT)
        self.assertEqual(fact.residual_profile.size, 64)

    def test_sorted_keeps_the_product(self):
        fact = assess(self.G, self.identity, self.identity, (-1, 1)).sorted()
        self.assertEqual(fact.partial_indices, (1, -1))
        np.testing.assert_allclose(fact.reassemble(), self.G.samples(), atol=1e-14)

    def test_index_count_checked(self):
        with self.assertRaises(InvalidInputError):
            assess(self.G, self.identity, self.identity, (0,))
