import itertools

import numpy as np
from django.test import SimpleTestCase

from whx.contour_core import LaurentFunction, MatrixFunction, assess
from whx.exceptions import ConditioningError, InvalidInputError
from whx.stability_tools import (
    IndexTuple,
    equivalence_check,
    index_sum_check,
    is_stable,
    perturbation_experiment,
    shubin_check,
    transform_factorization,
)
from whx.triangular_wh import reduce_triangular_n

N = 64


def t_power(k):
    return LaurentFunction.monomial(k, 1.0, N)


class IndexTupleTests(SimpleTestCase):
    def test_parse_sorts_descending(self):
        self.assertEqual(IndexTuple.parse('-1, 2,0').kappas, (2, 0, -1))

    def test_parse_rejects_garbage(self):
        with self.assertRaises(InvalidInputError):
            IndexTuple.parse('1,x')
        with self.assertRaises(InvalidInputError):
            IndexTuple.parse('')

    def test_stability_predicate_on_all_small_tuples(self):
        for size in range(1, 5):
            for kappas in itertools.product(range(-3, 4), repeat=size):
                self.assertEqual(is_stable(kappas), max(kappas) - min(kappas) <= 1, kappas)


class PerturbationTests(SimpleTestCase):
    def test_small_coupling_balances_indices(self):
        for eps in (0.1, 0.01):
            report = perturbation_experiment(eps)
            self.assertLess(report.residual, 1e-10)
            self.assertEqual(report.partial_indices, (0, 0))
            self.assertEqual(report.unperturbed_indices, (1, -1))
            self.assertEqual(report.triangular_indices, (0, 0))
            self.assertAlmostEqual(report.blow_up * eps, 1.0, delta=0.2)

    def test_conditioning_guard(self):
        with self.assertRaises(ConditioningError):
            perturbation_experiment(1e-13)


class IndexSumTests(SimpleTestCase):
    def test_passes_for_exact_factors(self):
        G = MatrixFunction.diagonal([t_power(1), t_power(-1)])
        fact = assess(G, MatrixFunction.identity(2, N), MatrixFunction.identity(2, N), (1, -1))
        report = index_sum_check(G, fact)
        self.assertTrue(report.passed)
        self.assertEqual(report.det_index, 0)

    def test_fails_for_wrong_indices(self):
        G = MatrixFunction.diagonal([t_power(1), t_power(0)])
        fact = assess(G, MatrixFunction.identity(2, N), MatrixFunction.identity(2, N), (1, 1))
        report = index_sum_check(G, fact)
        self.assertFalse(report.passed)
        self.assertEqual(report.index_sum, 2)
        self.assertEqual(report.det_index, 1)


class EquivalenceTests(SimpleTestCase):
    def setUp(self):
        G = MatrixFunction.from_rows([[LaurentFunction.from_dict({0: 2.0, 1: 0.5}, N), 0.0],
                                      [0.3, LaurentFunction.from_dict({0: 2.0, -1: 0.4}, N)]])
        self.fact = reduce_triangular_n(G)

    def test_constant_transform(self):
        H = np.array([[1.0, 2.0], [0.0, 3.0]])
        witness = equivalence_check(self.fact, transform_factorization(self.fact, H))
        self.assertTrue(witness.equivalent)
        self.assertEqual(witness.kind, 'constant')
        np.testing.assert_allclose(witness.H, H, atol=1e-8)

    def test_polynomial_corner_for_unequal_indices(self):
        fact = reduce_triangular_n(MatrixFunction.diagonal([t_power(1), t_power(-1)]))
        H = MatrixFunction.from_rows([[2.0, LaurentFunction.from_dict({0: 1.0, 1: 0.5, 2: 0.25}, N)],
                                      [0.0, 1.0]])
        witness = equivalence_check(fact, transform_factorization(fact, H))
        self.assertTrue(witness.equivalent)
        self.assertEqual(witness.kind, 'polynomial')
        np.testing.assert_allclose(witness.P, [1.0, 0.5, 0.25], atol=1e-8)


class ShubinTests(SimpleTestCase):
    def test_changes_shrink_for_stable_indices(self):
        G = MatrixFunction.diagonal([LaurentFunction.from_dict({0: 2.0, 1: 0.5}, N),
                                     LaurentFunction.from_dict({0: 2.0, -1: 0.3}, N)])
        E = MatrixFunction.from_rows([[0.0, 0.0], [1.0, 0.0]], N)
        report = shubin_check(G, E, reduce_triangular_n)
        self.assertTrue(report.stable)
        self.assertTrue(report.monotone)
        self.assertEqual(report.indices, ((0, 0), (0, 0)))
