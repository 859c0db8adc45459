import numpy as np
from django.test import SimpleTestCase

from whx.choices import MethodChoices
from whx.classification import classify, khrapkov_decomposition, triangular_form
from whx.commutative_wh import JonesKernel, KhrapkovKernel
from whx.contour_core import LaurentFunction, MatrixFunction
from whx.exceptions import InvalidInputError
from whx.rational_wh import PolynomialMatrix, RationalMatrixFunction, RationalScalar

N = 64


def laurent(mapping):
    return LaurentFunction.from_dict(mapping, N)


def khrapkov_matrix():
    s = laurent({1: 0.3, -1: 0.2})
    k0 = s.apply(lambda v: np.cosh(0.5 * v))
    k1 = s.apply(lambda v: np.sinh(0.5 * v) / 0.5)
    return KhrapkovKernel(k0, k1, PolynomialMatrix(np.array([[0.0, 1.0], [0.25, 0.0]])), np.array([0.25]))


class TriangularFormTests(SimpleTestCase):
    def test_forms(self):
        t = laurent({1: 1.0})
        self.assertEqual(triangular_form(MatrixFunction.diagonal([t, laurent({0: 1.0})]))[0], 'diagonal')
        self.assertEqual(triangular_form(MatrixFunction.from_rows([[t, 0.0], [1.0, 1.0]]))[0], 'lower')
        self.assertEqual(triangular_form(MatrixFunction.from_rows([[t, 1.0], [0.0, 1.0]]))[0], 'upper')
        self.assertIsNone(triangular_form(MatrixFunction.from_rows([[t, 1.0], [1.0, 2.0]]))[0])

    def test_bordered_form(self):
        t = laurent({1: 1.0})
        G = MatrixFunction.from_rows([[2.0, t, 0.0], [0.5, 2.0, 0.0], [t, 1.0, 1.0]])
        form, evidence = triangular_form(G)
        self.assertEqual(form, 'bordered')
        self.assertEqual(evidence['border_sup'], 0.0)
        G = MatrixFunction.from_rows([[2.0, t, 0.1], [0.5, 2.0, 0.0], [t, 1.0, 1.0]])
        self.assertIsNone(triangular_form(G)[0])


class KhrapkovDecompositionTests(SimpleTestCase):
    def test_recovers_J(self):
        kernel, evidence = khrapkov_decomposition(khrapkov_matrix().matrix())
        self.assertIsNotNone(kernel)
        self.assertEqual(evidence['reference'], [0, 1])
        np.testing.assert_allclose(kernel.J.trimmed().coeffs[0], [[0.0, 1.0], [0.25, 0.0]], atol=1e-9)
        np.testing.assert_allclose(kernel.delta2, [0.25], atol=1e-9)

    def test_diagonal_is_not_decomposed(self):
        G = MatrixFunction.diagonal([laurent({1: 1.0}), laurent({-1: 1.0})])
        kernel, evidence = khrapkov_decomposition(G)
        self.assertIsNone(kernel)
        self.assertEqual(len(evidence['attempts']), 3)


class ClassifyTests(SimpleTestCase):
    def test_diagonal_kernel(self):
        G = MatrixFunction.diagonal([laurent({1: 1.0}), laurent({-1: 1.0})])
        report = classify(G)
        self.assertEqual(report.applicable, [MethodChoices.TRIANGULAR, MethodChoices.FUNCOMM])
        self.assertEqual(report.best, MethodChoices.TRIANGULAR)
        self.assertEqual(report.evidence_for(MethodChoices.TRIANGULAR)['form'], 'diagonal')

    def test_khrapkov_kernel(self):
        report = classify(khrapkov_matrix().matrix())
        self.assertIn(MethodChoices.KHRAPKOV, report.applicable)
        self.assertIn(MethodChoices.FUNCOMM, report.applicable)
        self.assertNotIn(MethodChoices.JONES, report.applicable)

    def test_invalid_khrapkov_descriptor_is_rejected(self):
        kernel = khrapkov_matrix()
        broken = KhrapkovKernel(kernel.k0, kernel.k1, kernel.J, np.array([0.5]))
        report = classify(kernel.matrix(), broken)
        self.assertNotIn(MethodChoices.KHRAPKOV, report.applicable)
        evidence = report.evidence_for(MethodChoices.KHRAPKOV)
        self.assertEqual(evidence['reason'], 'J^2 differs from delta2 I')
        self.assertEqual(evidence['source'], 'descriptor')

    def test_valid_khrapkov_descriptor_is_accepted(self):
        report = classify(khrapkov_matrix().matrix(), khrapkov_matrix())
        self.assertIn(MethodChoices.KHRAPKOV, report.applicable)
        self.assertEqual(report.evidence_for(MethodChoices.KHRAPKOV)['source'], 'descriptor')

    def test_jones_needs_descriptor(self):
        kernel = khrapkov_matrix()
        descriptor = JonesKernel((kernel.k0, kernel.k1), np.array([[0.0, 1.0], [0.25, 0.0]]), 0.5)
        report = classify(descriptor.matrix(), descriptor)
        self.assertIn(MethodChoices.JONES, report.applicable)

    def test_dense_kernel_has_no_known_class(self):
        G = MatrixFunction.from_rows([[laurent({0: 2.0, 1: 0.1}), laurent({1: 0.3})],
                                      [laurent({-1: 0.2}), 1.0]])
        report = classify(G)
        self.assertFalse(report.known)
        document = report.as_dict()
        self.assertEqual(document['conclusion'], 'no known class')
        self.assertFalse(document['complete'])
        self.assertEqual(len(document['tests']), 5)
        self.assertIsNotNone(report.evidence_for(MethodChoices.FUNCOMM)['witness'])

    def test_rational_kernel(self):
        T = RationalScalar(np.array([-1j, 1.0]), np.array([1j, 1.0]))
        report = classify(RationalMatrixFunction.diagonal([T, T]))
        self.assertEqual(report.best, MethodChoices.RATIONAL)

    def test_non_square(self):
        with self.assertRaises(InvalidInputError):
            classify(MatrixFunction.from_rows([[1.0, 2.0]], N))
