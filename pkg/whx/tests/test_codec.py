import csv
import io
import json
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from whx import codec
from whx.commutative_wh import JonesKernel, KhrapkovKernel
from whx.contour_core import LaurentFunction, MatrixFunction, assess
from whx.discrete_wh import DiscreteSequence
from whx.exceptions import InvalidInputError, NotInClassError
from whx.rational_wh import RationalMatrixFunction


class NumberTests(SimpleTestCase):
    def test_float_format_round_trips_exactly(self):
        self.assertEqual(codec.format_float(0.1), '0.10000000000000001')
        self.assertEqual(float(codec.format_float(1 / 3)), 1 / 3)

    def test_non_finite(self):
        self.assertEqual(codec.format_float(float('inf')), 'Infinity')
        self.assertEqual(codec.format_float(float('nan')), 'NaN')

    def test_complex_forms(self):
        self.assertEqual(codec.decode_complex(2), 2 + 0j)
        self.assertEqual(codec.decode_complex([1, -2]), 1 - 2j)
        for bad in ([1, 2, 3], 'x', None, True):
            with self.assertRaises(InvalidInputError):
                codec.decode_complex(bad)


class DumpsTests(SimpleTestCase):
    def test_document_is_valid_json(self):
        document = {'kappa': np.int64(1), 'value': 1 + 2j, 'flag': np.bool_(True), 'items': [1.5, 2]}
        text = codec.dumps(document)
        self.assertEqual(json.loads(text), {'kappa': 1, 'value': [1.0, 2.0], 'flag': True, 'items': [1.5, 2]})
        self.assertTrue(text.endswith('\n'))

    def test_output_is_deterministic(self):
        f = LaurentFunction.from_dict({-1: 0.25, 0: 1.0, 1: 0.5}, 16)
        self.assertEqual(codec.dumps({'f': f}), codec.dumps({'f': f}))

    def test_unknown_objects_fall_back_to_repr(self):
        text = codec.dumps({'state': object()})
        self.assertIn('object', json.loads(text)['state'])

    def test_load_reports_bad_json(self):
        with self.assertRaises(InvalidInputError):
            codec.load(io.StringIO('{"rows": '))
        with self.assertRaises(InvalidInputError):
            codec.load('/nonexistent/kernel.json')


class LaurentCodecTests(SimpleTestCase):
    def test_coefficient_form(self):
        f = codec.decode_laurent({'k_min': -1, 'coeffs': [0.25, 1, [0.5, 0]]}, 32)
        self.assertEqual(f.k_min, -1)
        self.assertAlmostEqual(f.coefficient(1), 0.5)
        self.assertEqual(f.n_samples, 32)

    def test_constant_and_samples(self):
        self.assertAlmostEqual(codec.decode_laurent(3.0, 16).coefficient(0), 3.0)
        samples = LaurentFunction.monomial(1, 1.0, 16).samples()
        f = codec.decode_laurent({'samples': [[z.real, z.imag] for z in samples]})
        self.assertAlmostEqual(abs(f.coefficient(1) - 1.0), 0.0, places=12)

    def test_rational_form_in_alpha(self):
        f = codec.decode_laurent({'num': [[0, -1], 1], 'den': [[0, 1], 1]}, 16)
        self.assertAlmostEqual(abs(f.coefficient(1) - 1.0), 0.0, places=10)

    def test_unknown_form(self):
        with self.assertRaises(InvalidInputError):
            codec.decode_laurent({'values': [1, 2]})


class MatrixCodecTests(SimpleTestCase):
    def test_round_trip_keeps_samples(self):
        M = MatrixFunction.from_rows([[LaurentFunction.monomial(1, 1.0, 16), 0.5], [0.0, 2.0]], 16)
        back = codec.decode_matrix(codec.encode_matrix(M))
        np.testing.assert_allclose(back.samples(), M.samples(), atol=1e-15)

    def test_entry_count_checked(self):
        with self.assertRaises(InvalidInputError):
            codec.decode_matrix({'rows': 2, 'cols': 2, 'entries': [1, 0, 0]})

    def test_domain_checked(self):
        with self.assertRaises(InvalidInputError):
            codec.decode_matrix({'rows': 1, 'cols': 1, 'entries': [1], 'domain': 'sphere'})

    def test_rational_matrix(self):
        M = codec.decode_rational_matrix({'rational': [[{'num': [[0, -1], 1], 'den': [[0, 1], 1]}, 0],
                                                       [0, 1]]})
        self.assertIsInstance(M, RationalMatrixFunction)
        self.assertEqual(len(codec.encode_rational_matrix(M)['rational']), 2)


class DescriptorTests(SimpleTestCase):
    def test_khrapkov(self):
        kernel = codec.decode_khrapkov({'k0': 2.0, 'k1': {'k_min': 1, 'coeffs': [0.1]},
                                        'J': [[[0], [1]], [[0.25], [0]]], 'delta2': [0.25]}, 32)
        self.assertIsInstance(kernel, KhrapkovKernel)
        self.assertEqual(kernel.J.shape, (2, 2))

    def test_khrapkov_membership_checked(self):
        with self.assertRaises(NotInClassError):
            codec.decode_khrapkov({'k0': 2.0, 'k1': 0.1, 'J': [[[0], [1]], [[1], [0]]], 'delta2': [0.25]}, 32)

    def test_jones(self):
        kernel = codec.decode_jones({'a': [2.0, 0.3], 'E': [[0, 1], [0.25, 0]], 'q': 0.5}, 32)
        self.assertIsInstance(kernel, JonesKernel)
        self.assertEqual(kernel.size, 2)

    def test_triangular_rows(self):
        M = codec.decode_triangular({'zeta': [{'k_min': 1, 'coeffs': [1]}, 1, {'k_min': -1, 'coeffs': [1]}],
                                     'a': [[], [0.5], [0, 0.5]]}, 16)
        self.assertEqual(M.shape, (3, 3))
        self.assertAlmostEqual(M.entry(2, 1).coefficient(0), 0.5)
        self.assertEqual(M.entry(0, 2).sup_norm(), 0.0)

    def test_triangular_shorthand_and_shape(self):
        M = codec.decode_triangular({'zeta': [1, 1], 'a': 0.3}, 16)
        self.assertAlmostEqual(M.entry(1, 0).coefficient(0), 0.3)
        with self.assertRaises(InvalidInputError):
            codec.decode_triangular({'zeta': [1, 1, 1], 'a': [[], [0.5], [0.5]]}, 16)


class FactorizationCodecTests(SimpleTestCase):
    def setUp(self):
        G = MatrixFunction.diagonal([LaurentFunction.monomial(1, 1.0, 16), LaurentFunction.monomial(-1, 1.0, 16)])
        identity = MatrixFunction.identity(2, 16)
        self.G = G
        self.fact = assess(G, identity, identity, (1, -1), method='funcomm')

    def test_wrapped_document(self):
        back = codec.decode_factorization({'factorization': codec.encode_factorization(self.fact)})
        self.assertEqual(back.partial_indices, (1, -1))
        self.assertEqual(back.method, 'funcomm')
        np.testing.assert_allclose(back.reassemble(), self.G.samples(), atol=1e-14)

    def test_bad_side(self):
        document = codec.encode_factorization(self.fact)
        document['side'] = 'middle'
        with self.assertRaises(InvalidInputError):
            codec.decode_factorization(document)

    def test_csv_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'diagnostics.csv')
            codec.write_csv(path, codec.DIAGNOSTICS_HEADER, codec.diagnostics_rows(self.fact, self.G))
            with open(path, newline='') as fh:
                rows = list(csv.reader(fh))
        self.assertEqual(rows[0], codec.DIAGNOSTICS_HEADER)
        self.assertEqual(len(rows), 17)
        decay = codec.decay_rows(self.fact)
        self.assertEqual({row[0] for row in decay}, {'plus', 'minus'})


class SequenceCodecTests(SimpleTestCase):
    def test_offset(self):
        seq = codec.decode_sequence({'offset': -1, 'values': [0.25, 1, 0.25]})
        self.assertEqual(seq.offset, -1)
        self.assertEqual(codec.encode_sequence(DiscreteSequence.delta(2)), {'offset': 2, 'values': [[1.0, 0.0]]})

    def test_offset_must_be_integer(self):
        with self.assertRaises(InvalidInputError):
            codec.decode_sequence({'offset': 'x', 'values': [1]})
