import csv
import io
import json
import os
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from whx import codec
from whx.contour_core import LaurentFunction, MatrixFunction, assess

DIAGONAL_KERNEL = {
    'rows': 2, 'cols': 2,
    'entries': [{'k_min': 1, 'coeffs': [1]}, 0, 0, {'k_min': -1, 'coeffs': [1]}],
}


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_json(self, name, document):
        target = self.path(name)
        with open(target, 'w') as fh:
            json.dump(document, fh)
        return target

    def call(self, name, **options):
        stdout, stderr = io.StringIO(), io.StringIO()
        try:
            call_command(name, stdout=stdout, stderr=stderr, **options)
        except CommandError as exc:
            return exc.returncode, stdout.getvalue(), stderr.getvalue()
        return 0, stdout.getvalue(), stderr.getvalue()


class FactorScalarCommandTests(CommandTestCase):
    def test_index_of_t(self):
        source = self.write_json('g.json', {'k_min': 1, 'coeffs': [1]})
        code, stdout, _ = self.call('factor_scalar', input=source, summary=self.path('summary.txt'))
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document['kappa'], 1)
        with open(self.path('summary.txt')) as fh:
            summary = fh.read()
        self.assertIn('kappa:               1', summary)
        self.assertIn('passed', summary)

    def test_unreadable_input(self):
        source = self.path('broken.json')
        with open(source, 'w') as fh:
            fh.write('{"k_min": ')
        code, stdout, stderr = self.call('factor_scalar', input=source)
        self.assertEqual(code, 2)
        self.assertEqual(stdout, '')
        self.assertEqual(json.loads(stderr)['error'], 'invalid-input')

    def test_missing_input(self):
        code, _, _ = self.call('factor_scalar', input=self.path('absent.json'))
        self.assertEqual(code, 2)


class FactorMatrixCommandTests(CommandTestCase):
    def test_auto_method_on_diagonal_kernel(self):
        source = self.write_json('g.json', DIAGONAL_KERNEL)
        code, stdout, _ = self.call('factor_matrix', input=source)
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document['partial_indices'], [1, -1])
        self.assertFalse(document['stable'])
        self.assertTrue(document['index_sum']['passed'])

    def test_method_outside_its_class(self):
        source = self.write_json('g.json', DIAGONAL_KERNEL)
        code, _, stderr = self.call('factor_matrix', input=source, method='khrapkov')
        self.assertEqual(code, 4)
        self.assertEqual(json.loads(stderr)['exit_code'], 4)

    def test_runs_are_identical(self):
        source = self.write_json('g.json', DIAGONAL_KERNEL)
        for name in ('first.json', 'second.json'):
            code, stdout, _ = self.call('factor_matrix', input=source, output=self.path(name))
            self.assertEqual(code, 0)
            self.assertIn('Wrote', stdout)
        with open(self.path('first.json')) as a, open(self.path('second.json')) as b:
            self.assertEqual(a.read(), b.read())

    def test_diagnostics_match_residual(self):
        source = self.write_json('g.json', {'zeta': [{'k_min': 1, 'coeffs': [1]}, {'k_min': -1, 'coeffs': [1]}],
                                            'a': 0.1})
        code, stdout, _ = self.call('factor_matrix', input=source, diagnostics=self.path('diag.csv'),
                                    decay=self.path('decay.csv'))
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document['partial_indices'], [0, 0])
        with open(self.path('diag.csv'), newline='') as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual(max(float(row['residual']) for row in rows), document['residual_inf'])
        with open(self.path('decay.csv'), newline='') as fh:
            self.assertEqual(next(csv.reader(fh)), codec.DECAY_HEADER)

    def test_asymptotic_needs_eps(self):
        source = self.write_json('g.json', DIAGONAL_KERNEL)
        code, _, _ = self.call('factor_matrix', input=source, method='asymptotic')
        self.assertEqual(code, 2)


class VerifyCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        t = LaurentFunction.monomial(1, 1.0, 64)
        self.G = MatrixFunction.diagonal([t, LaurentFunction.monomial(-1, 1.0, 64)])
        self.matrix = self.write_json('g.json', json.loads(codec.dumps(codec.encode_matrix(self.G))))

    def factorization(self, indices):
        identity = MatrixFunction.identity(2, 64)
        fact = assess(self.G, identity, identity, indices)
        return self.write_json('f.json', json.loads(codec.dumps(codec.encode_factorization(fact))))

    def test_correct_factorization(self):
        code, stdout, _ = self.call('verify', matrix=self.matrix, factorization=self.factorization((1, -1)))
        self.assertEqual(code, 0)
        self.assertTrue(json.loads(stdout)['passed'])

    def test_wrong_indices_fail_after_writing(self):
        output = self.path('verify.json')
        code, _, _ = self.call('verify', matrix=self.matrix, factorization=self.factorization((0, 0)),
                               output=output)
        self.assertEqual(code, 3)
        with open(output) as fh:
            self.assertFalse(json.load(fh)['passed'])


class OtherCommandTests(CommandTestCase):
    def test_classify(self):
        source = self.write_json('g.json', DIAGONAL_KERNEL)
        code, stdout, _ = self.call('classify', input=source)
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document['classes'], ['triangular', 'funcomm'])
        self.assertFalse(document['complete'])

    def test_stability_of_given_indices(self):
        code, stdout, _ = self.call('stability', indices='1,-1')
        self.assertEqual(code, 0)
        self.assertFalse(json.loads(stdout)['stable'])

    def test_solve_discrete(self):
        kernel = self.write_json('a.json', {'offset': -1, 'values': [0.25, 1, 0.25]})
        rhs = self.write_json('c.json', {'offset': 0, 'values': [1]})
        code, stdout, _ = self.call('solve_discrete', kernel=kernel, rhs=rhs, oracle=64)
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document['dof'], 0)
        self.assertLess(document['residual'], 1e-10)
