"""
JSON and CSV encodings shared by the management commands.

Complex numbers are written as ``[re, im]``, Laurent functions as
``{"k_min", "coeffs"}`` and matrix functions row-major. Floats are always
printed with 17 significant digits so that repeated runs produce
byte-identical documents.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np

from whx.choices import DomainTag, FactorSide
from whx.commutative_wh import JonesKernel, KhrapkovKernel
from whx.conf import Tolerances, resolve
from whx.contour_core import Factorization, LaurentFunction, MatrixFunction, mobius_transport, unit_nodes
from whx.discrete_wh import DiscreteSequence
from whx.exceptions import InvalidInputError
from whx.rational_wh import PolynomialMatrix, RationalMatrixFunction, RationalScalar

DIAGNOSTICS_HEADER = ['angle', 'residual', 'plus_defect', 'minus_defect']
DECAY_HEADER = ['factor', 'row', 'col', 'k', 'magnitude']


# Numbers

def format_float(x: float) -> str:
    if math.isnan(x):
        return 'NaN'
    if math.isinf(x):
        return 'Infinity' if x > 0 else '-Infinity'
    return format(x, '.17g')


def encode_complex(z) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(value) -> complex:
    """Accepts a plain number or an ``[re, im]`` pair."""
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(value)
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, bool) or value is None:
            raise TypeError(value)
        return complex(value)
    except (ValueError, TypeError):
        raise InvalidInputError(f'cannot read a complex number from {value!r}')


def decode_complex_list(values) -> np.ndarray:
    if not isinstance(values, (list, tuple)):
        raise InvalidInputError('expected a list of complex numbers')
    return np.array([decode_complex(v) for v in values], dtype=complex)


def plain(value: Any) -> Any:
    """Convert numpy and complex values into JSON-ready Python objects."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return encode_complex(value)
    if isinstance(value, LaurentFunction):
        return encode_laurent(value)
    if isinstance(value, MatrixFunction):
        return encode_matrix(value)
    if value is None or isinstance(value, str):
        return value
    return repr(value)


def _emit(value: Any, indent: int, level: int) -> str:
    pad = ' ' * (indent * (level + 1))
    close = ' ' * (indent * level)
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [f'{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}' for k, v in value.items()]
        return '{\n' + ',\n'.join(items) + '\n' + close + '}'
    if isinstance(value, list):
        if not value:
            return '[]'
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return '[' + ', '.join(_emit(v, indent, level + 1) for v in value) + ']'
        items = [pad + _emit(v, indent, level + 1) for v in value]
        return '[\n' + ',\n'.join(items) + '\n' + close + ']'
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    raise InvalidInputError(f'cannot encode a value of type {type(value).__name__}')


def dumps(document: Any, indent: int = 2) -> str:
    return _emit(plain(document), indent, 0) + '\n'


def load(source: Union[str, Path, TextIO]) -> Any:
    try:
        if hasattr(source, 'read'):
            return json.load(source)
        with open(source, encoding='utf-8') as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f'cannot read {source}: {exc.strerror}', path=str(source))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f'{source} is not valid JSON: {exc.msg}', path=str(source), line=exc.lineno)


def _require(obj: Dict[str, Any], *keys: str) -> None:
    if not isinstance(obj, dict):
        raise InvalidInputError(f'expected a JSON object with keys {", ".join(keys)}')
    missing = [k for k in keys if k not in obj]
    if missing:
        raise InvalidInputError(f'missing key(s): {", ".join(missing)}', missing=missing)


# Laurent functions

def encode_laurent(f: LaurentFunction) -> Dict[str, Any]:
    return {'k_min': f.k_min, 'coeffs': [encode_complex(c) for c in f.coeffs], 'n_samples': f.n_samples}


def decode_laurent(obj: Any, n_samples: Optional[int] = None, tol: Optional[Tolerances] = None) -> LaurentFunction:
    """
    Accepted forms: a number, ``{"k_min", "coeffs"}``, ``{"samples"}`` at the
    circle nodes, ``{"line_samples"[, "locations"]}`` at the transported line
    nodes, or a rational function of alpha ``{"num", "den"}``.
    """
    tol = resolve(tol)
    n = n_samples or tol.grid
    if not isinstance(obj, dict):
        return LaurentFunction.constant(decode_complex(obj), n)
    if 'coeffs' in obj:
        grid = n_samples or obj.get('n_samples') or tol.grid
        return LaurentFunction(decode_complex_list(obj['coeffs']), int(obj.get('k_min', 0)), grid)
    if 'samples' in obj:
        return LaurentFunction.from_samples(decode_complex_list(obj['samples']))
    if 'line_samples' in obj:
        locations = obj.get('locations')
        if locations is not None:
            locations = [float('inf') if v is None else float(v) for v in locations]
        return mobius_transport(decode_complex_list(obj['line_samples']), locations=locations)
    if 'num' in obj:
        entry = decode_rational_scalar(obj)
        return LaurentFunction.from_callable(entry.on_circle, n_samples, tol)
    raise InvalidInputError('unrecognized function encoding', keys=sorted(obj))


# Matrices

def encode_matrix(M: MatrixFunction) -> Dict[str, Any]:
    return {
        'rows': M.rows,
        'cols': M.cols,
        'domain': str(M.domain),
        'entries': [encode_laurent(M.entry(i, j)) for i in range(M.rows) for j in range(M.cols)],
    }


def decode_matrix(obj: Any, n_samples: Optional[int] = None, tol: Optional[Tolerances] = None) -> MatrixFunction:
    _require(obj, 'rows', 'cols', 'entries')
    try:
        rows, cols = int(obj['rows']), int(obj['cols'])
    except (ValueError, TypeError):
        raise InvalidInputError('rows and cols must be integers')
    entries = obj['entries']
    if not isinstance(entries, list) or len(entries) != rows * cols or rows < 1 or cols < 1:
        raise InvalidInputError(f'{rows * cols} row-major entries expected')
    functions = [decode_laurent(e, n_samples, tol) for e in entries]
    grid = n_samples or max(f.n_samples for f in functions)
    functions = [f.with_grid(grid) for f in functions]
    domain = obj.get('domain', DomainTag.CIRCLE)
    if domain not in DomainTag.values:
        raise InvalidInputError(f'unknown domain {domain!r}')
    return MatrixFunction([functions[i * cols:(i + 1) * cols] for i in range(rows)], domain)


def decode_rational_scalar(obj: Any) -> RationalScalar:
    if not isinstance(obj, dict):
        return RationalScalar.constant(decode_complex(obj))
    _require(obj, 'num')
    den = obj.get('den')
    return RationalScalar(decode_complex_list(obj['num']), None if den is None else decode_complex_list(den))


def decode_rational_matrix(obj: Any) -> RationalMatrixFunction:
    """``{"rational": [[entry, ...], ...]}`` with each entry ``{"num", "den"}`` in increasing powers of alpha."""
    _require(obj, 'rational')
    rows = obj['rational']
    if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
        raise InvalidInputError('"rational" must be a list of rows')
    return RationalMatrixFunction.from_rows([[decode_rational_scalar(e) for e in row] for row in rows])


def encode_rational_scalar(entry: RationalScalar) -> Dict[str, Any]:
    return {'num': [encode_complex(c) for c in entry.num], 'den': [encode_complex(c) for c in entry.den]}


def encode_rational_matrix(M: RationalMatrixFunction) -> Dict[str, Any]:
    return {'rational': [[encode_rational_scalar(e) for e in row] for row in M.entries]}


# Kernel class descriptors

def decode_khrapkov(obj: Dict[str, Any], n_samples: Optional[int] = None,
                    tol: Optional[Tolerances] = None) -> KhrapkovKernel:
    _require(obj, 'k0', 'k1', 'J', 'delta2')
    J = obj['J']
    if not isinstance(J, list) or not all(isinstance(row, list) for row in J):
        raise InvalidInputError('"J" must be a matrix of coefficient lists in t')
    # each entry lists its coefficients in increasing powers of t
    entries = [[decode_complex_list(e) if isinstance(e, list) else np.array([decode_complex(e)]) for e in row]
               for row in J]
    k0 = decode_laurent(obj['k0'], n_samples, tol)
    k1 = decode_laurent(obj['k1'], n_samples, tol)
    grid = max(k0.n_samples, k1.n_samples)
    kernel = KhrapkovKernel(k0.with_grid(grid), k1.with_grid(grid), PolynomialMatrix.from_entries(entries),
                            decode_complex_list(obj['delta2']))
    kernel.validate()
    return kernel


def decode_jones(obj: Dict[str, Any], n_samples: Optional[int] = None,
                 tol: Optional[Tolerances] = None) -> JonesKernel:
    _require(obj, 'a', 'E', 'q')
    a = [decode_laurent(f, n_samples, tol) for f in obj['a']]
    if not a:
        raise InvalidInputError('"a" must list the coefficient functions')
    grid = max(f.n_samples for f in a)
    E = np.array([[decode_complex(v) for v in row] for row in obj['E']], dtype=complex)
    kernel = JonesKernel(tuple(f.with_grid(grid) for f in a), E, decode_complex(obj['q']))
    kernel.validate()
    return kernel


def decode_triangular(obj: Dict[str, Any], n_samples: Optional[int] = None,
                      tol: Optional[Tolerances] = None) -> MatrixFunction:
    """
    ``{"zeta": [f_0, ..., f_{n-1}], "a": [[], [a_10], [a_20, a_21], ...]}``,
    the strictly lower part row by row. For 2x2 a single function may be
    given in place of ``a``.
    """
    _require(obj, 'zeta', 'a')
    zeta = [decode_laurent(f, n_samples, tol) for f in obj['zeta']]
    size = len(zeta)
    if size == 0:
        raise InvalidInputError('"zeta" must list the diagonal entries')
    lower = obj['a']
    if size == 2 and not (isinstance(lower, list) and lower and isinstance(lower[0], list)):
        lower = [[], [lower]]
    if not isinstance(lower, list) or len(lower) != size:
        raise InvalidInputError(f'"a" must have {size} rows')
    rows = []
    for i in range(size):
        if not isinstance(lower[i], list) or len(lower[i]) != i:
            raise InvalidInputError(f'row {i} of "a" needs {i} entries', row=i)
        row = [decode_laurent(e, n_samples, tol) for e in lower[i]]
        row.append(zeta[i])
        row.extend([0.0] * (size - i - 1))
        rows.append(row)
    return MatrixFunction.from_rows(rows, n_samples)


# Factorizations

def encode_factorization(f: Factorization) -> Dict[str, Any]:
    return {
        'side': str(f.side),
        'method': f.method,
        'partial_indices': list(f.partial_indices),
        'residual_inf': f.residual_inf,
        'analyticity_defect': f.analyticity_defect,
        'n_samples': f.n_samples,
        'plus': encode_matrix(f.plus),
        'minus': encode_matrix(f.minus),
        'notes': plain(f.notes),
    }


def decode_factorization(obj: Any, n_samples: Optional[int] = None,
                         tol: Optional[Tolerances] = None) -> Factorization:
    if isinstance(obj, dict) and 'factorization' in obj:
        obj = obj['factorization']
    _require(obj, 'plus', 'minus', 'partial_indices')
    side = obj.get('side', FactorSide.LEFT)
    if side not in FactorSide.values:
        raise InvalidInputError(f'unknown factorization side {side!r}')
    try:
        indices = tuple(int(k) for k in obj['partial_indices'])
    except (ValueError, TypeError):
        raise InvalidInputError('partial indices must be integers')
    return Factorization(plus=decode_matrix(obj['plus'], n_samples, tol),
                         minus=decode_matrix(obj['minus'], n_samples, tol),
                         partial_indices=indices, residual_inf=float(obj.get('residual_inf', 0.0)),
                         analyticity_defect=float(obj.get('analyticity_defect', 0.0)), side=side,
                         method=obj.get('method', ''))


# Sequences

def encode_sequence(seq: DiscreteSequence) -> Dict[str, Any]:
    return {'offset': seq.offset, 'values': [encode_complex(v) for v in seq.values]}


def decode_sequence(obj: Any) -> DiscreteSequence:
    _require(obj, 'values')
    try:
        offset = int(obj.get('offset', 0))
    except (ValueError, TypeError):
        raise InvalidInputError('sequence offset must be an integer')
    return DiscreteSequence(decode_complex_list(obj['values']), offset)


# CSV

def write_csv(target: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(target, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])


def diagnostics_rows(f: Factorization, G: MatrixFunction) -> List[List[Any]]:
    """Per node: angle, residual, wrong-sided part of each factor."""
    n = f.n_samples if f.residual_profile is None else f.residual_profile.size
    if f.residual_profile is not None:
        residual = f.residual_profile
    else:
        residual = np.abs(G.samples(n) - f.reassemble(n)).max(axis=(1, 2))
    plus = f.plus.wrong_side_profile('plus', n)
    minus = f.minus.wrong_side_profile('minus', n)
    angles = np.angle(unit_nodes(n))
    return [[float(angles[j]), float(residual[j]), float(plus[j]), float(minus[j])] for j in range(n)]


def decay_rows(f: Factorization, rel_tol: float = 0.0) -> List[List[Any]]:
    rows = []
    for name, M in (('plus', f.plus), ('minus', f.minus)):
        for i in range(M.rows):
            for j in range(M.cols):
                entry = M.entry(i, j)
                for k, c in zip(entry.ks, entry.coeffs):
                    magnitude = float(abs(c))
                    if magnitude > rel_tol:
                        rows.append([name, i, j, int(k), magnitude])
    return rows
