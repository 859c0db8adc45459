"""
Contour representations on the unit circle.

Every scalar kernel is held as a ``LaurentFunction``: finitely many Laurent
coefficients together with the FFT grid used for pointwise arithmetic.
Matrix kernels are rectangular arrays of such functions. Real-line data is
moved onto the circle with the Möbius ratio t = (alpha - i)/(alpha + i),
which sends the upper half-plane to the inside of the disc and alpha = oo to
t = 1.

Plus/minus convention: the k = 0 coefficient belongs to the plus part.
"""

import dataclasses
import logging
import numbers
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from whx.choices import DomainTag, FactorSide, MobiusDirection
from whx.conf import Tolerances, resolve
from whx.exceptions import ContourSingularityError, InvalidInputError, ResolutionError

logger = logging.getLogger(__name__)

Number = Union[int, float, complex]

# Finite stand-in for alpha = oo when sampling callables on the line.
LINE_INFINITY_PROBE = 1e15

# Products of short coefficient arrays are convolved exactly below this size.
_EXACT_CONVOLUTION_LIMIT = 4096


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: float) -> int:
    return 1 << max(int(np.ceil(np.log2(max(n, 1)))), 0)


def check_grid(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise InvalidInputError(f'grid size must be an integer, got {n!r}')
    n = int(n)
    if n < 4 or not is_power_of_two(n):
        raise InvalidInputError(f'grid size must be a power of two >= 4, got {n}', n_samples=n)
    return n


def unit_nodes(n: int) -> np.ndarray:
    """The n-th roots of unity, starting at t = 1."""
    return np.exp(2j * np.pi * np.arange(n) / n)


def continuous_log(values: np.ndarray) -> np.ndarray:
    """log|v| + i arg v with the argument unwrapped along the grid."""
    values = np.asarray(values, dtype=complex)
    return np.log(np.abs(values)) + 1j * np.unwrap(np.angle(values))


def _is_number(value) -> bool:
    return isinstance(value, numbers.Number) and not isinstance(value, bool)


@dataclass(frozen=True, eq=False)
class LaurentFunction:
    """
    A function on the unit circle, f(t) = sum_k coeffs[k - k_min] t^k.

    ``n_samples`` is the grid used when the function takes part in pointwise
    arithmetic; the coefficient range always contains k = 0.
    """

    coeffs: np.ndarray
    k_min: int = 0
    n_samples: int = 256

    __array_ufunc__ = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        k_min = int(self.k_min)
        if coeffs.size == 0:
            coeffs, k_min = np.zeros(1, dtype=complex), 0
        if k_min > 0:
            coeffs = np.concatenate([np.zeros(k_min, dtype=complex), coeffs])
            k_min = 0
        k_max = k_min + coeffs.size - 1
        if k_max < 0:
            coeffs = np.concatenate([coeffs, np.zeros(-k_max, dtype=complex)])
        coeffs.flags.writeable = False
        object.__setattr__(self, 'coeffs', coeffs)
        object.__setattr__(self, 'k_min', k_min)
        object.__setattr__(self, 'n_samples', check_grid(self.n_samples))

    # Construction

    @classmethod
    def constant(cls, value: Number, n_samples: int = 256) -> 'LaurentFunction':
        return cls(np.array([value]), 0, n_samples)

    @classmethod
    def monomial(cls, k: int, value: Number = 1.0, n_samples: int = 256) -> 'LaurentFunction':
        return cls(np.array([value]), k, n_samples)

    @classmethod
    def from_dict(cls, mapping: Dict[int, Number], n_samples: int = 256) -> 'LaurentFunction':
        if not mapping:
            return cls.constant(0.0, n_samples)
        k_min, k_max = min(mapping), max(mapping)
        coeffs = np.zeros(k_max - k_min + 1, dtype=complex)
        for k, value in mapping.items():
            coeffs[k - k_min] = value
        return cls(coeffs, k_min, n_samples)

    @classmethod
    def from_samples(cls, samples) -> 'LaurentFunction':
        samples = np.asarray(samples, dtype=complex).ravel()
        n = check_grid(samples.size)
        coeffs = np.fft.fftshift(np.fft.fft(samples)) / n
        return cls(coeffs, -(n // 2), n)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], n_samples: Optional[int] = None,
                      tol: Optional[Tolerances] = None, refine: bool = True) -> 'LaurentFunction':
        """Sample ``func(t)`` on the circle, doubling the grid until the tail is negligible."""
        return _refined(lambda n: func(unit_nodes(n)), n_samples, tol, refine)

    @classmethod
    def from_line(cls, func: Callable[[np.ndarray], np.ndarray], n_samples: Optional[int] = None,
                  tol: Optional[Tolerances] = None, refine: bool = True) -> 'LaurentFunction':
        """Transport ``func(alpha)`` from the real line and sample it on the circle."""
        return _refined(lambda n: sample_on_line(func, n), n_samples, tol, refine)

    # Coefficient access

    @property
    def k_max(self) -> int:
        return self.k_min + self.coeffs.size - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def coefficient(self, k: int) -> complex:
        if k < self.k_min or k > self.k_max:
            return 0j
        return complex(self.coeffs[k - self.k_min])

    def with_grid(self, n_samples: int) -> 'LaurentFunction':
        if n_samples == self.n_samples:
            return self
        return dataclasses.replace(self, n_samples=n_samples)

    # Evaluation

    @cached_property
    def _grid_values(self) -> np.ndarray:
        values = self._alias(self.n_samples)
        values.flags.writeable = False
        return values

    def _alias(self, n: int) -> np.ndarray:
        spectrum = np.zeros(n, dtype=complex)
        np.add.at(spectrum, self.ks % n, self.coeffs)
        return n * np.fft.ifft(spectrum)

    def samples(self, n: Optional[int] = None) -> np.ndarray:
        """Values at the n-th roots of unity (exact for the held coefficients)."""
        if n is None or n == self.n_samples:
            return self._grid_values
        return self._alias(check_grid(n))

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        z = np.atleast_1d(points)
        result = npoly.polyval(z, self.coeffs[-self.k_min:])
        if self.k_min < 0:
            w = 1.0 / z
            result = result + w * npoly.polyval(w, self.coeffs[:-self.k_min][::-1])
        return result.reshape(points.shape)

    def sup_norm(self, n: Optional[int] = None) -> float:
        return float(np.abs(self.samples(n)).max())

    # Projections

    def plus(self) -> 'LaurentFunction':
        if self.k_max < 0:
            return LaurentFunction.constant(0.0, self.n_samples)
        return LaurentFunction(self.coeffs[-self.k_min:], 0, self.n_samples)

    def minus(self) -> 'LaurentFunction':
        if self.k_min == 0:
            return LaurentFunction.constant(0.0, self.n_samples)
        return LaurentFunction(self.coeffs[:-self.k_min], self.k_min, self.n_samples)

    def split(self) -> Tuple['LaurentFunction', 'LaurentFunction']:
        return self.plus(), self.minus()

    def wrong_side(self, side: str = 'plus') -> 'LaurentFunction':
        """The part that should vanish for a plus (k >= 0) or minus (k <= 0) function."""
        if side == 'plus':
            return self.minus()
        positive = self.plus() - self.coefficient(0)
        return positive

    def analyticity_defect(self, side: str = 'plus') -> float:
        if side == 'plus':
            wrong = self.coeffs[self.ks < 0]
        else:
            wrong = self.coeffs[self.ks > 0]
        return float(np.abs(wrong).max()) if wrong.size else 0.0

    def tail_defect(self) -> float:
        """Largest coefficient beyond |k| = n_samples/4, relative to max(1, largest coefficient)."""
        magnitudes = np.abs(self.coeffs)
        scale = max(float(magnitudes.max()), 1.0)
        outer = np.abs(self.ks) > self.n_samples // 4
        if not outer.any():
            return 0.0
        return float(magnitudes[outer].max() / scale)

    def trimmed(self, rel_tol: float = 1e-14) -> 'LaurentFunction':
        """Drop coefficients below ``rel_tol`` times the largest one."""
        magnitudes = np.abs(self.coeffs)
        scale = magnitudes.max()
        keep = magnitudes > rel_tol * scale if scale > 0 else np.zeros_like(magnitudes, dtype=bool)
        keep[-self.k_min] = True
        first, last = np.flatnonzero(keep)[[0, -1]]
        coeffs = np.where(keep, self.coeffs, 0.0)[first:last + 1]
        return LaurentFunction(coeffs, self.k_min + first, self.n_samples)

    def order_at_infinity(self, rel_tol: float = 1e-9) -> int:
        """Largest k with a coefficient above ``rel_tol`` of the largest one."""
        magnitudes = np.abs(self.coeffs)
        scale = magnitudes.max()
        if scale == 0.0:
            return self.k_min
        significant = np.flatnonzero(magnitudes > rel_tol * scale)
        return int(self.ks[significant[-1]])

    # Arithmetic

    def shift(self, m: int) -> 'LaurentFunction':
        """Multiply by t**m (exact on coefficients)."""
        return LaurentFunction(self.coeffs, self.k_min + int(m), self.n_samples)

    def apply(self, func: Callable[[np.ndarray], np.ndarray], n: Optional[int] = None) -> 'LaurentFunction':
        """Pointwise ``func`` on the grid followed by coefficient recovery."""
        return LaurentFunction.from_samples(func(self.samples(n or self.n_samples)))

    def reciprocal(self, tol: Optional[Tolerances] = None) -> 'LaurentFunction':
        return self._divide_into(1.0, tol)

    def _divide_into(self, numerator, tol: Optional[Tolerances] = None) -> 'LaurentFunction':
        tol = resolve(tol)
        n = self.n_samples
        if isinstance(numerator, LaurentFunction):
            n = max(n, numerator.n_samples)
        values = self.samples(n)
        smallest = float(np.abs(values).min())
        if smallest <= tol.singularity:
            raise ContourSingularityError('division by a function vanishing on the contour',
                                          min_modulus=smallest)
        top = numerator.samples(n) if isinstance(numerator, LaurentFunction) else numerator
        return LaurentFunction.from_samples(top / values)

    def _aligned(self, other: 'LaurentFunction') -> Tuple[np.ndarray, np.ndarray, int]:
        k_min = min(self.k_min, other.k_min)
        k_max = max(self.k_max, other.k_max)
        a = np.zeros(k_max - k_min + 1, dtype=complex)
        b = np.zeros_like(a)
        a[self.k_min - k_min:self.k_max - k_min + 1] = self.coeffs
        b[other.k_min - k_min:other.k_max - k_min + 1] = other.coeffs
        return a, b, k_min

    def __add__(self, other):
        if isinstance(other, LaurentFunction):
            a, b, k_min = self._aligned(other)
            return LaurentFunction(a + b, k_min, max(self.n_samples, other.n_samples))
        if _is_number(other):
            coeffs = np.array(self.coeffs)
            coeffs[-self.k_min] += other
            return LaurentFunction(coeffs, self.k_min, self.n_samples)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return LaurentFunction(-self.coeffs, self.k_min, self.n_samples)

    def __sub__(self, other):
        if isinstance(other, LaurentFunction) or _is_number(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if _is_number(other):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if _is_number(other):
            return LaurentFunction(self.coeffs * other, self.k_min, self.n_samples)
        if not isinstance(other, LaurentFunction):
            return NotImplemented
        n = max(self.n_samples, other.n_samples)
        span = self.coeffs.size + other.coeffs.size - 1
        if self.coeffs.size * other.coeffs.size <= _EXACT_CONVOLUTION_LIMIT and span <= n:
            return LaurentFunction(np.convolve(self.coeffs, other.coeffs), self.k_min + other.k_min, n)
        return LaurentFunction.from_samples(self.samples(n) * other.samples(n))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_number(other):
            return LaurentFunction(self.coeffs / other, self.k_min, self.n_samples)
        if isinstance(other, LaurentFunction):
            return other._divide_into(self)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_number(other):
            return self._divide_into(other)
        return NotImplemented

    def __repr__(self):
        return f'LaurentFunction(k={self.k_min}..{self.k_max}, n_samples={self.n_samples})'


def _refined(sampler: Callable[[int], np.ndarray], n_samples: Optional[int],
             tol: Optional[Tolerances], refine: bool) -> LaurentFunction:
    tol = resolve(tol)
    n = check_grid(n_samples or tol.grid)
    while True:
        f = LaurentFunction.from_samples(sampler(n))
        tail = f.tail_defect()
        if not refine or tail <= tol.tail:
            return f
        if n >= tol.grid_cap:
            logger.warning('Refinement cap %d reached with tail defect %.3e', n, tail)
            return f
        logger.debug('Tail defect %.3e at %d nodes, doubling grid', tail, n)
        n *= 2


def laurent_from_samples(samples) -> LaurentFunction:
    return LaurentFunction.from_samples(samples)


def cauchy_split(f: LaurentFunction) -> Tuple[LaurentFunction, LaurentFunction]:
    """Plemelj projections: (k >= 0 part, k < 0 part)."""
    return f.split()


@dataclass(frozen=True)
class WindingReport:
    index: int
    defect: float
    n_samples: int
    min_modulus: float


def winding_report(f: LaurentFunction, tol: Optional[Tolerances] = None) -> WindingReport:
    """
    Winding number by summing principal argument increments between
    neighbouring nodes; the grid is refined while an increment exceeds pi/2.
    """
    tol = resolve(tol)
    n = max(f.n_samples, 8)
    while True:
        values = f.samples(n)
        min_modulus = float(np.abs(values).min())
        if min_modulus <= tol.singularity:
            raise ContourSingularityError('function vanishes on the contour',
                                          min_modulus=min_modulus, n_samples=n)
        increments = np.angle(np.roll(values, -1) / values)
        largest = float(np.abs(increments).max())
        if largest <= np.pi / 2 or n >= tol.grid_cap:
            break
        n *= 2
    if largest > 0.9 * np.pi:
        raise ResolutionError('argument increments are not resolved by the grid',
                              largest_increment=largest, n_samples=n)
    total = float(increments.sum() / (2 * np.pi))
    index = int(np.rint(total))
    defect = abs(total - index)
    if defect > 0.1:
        raise ResolutionError('winding number is not close to an integer', defect=defect, n_samples=n)
    return WindingReport(index=index, defect=defect, n_samples=n, min_modulus=min_modulus)


def winding_index(f: LaurentFunction, tol: Optional[Tolerances] = None) -> int:
    return winding_report(f, tol).index


# Möbius transport

@dataclass(frozen=True)
class MobiusMap:
    direction: str = MobiusDirection.LINE_TO_CIRCLE

    def __post_init__(self):
        object.__setattr__(self, 'direction', MobiusDirection(self.direction))

    def inverse(self) -> 'MobiusMap':
        if self.direction == MobiusDirection.LINE_TO_CIRCLE:
            return MobiusMap(MobiusDirection.CIRCLE_TO_LINE)
        return MobiusMap(MobiusDirection.LINE_TO_CIRCLE)

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        with np.errstate(divide='ignore', invalid='ignore'):
            if self.direction == MobiusDirection.LINE_TO_CIRCLE:
                mapped = (points - 1j) / (points + 1j)
                return np.where(np.isinf(points), 1.0 + 0j, mapped)
            mapped = 1j * (1 + points) / (1 - points)
            return np.where(points == 1, complex(np.inf, 0.0), mapped)


def line_nodes(n: int) -> np.ndarray:
    """Preimages on the line of the roots of unity; node 0 is alpha = oo."""
    n = check_grid(n)
    with np.errstate(divide='ignore'):
        alpha = -1.0 / np.tan(np.pi * np.arange(n) / n)
    alpha[0] = np.inf
    return alpha


def sample_on_line(func: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """
    Evaluate ``func`` at the line nodes. The value at infinity is the mean of
    the two far ends, which equals the limit for functions continuous there.
    """
    alpha = line_nodes(n)
    values = np.empty(n, dtype=complex)
    values[1:] = func(alpha[1:])
    far = np.asarray(func(np.array([LINE_INFINITY_PROBE, -LINE_INFINITY_PROBE])), dtype=complex)
    values[0] = 0.5 * (far[0] + far[1])
    return values


@dataclass(frozen=True, eq=False)
class LineSamples:
    locations: np.ndarray
    values: np.ndarray


def mobius_transport(g, mobius: Optional[MobiusMap] = None, locations=None):
    """
    Line to circle: ``g`` is a callable of alpha or samples at the line
    nodes (optionally with their ``locations``, checked against the grid).
    Circle to line: ``g`` is a LaurentFunction, returned as ``LineSamples``.
    """
    mobius = mobius or MobiusMap()
    if mobius.direction == MobiusDirection.CIRCLE_TO_LINE:
        if not isinstance(g, LaurentFunction):
            raise InvalidInputError('circle-to-line transport expects a LaurentFunction')
        return LineSamples(locations=line_nodes(g.n_samples), values=np.array(g.samples()))
    if callable(g):
        return LaurentFunction.from_line(g)
    values = np.asarray(g, dtype=complex).ravel()
    n = check_grid(values.size)
    if locations is not None:
        expected = line_nodes(n)
        given = np.asarray(locations, dtype=float).ravel()
        if given.shape != expected.shape or not np.isinf(given[0]):
            raise InvalidInputError('sample locations do not match the transport grid', n_samples=n)
        if not np.allclose(given[1:], expected[1:], rtol=1e-9, atol=1e-12):
            worst = float(np.abs(given[1:] - expected[1:]).max())
            raise InvalidInputError('sample locations do not match the transport grid',
                                    n_samples=n, max_location_error=worst)
    return LaurentFunction.from_samples(values)


# Matrix functions

@dataclass(frozen=True, eq=False)
class MatrixFunction:
    entries: Tuple[Tuple[LaurentFunction, ...], ...]
    domain: str = DomainTag.CIRCLE
    truncation_defect: float = 0.0

    __array_ufunc__ = None

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if not rows or not rows[0]:
            raise InvalidInputError('matrix function needs at least one entry')
        if any(len(row) != len(rows[0]) for row in rows):
            raise InvalidInputError('matrix function rows have different lengths')
        if not all(isinstance(entry, LaurentFunction) for row in rows for entry in row):
            raise InvalidInputError('matrix function entries must be LaurentFunction values')
        n = max(entry.n_samples for row in rows for entry in row)
        rows = tuple(tuple(entry.with_grid(n) for entry in row) for row in rows)
        object.__setattr__(self, 'entries', rows)
        object.__setattr__(self, 'domain', DomainTag(self.domain))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]], n_samples: Optional[int] = None,
                  domain: str = DomainTag.CIRCLE) -> 'MatrixFunction':
        """Rows may mix LaurentFunction entries with plain numbers."""
        grids = [e.n_samples for row in rows for e in row if isinstance(e, LaurentFunction)]
        n = n_samples or max(grids, default=256)
        converted = [[e if isinstance(e, LaurentFunction) else LaurentFunction.constant(e, n) for e in row]
                     for row in rows]
        return cls(converted, domain)

    @classmethod
    def from_samples(cls, samples, domain: str = DomainTag.CIRCLE) -> 'MatrixFunction':
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 3:
            raise InvalidInputError('matrix samples must have shape (n, rows, cols)')
        n, rows, cols = samples.shape
        check_grid(n)
        coeffs = np.fft.fftshift(np.fft.fft(samples, axis=0), axes=0) / n
        entries = tuple(tuple(LaurentFunction(coeffs[:, i, j], -(n // 2), n) for j in range(cols))
                        for i in range(rows))
        defect = max(entry.tail_defect() for row in entries for entry in row)
        return cls(entries, domain, defect)

    @classmethod
    def identity(cls, size: int, n_samples: int = 256) -> 'MatrixFunction':
        return cls.from_rows(np.eye(size), n_samples)

    @classmethod
    def diagonal(cls, functions: Sequence[LaurentFunction]) -> 'MatrixFunction':
        n = max(f.n_samples for f in functions)
        size = len(functions)
        return cls.from_rows([[functions[i] if i == j else 0.0 for j in range(size)] for i in range(size)], n)

    @classmethod
    def from_constant(cls, matrix, n_samples: int = 256) -> 'MatrixFunction':
        return cls.from_rows(np.atleast_2d(np.asarray(matrix, dtype=complex)), n_samples)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def n_samples(self) -> int:
        return self.entries[0][0].n_samples

    def entry(self, i: int, j: int) -> LaurentFunction:
        return self.entries[i][j]

    def with_grid(self, n_samples: int) -> 'MatrixFunction':
        return MatrixFunction([[e.with_grid(n_samples) for e in row] for row in self.entries], self.domain)

    @cached_property
    def _grid_values(self) -> np.ndarray:
        values = self._stack(self.n_samples)
        values.flags.writeable = False
        return values

    def _stack(self, n: int) -> np.ndarray:
        values = np.empty((n, self.rows, self.cols), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, entry in enumerate(row):
                values[:, i, j] = entry.samples(n)
        return values

    def samples(self, n: Optional[int] = None) -> np.ndarray:
        if n is None or n == self.n_samples:
            return self._grid_values
        return self._stack(check_grid(n))

    def evaluate(self, points) -> np.ndarray:
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        values = np.empty((points.size, self.rows, self.cols), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, entry in enumerate(row):
                values[:, i, j] = entry(points)
        return values

    def _check_square(self):
        if not self.is_square:
            raise InvalidInputError(f'square matrix function required, got {self.rows}x{self.cols}')

    @cached_property
    def min_abs_det(self) -> float:
        """Nonsingularity margin on the grid, recorded before factorization."""
        self._check_square()
        return float(np.abs(np.linalg.det(self.samples())).min())

    def det(self) -> LaurentFunction:
        self._check_square()
        if self.rows == 1:
            return self.entries[0][0]
        return LaurentFunction.from_samples(np.linalg.det(self.samples()))

    def inverse(self, tol: Optional[Tolerances] = None) -> 'MatrixFunction':
        tol = resolve(tol)
        self._check_square()
        if self.min_abs_det <= tol.singularity:
            raise ContourSingularityError('matrix function is singular on the contour',
                                          min_abs_det=self.min_abs_det)
        return MatrixFunction.from_samples(np.linalg.inv(self.samples()), self.domain)

    def transpose(self) -> 'MatrixFunction':
        return MatrixFunction(list(zip(*self.entries)), self.domain)

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> 'MatrixFunction':
        return MatrixFunction([[self.entries[i][j] for j in cols] for i in rows], self.domain)

    def permute_rows(self, order: Sequence[int]) -> 'MatrixFunction':
        return self.block(order, range(self.cols))

    def permute_columns(self, order: Sequence[int]) -> 'MatrixFunction':
        return self.block(range(self.rows), order)

    def map_entries(self, func: Callable[[LaurentFunction], LaurentFunction]) -> 'MatrixFunction':
        return MatrixFunction([[func(e) for e in row] for row in self.entries], self.domain)

    def plus(self) -> 'MatrixFunction':
        return self.map_entries(LaurentFunction.plus)

    def minus(self) -> 'MatrixFunction':
        return self.map_entries(LaurentFunction.minus)

    def analyticity_defect(self, side: str = 'plus') -> float:
        return max(e.analyticity_defect(side) for row in self.entries for e in row)

    def wrong_side_profile(self, side: str = 'plus', n: Optional[int] = None) -> np.ndarray:
        """Per-node magnitude of the wrong-sided part, maximized over entries."""
        n = n or self.n_samples
        profile = np.zeros(n)
        for row in self.entries:
            for entry in row:
                profile = np.maximum(profile, np.abs(entry.wrong_side(side).samples(n)))
        return profile

    def sup_norm(self, n: Optional[int] = None) -> float:
        return float(np.abs(self.samples(n)).max())

    def trimmed(self, rel_tol: float = 1e-14) -> 'MatrixFunction':
        return self.map_entries(lambda e: e.trimmed(rel_tol))

    def _grid_with(self, other: 'MatrixFunction') -> int:
        return max(self.n_samples, other.n_samples)

    def __matmul__(self, other):
        if isinstance(other, MatrixFunction):
            if self.cols != other.rows:
                raise InvalidInputError(f'cannot multiply {self.shape} by {other.shape}')
            n = self._grid_with(other)
            return MatrixFunction.from_samples(self.samples(n) @ other.samples(n), self.domain)
        if isinstance(other, np.ndarray):
            return MatrixFunction.from_samples(self.samples() @ other, self.domain)
        return NotImplemented

    def __rmatmul__(self, other):
        if isinstance(other, np.ndarray):
            return MatrixFunction.from_samples(other @ self.samples(), self.domain)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, MatrixFunction):
            if self.shape != other.shape:
                raise InvalidInputError(f'cannot add {self.shape} and {other.shape}')
            return MatrixFunction([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
                                  self.domain)
        return NotImplemented

    def __neg__(self):
        return self.map_entries(lambda e: -e)

    def __sub__(self, other):
        if isinstance(other, MatrixFunction):
            return self + (-other)
        return NotImplemented

    def __mul__(self, other):
        if _is_number(other) or isinstance(other, LaurentFunction):
            return self.map_entries(lambda e: e * other)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f'MatrixFunction({self.rows}x{self.cols}, n_samples={self.n_samples}, domain={self.domain})'


def product(a: MatrixFunction, b: MatrixFunction) -> MatrixFunction:
    return a @ b


def inverse(a: MatrixFunction, tol: Optional[Tolerances] = None) -> MatrixFunction:
    return a.inverse(tol)


def det(a: MatrixFunction) -> LaurentFunction:
    return a.det()


def index_carrier(indices: Sequence[int], n: int) -> np.ndarray:
    """Samples of diag(t**k_1, ..., t**k_m) at n nodes."""
    t = unit_nodes(n)
    carrier = np.zeros((n, len(indices), len(indices)), dtype=complex)
    for j, k in enumerate(indices):
        carrier[:, j, j] = t ** int(k)
    return carrier


@dataclass(frozen=True, eq=False)
class Factorization:
    """
    G = plus . diag(t**k) . minus (left side) or minus . diag(t**k) . plus
    (right side), with the residual measured on the grid.
    """

    plus: MatrixFunction
    minus: MatrixFunction
    partial_indices: Tuple[int, ...]
    residual_inf: float = 0.0
    analyticity_defect: float = 0.0
    side: str = FactorSide.LEFT
    method: str = ''
    residual_profile: Optional[np.ndarray] = None
    notes: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        indices = tuple(int(k) for k in self.partial_indices)
        if len(indices) != self.plus.rows:
            raise InvalidInputError('one partial index per row of the plus factor is required',
                                    indices=list(indices), rows=self.plus.rows)
        object.__setattr__(self, 'partial_indices', indices)
        object.__setattr__(self, 'side', FactorSide(self.side))

    @property
    def size(self) -> int:
        return len(self.partial_indices)

    @property
    def n_samples(self) -> int:
        return max(self.plus.n_samples, self.minus.n_samples)

    def reassemble(self, n: Optional[int] = None) -> np.ndarray:
        n = n or self.n_samples
        carrier = index_carrier(self.partial_indices, n)
        if self.side == FactorSide.LEFT:
            return self.plus.samples(n) @ carrier @ self.minus.samples(n)
        return self.minus.samples(n) @ carrier @ self.plus.samples(n)

    def sorted(self) -> 'Factorization':
        """Reorder so that the partial indices are nonincreasing."""
        order = sorted(range(self.size), key=lambda j: -self.partial_indices[j])
        if order == list(range(self.size)):
            return self
        indices = tuple(self.partial_indices[j] for j in order)
        if self.side == FactorSide.LEFT:
            plus, minus = self.plus.permute_columns(order), self.minus.permute_rows(order)
        else:
            plus, minus = self.plus.permute_rows(order), self.minus.permute_columns(order)
        return dataclasses.replace(self, plus=plus, minus=minus, partial_indices=indices)

    def with_indices(self, indices: Sequence[int]) -> 'Factorization':
        return dataclasses.replace(self, partial_indices=tuple(indices))


def assess(G: MatrixFunction, plus: MatrixFunction, minus: MatrixFunction, indices: Sequence[int],
           side: str = FactorSide.LEFT, method: str = '', n: Optional[int] = None,
           notes: Optional[Dict[str, Any]] = None) -> Factorization:
    """Package factors with their grid residual and analyticity defect."""
    draft = Factorization(plus=plus, minus=minus, partial_indices=tuple(indices), side=side, method=method,
                          notes=dict(notes or {}))
    n = n or max(G.n_samples, draft.n_samples)
    profile = np.abs(G.samples(n) - draft.reassemble(n)).max(axis=(1, 2))
    defect = max(plus.analyticity_defect('plus'), minus.analyticity_defect('minus'))
    return dataclasses.replace(draft, residual_inf=float(profile.max()), analyticity_defect=defect,
                               residual_profile=profile)


def scalar_matrix(f: LaurentFunction) -> MatrixFunction:
    return MatrixFunction([[f]])