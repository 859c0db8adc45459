"""
Rational matrix kernels: exact factorization by root elimination and the
pole-removal solver for Wiener-Hopf systems with rational kernels.

Kernels are given in the line variable alpha. Internally they are moved to
the circle variable t = (alpha - i)/(alpha + i), where every entry becomes a
quotient of polynomials in t and the upper half-plane becomes the open disc.
Polynomial coefficient arrays are ascending (numpy.polynomial convention).
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from whx.choices import DomainTag, FactorSide, MobiusDirection
from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    MobiusMap,
    assess,
    next_power_of_two,
    unit_nodes,
)
from whx.exceptions import (
    ContourSingularityError,
    InvalidInputError,
    InvalidRootError,
    NoSolutionError,
    ResolutionError,
    UnsupportedMultiplicityError,
)
from whx.scalar_rh import factor_scalar

logger = logging.getLogger(__name__)

# Roots closer than this are treated as one root of higher multiplicity.
ROOT_CLUSTER_RADIUS = 1e-6

# Samples used for the Cauchy mean of the inverse kernel around a pole.
POLE_MEAN_POINTS = 32

_TO_CIRCLE = MobiusMap(MobiusDirection.LINE_TO_CIRCLE)
_TO_LINE = MobiusMap(MobiusDirection.CIRCLE_TO_LINE)


def trim_poly(coeffs, rel_tol: float = 1e-14) -> np.ndarray:
    """Drop negligible highest-degree coefficients; at least one coefficient is kept."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if coeffs.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.abs(coeffs).max()
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    significant = np.flatnonzero(np.abs(coeffs) > rel_tol * scale)
    return coeffs[:significant[-1] + 1].copy()


def poly_roots(coeffs) -> np.ndarray:
    coeffs = trim_poly(coeffs)
    if coeffs.size < 2:
        return np.zeros(0, dtype=complex)
    return np.asarray(npoly.polyroots(coeffs), dtype=complex)


def cluster_roots(roots: Sequence[complex], radius: float = ROOT_CLUSTER_RADIUS) -> List[Tuple[complex, int]]:
    """Group roots within ``radius`` of each other; returns (centroid, multiplicity) pairs."""
    remaining = list(np.asarray(roots, dtype=complex))
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        grown = True
        while grown:
            grown = False
            for r in list(remaining):
                if min(abs(r - m) for m in members) <= radius * max(1.0, abs(seed)):
                    members.append(r)
                    remaining.remove(r)
                    grown = True
        clusters.append((complex(np.mean(members)), len(members)))
    return clusters


def poly_from_roots(roots: Sequence[complex], lead: complex = 1.0) -> np.ndarray:
    if len(roots) == 0:
        return np.array([lead], dtype=complex)
    return lead * np.asarray(npoly.polyfromroots(roots), dtype=complex)


def _alpha_to_circle(num, den) -> Tuple[np.ndarray, np.ndarray]:
    """
    Substitute alpha = i(1 + t)/(1 - t) and clear the common (1 - t) power:
    sum_k c_k alpha^k becomes sum_k c_k i^k (1 + t)^k (1 - t)^(D - k).
    """
    degree = max(len(num), len(den)) - 1

    def lift(coeffs):
        total = np.zeros(degree + 1, dtype=complex)
        for k, c in enumerate(coeffs):
            if c == 0:
                continue
            term = npoly.polymul(npoly.polypow([1, 1], k), npoly.polypow([1, -1], degree - k))
            total[:len(term)] += c * (1j ** k) * term
        return total

    return trim_poly(lift(num)), trim_poly(lift(den))


def circle_to_alpha(num_t: np.ndarray, den_t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """N(t)/D(t) with t = (alpha - i)/(alpha + i), as a ratio of polynomials in alpha."""
    degree = max(len(num_t), len(den_t)) - 1
    minus, plus = np.array([-1j, 1.0]), np.array([1j, 1.0])

    def lower(coeffs):
        result = np.zeros(degree + 1, dtype=complex)
        for k, c in enumerate(coeffs):
            term = npoly.polymul(npoly.polypow(minus, k), npoly.polypow(plus, degree - k))
            result[:term.size] += c * term
        return result

    return lower(num_t), lower(den_t)


# Scalars

@dataclass(frozen=True, eq=False)
class RationalScalar:
    """num(alpha)/den(alpha); common roots are cancelled on construction."""

    num: np.ndarray
    den: np.ndarray = None

    def __post_init__(self):
        num = trim_poly(self.num)
        den = trim_poly(np.ones(1) if self.den is None else self.den)
        if np.abs(den).max() == 0.0:
            raise InvalidInputError('rational entry has a zero denominator')
        if np.abs(num).max() == 0.0:
            num, den = np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
        elif num.size > 1 and den.size > 1:
            num, den = _cancel_common_roots(num, den)
        num.flags.writeable = False
        den.flags.writeable = False
        object.__setattr__(self, 'num', num)
        object.__setattr__(self, 'den', den)

    @classmethod
    def constant(cls, value: complex) -> 'RationalScalar':
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def from_laurent(cls, f: LaurentFunction, rel_tol: float = 1e-13) -> 'RationalScalar':
        """t**k_min p(t) for a Laurent polynomial, written in alpha."""
        f = f.trimmed(rel_tol)
        den_t = np.zeros(1 - f.k_min, dtype=complex)
        den_t[-1] = 1.0
        return cls(*circle_to_alpha(np.array(f.coeffs), den_t))

    @property
    def is_polynomial(self) -> bool:
        return self.den.size == 1

    @property
    def is_zero(self) -> bool:
        return bool(np.abs(self.num).max() == 0.0)

    def __call__(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=complex)
        return npoly.polyval(alpha, self.num) / npoly.polyval(alpha, self.den)

    def to_circle(self) -> Tuple[np.ndarray, np.ndarray]:
        return _alpha_to_circle(self.num, self.den)

    def on_circle(self, t) -> np.ndarray:
        num, den = self.to_circle()
        return npoly.polyval(t, num) / npoly.polyval(t, den)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def __add__(self, other):
        if not isinstance(other, RationalScalar):
            other = RationalScalar.constant(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        num = npoly.polyadd(npoly.polymul(self.num, other.den), npoly.polymul(other.num, self.den))
        return RationalScalar(num, npoly.polymul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalScalar(-self.num, self.den)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalScalar) else -complex(other))

    def __mul__(self, other):
        if not isinstance(other, RationalScalar):
            return RationalScalar(self.num * complex(other), self.den)
        return RationalScalar(npoly.polymul(self.num, other.num), npoly.polymul(self.den, other.den))

    __rmul__ = __mul__

    def __repr__(self):
        return f'RationalScalar(deg {self.num.size - 1}/{self.den.size - 1})'


def _cancel_common_roots(num: np.ndarray, den: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    zeros, poles = list(poly_roots(num)), list(poly_roots(den))
    cancelled = False
    for z in list(zeros):
        match = next((p for p in poles if abs(p - z) <= tol * max(1.0, abs(z))), None)
        if match is not None:
            zeros.remove(z)
            poles.remove(match)
            cancelled = True
    if not cancelled:
        return num, den
    return poly_from_roots(zeros, num[-1]), poly_from_roots(poles, den[-1])


# Polynomial matrices

@dataclass(frozen=True, eq=False)
class PolynomialMatrix:
    """P(z) = sum_k coeffs[k] z^k with ``coeffs`` of shape (degree + 1, rows, cols)."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim == 2:
            coeffs = coeffs[np.newaxis]
        if coeffs.ndim != 3:
            raise InvalidInputError('polynomial matrix coefficients must have shape (d + 1, rows, cols)')
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def identity(cls, size: int) -> 'PolynomialMatrix':
        return cls(np.eye(size, dtype=complex)[np.newaxis])

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[Sequence[complex]]]) -> 'PolynomialMatrix':
        rows, cols = len(entries), len(entries[0])
        degree = max(len(np.atleast_1d(e)) for row in entries for e in row) - 1
        coeffs = np.zeros((degree + 1, rows, cols), dtype=complex)
        for i, row in enumerate(entries):
            for j, entry in enumerate(row):
                entry = np.atleast_1d(np.asarray(entry, dtype=complex))
                coeffs[:entry.size, i, j] = entry
        return cls(coeffs)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def entry(self, i: int, j: int) -> np.ndarray:
        return trim_poly(self.coeffs[:, i, j])

    def __call__(self, z: complex) -> np.ndarray:
        value = np.zeros(self.shape, dtype=complex)
        for c in self.coeffs[::-1]:
            value = value * z + c
        return value

    def evaluate(self, points) -> np.ndarray:
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        values = np.zeros((points.size,) + self.shape, dtype=complex)
        for c in self.coeffs[::-1]:
            values = values * points[:, None, None] + c
        return values

    def det_at(self, points) -> np.ndarray:
        return np.linalg.det(self.evaluate(points))

    def det_coefficients(self) -> np.ndarray:
        """Coefficients of det P, recovered exactly from samples at roots of unity."""
        rows, cols = self.shape
        if rows != cols:
            raise InvalidInputError('determinant of a non-square polynomial matrix')
        bound = self.degree * rows
        n = next_power_of_two(bound + 1) * 2
        values = self.det_at(unit_nodes(n))
        coeffs = np.fft.fft(values) / n
        return trim_poly(coeffs[:bound + 1], 1e-13)

    def norm_at(self, z: complex) -> float:
        """Bound on the entries of P(z) from the coefficient norms."""
        return float(sum(np.abs(c).max() * abs(z) ** k for k, c in enumerate(self.coeffs)))

    def trimmed(self, rel_tol: float = 1e-13) -> 'PolynomialMatrix':
        scale = np.abs(self.coeffs).max()
        if scale == 0.0:
            return PolynomialMatrix(np.zeros((1,) + self.shape, dtype=complex))
        coeffs = np.where(np.abs(self.coeffs) > rel_tol * scale, self.coeffs, 0.0)
        keep = np.flatnonzero(np.abs(coeffs).reshape(coeffs.shape[0], -1).max(axis=1) > 0)
        last = keep[-1] if keep.size else 0
        return PolynomialMatrix(coeffs[:last + 1])

    def transpose(self) -> 'PolynomialMatrix':
        return PolynomialMatrix(np.transpose(self.coeffs, (0, 2, 1)))

    def __matmul__(self, other: 'PolynomialMatrix') -> 'PolynomialMatrix':
        if not isinstance(other, PolynomialMatrix):
            return NotImplemented
        if self.shape[1] != other.shape[0]:
            raise InvalidInputError(f'cannot multiply {self.shape} by {other.shape}')
        coeffs = np.zeros((self.degree + other.degree + 1, self.shape[0], other.shape[1]), dtype=complex)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                coeffs[i + j] += a @ b
        return PolynomialMatrix(coeffs)

    def samples(self, n: int) -> np.ndarray:
        return self.evaluate(unit_nodes(n))

    def row_degrees(self, rel_tol: float = 1e-12) -> np.ndarray:
        scale = np.abs(self.coeffs).max()
        significant = np.abs(self.coeffs) > rel_tol * scale
        degrees = np.zeros(self.shape[0], dtype=int)
        for i in range(self.shape[0]):
            nonzero = np.flatnonzero(significant[:, i, :].any(axis=1))
            degrees[i] = nonzero[-1] if nonzero.size else 0
        return degrees

    def leading_row_matrix(self, degrees: np.ndarray) -> np.ndarray:
        return np.array([self.coeffs[d, i, :] for i, d in enumerate(degrees)])

    def divide_by_root(self, z0: complex) -> 'PolynomialMatrix':
        """Entrywise division by (z - z0); every entry must vanish at z0."""
        quotient = np.zeros((max(self.degree, 1),) + self.shape, dtype=complex)
        carry = np.zeros(self.shape, dtype=complex)
        for k in range(self.degree, 0, -1):
            carry = self.coeffs[k] + z0 * carry
            quotient[k - 1] = carry
        return PolynomialMatrix(quotient)

    def __repr__(self):
        return f'PolynomialMatrix({self.shape[0]}x{self.shape[1]}, degree={self.degree})'


def _divide_vector_by_root(coeffs: np.ndarray, z0: complex) -> Tuple[np.ndarray, np.ndarray]:
    """Synthetic division of a vector polynomial (degree + 1, rows) by (z - z0)."""
    degree = coeffs.shape[0] - 1
    if degree == 0:
        return np.zeros((1, coeffs.shape[1]), dtype=complex), coeffs[0]
    quotient = np.zeros((degree, coeffs.shape[1]), dtype=complex)
    carry = np.zeros(coeffs.shape[1], dtype=complex)
    for k in range(degree, 0, -1):
        carry = coeffs[k] + z0 * carry
        quotient[k - 1] = carry
    return quotient, coeffs[0] + z0 * carry


# Matrices of rational entries

@dataclass(frozen=True)
class DetRoot:
    alpha: complex
    t: complex
    half: str


@dataclass(frozen=True, eq=False)
class CircleForm:
    """M(t) = common(t) P(t) / q(t) with P a polynomial matrix in t."""

    P: PolynomialMatrix
    q: np.ndarray
    common: np.ndarray


@dataclass(frozen=True, eq=False)
class RationalMatrixFunction:
    entries: Tuple[Tuple[RationalScalar, ...], ...]
    domain: str = DomainTag.LINE

    def __post_init__(self):
        rows = tuple(tuple(e if isinstance(e, RationalScalar) else RationalScalar.constant(e) for e in row)
                     for row in self.entries)
        if not rows or not rows[0] or any(len(row) != len(rows[0]) for row in rows):
            raise InvalidInputError('rational matrix rows must be nonempty and of equal length')
        object.__setattr__(self, 'entries', rows)
        object.__setattr__(self, 'domain', DomainTag(self.domain))

    @classmethod
    def from_rows(cls, rows, domain: str = DomainTag.LINE) -> 'RationalMatrixFunction':
        return cls(rows, domain)

    @classmethod
    def diagonal(cls, entries: Sequence[RationalScalar]) -> 'RationalMatrixFunction':
        size = len(entries)
        return cls([[entries[i] if i == j else 0.0 for j in range(size)] for i in range(size)])

    @classmethod
    def from_laurent(cls, M: MatrixFunction, rel_tol: float = 1e-13) -> 'RationalMatrixFunction':
        """Exact rational form of a matrix of Laurent polynomials."""
        return cls([[RationalScalar.from_laurent(e, rel_tol) for e in row] for row in M.entries])

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
    def is_polynomial(self) -> bool:
        return all(e.is_polynomial for row in self.entries for e in row)

    def evaluate(self, alpha) -> np.ndarray:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
        values = np.empty((alpha.size, self.rows, self.cols), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                values[:, i, j] = e(alpha)
        return values

    def evaluate_circle(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        values = np.empty((t.size, self.rows, self.cols), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                values[:, i, j] = e.on_circle(t)
        return values

    def transpose(self) -> 'RationalMatrixFunction':
        return RationalMatrixFunction(list(zip(*self.entries)), self.domain)

    def det(self) -> RationalScalar:
        """Leibniz expansion over permutations."""
        if self.rows != self.cols:
            raise InvalidInputError('determinant of a non-square rational matrix')
        total = RationalScalar.constant(0.0)
        for perm in itertools.permutations(range(self.rows)):
            sign = np.linalg.det(np.eye(self.rows)[list(perm)])
            term = RationalScalar.constant(round(sign))
            for i, j in enumerate(perm):
                term = term * self.entries[i][j]
            total = total + term
        return total

    @cached_property
    def circle_form(self) -> CircleForm:
        forms = [[e.to_circle() for e in row] for row in self.entries]
        denominator_roots = [poly_roots(den) for row in forms for _, den in row]
        multiplicity = {}
        for centroid, count in cluster_roots(np.concatenate(denominator_roots) if denominator_roots else []):
            multiplicity[centroid] = count
        lcm_roots = []
        for centroid in multiplicity:
            needed = max(sum(1 for r in roots if abs(r - centroid) <= ROOT_CLUSTER_RADIUS * max(1.0, abs(centroid)))
                         for roots in denominator_roots)
            lcm_roots.extend([centroid] * needed)
        q = poly_from_roots(lcm_roots)
        entries = []
        for row in forms:
            entry_row = []
            for num, den in row:
                quotient, remainder = npoly.polydiv(q, den)
                if remainder.size and np.abs(remainder).max() > 1e-8 * np.abs(q).max():
                    raise ResolutionError('common denominator is not divisible by an entry denominator',
                                          remainder=float(np.abs(remainder).max()))
                entry_row.append(npoly.polymul(num, quotient))
            entries.append(entry_row)
        return CircleForm(P=PolynomialMatrix.from_entries(entries).trimmed(), q=q,
                          common=np.ones(1, dtype=complex))

    def pole_roots_t(self) -> np.ndarray:
        return poly_roots(self.circle_form.q)

    @cached_property
    def _det_root_values(self) -> np.ndarray:
        return poly_roots(self.circle_form.P.det_coefficients())

    def det_roots(self, tol: Optional[Tolerances] = None) -> Tuple[DetRoot, ...]:
        """Roots of det of the polynomial part, tagged by half-plane; rejects roots on the contour."""
        tol = resolve(tol)
        tagged = []
        for t in self._det_root_values:
            if abs(abs(t) - 1.0) < tol.real_axis:
                alpha = complex(_TO_LINE(np.array([t]))[0])
                raise ContourSingularityError('determinant has a root on the real axis',
                                              root=[alpha.real, alpha.imag])
            alpha = complex(_TO_LINE(np.array([t]))[0])
            tagged.append(DetRoot(alpha=alpha, t=complex(t), half='upper' if abs(t) < 1 else 'lower'))
        return tuple(tagged)

    def upper_poles(self) -> List[complex]:
        """Distinct entry poles in the upper half-plane, as alpha values."""
        inside = [t for t, _ in cluster_roots(self.pole_roots_t()) if abs(t) < 1]
        return [complex(a) for a in _TO_LINE(np.array(inside, dtype=complex))] if inside else []

    def check_contour(self, tol: Optional[Tolerances] = None) -> None:
        tol = resolve(tol)
        for t in self.pole_roots_t():
            if abs(abs(t) - 1.0) < tol.real_axis:
                raise ContourSingularityError('kernel has a pole on the real axis or at infinity',
                                              pole_t=[t.real, t.imag])
        self.det_roots(tol)

    def grid_size(self, tol: Optional[Tolerances] = None, extra_degree: int = 0) -> int:
        """Grid on which every Laurent series of the factors decays below round-off."""
        tol = resolve(tol)
        roots = np.concatenate([self.pole_roots_t(), np.array([r.t for r in self.det_roots(tol)])])
        n = max(tol.grid, next_power_of_two(4 * (self.circle_form.P.degree + extra_degree + 1)))
        if roots.size:
            rho = max(min(abs(r), 1.0 / abs(r)) if r != 0 else 0.0 for r in roots)
            if rho > 0:
                n = max(n, next_power_of_two(2 * 37.0 / -np.log(rho)))
        return min(n, tol.grid_cap)

    def on_circle(self, n: Optional[int] = None, tol: Optional[Tolerances] = None) -> MatrixFunction:
        tol = resolve(tol)
        self.check_contour(tol)
        n = n or self.grid_size(tol)
        return MatrixFunction.from_samples(self.evaluate_circle(unit_nodes(n)), DomainTag.LINE)

    def __repr__(self):
        return f'RationalMatrixFunction({self.rows}x{self.cols})'


# Root counting

def _argument_count(sampler, n: int, cap: int = 1 << 20) -> int:
    """Winding of a closed sampled path; the sampler returns values for n points."""
    while True:
        values = sampler(n)
        increments = np.angle(np.roll(values, -1) / values)
        if np.abs(increments).max() <= np.pi / 2 or n >= cap:
            break
        n *= 2
    return int(np.rint(increments.sum() / (2 * np.pi)))


def _as_callable(f):
    if callable(f):
        return f
    coeffs = trim_poly(f)
    return lambda z: npoly.polyval(z, coeffs)


def count_roots_inside(f, radius: float = 1.0, n: int = 1024) -> int:
    """Zeros minus poles of ``f`` inside |z| = radius, by the argument principle."""
    func = _as_callable(f)

    def sampler(m):
        values = func(radius * unit_nodes(m))
        if np.abs(values).min() == 0.0:
            raise ContourSingularityError('function vanishes on the counting circle', radius=radius)
        return values

    return _argument_count(sampler, n)


def count_roots_upper(f, radius: Optional[float] = None, n: int = 4096) -> int:
    """
    Zeros of ``f`` in the upper half-plane, counted on the closed semicircle
    [-R, R] followed by the arc R e^{i theta}. For a polynomial given by its
    coefficients the radius defaults to twice the Cauchy bound.
    """
    func = _as_callable(f)
    if radius is None:
        if callable(f):
            raise InvalidInputError('a radius is required when counting roots of a callable')
        coeffs = trim_poly(f)
        radius = 2.0 * (1.0 + float(np.abs(coeffs[:-1] / coeffs[-1]).max())) if coeffs.size > 1 else 1.0

    def sampler(m):
        half = m // 2
        segment = np.linspace(-radius, radius, half, endpoint=False)
        arc = radius * np.exp(1j * np.pi * np.arange(half) / half)
        values = np.concatenate([func(segment.astype(complex)), func(arc)])
        if np.abs(values).min() == 0.0:
            raise ContourSingularityError('function vanishes on the counting contour', radius=radius)
        return values

    return _argument_count(sampler, n)


# Root elimination

@dataclass(frozen=True, eq=False)
class EliminationStep:
    """
    L = P R with R the identity except column ``column``, which is
    constants/(z - z0). ``constants[column]`` is 1; det R = 1/(z - z0).
    """

    z0: complex
    column: int
    constants: np.ndarray
    R_inverse: PolynomialMatrix

    @property
    def R(self) -> RationalMatrixFunction:
        size = self.constants.size
        rows = []
        for i in range(size):
            row = []
            for j in range(size):
                if j == self.column:
                    row.append(RationalScalar(np.array([self.constants[i]]), np.array([-self.z0, 1.0])))
                else:
                    row.append(1.0 if i == j else 0.0)
            rows.append(row)
        return RationalMatrixFunction(rows)


def _as_polynomial_matrix(P) -> PolynomialMatrix:
    if isinstance(P, PolynomialMatrix):
        return P
    if isinstance(P, RationalMatrixFunction):
        if not P.is_polynomial:
            raise InvalidInputError('root elimination needs a polynomial matrix')
        entries = [[e.num / e.den[0] for e in row] for row in P.entries]
        return PolynomialMatrix.from_entries(entries)
    raise InvalidInputError(f'cannot eliminate roots of {type(P).__name__}')


def nullity_at(P: PolynomialMatrix, z0: complex, tol: Optional[Tolerances] = None) -> Tuple[int, np.ndarray]:
    tol = resolve(tol)
    _, s, vh = np.linalg.svd(P(z0))
    reference = max(P.norm_at(z0), np.finfo(float).tiny)
    return int(np.sum(s <= tol.rank * reference)), vh


def eliminate_root(P, z0: complex, tol: Optional[Tolerances] = None) -> Tuple[PolynomialMatrix, EliminationStep]:
    """
    Remove the root z0 of det P: with v spanning the null space of P(z0) and
    normalized so its largest component v_k is 1, column k of L is
    P(z) v / (z - z0) and the other columns are those of P.
    """
    tol = resolve(tol)
    P = _as_polynomial_matrix(P)
    size = P.shape[0]
    if P.shape[0] != P.shape[1]:
        raise InvalidInputError('root elimination needs a square matrix', shape=list(P.shape))
    value = P(z0)
    hadamard = float(np.prod(np.linalg.norm(value, axis=1)))
    determinant = abs(np.linalg.det(value))
    if determinant > tol.root * max(hadamard, 1e-300):
        raise InvalidRootError('point is not a root of the determinant', z0=[z0.real, z0.imag],
                               det=determinant)
    nullity, vh = nullity_at(P, z0, tol)
    if nullity > 1:
        raise UnsupportedMultiplicityError('null space at the root is not one-dimensional',
                                           z0=[z0.real, z0.imag], nullity=nullity)
    v = np.conj(vh[-1])
    column = int(np.argmax(np.abs(v)))
    v = v / v[column]

    quotient, remainder = _divide_vector_by_root(P.coeffs @ v, z0)
    if np.abs(remainder).max() > 1e-6 * max(P.norm_at(z0), 1.0):
        raise InvalidRootError('null vector does not annihilate the matrix at the root',
                               remainder=float(np.abs(remainder).max()))
    degree = max(P.degree, quotient.shape[0] - 1)
    coeffs = np.zeros((degree + 1,) + P.shape, dtype=complex)
    coeffs[:P.degree + 1] = P.coeffs
    coeffs[:, :, column] = 0.0
    coeffs[:quotient.shape[0], :, column] = quotient

    r_inverse = np.zeros((2, size, size), dtype=complex)
    r_inverse[0] = np.eye(size)
    r_inverse[0, :, column] -= v
    r_inverse[0, column, column] -= z0
    r_inverse[1, column, column] = 1.0
    step = EliminationStep(z0=complex(z0), column=column, constants=v, R_inverse=PolynomialMatrix(r_inverse))
    logger.debug('Eliminated root %s through column %d', z0, column)
    return PolynomialMatrix(coeffs).trimmed(1e-15), step


def row_reduce(W: PolynomialMatrix, tol: Optional[Tolerances] = None,
               max_steps: int = 256) -> Tuple[PolynomialMatrix, PolynomialMatrix, np.ndarray]:
    """
    W = U W_r with U unimodular and W_r row reduced (nonsingular leading row
    coefficient matrix). Returns (U, W_r, row degrees of W_r).
    """
    tol = resolve(tol)
    size = W.shape[0]
    U = PolynomialMatrix.identity(size)
    for _ in range(max_steps):
        W = W.trimmed(1e-13)
        degrees = W.row_degrees()
        leading = W.leading_row_matrix(degrees)
        u, s, _ = np.linalg.svd(leading)
        if s[-1] > tol.rank * max(s[0], 1e-300):
            return U, W, degrees
        y = np.conj(u[:, -1])
        active = np.flatnonzero(np.abs(y) > tol.rank * np.abs(y).max())
        pivot = int(active[np.argmax(degrees[active])])
        top = degrees[pivot]
        op = np.zeros((top + 1, size, size), dtype=complex)
        inv = np.zeros((top + 1, size, size), dtype=complex)
        op[0] = np.eye(size)
        inv[0] = np.eye(size)
        for j in active:
            if j == pivot:
                continue
            ratio = y[j] / y[pivot]
            op[top - degrees[j], pivot, j] += ratio
            inv[top - degrees[j], pivot, j] -= ratio
        W = PolynomialMatrix(op) @ W
        # cancelled leading terms of the pivot row
        W.coeffs[top, pivot, :] = 0.0
        U = U @ PolynomialMatrix(inv)
    raise ResolutionError('row reduction did not terminate', steps=max_steps)


def _diag_power_samples(degrees: Sequence[int], n: int) -> np.ndarray:
    t = unit_nodes(n)
    return np.stack([t ** (-int(d)) for d in degrees], axis=1)


def factor_rational(M: RationalMatrixFunction, tol: Optional[Tolerances] = None) -> Factorization:
    """
    Left factorization M = M+ diag(t**k) M- on the circle. The polynomial
    part loses its roots inside the disc one elimination at a time; the
    scalar denominator is factored separately.
    """
    tol = resolve(tol)
    if not M.rows == M.cols:
        raise InvalidInputError('factorization needs a square kernel', shape=list(M.shape))
    M.check_contour(tol)
    form = M.circle_form
    P = form.P
    size = P.shape[0]
    common = np.array(form.common)
    steps: List[EliminationStep] = []

    inside = [r.t for r in M.det_roots(tol) if r.half == 'upper']
    count = count_roots_inside(P.det_coefficients())
    for z0, multiplicity in cluster_roots(inside):
        remaining = multiplicity
        while remaining > 0:
            nullity, _ = nullity_at(P, z0, tol)
            if nullity == size:
                P = P.divide_by_root(z0).trimmed(1e-15)
                common = npoly.polymul(common, [-z0, 1.0])
                expected = count - size
                remaining -= size
            else:
                P, step = eliminate_root(P, z0, tol)
                steps.append(step)
                expected = count - 1
                remaining -= 1
            count = count_roots_inside(P.det_coefficients())
            if count != expected:
                raise UnsupportedMultiplicityError('elimination did not lower the root count by one',
                                                   z0=[z0.real, z0.imag], count=count, expected=expected)
    if count != 0:
        raise ResolutionError('roots remain inside the disc after elimination', remaining=count)

    W = PolynomialMatrix.identity(size)
    for step in steps:
        W = step.R_inverse @ W
    U, W_r, degrees = row_reduce(W, tol)

    n = M.grid_size(tol, extra_degree=int(degrees.sum()) + (P.degree if P.degree else 0))
    t = unit_nodes(n)
    scalar = LaurentFunction.from_samples(npoly.polyval(t, common) / npoly.polyval(t, form.q))
    scalar_fact = factor_scalar(scalar, tol)

    plus_samples = (P @ U).samples(n) * scalar_fact.X_plus.samples(n)[:, None, None]
    minus_samples = (_diag_power_samples(degrees, n)[:, :, None] * W_r.samples(n)
                     * scalar_fact.G_minus.samples(n)[:, None, None])
    plus = MatrixFunction.from_samples(plus_samples, DomainTag.LINE)
    minus = MatrixFunction.from_samples(minus_samples, DomainTag.LINE)
    indices = [int(d) + scalar_fact.kappa for d in degrees]
    G = M.on_circle(n, tol)
    factorization = assess(G, plus, minus, indices, FactorSide.LEFT, method='rational', n=n,
                           notes={'eliminations': len(steps)}).sorted()
    inverse_defect = max(factorization.plus.inverse(tol).analyticity_defect('plus'),
                         factorization.minus.inverse(tol).analyticity_defect('minus'))
    factorization.notes['inverse_defect'] = inverse_defect
    logger.debug('Rational factorization: indices=%s, residual=%.3e, %d eliminations',
                 factorization.partial_indices, factorization.residual_inf, len(steps))
    return factorization


# Pole removal

def pole_basis(z: complex, t) -> np.ndarray:
    """
    1/(alpha - z) + 1/(i + z) on the circle: the simple pole at z with its
    value at t = oo removed, so only negative powers of t remain.
    """
    t = np.asarray(t, dtype=complex)
    return 2j / ((1j + z) * ((1j - z) + (1j + z) * t))


@dataclass(frozen=True, eq=False)
class PoleRemovalSolution:
    phi_plus: MatrixFunction
    psi_minus: MatrixFunction
    poles: Tuple[complex, ...]
    residues: np.ndarray
    dof_basis: np.ndarray
    condition: float
    ill_conditioned: bool
    residual: float

    @property
    def dof(self) -> int:
        return self.dof_basis.shape[0]


def _column_function(C, size: int) -> MatrixFunction:
    if isinstance(C, LaurentFunction):
        C = MatrixFunction([[C]])
    if not isinstance(C, MatrixFunction) or C.shape != (size, 1):
        raise InvalidInputError(f'right-hand side must be a {size}x1 matrix function')
    return C


def _inverse_at(M: RationalMatrixFunction, center: complex, radius: float) -> np.ndarray:
    """A^{-1} at a point where A may be singular, as the mean over a small circle."""
    ring = center + radius * unit_nodes(POLE_MEAN_POINTS)
    return np.linalg.inv(M.evaluate_circle(ring)).mean(axis=0)


def pole_removal_solve(A: RationalMatrixFunction, C, poles: Optional[Sequence[complex]] = None,
                       tol: Optional[Tolerances] = None) -> PoleRemovalSolution:
    """
    Solve A Phi+ + Psi- + C = 0. The plus part of A Phi+ + C+ has simple
    poles at the upper poles of A; subtracting sum_j a_j e_j leaves both
    sides entire, hence zero. The vectors a_j are fixed by analyticity of
    Phi+ = A^{-1}(sum_j a_j e_j - C+) at the poles of A and at the upper zeros
    of det A.
    """
    tol = resolve(tol)
    size = A.rows
    A.check_contour(tol)
    C = _column_function(C, size)
    pole_alphas = list(A.upper_poles() if poles is None else poles)
    pole_ts = [complex(_TO_CIRCLE(np.array([z]))[0]) for z in pole_alphas]
    pole_counts = cluster_roots(A.pole_roots_t())
    for t_j in pole_ts:
        if abs(t_j) >= 1:
            raise InvalidInputError('supplied pole is not in the upper half-plane', pole=[t_j.real, t_j.imag])
        multiplicity = max((m for c, m in pole_counts if abs(c - t_j) <= ROOT_CLUSTER_RADIUS), default=1)
        if multiplicity > 1:
            raise UnsupportedMultiplicityError('only simple poles are removed', pole_t=[t_j.real, t_j.imag],
                                               multiplicity=multiplicity)

    det_num, _ = A.det().to_circle()
    zeros = [(w, m) for w, m in cluster_roots(poly_roots(det_num)) if abs(w) < 1]
    singular = [t for t in pole_ts] + [w for w, _ in zeros]

    rows, rhs = [], []
    unknowns = size * len(pole_ts)
    for j, t_j in enumerate(pole_ts):
        others = [abs(t_j - s) for s in singular if s != t_j] + [1.0 - abs(t_j)]
        inverse = _inverse_at(A, t_j, 0.25 * min(others))
        block = np.zeros((size, unknowns), dtype=complex)
        block[:, j * size:(j + 1) * size] = inverse
        rows.append(block)
        rhs.append(np.zeros(size, dtype=complex))
    c_plus = [C.entry(i, 0).plus() for i in range(size)]
    for w, multiplicity in zeros:
        u, s, _ = np.linalg.svd(A.evaluate_circle(np.array([w]))[0])
        left = np.conj(u[:, s <= tol.rank * max(s[0], 1.0)].T)
        if left.shape[0] != multiplicity:
            raise UnsupportedMultiplicityError('zero of det A is not semisimple', zero_t=[w.real, w.imag],
                                               multiplicity=multiplicity, nullity=left.shape[0])
        forcing = np.array([complex(f(np.array([w]))[0]) for f in c_plus])
        for y in left:
            row = np.zeros(unknowns, dtype=complex)
            for j, z in enumerate(pole_alphas):
                row[j * size:(j + 1) * size] = y * complex(pole_basis(z, w))
            rows.append(row[np.newaxis])
            rhs.append(np.array([y @ forcing]))

    condition, ill_conditioned = 1.0, False
    if unknowns:
        system = np.vstack(rows)
        b = np.concatenate(rhs)
        u, s, vh = np.linalg.svd(system)
        rank = int(np.sum(s > tol.rank * max(s[0], 1.0))) if s.size else 0
        coeffs = np.zeros(unknowns, dtype=complex)
        if rank:
            coeffs = vh[:rank].conj().T @ ((u[:, :rank].conj().T @ b) / s[:rank])
            condition = float(s[0] / s[rank - 1])
        dof_basis = vh[rank:].conj()
        mismatch = float(np.abs(system @ coeffs - b).max()) if b.size else 0.0
        if mismatch > tol.residual * max(1.0, float(np.abs(b).max()) if b.size else 1.0):
            raise NoSolutionError('residue system is inconsistent', mismatch=mismatch)
        if condition > tol.max_condition:
            ill_conditioned = True
            logger.warning('Residue system is ill-conditioned (condition %.3e)', condition)
    else:
        coeffs = np.zeros(0, dtype=complex)
        dof_basis = np.zeros((0, 0), dtype=complex)
        for w, _ in zeros:
            forcing = np.array([complex(f(np.array([w]))[0]) for f in c_plus])
            u, s, _ = np.linalg.svd(A.evaluate_circle(np.array([w]))[0])
            left = np.conj(u[:, -1])
            if abs(left @ forcing) > tol.residual * max(1.0, float(np.abs(forcing).max())):
                raise NoSolutionError('right-hand side violates a solvability condition', zero_t=[w.real, w.imag])
    residues = coeffs.reshape(len(pole_ts), size) if pole_ts else np.zeros((0, size), dtype=complex)

    n = max(C.n_samples, A.grid_size(tol))
    t = unit_nodes(n)
    poles_part = np.zeros((n, size), dtype=complex)
    for z, a in zip(pole_alphas, residues):
        poles_part += pole_basis(z, t)[:, None] * a[None, :]
    c_plus_samples = np.stack([f.samples(n) for f in c_plus], axis=1)
    c_minus_samples = np.stack([C.entry(i, 0).minus().samples(n) for i in range(size)], axis=1)
    a_values = A.evaluate_circle(t)
    phi = np.linalg.solve(a_values, (poles_part - c_plus_samples)[:, :, None])
    psi = -(c_minus_samples + poles_part)[:, :, None]
    phi_plus = MatrixFunction.from_samples(phi, DomainTag.LINE)
    psi_minus = MatrixFunction.from_samples(psi, DomainTag.LINE)
    balance = np.abs(a_values @ phi + psi + C.samples(n)).max()
    residual = max(float(balance), phi_plus.analyticity_defect('plus'), psi_minus.analyticity_defect('minus'))
    logger.debug('Pole removal: %d poles, %d zeros, dof=%d, residual=%.3e', len(pole_ts), len(zeros),
                 dof_basis.shape[0], residual)
    return PoleRemovalSolution(phi_plus=phi_plus, psi_minus=psi_minus, poles=tuple(pole_alphas),
                               residues=residues,
                               dof_basis=dof_basis.reshape(-1, len(pole_ts), size) if pole_ts else dof_basis,
                               condition=condition, ill_conditioned=ill_conditioned, residual=residual)


@dataclass(frozen=True, eq=False)
class FactorizationSolution:
    phi_plus: MatrixFunction
    psi_minus: MatrixFunction
    factorization: Factorization
    dof_basis: Tuple[MatrixFunction, ...]
    residual: float


def solve_by_factorization(A: RationalMatrixFunction, C, tol: Optional[Tolerances] = None) -> FactorizationSolution:
    """
    Solve A Phi+ + Psi- + C = 0 through A = A- diag(t**k) A+ (obtained from
    the left factorization of A^T). Row j gives t**k_j (A+ Phi+)_j = -(f + m)_j
    with f = (A-)^{-1} C and m minus; negative k_j leave free polynomial
    coefficients, positive k_j impose vanishing coefficients of f.
    """
    tol = resolve(tol)
    size = A.rows
    C = _column_function(C, size)
    left = factor_rational(A.transpose(), tol)
    n = max(left.n_samples, C.n_samples)
    a_minus = left.minus.transpose().with_grid(n)
    a_plus = left.plus.transpose().with_grid(n)
    f = a_minus.inverse(tol) @ C.with_grid(n)

    u_entries, basis_rows = [], []
    for j, kappa in enumerate(left.partial_indices):
        fj = f.entry(j, 0)
        if kappa == 0:
            u_entries.append(-fj.plus())
        elif kappa < 0:
            kept = np.where(fj.ks >= kappa, fj.coeffs, 0.0)
            u_entries.append(-LaurentFunction(kept, fj.k_min, fj.n_samples).shift(-kappa))
            basis_rows.extend((j, m) for m in range(-kappa))
        else:
            moments = np.array([fj.coefficient(k) for k in range(kappa)])
            if np.abs(moments).max() > tol.residual * max(1.0, fj.sup_norm()):
                raise NoSolutionError('right-hand side violates a solvability condition', row=j, kappa=kappa,
                                      moments=[[m.real, m.imag] for m in moments])
            kept = np.where(fj.ks >= kappa, fj.coeffs, 0.0)
            u_entries.append(-LaurentFunction(kept, fj.k_min, fj.n_samples).shift(-kappa))
    u = MatrixFunction([[e] for e in u_entries], DomainTag.LINE)
    plus_inverse = a_plus.inverse(tol)
    phi_plus = plus_inverse @ u
    a_values = A.on_circle(n, tol)
    psi_minus = -(a_values @ phi_plus + C.with_grid(n))
    basis = []
    for j, m in basis_rows:
        unit = MatrixFunction.from_rows([[LaurentFunction.monomial(m, 1.0, n) if i == j else 0.0]
                                         for i in range(size)], n, DomainTag.LINE)
        basis.append(plus_inverse @ unit)
    residual = max(phi_plus.analyticity_defect('plus'), psi_minus.analyticity_defect('minus'))
    return FactorizationSolution(phi_plus=phi_plus, psi_minus=psi_minus, factorization=left,
                                 dof_basis=tuple(basis), residual=residual)


