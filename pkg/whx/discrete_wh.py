"""
Discrete Wiener-Hopf systems

    sum_{k >= 0} a_{n-k} x_k = c_n,   n >= 0,

reduced by the Z-transform A(t) = sum a_k t^k to the boundary relation
A X+ = C + D-, where D- collects the left-hand sums for n < 0.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from whx.conf import Tolerances, resolve
from whx.contour_core import LaurentFunction, next_power_of_two
from whx.exceptions import InvalidInputError, SingularTruncationError
from whx.scalar_rh import ScalarRHProblem, solve_paired, solve_paired_transpose, solve_scalar_rh

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DiscreteSequence:
    """Dense values of a finitely supported sequence, ``values[0]`` sitting at index ``offset``."""

    values: np.ndarray
    offset: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).ravel()
        if values.size == 0:
            raise InvalidInputError('sequence needs at least one value')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'offset', int(self.offset))

    @classmethod
    def from_dict(cls, mapping: Dict[int, complex]) -> 'DiscreteSequence':
        if not mapping:
            return cls(np.zeros(1), 0)
        low, high = min(mapping), max(mapping)
        values = np.zeros(high - low + 1, dtype=complex)
        for n, value in mapping.items():
            values[n - low] = value
        return cls(values, low)

    @classmethod
    def delta(cls, at: int = 0) -> 'DiscreteSequence':
        return cls(np.ones(1), at)

    @property
    def last(self) -> int:
        return self.offset + self.values.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.last + 1)

    def __len__(self):
        return self.values.size

    def value(self, n: int) -> complex:
        if n < self.offset or n > self.last:
            return 0j
        return complex(self.values[n - self.offset])

    def window(self, first: int, last: int) -> np.ndarray:
        """Values on ``first..last`` inclusive, zero outside the support."""
        return np.array([self.value(n) for n in range(first, last + 1)], dtype=complex)

    def __repr__(self):
        return f'DiscreteSequence(n={self.offset}..{self.last})'


@dataclass(frozen=True)
class DecayCertificate:
    """|a_n| < M / |n|**(1 + lam) for n != 0, with 0 < lam < 1."""

    M: float
    lam: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise InvalidInputError('decay exponent must satisfy 0 < lam < 1', lam=self.lam)
        if self.M <= 0:
            raise InvalidInputError('decay constant must be positive', M=self.M)

    def check(self, seq: DiscreteSequence) -> None:
        n = seq.indices
        mask = n != 0
        bound = self.M / np.abs(n[mask]).astype(float) ** (1 + self.lam)
        magnitudes = np.abs(seq.values[mask])
        violated = magnitudes >= bound
        if violated.any():
            first = int(n[mask][np.flatnonzero(violated)[0]])
            raise InvalidInputError('kernel violates its decay certificate', n=first, M=self.M, lam=self.lam)

    def truncation_bound(self, support: int) -> float:
        """Bound on the tail sum over |n| > support implied by the certificate."""
        return 2 * self.M / (self.lam * support ** self.lam)


@dataclass(frozen=True, eq=False)
class DiscreteWHProblem:
    a: DiscreteSequence
    c: DiscreteSequence
    decay: Optional[DecayCertificate] = None

    def validate(self) -> None:
        if self.c.offset < 0:
            raise InvalidInputError('right-hand side must be one-sided (n >= 0)', offset=self.c.offset)
        if self.decay is not None:
            self.decay.check(self.a)


def _grid_for(*seqs: DiscreteSequence, tol: Optional[Tolerances] = None) -> int:
    tol = resolve(tol)
    reach = max(max(abs(s.offset), abs(s.last)) for s in seqs)
    return max(tol.grid, next_power_of_two(4 * reach + 4))


def z_transform(seq: DiscreteSequence, n_samples: Optional[int] = None,
                tol: Optional[Tolerances] = None) -> LaurentFunction:
    """Sequence values become the Laurent coefficients of the symbol."""
    return LaurentFunction(seq.values, seq.offset, n_samples or _grid_for(seq, tol=tol))


def inverse_z_transform(f: LaurentFunction, first: Optional[int] = None, last: Optional[int] = None,
                        rel_tol: float = 1e-16) -> DiscreteSequence:
    """Read the coefficients back; without bounds, negligible ends are trimmed."""
    if first is None and last is None:
        f = f.trimmed(rel_tol)
    first = f.k_min if first is None else first
    last = f.k_max if last is None else last
    return DiscreteSequence(np.array([f.coefficient(k) for k in range(first, last + 1)]), first)


def convolve(a: DiscreteSequence, x: DiscreteSequence) -> DiscreteSequence:
    return DiscreteSequence(np.convolve(a.values, x.values), a.offset + x.offset)


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    x: DiscreteSequence
    d: DiscreteSequence
    kappa: int
    basis: Tuple[Tuple[DiscreteSequence, DiscreteSequence], ...]
    moments: np.ndarray
    residual: float

    @property
    def dof(self) -> int:
        return len(self.basis)

    def member(self, coeffs: Sequence[complex]) -> DiscreteSequence:
        """x for the given free coefficients of the solution family."""
        if len(coeffs) != len(self.basis):
            raise InvalidInputError(f'{len(self.basis)} free coefficients expected, got {len(coeffs)}')
        first = min([self.x.offset] + [bx.offset for bx, _ in self.basis])
        last = max([self.x.last] + [bx.last for bx, _ in self.basis])
        values = self.x.window(first, last)
        for c, (bx, _) in zip(coeffs, self.basis):
            values = values + c * bx.window(first, last)
        return DiscreteSequence(values, first)


def equation_residual(a: DiscreteSequence, x: DiscreteSequence, c: DiscreteSequence,
                      rows: Optional[Tuple[int, int]] = None) -> float:
    """max |sum_k a_{n-k} x_k - c_n| over the rows n (default: the support of c)."""
    first, last = rows or (c.offset, c.last)
    lhs = convolve(a, x)
    return float(np.abs(lhs.window(first, last) - c.window(first, last)).max())


def solve_discrete_wh(p: DiscreteWHProblem, tol: Optional[Tolerances] = None) -> DiscreteSolution:
    """
    Pose A X+ = C + D- as the boundary problem X+ = (1/A) D- + C/A with D-
    vanishing at infinity. A symbol winding -m gives an m-parameter family;
    positive winding imposes solvability conditions on C.
    """
    tol = resolve(tol)
    p.validate()
    n = _grid_for(p.a, p.c, tol=tol)
    A = z_transform(p.a, n)
    C = z_transform(p.c, n)
    solution = solve_scalar_rh(ScalarRHProblem(A.reciprocal(tol), C / A), vanish_at_infinity=True, tol=tol)

    x = inverse_z_transform(solution.phi_plus.plus())
    d = inverse_z_transform(solution.phi_minus.minus())
    basis = tuple((inverse_z_transform(plus.plus()), inverse_z_transform(minus.minus()))
                  for plus, minus in solution.basis)
    residual = equation_residual(p.a, x, p.c)
    logger.debug('Discrete solve: winding(A)=%d, dof=%d, residual=%.3e', -solution.kappa, len(basis), residual)
    return DiscreteSolution(x=x, d=d, kappa=solution.kappa, basis=basis, moments=solution.moments,
                            residual=residual)


@dataclass(frozen=True, eq=False)
class DualSolution:
    x: DiscreteSequence
    basis: Tuple[DiscreteSequence, ...]
    residual_plus: float
    residual_minus: float

    @property
    def residual(self) -> float:
        return max(self.residual_plus, self.residual_minus)


def solve_discrete_dual(a: DiscreteSequence, b: DiscreteSequence, c: DiscreteSequence, d: DiscreteSequence,
                        tol: Optional[Tolerances] = None) -> DualSolution:
    """
    Two-sided x with sum_k a_{n-k} x_k = c_n for n >= 0 and
    sum_k b_{n-k} x_k = d_n for n < 0.
    """
    tol = resolve(tol)
    if c.offset < 0 or d.last >= 0:
        raise InvalidInputError('c must live on n >= 0 and d on n < 0', c_offset=c.offset, d_last=d.last)
    n = _grid_for(a, b, c, d, tol=tol)
    solution = solve_paired(z_transform(a, n), z_transform(b, n), z_transform(c, n), z_transform(d, n), tol)
    x = inverse_z_transform(solution.x)
    basis = tuple(inverse_z_transform(member) for member in solution.basis)
    span = max(x.values.size, c.values.size, d.values.size)
    residual_plus = equation_residual(a, x, c, rows=(0, max(c.last, span)))
    residual_minus = equation_residual(b, x, d, rows=(min(d.offset, -span), -1))
    logger.debug('Discrete dual solve: residuals %.3e / %.3e', residual_plus, residual_minus)
    return DualSolution(x=x, basis=basis, residual_plus=residual_plus, residual_minus=residual_minus)


@dataclass(frozen=True, eq=False)
class TransposeDualSolution:
    x: DiscreteSequence
    basis: Tuple[DiscreteSequence, ...]
    residual: float


def solve_discrete_transpose_dual(a: DiscreteSequence, b: DiscreteSequence, c: DiscreteSequence,
                                  tol: Optional[Tolerances] = None) -> TransposeDualSolution:
    """sum_{k >= 0} a_{n-k} x_k + sum_{k < 0} b_{n-k} x_k = c_n for every n."""
    tol = resolve(tol)
    n = _grid_for(a, b, c, tol=tol)
    solution = solve_paired_transpose(z_transform(a, n), z_transform(b, n), z_transform(c, n), tol)
    x_plus = inverse_z_transform(solution.x_plus.plus())
    x_minus = inverse_z_transform(solution.x_minus.minus())
    x = inverse_z_transform(solution.x_plus.plus() + solution.x_minus.minus())
    lhs = convolve(a, x_plus)
    rhs_minus = convolve(b, x_minus)
    first = min(lhs.offset, rhs_minus.offset, c.offset)
    last = max(lhs.last, rhs_minus.last, c.last)
    residual = float(np.abs(lhs.window(first, last) + rhs_minus.window(first, last)
                            - c.window(first, last)).max())
    basis = tuple(inverse_z_transform(plus.plus() + minus.minus()) for plus, minus in solution.basis)
    return TransposeDualSolution(x=x, basis=basis, residual=residual)


@dataclass(frozen=True, eq=False)
class TruncatedSolution:
    x: np.ndarray
    N: int
    residual: float
    tail_estimate: Optional[float]


def _toeplitz_solve(a: DiscreteSequence, c: DiscreteSequence, N: int, tol: Tolerances) -> Tuple[np.ndarray, float]:
    column = a.window(0, N - 1)
    row = a.window(-(N - 1), 0)[::-1]
    rhs = c.window(0, N - 1)
    try:
        x = scipy.linalg.solve_toeplitz((column, row), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularTruncationError('truncated Toeplitz matrix is singular; retry with a larger N',
                                      N=N, reason=str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularTruncationError('truncated Toeplitz solve produced non-finite values', N=N)
    residual = float(np.abs(scipy.linalg.matmul_toeplitz((column, row), x) - rhs).max())
    if residual > tol.residual ** 0.5 * max(1.0, float(np.abs(rhs).max())):
        raise SingularTruncationError('truncated Toeplitz solve is numerically singular', N=N, residual=residual)
    return x, residual


def toeplitz_truncated_solve(p: DiscreteWHProblem, N: int, estimate_tail: bool = True,
                             tol: Optional[Tolerances] = None) -> TruncatedSolution:
    """Dense N x N solve of the leading section; the tail estimate compares with the 2N section."""
    tol = resolve(tol)
    if N < 8:
        raise InvalidInputError('truncation order must be at least 8', N=N)
    p.validate()
    x, residual = _toeplitz_solve(p.a, p.c, N, tol)
    tail = None
    if estimate_tail:
        doubled, _ = _toeplitz_solve(p.a, p.c, 2 * N, tol)
        tail = float(np.abs(x - doubled[:N]).max())
        logger.debug('Truncated solve N=%d: tail estimate %.3e', N, tail)
    return TruncatedSolution(x=x, N=N, residual=residual, tail_estimate=tail)
