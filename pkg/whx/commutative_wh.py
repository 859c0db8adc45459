"""
Commutative factorization: Khrapkov-Daniele 2x2 kernels, the Jones class
and functionally commutative matrix functions.

For all three the factors commute, so the matrix problem reduces to scalar
additive splittings of logarithms.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from whx.choices import FactorSide
from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    assess,
    continuous_log,
    unit_nodes,
    winding_report,
)
from whx.exceptions import (
    BranchAmbiguityError,
    InvalidInputError,
    NotInClassError,
    ResolutionError,
)
from whx.rational_wh import PolynomialMatrix, trim_poly
from whx.scalar_rh import factor_scalar

logger = logging.getLogger(__name__)

# Below this |u| the ratio artanh(u)/u is evaluated from its series.
_SERIES_RADIUS = 1e-3

DEFAULT_TRIALS = 32


def _commutator_norm(plus: MatrixFunction, minus: MatrixFunction, n: int) -> float:
    a, b = plus.samples(n), minus.samples(n)
    return float(np.abs(a @ b - b @ a).max())


def _check_assembled(fact: Factorization, G: MatrixFunction, tol: Tolerances) -> None:
    scale = max(1.0, G.sup_norm())
    if fact.residual_inf > tol.residual * scale:
        raise ResolutionError(f'{fact.method} factors do not reproduce the kernel',
                              residual=fact.residual_inf, n_samples=fact.n_samples)


# Khrapkov-Daniele

@dataclass(frozen=True, eq=False)
class KhrapkovKernel:
    """K = k0 I + k1 J with J a polynomial matrix in t and J^2 = delta2 I."""

    k0: LaurentFunction
    k1: LaurentFunction
    J: PolynomialMatrix
    delta2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'delta2', trim_poly(self.delta2))
        if not isinstance(self.J, PolynomialMatrix):
            object.__setattr__(self, 'J', PolynomialMatrix(self.J))

    def validate(self) -> None:
        if self.J.shape != (2, 2):
            raise InvalidInputError('Khrapkov kernels are 2x2', shape=list(self.J.shape))
        J = self.J.trimmed()
        if J.degree > 1 or self.delta2.size > 3:
            raise NotInClassError('J must have degree <= 1 and delta2 degree <= 2',
                                  J_degree=J.degree, delta2_degree=self.delta2.size - 1)
        square = (J @ J).coeffs
        expected = np.zeros_like(square)
        for k, c in enumerate(self.delta2):
            expected[k] = c * np.eye(2)
        width = max(square.shape[0], expected.shape[0])
        defect = np.abs(np.pad(square, ((0, width - square.shape[0]), (0, 0), (0, 0)))
                        - np.pad(expected, ((0, width - expected.shape[0]), (0, 0), (0, 0)))).max()
        if defect > 1e-12 * max(1.0, np.abs(square).max()):
            raise NotInClassError('J^2 differs from delta2 I', defect=float(defect))

    @property
    def n_samples(self) -> int:
        return max(self.k0.n_samples, self.k1.n_samples)

    def matrix(self, n: Optional[int] = None) -> MatrixFunction:
        n = n or self.n_samples
        j = self.J.samples(n)
        values = (self.k0.samples(n)[:, None, None] * np.eye(2)
                  + self.k1.samples(n)[:, None, None] * j)
        return MatrixFunction.from_samples(values)


def _continuous_sqrt(values: np.ndarray) -> np.ndarray:
    """Square root continued along the grid by choosing the sign nearest the previous value."""
    roots = np.sqrt(values.astype(complex))
    for j in range(1, roots.size):
        if abs(roots[j] - roots[j - 1]) > abs(roots[j] + roots[j - 1]):
            roots[j] = -roots[j]
    return roots


def _continuous_artanh(u: np.ndarray) -> np.ndarray:
    """artanh(u) = (log(1 + u) - log(1 - u))/2 with both logarithms unwrapped along the path."""
    return 0.5 * (continuous_log(1.0 + u) - continuous_log(1.0 - u))


def _theta_samples(ratio: np.ndarray, delta2: np.ndarray, tol: Tolerances) -> np.ndarray:
    """theta = ratio * artanh(u)/u with u = ratio * sqrt(delta2), closed around the contour."""
    ratio = np.append(ratio, ratio[0])
    u = ratio * _continuous_sqrt(np.append(delta2, delta2[0]))
    if np.abs(u ** 2 - 1.0).min() < 1e-8:
        raise BranchAmbiguityError('k1 delta / k0 reaches +-1 on the contour',
                                   min_distance=float(np.abs(u ** 2 - 1.0).min()))
    branch = _continuous_artanh(u)
    small = np.abs(u) < _SERIES_RADIUS
    if small.any() and np.abs(branch[small] - np.arctanh(u[small])).max() > 1e-6:
        raise BranchAmbiguityError('artanh branch has drifted near u = 0')
    w = u * u
    series = 1.0 + w / 3 + w * w / 5 + w ** 3 / 7
    with np.errstate(divide='ignore', invalid='ignore'):
        theta = ratio * np.where(small, series, branch / np.where(small, 1.0, u))
    closing = abs(theta[-1] - theta[0])
    if closing > tol.residual * max(1.0, float(np.abs(theta).max())):
        raise BranchAmbiguityError('artanh branch does not close around the contour', closing=float(closing))
    return theta[:-1]


def factor_khrapkov(k: KhrapkovKernel, tol: Optional[Tolerances] = None) -> Factorization:
    """
    K = r (cosh(theta Delta) I + sinh(theta Delta)/Delta J) with r^2 = det K.
    Splitting r multiplicatively and theta additively gives commuting factors
    K+- = r+- exp(theta+- J); both partial indices equal the index of r.
    """
    tol = resolve(tol)
    k.validate()
    n = k.n_samples
    t = unit_nodes(n)
    k0, k1 = k.k0.samples(n), k.k1.samples(n)
    delta2 = npoly.polyval(t, k.delta2)
    determinant = k0 * k0 - delta2 * k1 * k1
    winding = winding_report(LaurentFunction.from_samples(determinant), tol).index
    if winding % 2:
        raise NotInClassError('det K has odd index, so sqrt(det K) is not single-valued', index=winding)
    if np.abs(k0).min() <= tol.singularity:
        raise BranchAmbiguityError('k0 vanishes on the contour', min_modulus=float(np.abs(k0).min()))
    r = LaurentFunction.from_samples(np.exp(0.5 * continuous_log(determinant * t ** (-winding))) * t ** (winding // 2))
    r_fact = factor_scalar(r, tol)
    theta = LaurentFunction.from_samples(_theta_samples(k1 / k0, delta2, tol))
    theta_plus, theta_minus = theta.split()

    n = max(n, r_fact.X_plus.n_samples, r_fact.G_minus.n_samples)
    t = unit_nodes(n)
    d2 = npoly.polyval(t, k.delta2)
    j = k.J.samples(n)

    def exponential(part: LaurentFunction, scalar: LaurentFunction) -> np.ndarray:
        th = part.samples(n)
        x = np.sqrt((th * th * d2).astype(complex))
        sinhc = np.sinc(1j * x / np.pi)
        return scalar.samples(n)[:, None, None] * (np.cosh(x)[:, None, None] * np.eye(2)
                                                   + (th * sinhc)[:, None, None] * j)

    plus = MatrixFunction.from_samples(exponential(theta_plus, r_fact.X_plus))
    minus = MatrixFunction.from_samples(exponential(theta_minus, r_fact.G_minus))
    G = k.matrix(n)
    fact = assess(G, plus, minus, (r_fact.kappa, r_fact.kappa), FactorSide.LEFT, method='khrapkov', n=n,
                  notes={'commutator': _commutator_norm(plus, minus, n), 'r_index': r_fact.kappa})
    _check_assembled(fact, G, tol)
    logger.debug('Khrapkov factorization: kappa=%d, residual=%.3e, commutator=%.3e',
                 r_fact.kappa, fact.residual_inf, fact.notes['commutator'])
    return fact


def khrapkov_split(k: KhrapkovKernel, tol: Optional[Tolerances] = None) -> Tuple[LaurentFunction, LaurentFunction]:
    """The additive pieces theta+ and theta- used by factor_khrapkov."""
    tol = resolve(tol)
    k.validate()
    n = k.n_samples
    k0, k1 = k.k0.samples(n), k.k1.samples(n)
    theta = LaurentFunction.from_samples(_theta_samples(k1 / k0, npoly.polyval(unit_nodes(n), k.delta2), tol))
    return theta.split()


# Jones

@dataclass(frozen=True, eq=False)
class JonesKernel:
    """C = sum_m a[m] E^m (m = 0..n-1) with a constant E, E^n = q^n I and tr E^r = 0."""

    a: Tuple[LaurentFunction, ...]
    E: np.ndarray
    q: complex

    def __post_init__(self):
        object.__setattr__(self, 'a', tuple(self.a))
        E = np.asarray(self.E, dtype=complex)
        if E.ndim == 3:
            E = PolynomialMatrix(E).trimmed().coeffs
            if E.shape[0] > 1:
                raise NotInClassError('E must be constant in t for bounded minus factors', degree=E.shape[0] - 1)
            E = E[0]
        object.__setattr__(self, 'E', E)
        object.__setattr__(self, 'q', complex(self.q))

    @property
    def size(self) -> int:
        return self.E.shape[0]

    @property
    def n_samples(self) -> int:
        return max(f.n_samples for f in self.a)

    def validate(self) -> None:
        n = self.size
        if self.E.shape != (n, n) or n < 2:
            raise InvalidInputError('E must be a square matrix of size >= 2', shape=list(self.E.shape))
        if len(self.a) != n:
            raise InvalidInputError(f'{n} coefficient functions expected, got {len(self.a)}')
        if self.q == 0:
            raise NotInClassError('q must be nonzero')
        scale = max(1.0, abs(self.q) ** n)
        power = np.linalg.matrix_power(self.E, n)
        if np.abs(power - self.q ** n * np.eye(n)).max() > 1e-12 * scale:
            raise NotInClassError('E^n differs from q^n I',
                                  defect=float(np.abs(power - self.q ** n * np.eye(n)).max()))
        for r in range(1, n):
            trace = np.trace(np.linalg.matrix_power(self.E, r))
            if abs(trace) > 1e-12 * max(1.0, abs(self.q) ** r):
                raise NotInClassError('trace condition fails', power=r, trace=[trace.real, trace.imag])

    def matrix(self, n: Optional[int] = None) -> MatrixFunction:
        n = n or self.n_samples
        values = np.zeros((n, self.size, self.size), dtype=complex)
        power = np.eye(self.size, dtype=complex)
        for a_m in self.a:
            values += a_m.samples(n)[:, None, None] * power
            power = power @ self.E
        return MatrixFunction.from_samples(values)


def factor_jones(k: JonesKernel, tol: Optional[Tolerances] = None) -> Factorization:
    """
    On the eigenvector of E for q w^j the kernel acts as c_j = sum_m a_m (q w^j)^m.
    log C = sum_s delta_s E^s, the delta_s are split, and each factor is
    rebuilt as a polynomial in E through its eigenvalues.
    """
    tol = resolve(tol)
    k.validate()
    size, q = k.size, k.q
    grid = k.n_samples
    t = unit_nodes(grid)
    omega = np.exp(2j * np.pi * np.arange(size) / size)
    a = np.stack([f.samples(grid) for f in k.a])
    eigen = np.stack([npoly.polyval(q * w, a) for w in omega])

    windings = [winding_report(LaurentFunction.from_samples(c), tol).index for c in eigen]
    if len(set(windings)) != 1:
        raise NotInClassError('eigenvalue branches of C have different indices', indices=windings)
    winding = windings[0]
    logs = np.stack([continuous_log(c * t ** (-winding)) for c in eigen])

    deltas = [LaurentFunction.from_samples(
        sum(omega[j] ** (-s) * logs[j] for j in range(size)) / (size * q ** s)) for s in range(size)]
    grid = max(d.n_samples for d in deltas)

    def rebuild(parts: List[LaurentFunction]) -> np.ndarray:
        mu = [sum(parts[s].samples(grid) * q ** s * omega[m] ** s for s in range(size)) for m in range(size)]
        values = np.zeros((grid, size, size), dtype=complex)
        power = np.eye(size, dtype=complex)
        for p in range(size):
            gamma = sum(omega[m] ** (-p) * np.exp(mu[m]) for m in range(size)) / (size * q ** p)
            values += gamma[:, None, None] * power
            power = power @ k.E
        return values

    plus = MatrixFunction.from_samples(rebuild([d.plus() for d in deltas]))
    minus = MatrixFunction.from_samples(rebuild([d.minus() for d in deltas]))
    G = k.matrix(grid)
    fact = assess(G, plus, minus, (winding,) * size, FactorSide.LEFT, method='jones', n=grid,
                  notes={'commutator': _commutator_norm(plus, minus, grid)})
    _check_assembled(fact, G, tol)
    logger.debug('Jones factorization: n=%d, kappa=%d, residual=%.3e', size, winding, fact.residual_inf)
    return fact


# Functionally commutative

@dataclass(frozen=True)
class CommutativityReport:
    commutative: bool
    pairs_checked: int
    witness: Optional[Tuple[complex, complex, float]] = None

    def __bool__(self):
        return self.commutative


def is_functionally_commutative(G: MatrixFunction, trials: int = DEFAULT_TRIALS,
                                rel_tol: float = 1e-9) -> CommutativityReport:
    """Check G(t)G(s) = G(s)G(t) for all pairs from ``trials`` evenly spaced grid nodes."""
    if not G.is_square:
        raise InvalidInputError('commutativity test needs a square matrix function', shape=list(G.shape))
    n = G.n_samples
    picks = np.unique((np.arange(min(trials, n)) * n) // min(trials, n))
    values = G.samples()[picks]
    nodes = unit_nodes(n)[picks]
    checked = 0
    for i in range(len(picks)):
        for j in range(i + 1, len(picks)):
            checked += 1
            a, b = values[i], values[j]
            defect = float(np.abs(a @ b - b @ a).max())
            scale = max(1.0, float(np.abs(a).max() * np.abs(b).max()))
            if defect > rel_tol * scale:
                return CommutativityReport(False, checked, (complex(nodes[i]), complex(nodes[j]), defect))
    return CommutativityReport(True, checked)


def _glued_logarithm(values: np.ndarray, step_limit: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    L_j = L_{j-1} + log(G_{j-1}^{-1} G_j), starting from the principal log.
    Returns the samples and the closing matrix L_n - L_0 (a multiple of 2 pi i).
    """
    n, size, _ = values.shape
    logs = np.empty_like(values)
    logs[0] = scipy.linalg.logm(values[0])
    largest = 0.0
    for j in range(1, n + 1):
        step = scipy.linalg.logm(np.linalg.solve(values[j - 1], values[j % n]))
        largest = max(largest, float(np.abs(step).max()))
        if j < n:
            logs[j] = logs[j - 1] + step
        else:
            closing = logs[n - 1] + step - logs[0]
    if largest > step_limit:
        raise ResolutionError('matrix logarithm steps are not resolved by the grid', largest_step=largest)
    return logs, closing


def factor_funcomm(G: MatrixFunction, tol: Optional[Tolerances] = None,
                   trials: int = DEFAULT_TRIALS) -> Factorization:
    """
    Matrix Gakhov formula: a continuous logarithm of G, corrected by the
    carrier read off its closing matrix, is split entrywise and exponentiated.
    """
    tol = resolve(tol)
    report = is_functionally_commutative(G, trials)
    if not report:
        raise NotInClassError('matrix function is not functionally commutative',
                              witness=[[report.witness[0].real, report.witness[0].imag],
                                       [report.witness[1].real, report.witness[1].imag]],
                              defect=report.witness[2])
    if G.min_abs_det <= tol.singularity:
        raise InvalidInputError('matrix function is singular on the contour', min_abs_det=G.min_abs_det)

    n = G.n_samples
    while True:
        try:
            logs, closing = _glued_logarithm(G.samples(n), step_limit=0.5)
            break
        except ResolutionError:
            if n >= tol.grid_cap:
                raise
            n *= 2
    size = G.rows
    eigenvalues, vectors = np.linalg.eig(closing / (2j * np.pi))
    indices = np.rint(eigenvalues.real).astype(int)
    if np.abs(eigenvalues - indices).max() > 0.1:
        raise ResolutionError('closing matrix of the logarithm is not an integer multiple of 2 pi i',
                              eigenvalues=[[e.real, e.imag] for e in eigenvalues])
    phase = 2j * np.pi * np.arange(n) / n
    if np.all(indices == indices[0]):
        vectors = np.eye(size, dtype=complex)
    elif np.linalg.cond(vectors) > tol.max_condition:
        raise ResolutionError('closing matrix is not diagonalizable', condition=float(np.linalg.cond(vectors)))
    carrier_log = vectors @ np.diag(indices.astype(complex)) @ np.linalg.inv(vectors)
    if np.abs(closing / (2j * np.pi) - carrier_log).max() > 0.1:
        raise ResolutionError('closing matrix of the logarithm is not diagonalizable')
    adjusted = MatrixFunction.from_samples(logs - phase[:, None, None] * carrier_log)

    plus_exp = scipy.linalg.expm(adjusted.plus().samples(n))
    minus_exp = scipy.linalg.expm(adjusted.minus().samples(n))
    plus = MatrixFunction.from_samples(plus_exp @ vectors)
    minus = MatrixFunction.from_samples(np.linalg.inv(vectors) @ minus_exp)
    commutator = float(np.abs(plus_exp @ minus_exp - minus_exp @ plus_exp).max())
    fact = assess(G.with_grid(n), plus, minus, tuple(int(k) for k in indices), FactorSide.LEFT,
                  method='funcomm', n=n, notes={'commutator': commutator}).sorted()
    _check_assembled(fact, G, tol)
    logger.debug('Functionally commutative factorization: indices=%s, residual=%.3e',
                 fact.partial_indices, fact.residual_inf)
    return fact
