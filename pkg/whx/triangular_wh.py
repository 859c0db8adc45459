"""
Triangular matrix functions with factorizable diagonal.

The canonical matrix is built column by column from the scalar canonical
functions of the diagonal and Cauchy splittings of the off-diagonal data,
then brought to normal form at infinity by unimodular column operations.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from whx.choices import FactorSide
from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    assess,
    index_carrier,
)
from whx.exceptions import InvalidInputError, ResolutionError
from whx.rational_wh import RationalMatrixFunction, factor_rational
from whx.scalar_rh import ScalarFactorization, factor_scalar, factor_scalar_matrix

logger = logging.getLogger(__name__)

MAX_NORMALIZATION_STEPS = 64
MAX_TRIANGULAR_SIZE = 8
ORDER_THRESHOLD = 1e-9

# Entries with no significant coefficient.
NO_ORDER = -(1 << 30)


@dataclass(frozen=True, eq=False)
class Triangular2x2:
    """G = [[zeta1, 0], [a, zeta2]]."""

    zeta1: LaurentFunction
    zeta2: LaurentFunction
    a: LaurentFunction

    def matrix(self) -> MatrixFunction:
        return MatrixFunction.from_rows([[self.zeta1, 0.0], [self.a, self.zeta2]])


@dataclass(frozen=True, eq=False)
class CanonicalMatrix:
    """X+ = G X-, with X+ analytic inside and X- analytic outside up to its orders at infinity."""

    G: MatrixFunction
    X_plus: MatrixFunction
    X_minus: MatrixFunction
    orders_at_infinity: np.ndarray
    partial_indices: Tuple[int, ...]
    is_normal: bool
    boundary_residual: float
    mu: Optional[int] = None
    steps: int = 0
    quotients: int = 0


def _scale(X: MatrixFunction) -> float:
    return max(float(np.abs(e.coeffs).max()) for row in X.entries for e in row)


def _entry_order(f: LaurentFunction, threshold: float) -> int:
    significant = np.flatnonzero(np.abs(f.coeffs) > threshold)
    return int(f.ks[significant[-1]]) if significant.size else NO_ORDER


def _orders(X: MatrixFunction) -> np.ndarray:
    threshold = ORDER_THRESHOLD * _scale(X)
    return np.array([[_entry_order(e, threshold) for e in row] for row in X.entries])


def _leading_matrix(X: MatrixFunction, column_orders: np.ndarray) -> np.ndarray:
    return np.array([[X.entry(i, j).coefficient(int(column_orders[j])) for j in range(X.cols)]
                     for i in range(X.rows)])


def _is_nonsingular(L: np.ndarray, tol: Tolerances) -> bool:
    s = np.linalg.svd(L, compute_uv=False)
    return s[-1] > tol.rank * max(s[0], 1e-300)


def _boundary_residual(G: MatrixFunction, X_plus: MatrixFunction, X_minus: MatrixFunction) -> float:
    n = max(G.n_samples, X_plus.n_samples, X_minus.n_samples)
    return float(np.abs(X_plus.samples(n) - G.samples(n) @ X_minus.samples(n)).max())


def _canonical(G: MatrixFunction, X_plus: MatrixFunction, X_minus: MatrixFunction, tol: Tolerances,
               **extra) -> CanonicalMatrix:
    orders = _orders(X_minus)
    column_orders = orders.max(axis=0)
    residual = _boundary_residual(G, X_plus, X_minus)
    if residual > tol.residual * max(1.0, X_plus.sup_norm()):
        raise ResolutionError('canonical matrix does not satisfy the boundary relation', residual=residual)
    return CanonicalMatrix(
        G=G, X_plus=X_plus, X_minus=X_minus, orders_at_infinity=orders,
        partial_indices=tuple(int(-d) for d in column_orders),
        is_normal=_is_nonsingular(_leading_matrix(X_minus, column_orders), tol),
        boundary_residual=residual, **extra)


def _canonical_lower(G: MatrixFunction, tol: Tolerances) -> Tuple[MatrixFunction, MatrixFunction,
                                                                   List[ScalarFactorization], List[LaurentFunction]]:
    """
    Row r of X- is x_r- (phi_r-, 1), where phi_r+ - phi_r- is the row
    sum_m G[r, m] X-[m, :] divided by x_r+.
    """
    size = G.rows
    scalars = [factor_scalar(G.entry(j, j), tol) for j in range(size)]
    n = max([G.n_samples] + [s.X_plus.n_samples for s in scalars])
    zero = LaurentFunction.constant(0.0, n)
    plus = [[zero] * size for _ in range(size)]
    minus = [[zero] * size for _ in range(size)]
    densities = []
    for r, scalar in enumerate(scalars):
        x_plus, x_minus = scalar.X_plus.with_grid(n), scalar.minus_full().with_grid(n)
        plus[r][r], minus[r][r] = x_plus, x_minus
        for c in range(r):
            coupling = sum((G.entry(r, m) * minus[m][c] for m in range(c, r)), zero)
            density = coupling / x_plus
            phi_plus, phi_minus = density.plus(), -density.minus()
            plus[r][c] = x_plus * phi_plus
            minus[r][c] = x_minus * phi_minus
            densities.append(density)
    return MatrixFunction(plus), MatrixFunction(minus), scalars, densities


def order_of_decay(density: LaurentFunction, rel_tol: float = ORDER_THRESHOLD) -> Optional[int]:
    """mu such that the minus part of ``density`` decays like t**-mu; None when it vanishes."""
    scale = float(np.abs(density.coeffs).max())
    if scale == 0.0:
        return None
    negative = density.minus()
    significant = np.flatnonzero(np.abs(negative.coeffs) > rel_tol * scale)
    if not significant.size:
        return None
    return int(-negative.ks[significant[-1]])


def normalize_at_infinity(X: CanonicalMatrix, tol: Optional[Tolerances] = None,
                          max_steps: int = MAX_NORMALIZATION_STEPS) -> CanonicalMatrix:
    """
    Column reduction of X- at infinity. A null vector v of the leading
    coefficient matrix gives the unimodular update
    col_p <- sum_j (v_j / v_p) t**(d_p - d_j) col_j on the column p of largest
    order; consecutive updates of the same column form one continued-fraction
    quotient.
    """
    tol = resolve(tol)
    if X.is_normal:
        return X
    plus = [list(row) for row in X.X_plus.entries]
    minus = [list(row) for row in X.X_minus.entries]
    size = len(minus)
    steps, quotients, last_pivot = 0, 0, None
    while True:
        X_minus = MatrixFunction(minus)
        column_orders = _orders(X_minus).max(axis=0)
        L = _leading_matrix(X_minus, column_orders)
        if _is_nonsingular(L, tol):
            break
        if steps >= max_steps:
            raise ResolutionError('normalization at infinity did not terminate', steps=steps)
        v = np.conj(np.linalg.svd(L)[2][-1])
        active = [j for j in range(size) if abs(v[j]) > 1e-12 * np.abs(v).max()]
        pivot = max(active, key=lambda j: (column_orders[j], -j))
        for j in active:
            if j == pivot:
                continue
            weight = complex(v[j] / v[pivot])
            shift = int(column_orders[pivot] - column_orders[j])
            for i in range(size):
                minus[i][pivot] = minus[i][pivot] + minus[i][j].shift(shift) * weight
                plus[i][pivot] = plus[i][pivot] + plus[i][j].shift(shift) * weight
        steps += 1
        if pivot != last_pivot:
            quotients += 1
            last_pivot = pivot
        smallest = float(np.abs(np.linalg.det(MatrixFunction(minus).samples())).min())
        if smallest <= tol.singularity:
            raise ResolutionError('column operation made the canonical matrix singular', step=steps)
        logger.debug('Normalization step %d: pivot column %d, orders %s', steps, pivot, column_orders.tolist())
    normal = _canonical(X.G, MatrixFunction(plus), MatrixFunction(minus), tol, mu=X.mu,
                        steps=steps, quotients=quotients)
    if normal.boundary_residual > 10 * max(X.boundary_residual, tol.residual):
        logger.warning('Normalization amplified the boundary residual from %.3e to %.3e',
                       X.boundary_residual, normal.boundary_residual)
    return normal


def _one_sided(X: MatrixFunction, side: str) -> MatrixFunction:
    if side == 'plus':
        return X.map_entries(LaurentFunction.plus)
    return X.map_entries(lambda e: e.minus() + e.coefficient(0))


def _check_probes(plus: MatrixFunction, reduced_minus: MatrixFunction, tol: Tolerances) -> None:
    angles = np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
    inner = np.linalg.det(_one_sided(plus, 'plus').evaluate(0.5 * angles))
    outer = np.linalg.det(_one_sided(reduced_minus, 'minus').evaluate(2.0 * angles))
    smallest = float(min(np.abs(inner).min(), np.abs(outer).min()))
    if smallest <= tol.singularity:
        raise ResolutionError('canonical matrix degenerates off the contour', min_abs_det=smallest)


def factorization_from_canonical(X: CanonicalMatrix, tol: Optional[Tolerances] = None,
                                 method: str = 'triangular') -> Factorization:
    """G+ = X+ and G- = L^-1 (X-)^-1, computed as the inverse of X- L."""
    tol = resolve(tol)
    if not X.is_normal:
        raise ResolutionError('canonical matrix is not in normal form at infinity')
    reduced = MatrixFunction([[e.shift(k) for e, k in zip(row, X.partial_indices)]
                              for row in X.X_minus.entries])
    _check_probes(X.X_plus, reduced, tol)
    n = max(X.G.n_samples, reduced.n_samples)
    minus = MatrixFunction.from_samples(np.linalg.inv(reduced.samples(n)))
    fact = assess(X.G, X.X_plus, minus, X.partial_indices, method=method, n=n,
                  notes={'normalization_steps': X.steps, 'quotients': X.quotients, 'mu': X.mu}).sorted()
    if fact.residual_inf > 10 * tol.residual * max(1.0, X.G.sup_norm()):
        raise ResolutionError('triangular factors do not reproduce the matrix', residual=fact.residual_inf)
    return fact


def chebotarev_2x2(T: Triangular2x2, tol: Optional[Tolerances] = None) -> Tuple[CanonicalMatrix, Factorization]:
    tol = resolve(tol)
    G = T.matrix()
    X_plus, X_minus, scalars, densities = _canonical_lower(G, tol)
    kappa1, kappa2 = scalars[0].kappa, scalars[1].kappa
    mu = order_of_decay(densities[0])
    canonical = _canonical(G, X_plus, X_minus, tol, mu=mu)
    if mu is not None and kappa1 > kappa2 + mu:
        logger.debug('kappa1=%d exceeds kappa2 + mu = %d, normalizing', kappa1, kappa2 + mu)
        canonical = normalize_at_infinity(canonical, tol)
    elif not canonical.is_normal:
        raise ResolutionError('order of phi- at infinity is not resolved', mu=mu)
    return canonical, factorization_from_canonical(canonical, tol)


def _upper_norm(B: MatrixFunction, columns: Optional[Sequence[int]] = None) -> float:
    """Largest entry above the diagonal, restricted to ``columns`` when given."""
    columns = range(B.cols) if columns is None else columns
    return max((B.entry(i, j).sup_norm() for j in columns for i in range(min(j, B.rows))), default=0.0)


def _negligible(value: float, B: MatrixFunction, tol: Tolerances) -> bool:
    return value <= tol.singularity * max(1.0, B.sup_norm())


def is_bordered(B: MatrixFunction, tol: Optional[Tolerances] = None) -> bool:
    """[[A, 0], [b, c]]: the last column vanishes above the corner."""
    tol = resolve(tol)
    return B.is_square and _negligible(_upper_norm(B, [B.cols - 1]), B, tol)


def factor_leading_block(A: MatrixFunction, tol: Optional[Tolerances] = None) -> Factorization:
    """Exact factorization of a leading block with Laurent-polynomial entries."""
    return factor_rational(RationalMatrixFunction.from_laurent(A), tol)


def _block_diagonal(top: np.ndarray, corner: np.ndarray) -> np.ndarray:
    n, size = top.shape[0], top.shape[1] + 1
    result = np.zeros((n, size, size), dtype=complex)
    result[:, :-1, :-1] = top
    result[:, -1, -1] = corner
    return result


def reduce_triangular_n(B: MatrixFunction, tol: Optional[Tolerances] = None,
                        leading: Optional[Callable[[MatrixFunction], Factorization]] = None) -> Factorization:
    """
    Bordered n x n matrix [[A, 0], [b, c]]. With A = A+ Lambda A-,
    B = diag(A+, 1) [[Lambda, 0], [b (A-)^-1, c]] diag(A-, 1), and the
    reduced matrix in the middle is lower triangular with a diagonal leading
    block. A is factored by this reduction again when it is bordered, and
    otherwise by ``leading`` (exact rational factorization by default).
    """
    tol = resolve(tol)
    if not B.is_square:
        raise InvalidInputError('triangular reduction needs a square matrix', shape=list(B.shape))
    size = B.rows
    if size > MAX_TRIANGULAR_SIZE:
        raise InvalidInputError(f'triangular reduction is limited to size {MAX_TRIANGULAR_SIZE}', size=size)
    if not is_bordered(B, tol):
        raise InvalidInputError('matrix is not bordered: the last column must vanish above the corner',
                                upper_norm=_upper_norm(B, [size - 1]))
    if size == 1:
        return factor_scalar_matrix(B, tol)
    if size == 2:
        return chebotarev_2x2(Triangular2x2(B.entry(0, 0), B.entry(1, 1), B.entry(1, 0)), tol)[1]

    head = list(range(size - 1))
    A = B.block(head, head)
    if is_bordered(A, tol):
        inner = reduce_triangular_n(A, tol, leading)
    else:
        inner = (leading or (lambda block: factor_leading_block(block, tol)))(A)
    if inner.side != FactorSide.LEFT:
        raise InvalidInputError('the leading block needs a left factorization', side=str(inner.side))
    logger.debug('Leading %dx%d block factored with indices %s', size - 1, size - 1, inner.partial_indices)

    n = max(B.n_samples, inner.n_samples)
    values = B.samples(n)
    a_plus, a_minus = inner.plus.samples(n), inner.minus.samples(n)
    coupling = np.einsum('nj,njk->nk', values[:, -1, :-1], np.linalg.inv(a_minus))
    reduced = np.zeros_like(values)
    reduced[:, :-1, :-1] = index_carrier(inner.partial_indices, n)
    reduced[:, -1, :-1] = coupling
    reduced[:, -1, -1] = values[:, -1, -1]
    M = MatrixFunction.from_samples(reduced).with_grid(n)

    X_plus, X_minus, _, densities = _canonical_lower(M, tol)
    mu = min((m for m in map(order_of_decay, densities) if m is not None), default=None)
    canonical = normalize_at_infinity(_canonical(M, X_plus, X_minus, tol, mu=mu), tol)
    middle = factorization_from_canonical(canonical, tol)

    m = max(n, middle.n_samples)
    corner = np.ones(m, dtype=complex)
    plus = MatrixFunction.from_samples(_block_diagonal(inner.plus.samples(m), corner) @ middle.plus.samples(m))
    minus = MatrixFunction.from_samples(middle.minus.samples(m) @ _block_diagonal(inner.minus.samples(m), corner))
    fact = assess(B.with_grid(m), plus, minus, middle.partial_indices, method='triangular', n=m,
                  notes={'normalization_steps': canonical.steps, 'quotients': canonical.quotients,
                         'leading_indices': list(inner.partial_indices), 'leading_method': inner.method})
    if fact.residual_inf > 10 * tol.residual * max(1.0, B.sup_norm()):
        raise ResolutionError('bordered reduction does not reproduce the matrix', residual=fact.residual_inf)
    return fact
