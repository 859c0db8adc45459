"""
Approximate factorization: asymptotic iteration for I + eps G, rational
fitting followed by exact rational factorization, and the fixed-point solver
for the triangular system with exponential factors.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import least_squares
from scipy.special import eval_genlaguerre

from whx.choices import FactorSide
from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    assess,
    line_nodes,
    unit_nodes,
)
from whx.exceptions import (
    ContourSingularityError,
    DivergenceError,
    InvalidInputError,
    NotCanonicalError,
)
from whx.rational_wh import RationalMatrixFunction, RationalScalar, circle_to_alpha, factor_rational
from whx.scalar_rh import factor_scalar

logger = logging.getLogger(__name__)

DEFAULT_JMAX = 20
DEFAULT_MAX_ITER = 50
# Consecutive non-contracting iterations tolerated by the exponential solver.
NON_CONTRACTION_LIMIT = 3


# Asymptotic iteration

@dataclass(frozen=True, eq=False)
class AsymptoticState:
    """S_j- = I + sum eps^i G-_{i-1}, S_j+ = I + sum eps^i G+_{i-1}; one history entry per step."""

    j: int
    eps: float
    S_minus: MatrixFunction
    S_plus: MatrixFunction
    delta_norm_history: np.ndarray
    G_minus: Tuple[MatrixFunction, ...] = ()
    G_plus: Tuple[MatrixFunction, ...] = ()


def _defect(M: MatrixFunction, S_minus: MatrixFunction, S_plus: MatrixFunction, n: int) -> np.ndarray:
    return S_minus.samples(n) @ S_plus.samples(n) - M.samples(n)


def asymptotic_factor(G: MatrixFunction, eps: float, j_max: int = DEFAULT_JMAX,
                      tol: Optional[Tolerances] = None,
                      target: Optional[float] = None) -> Tuple[Factorization, AsymptoticState]:
    """
    Right factorization M = I + eps G ~ S- S+. Step 1 splits G itself; step
    m >= 1 splits -(sum_{a=1..m} G-_{a-1} G+_{m-a}), the order eps^(m+1)
    cross terms, so the defect S- S+ - M is O(eps^(j+1)) after j steps.
    """
    tol = resolve(tol)
    target = tol.residual if target is None else target
    if not G.is_square:
        raise InvalidInputError('asymptotic factorization needs a square matrix', shape=list(G.shape))
    if j_max < 1:
        raise InvalidInputError('j_max must be at least 1', j_max=j_max)
    size, n = G.rows, G.n_samples
    if abs(eps) * G.sup_norm() >= 1.0:
        raise InvalidInputError('eps G is not small compared to I', eps_norm=abs(eps) * G.sup_norm())
    identity = MatrixFunction.identity(size, n)
    M = identity + G * eps

    g_minus: List[MatrixFunction] = [G.minus()]
    g_plus: List[MatrixFunction] = [G.plus()]
    S_minus = identity + g_minus[0] * eps
    S_plus = identity + g_plus[0] * eps
    history = [float(np.abs(_defect(M, S_minus, S_plus, n)).max())]
    j = 1
    while history[-1] >= target and j < j_max:
        cross = g_minus[0] @ g_plus[j - 1]
        for a in range(2, j + 1):
            cross = cross + g_minus[a - 1] @ g_plus[j - a]
        step = -cross
        g_minus.append(step.minus())
        g_plus.append(step.plus())
        weight = eps ** (j + 1)
        S_minus = S_minus + g_minus[-1] * weight
        S_plus = S_plus + g_plus[-1] * weight
        j += 1
        history.append(float(np.abs(_defect(M, S_minus, S_plus, n)).max()))
        logger.debug('Asymptotic step %d: |Delta| = %.3e', j, history[-1])
        state = AsymptoticState(j=j, eps=eps, S_minus=S_minus, S_plus=S_plus,
                                delta_norm_history=np.array(history), G_minus=tuple(g_minus),
                                G_plus=tuple(g_plus))
        if len(history) >= 3 and history[-1] > history[-2] > history[-3]:
            raise DivergenceError('asymptotic iteration diverges', partial_state=state, history=history)

    state = AsymptoticState(j=j, eps=eps, S_minus=S_minus, S_plus=S_plus, delta_norm_history=np.array(history),
                            G_minus=tuple(g_minus), G_plus=tuple(g_plus))
    fact = assess(M, S_plus, S_minus, (0,) * size, side=FactorSide.RIGHT, method='asymptotic', n=n,
                  notes={'eps': eps, 'steps': j, 'delta_norm_history': history})
    return fact, state


def step_one_defect(G: MatrixFunction, eps: float) -> MatrixFunction:
    """eps^2 G0- G0+, the exact defect after the first step."""
    return (G.minus() @ G.plus()) * (eps * eps)


# Rational fitting

@dataclass(frozen=True, eq=False)
class RationalFit:
    """Entrywise rational approximants; errors are sup norms over the grid, the window and its complement."""

    approximant: RationalMatrixFunction
    degrees: Tuple[int, int]
    fit_error: float
    window_error: float
    outside_error: float
    window: Optional[float] = None
    interlaced: bool = False
    flags: Tuple[str, ...] = field(default_factory=tuple)


def _vandermonde(t: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(t, degree + 1, increasing=True)


def _fit_entry(values: np.ndarray, t: np.ndarray, mask: np.ndarray, P: int, Q: int) -> Tuple[np.ndarray, np.ndarray]:
    """Linearized SVD fit N - K D = 0, then nonlinear least squares on N/D - K."""
    tm, km = t[mask], values[mask]
    system = np.hstack([_vandermonde(tm, P), -km[:, None] * _vandermonde(tm, Q)])
    vector = np.linalg.svd(system)[2][-1].conj()
    num, den = vector[:P + 1], vector[P + 1:]
    pivot = int(np.argmax(np.abs(den)))
    num, den = num / den[pivot], den / den[pivot]

    free = [k for k in range(Q + 1) if k != pivot]

    def unpack(x):
        z = x[:x.size // 2] + 1j * x[x.size // 2:]
        d = np.ones(Q + 1, dtype=complex)
        d[free] = z[P + 1:]
        return z[:P + 1], d

    def residuals(x):
        n_, d_ = unpack(x)
        r = npoly.polyval(tm, n_) / npoly.polyval(tm, d_) - km
        return np.concatenate([r.real, r.imag])

    start = np.concatenate([num, den[free]])
    x0 = np.concatenate([start.real, start.imag])
    if np.abs(residuals(x0)).max() > 1e-13 * max(1.0, np.abs(km).max()):
        result = least_squares(residuals, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if result.cost < 0.5 * float(np.sum(residuals(x0) ** 2)):
            num, den = unpack(result.x)
    return num, den


def _interlaced(zeros: np.ndarray, poles: np.ndarray) -> bool:
    """Zeros and poles alternate along each half-plane, ordered by distance from the line."""
    for sign in (1, -1):
        marks = sorted([(abs(z.imag), 'z') for z in zeros if sign * z.imag > 0]
                       + [(abs(p.imag), 'p') for p in poles if sign * p.imag > 0])
        if len(marks) >= 4 and all(a[1] != b[1] for a, b in zip(marks, marks[1:])):
            return True
    return False


def rational_fit(K: Union[LaurentFunction, MatrixFunction], P: int, Q: int, window: Optional[float] = None,
                 tol: Optional[Tolerances] = None) -> RationalFit:
    """
    Fit every entry by N(t)/D(t) with deg N = P and deg D = Q in the circle
    variable, then lower the approximant to the line. ``window`` restricts
    the fit to |alpha| <= window.
    """
    tol = resolve(tol)
    if P < 0 or Q < 0:
        raise InvalidInputError('fit degrees must be nonnegative', degrees=[P, Q])
    G = MatrixFunction([[K]]) if isinstance(K, LaurentFunction) else K
    n = G.n_samples
    t = unit_nodes(n)
    alpha = line_nodes(n)
    inside = np.abs(alpha) <= window if window is not None else np.ones(n, dtype=bool)
    if inside.sum() <= P + Q + 1:
        raise InvalidInputError('window holds too few nodes for the requested degrees', nodes=int(inside.sum()))

    values = G.samples(n)
    rows, errors = [], np.zeros(n)
    interlaced = False
    for i in range(G.rows):
        row = []
        for j in range(G.cols):
            num_t, den_t = _fit_entry(values[:, i, j], t, inside, P, Q)
            denominator = npoly.polyval(t, den_t)
            if np.abs(denominator).min() <= tol.singularity * np.abs(den_t).max():
                raise ContourSingularityError('rational approximant has a pole on the contour', entry=[i, j])
            errors = np.maximum(errors, np.abs(npoly.polyval(t, num_t) / denominator - values[:, i, j]))
            entry = RationalScalar(*circle_to_alpha(num_t, den_t))
            interlaced = interlaced or _interlaced(entry.zeros(), entry.poles())
            row.append(entry)
        rows.append(row)

    fit = RationalFit(
        approximant=RationalMatrixFunction.from_rows(rows), degrees=(P, Q),
        fit_error=float(errors.max()), window_error=float(errors[inside].max()),
        outside_error=float(errors[~inside].max()) if (~inside).any() else 0.0,
        window=window, interlaced=interlaced)
    if interlaced:
        logger.warning('Poles and zeros of the (%d, %d) approximant interlace, indicating a branch cut', P, Q)
    logger.debug('Rational fit (%d, %d): error %.3e, window %.3e, outside %.3e',
                 P, Q, fit.fit_error, fit.window_error, fit.outside_error)
    return fit


def rational_fit_sweep(K: Union[LaurentFunction, MatrixFunction], degrees: Sequence[Tuple[int, int]],
                       window: Optional[float] = None, tol: Optional[Tolerances] = None) -> List[RationalFit]:
    """Fits for increasing degrees; a fit that does not improve on the previous one is flagged as stagnant."""
    fits: List[RationalFit] = []
    for P, Q in degrees:
        fit = rational_fit(K, P, Q, window, tol)
        if fits and fit.window_error >= 0.99 * fits[-1].window_error:
            logger.warning('Rational fit stagnates at degrees (%d, %d): %.3e after %.3e',
                           P, Q, fit.window_error, fits[-1].window_error)
            fit = dataclasses.replace(fit, flags=fit.flags + ('stagnation',))
        fits.append(fit)
    return fits


def rational_fit_factor(K: Union[LaurentFunction, MatrixFunction], num_deg: int, den_deg: int,
                        window: Optional[float] = None,
                        tol: Optional[Tolerances] = None) -> Tuple[Factorization, RationalFit]:
    """Factor the rational approximant exactly; the residual is measured against the original K."""
    tol = resolve(tol)
    G = MatrixFunction([[K]]) if isinstance(K, LaurentFunction) else K
    fit = rational_fit(G, num_deg, den_deg, window, tol)
    exact = factor_rational(fit.approximant, tol)
    n = max(G.n_samples, exact.n_samples)
    fact = assess(G.with_grid(n), exact.plus, exact.minus, exact.partial_indices, method='rational-fit', n=n,
                  notes={**exact.notes, 'fit_error': fit.fit_error, 'degrees': [num_deg, den_deg],
                         'approximant_residual': exact.residual_inf})
    logger.info('Rational-fit factorization: fit error %.3e, residual against K %.3e',
                fit.fit_error, fact.residual_inf)
    return fact, fit


# Exponential-factor system

def exponential_coefficients(L: float, count: int) -> np.ndarray:
    """
    Taylor coefficients of e^{i alpha L} = exp(-L (1 + t)/(1 - t)) about t = 0:
    e^{-L} times the Laguerre values L_j^(-1)(2L).
    """
    if count < 1:
        return np.zeros(0)
    j = np.arange(1, count)
    coefficients = np.empty(count)
    coefficients[0] = 1.0
    coefficients[1:] = -(2.0 * L / j) * eval_genlaguerre(j - 1, 1, 2.0 * L)
    return np.exp(-L) * coefficients


def _cross_terms(e: np.ndarray, c: np.ndarray) -> np.ndarray:
    """out[m] = sum_{j >= m} c[j] e[j - m]."""
    size = c.size
    out = np.zeros(size, dtype=complex)
    for m in range(size):
        out[m] = np.dot(c[m:], e[:size - m])
    return out


def exponential_minus_part(f: LaurentFunction, L: float) -> LaurentFunction:
    """[e^{i alpha L} f]-, exact: only the minus part of f contributes."""
    negative = f.minus()
    if negative.k_min == 0:
        return LaurentFunction.constant(0.0, f.n_samples)
    c = negative.coeffs[::-1]
    out = _cross_terms(exponential_coefficients(L, c.size), c)
    out[0] = 0.0
    return LaurentFunction(out[::-1], -(c.size - 1), f.n_samples)


def exponential_plus_part(f: LaurentFunction, L: float) -> LaurentFunction:
    """[e^{-i alpha L} f]+, exact: only the plus part of f contributes."""
    c = np.array(f.plus().coeffs)
    out = _cross_terms(exponential_coefficients(L, c.size), c)
    return LaurentFunction(out, 0, f.n_samples)


@dataclass(frozen=True, eq=False)
class OscillatingFunction:
    """smooth + e^{sign i alpha L} factor; the exponential is kept symbolic."""

    smooth: LaurentFunction
    factor: LaurentFunction
    L: float
    sign: int = 1

    @property
    def n_samples(self) -> int:
        return max(self.smooth.n_samples, self.factor.n_samples)

    def line_values(self, n: Optional[int] = None) -> np.ndarray:
        """Values at the line nodes; at alpha = oo the exponential has mean value 0."""
        n = n or self.n_samples
        wave = np.zeros(n, dtype=complex)
        wave[1:] = np.exp(self.sign * 1j * line_nodes(n)[1:] * self.L)
        return self.smooth.samples(n) + wave * self.factor.samples(n)

    def analyticity_defect(self, side: str = 'plus') -> float:
        """Largest wrong-side coefficient, with the exponential projected exactly."""
        if side == 'plus':
            wrong = self.smooth.minus() + exponential_minus_part(self.factor, self.L)
            return wrong.analyticity_defect('plus')
        wrong = self.smooth.plus() + exponential_plus_part(self.factor, self.L)
        return wrong.analyticity_defect('minus')

    def as_dict(self) -> Dict[str, Any]:
        return {'smooth': self.smooth, 'factor': self.factor, 'L': self.L, 'sign': self.sign}


@dataclass(frozen=True, eq=False)
class ExponentialSystem:
    """
    Phi0- = A Psi0+ + B e^{i alpha L} PsiL+ + f1
    PhiL- = C e^{-i alpha L} Psi0+ - PsiL+ + f2

    The second row is the additive splitting of C e^{-i alpha L} Psi0+ + f2.
    With ``zero_block`` the (2, 2) entry is 0 instead of -1, which needs B and
    C nonvanishing.
    """

    A: LaurentFunction
    B: LaurentFunction
    C: LaurentFunction
    f1: LaurentFunction
    f2: LaurentFunction
    L: float
    zero_block: bool = False

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        tol = resolve(tol)
        if not self.L > 0:
            raise InvalidInputError('separation length L must be positive', L=self.L)
        if np.abs(self.A.samples()).min() <= tol.singularity:
            raise ContourSingularityError('A vanishes on the contour')
        if self.zero_block:
            for name, f in (('B', self.B), ('C', self.C)):
                if np.abs(f.samples()).min() <= tol.singularity:
                    raise InvalidInputError(f'{name} must not vanish when the (2, 2) block is zero')

    @property
    def diagonal(self) -> float:
        return 0.0 if self.zero_block else -1.0

    @property
    def n_samples(self) -> int:
        return max(f.n_samples for f in (self.A, self.B, self.C, self.f1, self.f2))

    def exponentials(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """e^{+-i alpha L} at the line nodes; at alpha = oo the mean value 0 is used."""
        alpha = line_nodes(n)
        up, down = np.zeros(n, dtype=complex), np.zeros(n, dtype=complex)
        up[1:] = np.exp(1j * alpha[1:] * self.L)
        down[1:] = np.exp(-1j * alpha[1:] * self.L)
        return up, down


@dataclass(frozen=True, eq=False)
class ExponentialSolution:
    phi0_minus: LaurentFunction
    phiL_minus: OscillatingFunction
    psi0_plus: OscillatingFunction
    psiL_plus: LaurentFunction
    iterations: int
    history: np.ndarray
    residuals: Tuple[float, float]
    defects: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


def _canonical_factors(kernel: LaurentFunction, name: str,
                       tol: Tolerances) -> Tuple[LaurentFunction, LaurentFunction]:
    fact = factor_scalar(kernel, tol)
    if fact.kappa != 0:
        raise NotCanonicalError(f'{name} has nonzero index', kappa=fact.kappa)
    return fact.X_plus, fact.G_minus


def iterative_exponential_solve(sys: ExponentialSystem, tol: Optional[float] = None,
                                max_iter: int = DEFAULT_MAX_ITER,
                                tolerances: Optional[Tolerances] = None) -> ExponentialSolution:
    """
    Fixed point on PsiL+, starting from 0. Each sweep solves the first row
    with kernel A = A+ A- and PsiL+ frozen, giving Phi0- and
    Psi0+ = P0 + e^{i alpha L} Q0, then the second row with Psi0+ eliminated,
    a scalar problem with kernel S = d - BC/A. Products of the exponentials
    with one-sided functions are projected exactly, so the only coupling left
    between sweeps decays with L. Convergence is measured on the change of
    the forcing B PsiL+.
    """
    tolerances = resolve(tolerances)
    tol = tolerances.residual if tol is None else tol
    sys.validate(tolerances)
    n = sys.n_samples
    L = sys.L
    A, B, C = sys.A.with_grid(n), sys.B.with_grid(n), sys.C.with_grid(n)
    f1, f2 = sys.f1.with_grid(n), sys.f2.with_grid(n)
    a_plus, a_minus = _canonical_factors(A, 'A', tolerances)
    schur = LaurentFunction.from_samples(sys.diagonal - B.samples(n) * C.samples(n) / A.samples(n))
    s_plus, s_minus = _canonical_factors(schur, 'the eliminated second-row kernel', tolerances)
    d1 = f1 / a_minus
    d2 = f2 / s_minus

    psiL_plus = LaurentFunction.constant(0.0, n)
    history: List[float] = []
    ratios_above_one = 0
    for iteration in range(1, max_iter + 1):
        h = B * psiL_plus / a_minus
        m1 = exponential_minus_part(h, L)
        phi0_minus = a_minus * (d1.minus() + m1)
        psi0_plus = OscillatingFunction((m1 - d1.plus()) / a_plus, -(B * psiL_plus) / A, L, 1)

        k = C * (phi0_minus - f1) / (A * s_minus)
        p2 = exponential_plus_part(k, L)
        updated = -(d2.plus() + p2) / s_plus
        phiL_minus = OscillatingFunction(s_minus * (d2.minus() - p2), s_minus * k, L, -1)

        change = float(np.abs(B.samples(n) * (updated.samples(n) - psiL_plus.samples(n))).max())
        history.append(change)
        psiL_plus = updated
        logger.debug('Exponential iteration %d: change %.3e', iteration, change)
        if change < tol:
            break
        if len(history) >= 2 and change >= history[-2]:
            ratios_above_one += 1
        else:
            ratios_above_one = 0
        if ratios_above_one >= NON_CONTRACTION_LIMIT:
            raise DivergenceError('coupling is too strong for the iteration to contract', history=history,
                                  partial_state=(psi0_plus, phi0_minus, psiL_plus, phiL_minus))
    else:
        raise DivergenceError(f'no convergence within {max_iter} iterations', history=history,
                              partial_state=(psi0_plus, phi0_minus, psiL_plus, phiL_minus))

    up, down = sys.exponentials(n)
    psi0, phiL = psi0_plus.line_values(n), phiL_minus.line_values(n)
    phi0, psiL = phi0_minus.samples(n), psiL_plus.samples(n)
    row1 = phi0 - A.samples(n) * psi0 - B.samples(n) * up * psiL - f1.samples(n)
    row2 = phiL - C.samples(n) * down * psi0 - sys.diagonal * psiL - f2.samples(n)
    residuals = (float(np.abs(row1[1:]).max()), float(np.abs(row2[1:]).max()))
    defects = (phi0_minus.analyticity_defect('minus'), phiL_minus.analyticity_defect('minus'),
               psi0_plus.analyticity_defect('plus'), psiL_plus.analyticity_defect('plus'))
    if max(residuals) >= 10 * max(tol, tolerances.residual):
        logger.warning('Exponential system residuals %.3e / %.3e exceed 10 tol', *residuals)
    logger.info('Exponential system converged in %d iteration(s) at L=%g', iteration, L)
    return ExponentialSolution(phi0_minus=phi0_minus, phiL_minus=phiL_minus, psi0_plus=psi0_plus,
                               psiL_plus=psiL_plus, iterations=iteration, history=np.array(history),
                               residuals=residuals, defects=defects)
