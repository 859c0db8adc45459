"""
Scalar Riemann-Hilbert and Wiener-Hopf problems on the unit circle.

Boundary condition: Phi+ = G Phi- + g, with Phi+ analytic inside the disc
and Phi- analytic outside and bounded at infinity.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    assess,
    cauchy_split,
    continuous_log,
    scalar_matrix,
    unit_nodes,
    winding_report,
)
from whx.exceptions import (
    ContourSingularityError,
    InvalidInputError,
    NoSolutionError,
    NotCanonicalError,
    ResolutionError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ScalarRHProblem:
    G: LaurentFunction
    g: LaurentFunction

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        tol = resolve(tol)
        smallest = float(np.abs(self.G.samples()).min())
        if smallest <= tol.singularity:
            raise ContourSingularityError('coefficient G vanishes on the contour', min_modulus=smallest)


@dataclass(frozen=True, eq=False)
class ScalarFactorization:
    """
    G = t**kappa * X_plus / X_minus, where X_plus = exp(gamma_plus) and
    X_minus = exp(-gamma_minus). ``G_minus`` = exp(gamma_minus) is the minus
    factor of the left factorization G = X_plus t**kappa G_minus.
    """

    X_plus: LaurentFunction
    X_minus: LaurentFunction
    kappa: int
    gamma_plus: LaurentFunction
    gamma_minus: LaurentFunction
    G_minus: LaurentFunction
    residual: float = 0.0

    def minus_full(self) -> LaurentFunction:
        """The canonical function outside the disc, t**(-kappa) X_minus."""
        return self.X_minus.shift(-self.kappa)

    def as_factorization(self, G: LaurentFunction, method: str = 'scalar') -> Factorization:
        return assess(scalar_matrix(G), scalar_matrix(self.X_plus), scalar_matrix(self.G_minus),
                      (self.kappa,), method=method)


def factor_scalar(G: LaurentFunction, tol: Optional[Tolerances] = None) -> ScalarFactorization:
    tol = resolve(tol)
    report = winding_report(G, tol)
    kappa = report.index
    n = max(G.n_samples, report.n_samples)
    while True:
        gamma = LaurentFunction.from_samples(continuous_log(G.samples(n) * unit_nodes(n) ** (-kappa)))
        tail = gamma.tail_defect()
        if tail <= tol.tail or n >= tol.grid_cap:
            break
        logger.debug('Logarithm tail %.3e at %d nodes, refining', tail, n)
        n *= 2
    if tail > tol.tail:
        logger.warning('Logarithm of the kernel is under-resolved at the grid cap (tail %.3e)', tail)

    gamma_plus, gamma_minus = cauchy_split(gamma)
    x_plus = gamma_plus.apply(np.exp)
    x_minus = gamma_minus.apply(lambda v: np.exp(-v))
    g_minus = gamma_minus.apply(np.exp)

    values = G.samples(n)
    rebuilt = unit_nodes(n) ** kappa * x_plus.samples(n) * g_minus.samples(n)
    residual = float(np.abs(values - rebuilt).max())
    if residual > tol.residual * max(1.0, float(np.abs(values).max())):
        raise ResolutionError('scalar factors do not reproduce the kernel', residual=residual, n_samples=n)
    logger.debug('Scalar factorization: kappa=%d, n=%d, residual=%.3e', kappa, n, residual)
    return ScalarFactorization(X_plus=x_plus, X_minus=x_minus, kappa=kappa, gamma_plus=gamma_plus,
                               gamma_minus=gamma_minus, G_minus=g_minus, residual=residual)


@dataclass(frozen=True, eq=False)
class RHSolution:
    """
    Particular solution plus the basis of homogeneous solutions (one pair per
    free polynomial coefficient) and, for negative index, the solvability
    moments that were checked.
    """

    phi_plus: LaurentFunction
    phi_minus: LaurentFunction
    kappa: int
    basis: Tuple[Tuple[LaurentFunction, LaurentFunction], ...]
    moments: np.ndarray
    residual: float

    @property
    def polynomial_dof(self) -> int:
        return len(self.basis)

    def combine(self, coeffs: Sequence[complex]) -> Tuple[LaurentFunction, LaurentFunction]:
        if len(coeffs) != len(self.basis):
            raise InvalidInputError(f'{len(self.basis)} polynomial coefficients expected, got {len(coeffs)}')
        phi_plus, phi_minus = self.phi_plus, self.phi_minus
        for c, (plus, minus) in zip(coeffs, self.basis):
            phi_plus = phi_plus + plus * c
            phi_minus = phi_minus + minus * c
        return phi_plus, phi_minus


def solve_scalar_rh(p: ScalarRHProblem, vanish_at_infinity: bool = False,
                    tol: Optional[Tolerances] = None) -> RHSolution:
    """
    Solve Phi+ = G Phi- + g. With ``vanish_at_infinity`` the minus solution is
    required to vanish at infinity, which removes one free coefficient for
    kappa > 0 and adds one solvability condition for kappa <= 0.
    """
    tol = resolve(tol)
    p.validate(tol)
    fact = factor_scalar(p.G, tol)
    kappa = fact.kappa
    x_plus = fact.X_plus
    x_minus_full = fact.minus_full()

    h = p.g / x_plus
    h_plus, h_minus = cauchy_split(h)

    conditions = max(-kappa if vanish_at_infinity else -kappa - 1, 0)
    moments = np.array([2j * np.pi * h.coefficient(-k) for k in range(1, conditions + 1)])
    if moments.size:
        scale = 2 * np.pi * max(1.0, h.sup_norm())
        if np.abs(moments).max() > tol.residual * scale:
            raise NoSolutionError('solvability conditions fail for negative index', kappa=kappa,
                                  moments=[[m.real, m.imag] for m in moments])
        kept = np.array(h_minus.coeffs)
        kept[h_minus.ks >= -conditions] = 0.0
        h_minus = LaurentFunction(kept, h_minus.k_min, h_minus.n_samples)

    phi_plus = x_plus * h_plus
    phi_minus = -(x_minus_full * h_minus)
    degrees = range(kappa) if vanish_at_infinity else range(kappa + 1)
    basis = tuple((x_plus.shift(j), x_minus_full.shift(j)) for j in degrees)

    n = max(phi_plus.n_samples, phi_minus.n_samples, p.G.n_samples, p.g.n_samples)
    residual = float(np.abs(phi_plus.samples(n) - p.G.samples(n) * phi_minus.samples(n) - p.g.samples(n)).max())
    logger.debug('Scalar RH solve: kappa=%d, dof=%d, residual=%.3e', kappa, len(basis), residual)
    return RHSolution(phi_plus=phi_plus, phi_minus=phi_minus, kappa=kappa, basis=basis, moments=moments,
                      residual=residual)


@dataclass(frozen=True, eq=False)
class StripSolution:
    """Solutions of K Phi+ + Psi- + C = 0 parameterized by the entire function J."""

    phi_plus: LaurentFunction
    psi_minus: LaurentFunction
    basis: Tuple[Tuple[LaurentFunction, LaurentFunction], ...]
    residual: float

    @property
    def j_dof(self) -> int:
        return len(self.basis)

    def combine(self, j_coeffs: Sequence[complex]) -> Tuple[LaurentFunction, LaurentFunction]:
        if len(j_coeffs) != len(self.basis):
            raise InvalidInputError(f'{len(self.basis)} coefficients of J expected, got {len(j_coeffs)}')
        phi_plus, psi_minus = self.phi_plus, self.psi_minus
        for c, (plus, minus) in zip(j_coeffs, self.basis):
            phi_plus = phi_plus + plus * c
            psi_minus = psi_minus + minus * c
        return phi_plus, psi_minus


def solve_wh_strip(K: LaurentFunction, C: LaurentFunction, growth_n: float,
                   tol: Optional[Tolerances] = None) -> StripSolution:
    """
    K = K+ K-, then K+ Phi+ + D+ = -(Psi-/K- + D-) = J with D = C/K-, and J is
    a polynomial of degree floor(growth_n).
    """
    tol = resolve(tol)
    if growth_n < -1:
        raise InvalidInputError('growth order must be >= -1', growth_n=growth_n)
    fact = factor_scalar(K, tol)
    if fact.kappa != 0:
        raise NotCanonicalError('kernel has nonzero index; use solve_scalar_rh instead', kappa=fact.kappa)
    k_plus, k_minus = fact.X_plus, fact.G_minus
    d_plus, d_minus = cauchy_split(C / k_minus)
    inv_k_plus = k_plus.reciprocal(tol)

    phi_plus = -(d_plus * inv_k_plus)
    psi_minus = -(k_minus * d_minus)
    basis = tuple((inv_k_plus.shift(j), -k_minus.shift(j)) for j in range(int(np.floor(growth_n)) + 1))

    n = max(K.n_samples, C.n_samples, phi_plus.n_samples)
    kernel = K.samples(n)
    residual = float(np.abs(kernel * phi_plus.samples(n) + psi_minus.samples(n) + C.samples(n)).max())
    for plus, minus in basis:
        residual = max(residual, float(np.abs(kernel * plus.samples(n) + minus.samples(n)).max()))
    if residual > tol.residual * max(1.0, K.sup_norm(n)):
        logger.warning('Strip solution residual %.3e exceeds tolerance', residual)
    return StripSolution(phi_plus=phi_plus, psi_minus=psi_minus, basis=basis, residual=residual)


@dataclass(frozen=True, eq=False)
class PairedSolution:
    x: LaurentFunction
    basis: Tuple[LaurentFunction, ...]
    kappa: int
    moments: np.ndarray
    residual_plus: float
    residual_minus: float

    @property
    def residual(self) -> float:
        return max(self.residual_plus, self.residual_minus)


def _projected_residuals(A: LaurentFunction, B: LaurentFunction, x: LaurentFunction,
                         C: LaurentFunction, D: LaurentFunction) -> Tuple[float, float]:
    first = (A * x - C).plus()
    second = (B * x - D).minus()
    return first.sup_norm(), second.sup_norm()


def solve_paired(A: LaurentFunction, B: LaurentFunction, C: LaurentFunction, D: LaurentFunction,
                 tol: Optional[Tolerances] = None) -> PairedSolution:
    """
    Find X with A X = C + U- and B X = D + V+ for unknown one-sided U-, V+,
    i.e. the plus part of A X - C and the minus part of B X - D vanish.
    Eliminating X gives V+ = (B/A) U- + (B/A) C - D.
    """
    tol = resolve(tol)
    R = B / A
    T = R * C - D
    solution = solve_scalar_rh(ScalarRHProblem(R, T), vanish_at_infinity=True, tol=tol)
    x = (C + solution.phi_minus) / A
    basis = tuple(minus / A for _, minus in solution.basis)
    residual_plus, residual_minus = _projected_residuals(A, B, x, C, D)
    logger.debug('Paired solve: kappa=%d, residuals %.3e / %.3e', solution.kappa, residual_plus, residual_minus)
    return PairedSolution(x=x, basis=basis, kappa=solution.kappa, moments=solution.moments,
                          residual_plus=residual_plus, residual_minus=residual_minus)


def solve_dual(K1: LaurentFunction, K2: LaurentFunction, g: LaurentFunction,
               tol: Optional[Tolerances] = None) -> PairedSolution:
    """
    Dual equations on the two half-lines: the plus part of (1 + K1) F - g and
    the minus part of (1 + K2) F - g vanish.
    """
    g_plus, g_minus = cauchy_split(g)
    return solve_paired(1.0 + K1, 1.0 + K2, g_plus, g_minus, tol)


@dataclass(frozen=True, eq=False)
class TransposeSolution:
    x_plus: LaurentFunction
    x_minus: LaurentFunction
    basis: Tuple[Tuple[LaurentFunction, LaurentFunction], ...]
    kappa: int
    residual: float


def solve_paired_transpose(A: LaurentFunction, B: LaurentFunction, C: LaurentFunction,
                           tol: Optional[Tolerances] = None) -> TransposeSolution:
    """Find one-sided X+ and X- (vanishing at infinity) with A X+ + B X- = C."""
    tol = resolve(tol)
    solution = solve_scalar_rh(ScalarRHProblem(-(B / A), C / A), vanish_at_infinity=True, tol=tol)
    x_plus, x_minus = solution.phi_plus, solution.phi_minus
    n = max(A.n_samples, B.n_samples, C.n_samples, x_plus.n_samples)
    residual = float(np.abs(A.samples(n) * x_plus.samples(n) + B.samples(n) * x_minus.samples(n)
                            - C.samples(n)).max())
    return TransposeSolution(x_plus=x_plus, x_minus=x_minus, basis=solution.basis, kappa=solution.kappa,
                             residual=residual)


def factor_scalar_matrix(G: MatrixFunction, tol: Optional[Tolerances] = None) -> Factorization:
    """1x1 matrix input, as produced by the JSON codec."""
    if G.shape != (1, 1):
        raise InvalidInputError('scalar factorization needs a 1x1 kernel', shape=list(G.shape))
    entry = G.entry(0, 0)
    return factor_scalar(entry, tol).as_factorization(entry)
