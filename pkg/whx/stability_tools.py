"""
Partial-index diagnostics: index sums, stability of index tuples,
equivalence of two factorizations of one matrix and the perturbation
example showing that unstable indices do not survive small changes.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from whx.choices import FactorSide
from whx.conf import Tolerances, resolve
from whx.contour_core import (
    Factorization,
    LaurentFunction,
    MatrixFunction,
    assess,
    index_carrier,
    winding_report,
)
from whx.exceptions import ConditioningError, InvalidInputError
from whx.triangular_wh import Triangular2x2, chebotarev_2x2

logger = logging.getLogger(__name__)

MIN_PERTURBATION = 1e-12
CONSTANT_THRESHOLD = 1e-8
EQUIVALENCE_RESIDUAL = 1e-7


@dataclass(frozen=True)
class IndexTuple:
    kappas: Tuple[int, ...]

    def __post_init__(self):
        if not self.kappas:
            raise InvalidInputError('index tuple must not be empty')
        object.__setattr__(self, 'kappas', tuple(sorted((int(k) for k in self.kappas), reverse=True)))

    @classmethod
    def parse(cls, text: str) -> 'IndexTuple':
        try:
            return cls(tuple(int(part) for part in text.split(',') if part.strip()))
        except ValueError:
            raise InvalidInputError(f'cannot read partial indices from {text!r}')

    @property
    def spread(self) -> int:
        return self.kappas[0] - self.kappas[-1]

    def __iter__(self):
        return iter(self.kappas)

    def __len__(self):
        return len(self.kappas)


def is_stable(k: Union[IndexTuple, Sequence[int]]) -> bool:
    k = k if isinstance(k, IndexTuple) else IndexTuple(tuple(k))
    return k.spread <= 1


@dataclass(frozen=True)
class IndexSumReport:
    passed: bool
    index_sum: int
    det_index: int
    residual: float


def index_sum_check(G: MatrixFunction, f: Factorization, tol: Optional[Tolerances] = None) -> IndexSumReport:
    """Sum of the partial indices against the winding of det G, plus the reconstruction residual."""
    tol = resolve(tol)
    n = max(G.n_samples, f.n_samples)
    det_index = winding_report(G.det(), tol).index
    residual = float(np.abs(G.samples(n) - f.reassemble(n)).max())
    index_sum = sum(f.partial_indices)
    passed = index_sum == det_index and residual <= 10 * tol.residual * max(1.0, G.sup_norm())
    if not passed:
        logger.info('Index-sum check failed: sum %d, ind det %d, residual %.3e', index_sum, det_index, residual)
    return IndexSumReport(passed=passed, index_sum=index_sum, det_index=det_index, residual=residual)


@dataclass(frozen=True, eq=False)
class EquivalenceWitness:
    """
    H = (G1+)^-1 G2+. ``kind`` is constant, polynomial (2x2 with unequal
    indices, H = [[c1, P], [0, c2]]), unverified, or mismatch.
    """

    kind: str
    equivalent: bool
    defect: float
    H: Optional[np.ndarray] = None
    c1: Optional[complex] = None
    c2: Optional[complex] = None
    P: Optional[np.ndarray] = None
    reason: str = ''


def _as_left(f: Factorization) -> Factorization:
    """A right factorization of G read as the left factorization of G^T."""
    if f.side == FactorSide.LEFT:
        return f.sorted()
    return Factorization(plus=f.plus.transpose(), minus=f.minus.transpose(), partial_indices=f.partial_indices,
                         residual_inf=f.residual_inf, side=FactorSide.LEFT, method=f.method).sorted()


def equivalence_check(f1: Factorization, f2: Factorization) -> EquivalenceWitness:
    if f1.side != f2.side:
        raise InvalidInputError('factorizations of different sides cannot be compared')
    for f in (f1, f2):
        if f.residual_inf >= EQUIVALENCE_RESIDUAL:
            raise InvalidInputError('factorization residual is too large for an equivalence check',
                                    residual=f.residual_inf)
    f1, f2 = _as_left(f1), _as_left(f2)
    if f1.partial_indices != f2.partial_indices:
        return EquivalenceWitness(kind='mismatch', equivalent=False, defect=float('inf'),
                                  reason=f'partial indices differ: {f1.partial_indices} vs {f2.partial_indices}')
    n = max(f1.n_samples, f2.n_samples)
    H = np.linalg.solve(f1.plus.samples(n), f2.plus.samples(n))
    indices = f1.partial_indices
    scale = max(float(np.abs(H).mean()), 1e-300)

    if len(set(indices)) == 1:
        defect = float(H.std(axis=0).max())
        constant = H.mean(axis=0)
        equivalent = defect < CONSTANT_THRESHOLD * scale
        return EquivalenceWitness(kind='constant' if equivalent else 'mismatch', equivalent=equivalent,
                                  defect=defect, H=constant,
                                  reason='' if equivalent else 'H varies along the contour')

    if len(indices) != 2:
        logger.info('Equivalence structure for unequal indices %s is not checked beyond size 2', indices)
        return EquivalenceWitness(kind='unverified', equivalent=False, defect=float('nan'), H=None,
                                  reason='unverified structure')

    spread = indices[0] - indices[1]
    lower = float(np.abs(H[:, 1, 0]).max())
    d1, d2 = H[:, 0, 0], H[:, 1, 1]
    upper = LaurentFunction.from_samples(H[:, 0, 1])
    outside = (upper.ks < 0) | (upper.ks > spread)
    polynomial_defect = float(np.abs(upper.coeffs[outside]).max()) if outside.any() else 0.0
    defect = max(lower, float(d1.std()), float(d2.std()), polynomial_defect)
    equivalent = defect < CONSTANT_THRESHOLD * scale
    P = np.array([upper.coefficient(k) for k in range(spread + 1)])
    return EquivalenceWitness(kind='polynomial' if equivalent else 'mismatch', equivalent=equivalent,
                              defect=defect, H=None, c1=complex(d1.mean()), c2=complex(d2.mean()), P=P,
                              reason='' if equivalent else 'H is not upper triangular with polynomial corner')


def transform_factorization(f: Factorization, H: Union[np.ndarray, MatrixFunction]) -> Factorization:
    """The factorization (G+ H, L^-1 H^-1 L G-) of the same matrix (left side)."""
    if f.side != FactorSide.LEFT:
        raise InvalidInputError('only left factorizations can be transformed')
    n = f.n_samples
    H = H.samples(n) if isinstance(H, MatrixFunction) else np.broadcast_to(np.asarray(H, dtype=complex),
                                                                         (n,) + f.plus.shape)
    carrier = index_carrier(f.partial_indices, n)
    inverse_carrier = index_carrier([-k for k in f.partial_indices], n)
    plus = MatrixFunction.from_samples(f.plus.samples(n) @ H)
    minus = MatrixFunction.from_samples(inverse_carrier @ np.linalg.inv(H) @ carrier @ f.minus.samples(n))
    return Factorization(plus=plus, minus=minus, partial_indices=f.partial_indices, residual_inf=f.residual_inf,
                         side=f.side, method=f.method)


@dataclass(frozen=True, eq=False)
class PerturbationReport:
    eps: float
    matrix: MatrixFunction
    factorization: Factorization
    partial_indices: Tuple[int, ...]
    unperturbed_indices: Tuple[int, ...]
    residual: float
    blow_up: float
    triangular_indices: Tuple[int, ...] = field(default_factory=tuple)


def perturbation_experiment(eps: float, n_samples: int = 256,
                            tol: Optional[Tolerances] = None) -> PerturbationReport:
    """
    diag(t, 1/t) has indices (1, -1). Adding eps in the lower corner gives
    [[t, 0], [eps, 1/t]] = [[1, t], [0, eps]] . [[0, -1/eps], [1, 1/(eps t)]]
    with indices (0, 0) and factors of size 1/eps.
    """
    tol = resolve(tol)
    if abs(eps) < MIN_PERTURBATION:
        raise ConditioningError('perturbation is below the conditioning guard', eps=eps,
                                minimum=MIN_PERTURBATION)
    t = LaurentFunction.monomial(1, 1.0, n_samples)
    t_inv = LaurentFunction.monomial(-1, 1.0, n_samples)
    G = MatrixFunction.from_rows([[t, 0.0], [eps, t_inv]], n_samples)
    plus = MatrixFunction.from_rows([[1.0, t], [0.0, eps]], n_samples)
    minus = MatrixFunction.from_rows([[0.0, -1.0 / eps], [1.0, t_inv * (1.0 / eps)]], n_samples)
    fact = assess(G, plus, minus, (0, 0), method='explicit')
    blow_up = max(plus.sup_norm(), minus.sup_norm())
    _, computed = chebotarev_2x2(Triangular2x2(t, t_inv, LaurentFunction.constant(eps, n_samples)), tol)
    logger.debug('Perturbation eps=%g: residual %.3e, factor size %.3e', eps, fact.residual_inf, blow_up)
    return PerturbationReport(eps=eps, matrix=G, factorization=fact, partial_indices=fact.partial_indices,
                              unperturbed_indices=(1, -1), residual=fact.residual_inf, blow_up=blow_up,
                              triangular_indices=computed.partial_indices)


@dataclass(frozen=True)
class ShubinReport:
    deltas: Tuple[float, ...]
    changes: Tuple[float, ...]
    indices: Tuple[Tuple[int, ...], ...]
    monotone: bool
    stable: bool


def shubin_check(G: MatrixFunction, perturbation: MatrixFunction,
                 factorizer: Callable[[MatrixFunction], Factorization],
                 deltas: Sequence[float] = (1e-3, 1e-4)) -> ShubinReport:
    """
    Factor G + delta E for each delta and measure how far the factors move
    from those of G. For stable indices the change should shrink with delta.
    """
    base = factorizer(G)
    n = base.n_samples
    changes, indices = [], []
    for delta in deltas:
        perturbed = factorizer(G + perturbation * delta)
        m = max(n, perturbed.n_samples)
        change = max(float(np.abs(perturbed.plus.samples(m) - base.plus.samples(m)).max()),
                     float(np.abs(perturbed.minus.samples(m) - base.minus.samples(m)).max()))
        changes.append(change)
        indices.append(perturbed.partial_indices)
    order = np.argsort(deltas)[::-1]
    ordered = [changes[i] for i in order]
    monotone = all(a >= b for a, b in zip(ordered, ordered[1:]))
    return ShubinReport(deltas=tuple(deltas), changes=tuple(changes), indices=tuple(indices),
                        monotone=monotone, stable=is_stable(base.partial_indices))
