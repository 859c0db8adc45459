"""
Best-effort membership tests for the kernel classes that have a
constructive factorization. A negative answer only means none of the
implemented tests matched.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from whx.choices import MethodChoices
from whx.commutative_wh import JonesKernel, KhrapkovKernel, is_functionally_commutative
from whx.conf import Tolerances, resolve
from whx.contour_core import LaurentFunction, MatrixFunction
from whx.exceptions import InvalidInputError, WhxError
from whx.rational_wh import PolynomialMatrix, RationalMatrixFunction

logger = logging.getLogger(__name__)

POLYNOMIAL_THRESHOLD = 1e-9
KHRAPKOV_REFERENCES = ((0, 1), (1, 0), (0, 0))

Descriptor = Union[KhrapkovKernel, JonesKernel, None]


@dataclass(frozen=True)
class ClassEvidence:
    method: str
    applicable: bool
    evidence: Dict[str, Any]


@dataclass(frozen=True)
class ClassReport:
    results: Tuple[ClassEvidence, ...]

    @property
    def applicable(self) -> List[str]:
        return [r.method for r in self.results if r.applicable]

    @property
    def best(self) -> Optional[str]:
        methods = self.applicable
        return methods[0] if methods else None

    @property
    def known(self) -> bool:
        return bool(self.applicable)

    def evidence_for(self, method: str) -> Dict[str, Any]:
        for r in self.results:
            if r.method == method:
                return r.evidence
        return {}

    def as_dict(self) -> Dict[str, Any]:
        return {
            'classes': self.applicable,
            'conclusion': 'known class' if self.known else 'no known class',
            'complete': False,
            'tests': [{'method': r.method, 'applicable': r.applicable, 'evidence': r.evidence}
                      for r in self.results],
        }


def triangular_form(G: MatrixFunction, tol: Optional[Tolerances] = None) -> Tuple[Optional[str], Dict[str, float]]:
    """
    'lower', 'upper', 'diagonal', 'bordered' or None, from the sup norms of the
    off-diagonal parts. Bordered kernels [[A, 0], [b, c]] only need the last
    column to vanish above the corner.
    """
    tol = resolve(tol)
    S = G.samples()
    size = G.rows
    upper_mask = np.triu(np.ones((size, size), dtype=bool), 1)
    upper = float(np.abs(S[:, upper_mask]).max()) if upper_mask.any() else 0.0
    lower = float(np.abs(S[:, upper_mask.T]).max()) if upper_mask.any() else 0.0
    threshold = tol.residual * max(1.0, float(np.abs(S).max()))
    evidence = {'upper_sup': upper, 'lower_sup': lower, 'threshold': threshold}
    if upper < threshold and lower < threshold:
        return 'diagonal', evidence
    if upper < threshold:
        return 'lower', evidence
    if lower < threshold:
        return 'upper', evidence
    if size > 2:
        border = float(np.abs(S[:, :-1, -1]).max())
        evidence['border_sup'] = border
        if border < threshold:
            return 'bordered', evidence
    return None, evidence


def _linear_coefficients(samples: np.ndarray) -> Optional[np.ndarray]:
    """Coefficients (c0, c1) if the samples come from c0 + c1 t, else None."""
    f = LaurentFunction.from_samples(samples)
    scale = max(1.0, float(np.abs(f.coeffs).max()))
    outside = (f.ks < 0) | (f.ks > 1)
    if outside.any() and np.abs(f.coeffs[outside]).max() > POLYNOMIAL_THRESHOLD * scale:
        return None
    return np.array([f.coefficient(0), f.coefficient(1)])


def khrapkov_decomposition(G: MatrixFunction,
                           tol: Optional[Tolerances] = None) -> Tuple[Optional[KhrapkovKernel], Dict[str, Any]]:
    """
    Try K = k0 I + k1 J with k0 = tr K / 2. The traceless part is divided by
    each nonvanishing reference entry in turn; the quotient is accepted as J
    when its entries are polynomials of degree <= 1 in t.
    """
    tol = resolve(tol)
    if G.shape != (2, 2):
        return None, {'reason': 'not 2x2'}
    S = G.samples()
    k0 = 0.5 * (S[:, 0, 0] + S[:, 1, 1])
    B = S - k0[:, None, None] * np.eye(2)
    scale = max(1.0, float(np.abs(S).max()))
    tried = []
    for i, j in KHRAPKOV_REFERENCES:
        reference = B[:, i, j]
        smallest = float(np.abs(reference).min())
        if smallest <= tol.singularity * scale:
            tried.append({'reference': [i, j], 'rejected': 'vanishes on the contour'})
            continue
        ratio = B / reference[:, None, None]
        entries = [[_linear_coefficients(ratio[:, r, c]) for c in range(2)] for r in range(2)]
        if any(e is None for row in entries for e in row):
            tried.append({'reference': [i, j], 'rejected': 'quotient is not linear in t'})
            continue
        J = PolynomialMatrix.from_entries(entries)
        delta2 = npoly.polyadd(npoly.polymul(entries[0][0], entries[0][0]),
                               npoly.polymul(entries[0][1], entries[1][0]))
        kernel = KhrapkovKernel(LaurentFunction.from_samples(k0), LaurentFunction.from_samples(reference), J, delta2)
        try:
            kernel.validate()
        except WhxError as exc:
            tried.append({'reference': [i, j], 'rejected': exc.message})
            continue
        evidence = {'reference': [i, j], 'k0': kernel.k0.trimmed(1e-13), 'k1': kernel.k1.trimmed(1e-13),
                    'J': J.trimmed().coeffs, 'delta2': kernel.delta2}
        return kernel, evidence
    return None, {'attempts': tried}


def _rational_test(G) -> ClassEvidence:
    if isinstance(G, RationalMatrixFunction):
        return ClassEvidence(MethodChoices.RATIONAL, True, {'form': 'rational entries'})
    return ClassEvidence(MethodChoices.RATIONAL, False, {'form': 'sampled entries'})


def _khrapkov_descriptor_test(descriptor: KhrapkovKernel) -> ClassEvidence:
    try:
        descriptor.validate()
    except WhxError as exc:
        return ClassEvidence(MethodChoices.KHRAPKOV, False, {'source': 'descriptor', 'reason': exc.message,
                                                             **exc.details})
    return ClassEvidence(MethodChoices.KHRAPKOV, True, {'k0': descriptor.k0.trimmed(1e-13),
                                                        'k1': descriptor.k1.trimmed(1e-13),
                                                        'source': 'descriptor'})


def _jones_test(descriptor: Descriptor) -> ClassEvidence:
    if not isinstance(descriptor, JonesKernel):
        return ClassEvidence(MethodChoices.JONES, False, {'reason': 'needs a descriptor with E and q'})
    try:
        descriptor.validate()
    except WhxError as exc:
        return ClassEvidence(MethodChoices.JONES, False, {'reason': exc.message, **exc.details})
    return ClassEvidence(MethodChoices.JONES, True, {'size': descriptor.size, 'q': descriptor.q,
                                                     'power_check': 'E^n = q^n I', 'traces': 'vanish'})


def classify(G: Union[MatrixFunction, RationalMatrixFunction], descriptor: Descriptor = None,
             tol: Optional[Tolerances] = None) -> ClassReport:
    tol = resolve(tol)
    if G.rows != G.cols:
        raise InvalidInputError('classification needs a square kernel', shape=[G.rows, G.cols])
    results = [_rational_test(G)]

    try:
        matrix = G.on_circle(tol=tol) if isinstance(G, RationalMatrixFunction) else G
    except WhxError as exc:
        logger.info('Kernel cannot be sampled on the contour: %s', exc.message)
        failed = {'reason': 'cannot sample on the contour', 'error': exc.kind}
        results.extend(ClassEvidence(m, False, failed) for m in MethodChoices.exact()[1:])
        return ClassReport(tuple(results))

    form, evidence = triangular_form(matrix, tol)
    results.append(ClassEvidence(MethodChoices.TRIANGULAR, form is not None, {'form': form, **evidence}))

    if isinstance(descriptor, KhrapkovKernel):
        results.append(_khrapkov_descriptor_test(descriptor))
    else:
        kernel, evidence = khrapkov_decomposition(matrix, tol)
        results.append(ClassEvidence(MethodChoices.KHRAPKOV, kernel is not None, evidence))

    report = is_functionally_commutative(matrix)
    witness = None
    if report.witness is not None:
        witness = {'t': report.witness[0], 's': report.witness[1], 'commutator': report.witness[2]}
    results.append(ClassEvidence(MethodChoices.FUNCOMM, report.commutative,
                                 {'pairs_checked': report.pairs_checked, 'witness': witness}))

    results.append(_jones_test(descriptor))
    classes = [r.method for r in results if r.applicable]
    logger.debug('Classification: %s', ', '.join(classes) or 'no known class')
    return ClassReport(tuple(results))
