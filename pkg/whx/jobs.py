"""
Batch jobs behind the management commands: read the inputs, dispatch to the
numerical modules, write the JSON result, the text summary and the CSV
diagnostics.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from django.template.loader import render_to_string

from whx import codec
from whx.approx_wh import (
    DEFAULT_JMAX,
    DEFAULT_MAX_ITER,
    ExponentialSystem,
    asymptotic_factor,
    iterative_exponential_solve,
    rational_fit_factor,
)
from whx.choices import CommandChoices, ExitCode, MethodChoices
from whx.classification import ClassReport, Descriptor, classify, khrapkov_decomposition, triangular_form
from whx.commutative_wh import JonesKernel, KhrapkovKernel, factor_funcomm, factor_jones, factor_khrapkov
from whx.conf import Tolerances, get_tolerances
from whx.contour_core import Factorization, MatrixFunction, assess, check_grid, scalar_matrix
from whx.discrete_wh import (
    DecayCertificate,
    DiscreteWHProblem,
    solve_discrete_dual,
    solve_discrete_transpose_dual,
    solve_discrete_wh,
    toeplitz_truncated_solve,
)
from whx.exceptions import InvalidInputError, NotInClassError, NumericalError, WhxError
from whx.rational_wh import RationalMatrixFunction, factor_rational
from whx.scalar_rh import factor_scalar_matrix, solve_dual
from whx.stability_tools import IndexTuple, index_sum_check, is_stable, perturbation_experiment
from whx.triangular_wh import reduce_triangular_n

logger = logging.getLogger(__name__)

COMMAND_METHODS = {
    CommandChoices.FACTOR_SCALAR: [MethodChoices.AUTO],
    CommandChoices.FACTOR_MATRIX: list(MethodChoices.values),
}
FILE_OPTIONS = ('kernel', 'rhs', 'system', 'matrix', 'factorization')
FACTORIZING_COMMANDS = (CommandChoices.FACTOR_SCALAR, CommandChoices.FACTOR_MATRIX, CommandChoices.VERIFY)


@dataclass
class JobConfig:
    command: str
    method: str = MethodChoices.AUTO
    tolerances: Tolerances = field(default_factory=get_tolerances)
    input: Optional[Path] = None
    output: Optional[Path] = None
    summary: Optional[Path] = None
    diagnostics: Optional[Path] = None
    decay: Optional[Path] = None
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_options(cls, command: str, options: Dict[str, Any]) -> 'JobConfig':
        """Build a job from parsed command-line options."""
        grid = options.get('grid')
        if grid is not None:
            check_grid(grid)
        tolerances = get_tolerances(residual=options.get('tol'), grid=grid)

        def path(key):
            value = options.get(key)
            return Path(value) if value else None

        extra = {k: v for k, v in options.items()
                 if k not in ('input', 'output', 'summary', 'diagnostics', 'decay', 'method', 'tol')
                 and v is not None}
        return cls(command=command, method=options.get('method') or MethodChoices.AUTO, tolerances=tolerances,
                   input=path('input'), output=path('output'), summary=path('summary'),
                   diagnostics=path('diagnostics'), decay=path('decay'), options=extra)

    @property
    def grid(self) -> Optional[int]:
        return self.options.get('grid')

    def input_path(self, key: str = 'input') -> Path:
        value = self.input if key == 'input' else self.options.get(key)
        if value is None and key != 'input':
            value = self.input
        if value is None:
            raise InvalidInputError(f'--{key} is required for {self.command}')
        return Path(value)

    def validate(self) -> None:
        if self.command not in CommandChoices.values:
            raise InvalidInputError(f'unknown command {self.command!r}')
        allowed = COMMAND_METHODS.get(self.command, [MethodChoices.AUTO])
        if self.method not in allowed:
            raise InvalidInputError(f'method {self.method!r} is not valid for {self.command}',
                                    allowed=[str(m) for m in allowed])
        for value in [self.input] + [self.options.get(k) for k in FILE_OPTIONS]:
            if value is not None and not Path(value).is_file():
                raise InvalidInputError(f'cannot read {value}', path=str(value))
        for value in (self.output, self.summary, self.diagnostics, self.decay):
            if value is not None and not Path(value).resolve().parent.is_dir():
                raise InvalidInputError(f'cannot write {value}: directory does not exist', path=str(value))
        if (self.diagnostics or self.decay) and self.command not in FACTORIZING_COMMANDS:
            raise InvalidInputError(f'{self.command} does not produce a factorization to diagnose')


@dataclass
class JobResult:
    document: Dict[str, Any]
    context: Dict[str, Any]
    factorization: Optional[Factorization] = None
    G: Optional[MatrixFunction] = None
    exit_code: int = ExitCode.SUCCESS


@dataclass
class JobOutcome:
    exit_code: int
    document: Dict[str, Any]
    text: str
    summary: str
    written: List[Path] = field(default_factory=list)


# Kernel input

@dataclass
class KernelInput:
    matrix: MatrixFunction
    rational: Optional[RationalMatrixFunction] = None
    descriptor: Descriptor = None

    @property
    def source(self) -> Union[MatrixFunction, RationalMatrixFunction]:
        return self.rational if self.rational is not None else self.matrix


def load_kernel(obj: Any, grid: Optional[int], tol: Tolerances) -> KernelInput:
    """A matrix kernel in any of the accepted encodings."""
    if not isinstance(obj, dict):
        raise InvalidInputError('kernel document must be a JSON object')
    kind = obj.get('class')
    if kind == 'khrapkov':
        kernel = codec.decode_khrapkov(obj, grid, tol)
        return KernelInput(matrix=kernel.matrix(), descriptor=kernel)
    if kind == 'jones':
        kernel = codec.decode_jones(obj, grid, tol)
        return KernelInput(matrix=kernel.matrix(), descriptor=kernel)
    if kind == 'triangular' or (kind is None and 'zeta' in obj):
        return KernelInput(matrix=codec.decode_triangular(obj, grid, tol))
    if kind is not None:
        raise InvalidInputError(f'unknown kernel class {kind!r}')
    if 'rational' in obj:
        rational = codec.decode_rational_matrix(obj)
        return KernelInput(matrix=rational.on_circle(grid, tol), rational=rational)
    if 'rows' in obj:
        return KernelInput(matrix=codec.decode_matrix(obj, grid, tol))
    raise InvalidInputError('unrecognized kernel document', keys=sorted(obj))


# Method dispatch

def factor_triangular(G: MatrixFunction, tol: Tolerances) -> Factorization:
    """Lower-triangular and bordered kernels directly; upper ones through the order-reversing permutation."""
    form, evidence = triangular_form(G, tol)
    if form is None:
        raise NotInClassError('kernel is not triangular', **evidence)
    if form != 'upper':
        return reduce_triangular_n(G, tol)
    order = list(range(G.rows))[::-1]
    flipped = reduce_triangular_n(G.permute_rows(order).permute_columns(order), tol)
    plus = flipped.plus.permute_rows(order).permute_columns(order)
    minus = flipped.minus.permute_rows(order).permute_columns(order)
    indices = flipped.partial_indices[::-1]
    n = max(G.n_samples, flipped.n_samples)
    return assess(G.with_grid(n), plus, minus, indices, method=MethodChoices.TRIANGULAR, n=n,
                  notes=flipped.notes).sorted()


def _khrapkov(kernel: KernelInput, tol: Tolerances) -> Factorization:
    descriptor = kernel.descriptor
    if not isinstance(descriptor, KhrapkovKernel):
        descriptor, evidence = khrapkov_decomposition(kernel.matrix, tol)
        if descriptor is None:
            raise NotInClassError('kernel is not of the form k0 I + k1 J', **evidence)
    return factor_khrapkov(descriptor, tol)


def _jones(kernel: KernelInput, tol: Tolerances) -> Factorization:
    if not isinstance(kernel.descriptor, JonesKernel):
        raise NotInClassError('the Jones method needs a descriptor with E and q')
    return factor_jones(kernel.descriptor, tol)


def _rational(kernel: KernelInput, tol: Tolerances) -> Factorization:
    if kernel.rational is None:
        raise NotInClassError('the rational method needs rational entries')
    return factor_rational(kernel.rational, tol)


EXACT_METHODS: Dict[str, Callable[[KernelInput, Tolerances], Factorization]] = {
    MethodChoices.RATIONAL: _rational,
    MethodChoices.TRIANGULAR: lambda kernel, tol: factor_triangular(kernel.matrix, tol),
    MethodChoices.KHRAPKOV: _khrapkov,
    MethodChoices.FUNCOMM: lambda kernel, tol: factor_funcomm(kernel.matrix, tol),
    MethodChoices.JONES: _jones,
}


def parse_degrees(text: Any) -> Tuple[int, int]:
    try:
        P, Q = (int(part) for part in str(text).split('/'))
    except (ValueError, TypeError):
        raise InvalidInputError(f'degrees must be given as P/Q, got {text!r}')
    return P, Q


def factor_auto(kernel: KernelInput, tol: Tolerances) -> Tuple[Factorization, ClassReport]:
    """First exact class that succeeds, in classification order."""
    report = classify(kernel.source, kernel.descriptor, tol)
    if not report.known:
        raise NotInClassError('no known class applies; use --method asymptotic or rational-fit',
                              classification=report.as_dict())
    failures: List[WhxError] = []
    for method in report.applicable:
        try:
            return EXACT_METHODS[method](kernel, tol), report
        except (NotInClassError, NumericalError) as exc:
            logger.info('Method %s failed on a kernel classified for it: %s', method, exc.message)
            failures.append(exc)
    raise failures[0]


def factor_with_method(kernel: KernelInput, method: str, options: Dict[str, Any],
                       tol: Tolerances) -> Tuple[Factorization, Dict[str, Any]]:
    if method == MethodChoices.AUTO:
        fact, report = factor_auto(kernel, tol)
        return fact, {'classes': report.applicable}
    if method in EXACT_METHODS:
        return EXACT_METHODS[method](kernel, tol), {}
    if method == MethodChoices.ASYMPTOTIC:
        if options.get('eps') is None:
            raise InvalidInputError('--eps is required for the asymptotic method')
        fact, state = asymptotic_factor(kernel.matrix, float(options['eps']),
                                        int(options.get('jmax') or DEFAULT_JMAX), tol)
        return fact, {'steps': state.j, 'defect_history': list(state.delta_norm_history)}
    if options.get('deg') is None:
        raise InvalidInputError('--deg P/Q is required for the rational-fit method')
    P, Q = parse_degrees(options['deg'])
    fact, fit = rational_fit_factor(kernel.matrix, P, Q, options.get('window'), tol)
    return fact, {'fit': {'degrees': list(fit.degrees), 'fit_error': fit.fit_error,
                          'window_error': fit.window_error, 'outside_error': fit.outside_error,
                          'interlaced': fit.interlaced, 'flags': list(fit.flags)}}


# Handlers

def _factorization_document(command: str, fact: Factorization, G: MatrixFunction,
                            tol: Tolerances) -> Dict[str, Any]:
    check = index_sum_check(G, fact, tol)
    return {
        'command': command,
        'method': fact.method,
        'partial_indices': list(fact.partial_indices),
        'stable': is_stable(fact.partial_indices),
        'residual_inf': fact.residual_inf,
        'analyticity_defect': fact.analyticity_defect,
        'index_sum': {'passed': check.passed, 'sum': check.index_sum, 'det_index': check.det_index},
        'factorization': codec.encode_factorization(fact),
    }


def _factor_scalar(job: JobConfig) -> JobResult:
    tol = job.tolerances
    obj = codec.load(job.input_path())
    if isinstance(obj, dict) and 'G' in obj:
        obj = obj['G']
    G = scalar_matrix(codec.decode_laurent(obj, job.grid, tol))
    fact = factor_scalar_matrix(G, tol)
    document = _factorization_document(job.command, fact, G, tol)
    document['kappa'] = fact.partial_indices[0]
    return JobResult(document, {'fact': fact, 'kappa': fact.partial_indices[0]}, fact, G)


def _factor_matrix(job: JobConfig) -> JobResult:
    tol = job.tolerances
    kernel = load_kernel(codec.load(job.input_path()), job.grid, tol)
    fact, extras = factor_with_method(kernel, job.method, job.options, tol)
    G = kernel.matrix
    if kernel.rational is not None and fact.n_samples > G.n_samples:
        G = kernel.rational.on_circle(fact.n_samples, tol)
    document = _factorization_document(job.command, fact, G, tol)
    document['requested_method'] = job.method
    document.update(extras)
    context = {'fact': fact, 'requested_method': job.method, 'extras': extras,
               'index_sum': document['index_sum']}
    return JobResult(document, context, fact, G)


def _solve_discrete(job: JobConfig) -> JobResult:
    tol = job.tolerances
    kernel_doc = codec.load(job.input_path('kernel'))
    a = codec.decode_sequence(kernel_doc)
    c = codec.decode_sequence(codec.load(job.input_path('rhs')))
    decay = None
    if isinstance(kernel_doc, dict) and kernel_doc.get('decay') is not None:
        certificate = kernel_doc['decay']
        decay = DecayCertificate(float(certificate['M']), float(certificate['lam']))
    problem = DiscreteWHProblem(a, c, decay)
    solution = solve_discrete_wh(problem, tol)
    document = {
        'command': job.command,
        'kappa': solution.kappa,
        'dof': solution.dof,
        'residual': solution.residual,
        'x': codec.encode_sequence(solution.x),
        'd': codec.encode_sequence(solution.d),
        'basis': [codec.encode_sequence(x) for x, _ in solution.basis],
    }
    oracle = job.options.get('oracle')
    if oracle:
        truncated = toeplitz_truncated_solve(problem, int(oracle), tol=tol)
        difference = float(np.abs(solution.x.window(0, truncated.N - 1) - truncated.x).max())
        document['oracle'] = {'N': truncated.N, 'max_difference': difference, 'residual': truncated.residual,
                              'tail_estimate': truncated.tail_estimate}
        logger.info('Oracle comparison at N=%d: %.3e', truncated.N, difference)
    return JobResult(document, {'solution': solution, 'oracle': document.get('oracle')})


def _solve_dual(job: JobConfig) -> JobResult:
    tol = job.tolerances
    obj = codec.load(job.input_path())
    if not isinstance(obj, dict):
        raise InvalidInputError('dual problem document must be a JSON object')
    document: Dict[str, Any] = {'command': job.command}
    if 'K1' in obj:
        K1, K2, g = (codec.decode_laurent(obj[key], job.grid, tol) for key in ('K1', 'K2', 'g'))
        solution = solve_dual(K1, K2, g, tol)
        document.update({'form': 'continuous', 'kappa': solution.kappa, 'x': solution.x,
                         'dof': len(solution.basis), 'residual': solution.residual,
                         'residual_plus': solution.residual_plus, 'residual_minus': solution.residual_minus})
    elif obj.get('transpose'):
        a, b, c = (codec.decode_sequence(obj[key]) for key in ('a', 'b', 'c'))
        solution = solve_discrete_transpose_dual(a, b, c, tol)
        document.update({'form': 'discrete-transpose', 'x': codec.encode_sequence(solution.x),
                         'dof': len(solution.basis), 'residual': solution.residual})
    elif 'a' in obj:
        a, b, c, d = (codec.decode_sequence(obj[key]) for key in ('a', 'b', 'c', 'd'))
        solution = solve_discrete_dual(a, b, c, d, tol)
        document.update({'form': 'discrete', 'x': codec.encode_sequence(solution.x), 'dof': len(solution.basis),
                         'residual': solution.residual, 'residual_plus': solution.residual_plus,
                         'residual_minus': solution.residual_minus})
    else:
        raise InvalidInputError('dual problem needs K1, K2, g or sequences a, b, c[, d]')
    return JobResult(document, {'document': document})


def _solve_exponential(job: JobConfig) -> JobResult:
    tol = job.tolerances
    obj = codec.load(job.input_path('system'))
    if not isinstance(obj, dict):
        raise InvalidInputError('system document must be a JSON object')
    missing = [k for k in ('A', 'B', 'C', 'f1', 'f2', 'L') if k not in obj]
    if missing:
        raise InvalidInputError(f'missing key(s): {", ".join(missing)}', missing=missing)
    functions = {k: codec.decode_laurent(obj[k], job.grid, tol) for k in ('A', 'B', 'C', 'f1', 'f2')}
    n = max(f.n_samples for f in functions.values())
    zero_block = obj.get('zero_block', False)
    if not isinstance(zero_block, bool):
        raise InvalidInputError('zero_block must be true or false', zero_block=zero_block)
    system = ExponentialSystem(**{k: f.with_grid(n) for k, f in functions.items()}, L=float(obj['L']),
                               zero_block=zero_block)
    solution = iterative_exponential_solve(system, max_iter=int(job.options.get('max_iter') or DEFAULT_MAX_ITER),
                                           tolerances=tol)
    document = {
        'command': job.command,
        'iterations': solution.iterations,
        'history': solution.history,
        'residuals': list(solution.residuals),
        'defects': list(solution.defects),
        'phi0_minus': solution.phi0_minus,
        'phiL_minus': solution.phiL_minus.as_dict(),
        'psi0_plus': solution.psi0_plus.as_dict(),
        'psiL_plus': solution.psiL_plus,
    }
    return JobResult(document, {'solution': solution, 'L': system.L})


def _stability(job: JobConfig) -> JobResult:
    indices, eps = job.options.get('indices'), job.options.get('perturb')
    if indices is None and eps is None:
        raise InvalidInputError('stability needs --indices or --perturb')
    document: Dict[str, Any] = {'command': job.command}
    context: Dict[str, Any] = {}
    if indices is not None:
        kappas = IndexTuple.parse(indices)
        document.update({'indices': list(kappas), 'stable': is_stable(kappas), 'spread': kappas.spread})
        context['kappas'] = kappas
    if eps is not None:
        report = perturbation_experiment(float(eps), tol=job.tolerances)
        document['perturbation'] = {
            'eps': report.eps,
            'partial_indices': list(report.partial_indices),
            'unperturbed_indices': list(report.unperturbed_indices),
            'triangular_indices': list(report.triangular_indices),
            'residual': report.residual,
            'blow_up': report.blow_up,
        }
        context['perturbation'] = report
    context['document'] = document
    return JobResult(document, context)


def _verify(job: JobConfig) -> JobResult:
    tol = job.tolerances
    kernel = load_kernel(codec.load(job.input_path('matrix')), job.grid, tol)
    given = codec.decode_factorization(codec.load(job.input_path('factorization')), None, tol)
    n = max(kernel.matrix.n_samples, given.n_samples)
    G = kernel.matrix.with_grid(n) if kernel.rational is None else kernel.rational.on_circle(n, tol)
    fact = assess(G, given.plus, given.minus, given.partial_indices, side=given.side, method=given.method, n=n)
    check = index_sum_check(G, fact, tol)
    document = {
        'command': job.command,
        'passed': check.passed,
        'partial_indices': list(fact.partial_indices),
        'index_sum': check.index_sum,
        'det_index': check.det_index,
        'residual_inf': check.residual,
        'stable': is_stable(fact.partial_indices),
    }
    exit_code = ExitCode.SUCCESS if check.passed else ExitCode.NUMERICAL_FAILURE
    return JobResult(document, {'check': check, 'fact': fact}, fact, G, exit_code)


def _classify(job: JobConfig) -> JobResult:
    kernel = load_kernel(codec.load(job.input_path()), job.grid, job.tolerances)
    report = classify(kernel.source, kernel.descriptor, job.tolerances)
    document = {'command': job.command, **report.as_dict()}
    return JobResult(document, {'report': report})


HANDLERS: Dict[str, Callable[[JobConfig], JobResult]] = {
    CommandChoices.FACTOR_SCALAR: _factor_scalar,
    CommandChoices.FACTOR_MATRIX: _factor_matrix,
    CommandChoices.SOLVE_DISCRETE: _solve_discrete,
    CommandChoices.SOLVE_DUAL: _solve_dual,
    CommandChoices.SOLVE_EXPONENTIAL: _solve_exponential,
    CommandChoices.STABILITY: _stability,
    CommandChoices.VERIFY: _verify,
    CommandChoices.CLASSIFY: _classify,
}


def _write(path: Path, text: str) -> None:
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(text)


def run(job: JobConfig) -> JobOutcome:
    """
    Execute one job and write its artifacts. Errors propagate as WhxError
    subclasses; a failed verification is reported through the exit code.
    """
    job.validate()
    logger.info('Running %s (method %s)', job.command, job.method)
    result = HANDLERS[job.command](job)
    text = codec.dumps(result.document)
    template = 'whx/{}.txt'.format(str(job.command).replace('-', '_'))
    summary = render_to_string(template, {'document': result.document, 'job': job, **result.context})
    written: List[Path] = []
    if job.output:
        _write(job.output, text)
        written.append(job.output)
    if job.summary:
        _write(job.summary, summary)
        written.append(job.summary)
    if job.diagnostics and result.factorization is not None:
        codec.write_csv(job.diagnostics, codec.DIAGNOSTICS_HEADER,
                        codec.diagnostics_rows(result.factorization, result.G))
        written.append(job.diagnostics)
    if job.decay and result.factorization is not None:
        codec.write_csv(job.decay, codec.DECAY_HEADER, codec.decay_rows(result.factorization))
        written.append(job.decay)
    return JobOutcome(exit_code=int(result.exit_code), document=result.document, text=text, summary=summary,
                      written=written)
