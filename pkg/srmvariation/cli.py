"""
Command line front end.

Reports go to standard output (or ``--json PATH``) as ``srm-report-v1``
envelopes; a short summary goes to standard error. Exit codes: ``0`` stable
or passed, ``1`` parse errors, failed checks and other errors, ``2``
inconclusive, ``3`` unstable, ``4`` not constant mean curvature.
"""
import argparse
import logging
import logging.config
import sys
import time

import numpy as np

from srmvariation import settings
from srmvariation.exceptions import (CharacteristicPoint, NotCMC,
                                     NotOnSurface, ParseError, SRMError)
from srmvariation.reports import ReportEnvelope, digest_input, write_csv


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INCONCLUSIVE = 2
EXIT_UNSTABLE = 3
EXIT_NOT_CMC = 4

VERDICT_CODES = {
    'stable': EXIT_OK,
    'inconclusive': EXIT_INCONCLUSIVE,
    'unstable': EXIT_UNSTABLE,
}


def _summary(message, *args):
    sys.stderr.write((message % args if args else message) + '\n')


def _load(args):
    """
    ``(m, s, inputs)`` from ``--manifold``/``--surface``, or the bubble of
    radius ``--L`` in ``H^2`` when no surface is given.
    """
    from srmvariation.loaders import load_manifold, load_surface
    from srmvariation.models import Heisenberg
    from srmvariation.surfaces import bubble

    inputs = {}
    if args.manifold is not None:
        m = load_manifold(args.manifold)
        inputs['manifold'] = digest_input(args.manifold)
    else:
        m = Heisenberg(2)
    if args.surface is not None:
        s = load_surface(args.surface, m)
        inputs['surface'] = digest_input(args.surface)
    elif args.L is not None:
        s = bubble(args.L, getattr(m, 'n', 2))
    else:
        raise ParseError('give --surface or --L')
    return m, s, inputs


def _variation(args, m, inputs):
    from srmvariation.loaders import load_variation

    if args.rho is None:
        raise ParseError('give --rho')
    inputs['variation'] = digest_input(args.rho)
    return load_variation(args.rho, m)


def _parameters(args):
    return {key: value for key, value in sorted(vars(args).items())
            if key not in ('func', 'started')}


def _emit(args, results, inputs, code=EXIT_OK):
    envelope = ReportEnvelope(
        command=args.command, parameters=_parameters(args), results=results,
        inputs=inputs,
        timing=(time.perf_counter() - args.started) if args.timing else None)
    text = envelope.to_json()
    if args.json is not None:
        with open(args.json, 'w', encoding='utf-8') as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return code


def _not_cmc(args, exc, inputs):
    _summary('%s: surface is not CMC (max |div nu - c| = %.3g)',
             args.command, exc.spread if exc.spread is not None else np.nan)
    return _emit(args, {'error': 'not-cmc', 'spread': exc.spread,
                        'message': str(exc)}, inputs, EXIT_NOT_CMC)


# Commands

def _curvature_command(args):
    from srmvariation.geometry import curvature_data
    from srmvariation.loaders import load_points
    from srmvariation.surfaces import normal_data, surface_frame

    m, s, inputs = _load(args)
    if args.points is not None:
        points = load_points(args.points, m, s)
        inputs['points'] = digest_input(args.points)
    elif s.chart is not None:
        points = [s.chart.point(s.chart.center())]
    else:
        raise ParseError('give --points')

    entries, rejected = [], []
    for index, p in enumerate(points):
        try:
            frame = surface_frame(m, s, p)
        except NotOnSurface as exc:
            rejected.append({'index': index, 'point': p, 'reason': str(exc)})
            continue
        except CharacteristicPoint as exc:
            entries.append({'index': index, 'point': p,
                            'characteristic': True,
                            'N0_norm': exc.frame.N0_norm})
            continue
        data = curvature_data(m, s, p, frame)
        entry = {'index': index, 'point': p, 'characteristic': False,
                 'N0_norm': normal_data(m, s, p)[1], 'a': frame.a}
        entry.update(data.to_dict())
        entries.append(entry)
        _summary('point %d: H = %.12g, |N0| = %.6g', index, data.H,
                 entry['N0_norm'])

    if args.dump_csv:
        write_csv(args.dump_csv, ['index', 'N0_norm', 'H', 'div_nu'],
                  [(e['index'], e['N0_norm'], e.get('H', np.nan),
                    e.get('div_nu', np.nan)) for e in entries])
    code = EXIT_FAILURE if rejected else EXIT_OK
    return _emit(args, {'points': entries, 'rejected': rejected}, inputs,
                 code)


def _perimeter_command(args):
    from srmvariation.geometry import perimeter, riemannian_area

    m, s, inputs = _load(args)
    P0 = perimeter(m, s, args.order)
    area = riemannian_area(m, s, args.order)
    _summary('P0 = %.15g (error %.3g)', P0.value, P0.error)
    if args.dump_csv and s.rotational:
        thetas = np.linspace(0.0, np.pi, 201)
        write_csv(args.dump_csv, ['theta', 'perimeter_density'],
                  [(theta, s.sphere * s.perimeter_density(theta))
                   for theta in thetas])
    return _emit(args, {'perimeter': P0, 'area': area}, inputs)


def _first_variation_command(args):
    from srmvariation.variation import (first_variation,
                                        first_variation_fd_oracle)

    m, s, inputs = _load(args)
    v = _variation(args, m, inputs)
    result = first_variation(m, s, v, args.order, args.tol)
    results = {'first_variation': result}
    if args.oracle:
        results['oracle'] = first_variation_fd_oracle(m, s, v, args.order)
    _summary('first variation %.12g', result.value)
    return _emit(args, results, inputs)


def _second_variation_command(args):
    from srmvariation.variation import (second_variation,
                                        second_variation_fd_oracle)

    m, s, inputs = _load(args)
    v = _variation(args, m, inputs)
    try:
        result = second_variation(m, s, v, args.order)
    except NotCMC as exc:
        return _not_cmc(args, exc, inputs)
    results = {'second_variation': result}
    if args.oracle:
        results['oracle'] = second_variation_fd_oracle(m, s, v, args.order)
    _summary('second variation %.12g (%s)', result.value, result.case)
    return _emit(args, results, inputs)


def _mode_rows(report):
    rows = []
    for mode in report.modes:
        label = ('%d,%d' % mode.mode if isinstance(mode.mode, tuple)
                 else mode.mode)
        rows.extend((label, index, value)
                    for index, value in enumerate(mode.eigenvalues))
    return rows


def _stability_command(args):
    from srmvariation.variation import stability_spectrum

    m, s, inputs = _load(args)
    if s.rotational:
        options = {'resolution': args.resolution, 'cutoff': args.modes,
                   'threads': args.threads}
    else:
        options = {'modes': args.modes or 4, 'order': args.order}
    try:
        report = stability_spectrum(m, s, tolerance=args.tol, **options)
    except NotCMC as exc:
        return _not_cmc(args, exc, inputs)
    if args.dump_csv:
        write_csv(args.dump_csv, ['mode', 'index', 'eigenvalue'],
                  _mode_rows(report))
    _summary('stability: %s (smallest eigenvalue %.6g)', report.verdict,
             min(mode.min_eigenvalue for mode in report.modes))
    return _emit(args, {'stability': report}, inputs,
                 VERDICT_CODES[report.verdict])


def _minkowski_command(args):
    from srmvariation.variation import minkowski_check

    m, s, inputs = _load(args)
    try:
        report = minkowski_check(m, s, args.order)
    except NotCMC as exc:
        return _not_cmc(args, exc, inputs)
    tolerance = 1e-6 if args.tol is None else args.tol
    passed = report.relative_residual < tolerance
    _summary('Minkowski residual %.3g (relative %.3g): %s', report.residual,
             report.relative_residual, 'ok' if passed else 'FAILED')
    return _emit(args, {'minkowski': report, 'passed': passed}, inputs,
                 EXIT_OK if passed else EXIT_FAILURE)


def _bubble_report_command(args):
    from srmvariation.bubble import bubble_report

    L = 1.0 if args.L is None else args.L
    report = bubble_report(L, modes=args.modes, resolution=args.resolution,
                           order=args.order, threads=args.threads)
    if args.dump_csv:
        write_csv(args.dump_csv, ['theta', 'h'],
                  report.stability.null_vector_rows())
    _summary('bubble L=%g: P0 %.12g (analytic %.12g), %s', L,
             report.perimeter['computed']['value'],
             report.perimeter['analytic'], report.stability.verdict)
    return _emit(args, {'bubble': report}, {},
                 VERDICT_CODES[report.stability.verdict])


def _charset_command(args):
    from srmvariation.charset import characteristic_report

    m, s, inputs = _load(args)
    report = characteristic_report(m, s, resolution=args.resolution or 8,
                                   refinements=args.refinements)
    if args.dump_csv:
        write_csv(args.dump_csv, ['resolution', 'cells'],
                  list(zip(report.scan['resolutions'],
                           report.scan['counts'])))
    _summary('%d characteristic cells in %d components, dimension '
             'estimate %s', report.scan['cells'], report.scan['components'],
             report.scan['dimension_estimate'])
    code = EXIT_FAILURE if report.failures else EXIT_OK
    return _emit(args, {'charset': report}, inputs, code)


def _verify_command(args):
    from srmvariation.verify import run_suites

    options = {}
    if args.L is not None:
        options['L'] = args.L
    if args.resolution is not None:
        options['resolution'] = args.resolution
    if args.threads is not None:
        options['threads'] = args.threads
    results = run_suites(args.suite, **options)
    for result in results:
        for check in result.checks:
            _summary('[%s] %s: %s', result.suite, check.name,
                     'ok' if check.passed else 'FAILED')
    passed = all(result.passed for result in results)
    return _emit(args, {'suites': results, 'passed': passed}, {},
                 EXIT_OK if passed else EXIT_FAILURE)


# Parser

def _add_common_args(parser):
    parser.add_argument('--manifold', default=None,
                        help='srm-v1 manifold definition (path or JSON)')
    parser.add_argument('--surface', default=None,
                        help='srm-v1 surface definition (path or JSON)')
    parser.add_argument('--L', type=float, default=None,
                        help='bubble radius, used when no surface is given')
    parser.add_argument('--order', type=int, default=None,
                        help='Gauss-Legendre nodes per direction')
    parser.add_argument('--tol', type=float, default=None,
                        help='tolerance of the command')
    _add_output_args(parser)


def _add_output_args(parser):
    parser.add_argument('--json', default=None,
                        help='write the report here instead of stdout')
    parser.add_argument('--dump-csv', dest='dump_csv', default=None,
                        help='write plot data as CSV')
    parser.add_argument('--timing', action='store_true',
                        help='record wall clock time in the report')


def _add_spectral_args(parser):
    parser.add_argument('--modes', type=int, default=None,
                        help='mode cutoff (surfaces of revolution) or sine '
                             'functions per direction')
    parser.add_argument('--resolution', type=int, default=None,
                        help='elements per radial problem or scan cells')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker cap (defaults to SRM_THREADS)')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='srmvariation',
        description='Variations of the horizontal perimeter in '
                    'sub-Riemannian manifolds.')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log more (repeat for debug output)')
    subparsers = parser.add_subparsers(dest='command', required=True)

    sub = subparsers.add_parser('curvature', help='II0, H and divergences '
                                                  'at points')
    _add_common_args(sub)
    sub.add_argument('--points', default=None,
                     help='points as a JSON list or srm-v1 points file')
    sub.set_defaults(func=_curvature_command)

    sub = subparsers.add_parser('perimeter', help='horizontal perimeter')
    _add_common_args(sub)
    sub.set_defaults(func=_perimeter_command)

    for name, func, text in (
            ('first-variation', _first_variation_command,
             'first variation along --rho'),
            ('second-variation', _second_variation_command,
             'second variation along --rho')):
        sub = subparsers.add_parser(name, help=text)
        _add_common_args(sub)
        sub.add_argument('--rho', default=None,
                         help='variation: expression in x1 .. xn or srm-v1 '
                              'variation definition')
        sub.add_argument('--oracle', action='store_true',
                         help='also run the finite difference oracle')
        sub.set_defaults(func=func)

    sub = subparsers.add_parser('stability', help='second variation '
                                                  'spectrum')
    _add_common_args(sub)
    _add_spectral_args(sub)
    sub.set_defaults(func=_stability_command)

    sub = subparsers.add_parser('minkowski-check',
                                help='Minkowski formula residual')
    _add_common_args(sub)
    sub.set_defaults(func=_minkowski_command)

    sub = subparsers.add_parser('bubble-report',
                                help='closed forms and checks of the bubble')
    sub.add_argument('--L', type=float, default=None, help='bubble radius')
    sub.add_argument('--order', type=int, default=None)
    _add_spectral_args(sub)
    _add_output_args(sub)
    sub.set_defaults(func=_bubble_report_command)

    sub = subparsers.add_parser('charset', help='characteristic set scan')
    _add_common_args(sub)
    sub.add_argument('--resolution', type=int, default=None,
                     help='cells per direction at the coarsest level')
    sub.add_argument('--refinements', type=int, default=2)
    sub.set_defaults(func=_charset_command)

    sub = subparsers.add_parser('verify', help='run verification batteries')
    sub.add_argument('suite', help='bubble, minkowski, first-variation, '
                                   'geometry, second-variation, fourier, '
                                   'charset or all')
    sub.add_argument('--L', type=float, default=None)
    _add_spectral_args(sub)
    _add_output_args(sub)
    sub.set_defaults(func=_verify_command)
    return parser


def configure_logging(verbosity=0):
    config = dict(settings.LOGGING)
    logging.config.dictConfig(config)
    if verbosity:
        logging.getLogger('srmvariation').setLevel(
            logging.INFO if verbosity == 1 else logging.DEBUG)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    args.started = time.perf_counter()
    try:
        return int(args.func(args))
    except ParseError as exc:
        _summary('parse error: %s', exc)
        return EXIT_FAILURE
    except NotCMC as exc:
        _summary('not CMC: %s', exc)
        return EXIT_NOT_CMC
    except SRMError as exc:
        logger.debug('command failed', exc_info=True)
        _summary('%s: %s', exc.__class__.__name__, exc)
        return EXIT_FAILURE


if __name__ == '__main__':
    raise SystemExit(main())
