"""
Verification batteries.

Each suite runs a list of checks on the reference surfaces and returns a
``SuiteResult``; a check records what was measured, the tolerance it was
held to and whether it passed. ``run_suites('all')`` runs every suite.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from srmvariation import settings
from srmvariation.bubble import (bubble_closed_forms, bubble_perimeter,
                                 bubble_stability, bubble_volume,
                                 fourier_inequality_check, fourier_series,
                                 random_admissible_coefficients)
from srmvariation.catalog import (chart_samples, first_variation_cases,
                                  paraboloid, rototranslation_graph,
                                  rototranslation_plane,
                                  second_variation_cases, vertical_plane)
from srmvariation.charset import (bracket_generation_step,
                                  characteristic_report, sharp_example)
from srmvariation.exceptions import PreconditionError, SRMError
from srmvariation.geometry import (curvature_data, div_nu, div_sigma_nu,
                                   perimeter)
from srmvariation.models import Heisenberg, Rototranslation
from srmvariation.surfaces import bubble, characteristic_scan, surface_frame
from srmvariation.variation import (assemble_chart_form, first_variation,
                                    first_variation_fd_oracle,
                                    heisenberg_potential, minkowski_check,
                                    relative_change,
                                    rototranslation_level_set_potential,
                                    rototranslation_potential,
                                    second_variation,
                                    second_variation_fd_oracle,
                                    second_variation_potential,
                                    stability_spectrum)


logger = logging.getLogger(__name__)


@dataclass
class Check(object):
    name: str
    value: float
    tolerance: float
    passed: bool
    comparison: str = '<='
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'name': self.name,
            'value': self.value,
            'tolerance': self.tolerance,
            'comparison': self.comparison,
            'passed': self.passed,
            'detail': self.detail,
        }


@dataclass
class SuiteResult(object):
    suite: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def to_dict(self):
        return {
            'suite': self.suite,
            'passed': self.passed,
            'checks': [check.to_dict() for check in self.checks],
        }


def at_most(name, value, tolerance, **detail):
    value = float(value)
    return Check(name=name, value=value, tolerance=float(tolerance),
                 passed=bool(np.isfinite(value) and value <= tolerance),
                 comparison='<=', detail=detail)


def at_least(name, value, tolerance, **detail):
    value = float(value)
    return Check(name=name, value=value, tolerance=float(tolerance),
                 passed=bool(np.isfinite(value) and value >= tolerance),
                 comparison='>=', detail=detail)


def _relative(value, reference, floor=1e-300):
    return abs(value - reference) / max(abs(reference), floor)


SUITES = {}


def suite(name):
    def register(func):
        SUITES[name] = func
        return func
    return register


# Bubble

def _closed_form_errors(L, radii):
    m = Heisenberg(2)
    s = bubble(L, 2)
    worst = {'H': 0.0, 'trace_II0_sq': 0.0, 'a': 0.0, 'N0_norm': 0.0,
             'eigenvalues': 0.0}
    for r in radii:
        expected = bubble_closed_forms(L, r)
        p = np.array([r, 0.0, 0.0, 0.0, expected.phi])
        frame = surface_frame(m, s, p)
        data = curvature_data(m, s, p, frame)
        worst['H'] = max(worst['H'], _relative(data.H, expected.H))
        worst['trace_II0_sq'] = max(worst['trace_II0_sq'], _relative(
            data.trace_II0_sq, expected.trace_II0_sq))
        worst['a'] = max(worst['a'], _relative(abs(frame.a[0]), expected.a))
        worst['N0_norm'] = max(worst['N0_norm'], _relative(
            frame.N0_norm, expected.N0_norm))
        worst['eigenvalues'] = max(worst['eigenvalues'], max(
            abs(z - w) / abs(w) for z, w in zip(data.eigenvalues,
                                                expected.eigenvalues)))
    return worst


@suite('bubble')
def bubble_suite(L=1.0, resolution=None, threads=None, order=32, **options):
    checks = []
    for radius in (0.5, 1.0, 2.0):
        radii = radius * np.linspace(0.02, 0.98, 50)
        for key, error in sorted(_closed_form_errors(radius, radii).items()):
            checks.append(at_most('closed form %s (L=%g)' % (key, radius),
                                  error, 1e-6))

    m = Heisenberg(2)
    s = bubble(L, 2)
    points, _ = s.rule(m, order)
    values = []
    for p in points:
        try:
            values.append(div_nu(m, s, p, surface_frame(m, s, p,
                                                        check=False)))
        except SRMError:
            continue
    checks.append(at_most('mean curvature spread', max(values) - min(values),
                          1e-8, H=float(np.mean(values)), nodes=len(values)))

    P0 = perimeter(m, s, order).value
    checks.append(at_most('perimeter against 3 pi^3 L^5 / 8',
                          _relative(P0, bubble_perimeter(L)), 1e-8,
                          computed=P0, analytic=bubble_perimeter(L)))

    report = bubble_stability(L, resolution=resolution, threads=threads)
    lowest = min(mode.min_eigenvalue for mode in report.modes)
    checks.append(at_least('smallest constrained eigenvalue', lowest,
                           -settings.STABILITY_TOLERANCE / L ** 2,
                           verdict=report.verdict))
    checks.append(at_least('mode (0,0) correlation with cos(theta)',
                           report.correlation, 0.99))
    # modes are reported in units of 1/L^2
    change = max(relative_change(mode.change * L ** 2,
                                 mode.min_eigenvalue * L ** 2)
                 for mode in report.modes)
    checks.append(at_most('relative eigenvalue change between resolutions',
                          change, settings.EIGENVALUE_CONVERGENCE,
                          resolution=report.resolution))
    constraint = max(mode.constraint_residual for mode in report.modes
                     if mode.constraint_residual is not None)
    checks.append(at_most('volume constraint residual', constraint, 1e-10))
    return checks


# Minkowski formula

@suite('minkowski')
def minkowski_suite(L=1.0, order=32, **options):
    checks = []
    m = Heisenberg(2)
    report = minkowski_check(m, bubble(L, 2), order)
    checks.append(at_most('bubble (Q-1) P0 = Q H Vol', abs(
        (report.Q - 1) * report.P0 - report.Q * report.H * report.volume) /
        ((report.Q - 1) * report.P0), 1e-6, H=report.H, P0=report.P0,
        volume=report.volume))
    checks.append(at_most('bubble divergence and slab volumes',
                          report.volume_residual / report.volume, 1e-6,
                          slab=report.slab_volume))
    checks.append(at_most('bubble volume against 5 pi^3 L^6 / 64',
                          _relative(report.volume, bubble_volume(L)), 1e-8))

    larger = minkowski_check(m, bubble(2 * L, 2), order)
    checks.append(at_most('perimeter scales by 2^5',
                          _relative(larger.P0 / report.P0, 32.0), 1e-8))
    checks.append(at_most('volume scales by 2^6',
                          _relative(larger.volume / report.volume, 64.0),
                          1e-8))

    patch = minkowski_check(Heisenberg(1), vertical_plane(offset=1.0),
                            order=16)
    checks.append(at_most('plane patch with boundary',
                          patch.relative_residual, 1e-6,
                          P0=patch.P0, boundary=patch.boundary))
    return checks


# First variation

def _first_variation_error(case, order):
    formula = first_variation(case.m, case.s, case.v, order).value
    oracle = first_variation_fd_oracle(case.m, case.s, case.v, 2 * order)
    # a minimal surface has a vanishing first variation
    floor = 1e-3 if case.minimal else 1e-12
    return formula, oracle, abs(formula - oracle) / max(abs(formula), floor)


@suite('first-variation')
def first_variation_suite(**options):
    checks = []
    for case in first_variation_cases():
        formula, oracle, coarse = _first_variation_error(case, case.order)
        _, _, fine = _first_variation_error(case, case.order + 2)
        checks.append(at_most('%s against the oracle' % case.name, coarse,
                              1e-3, formula=formula, oracle=oracle,
                              order=case.order))
        checks.append(at_most('%s refined' % case.name, fine, 1e-3,
                              order=case.order + 2,
                              decreasing=bool(fine <= coarse or
                                              coarse < 1e-8)))
    return checks


@suite('geometry')
def geometry_suite(count=50, **options):
    checks = []
    surfaces = [('heisenberg-graph', Heisenberg(1), paraboloid(1)),
                ('vertical-plane', Heisenberg(1), vertical_plane()),
                ('heisenberg2-graph', Heisenberg(2), paraboloid(2)),
                ('rototranslation-graph', Rototranslation(),
                 rototranslation_graph())]
    divergence = correction = 0.0
    for seed, (name, m, s) in enumerate(surfaces):
        for p in chart_samples(s, count, seed=seed):
            frame = surface_frame(m, s, p)
            divergence = max(divergence, abs(div_nu(m, s, p, frame) -
                                             div_sigma_nu(m, s, p, frame)))
            correction = max(correction, abs(m.div_correction(p, frame.nu)))
    checks.append(at_most('div nu against div_S nu', divergence, 1e-6,
                          points=count * len(surfaces)))
    checks.append(at_most('rigidity correction on builtins', correction,
                          1e-10))
    return checks


@suite('second-variation')
def second_variation_suite(count=50, **options):
    checks = []
    worst = 0.0
    for seed, n in enumerate((1, 2)):
        m, s = Heisenberg(n), paraboloid(n)
        for p in chart_samples(s, count, seed=seed):
            frame = surface_frame(m, s, p)
            V, _ = second_variation_potential(m, s, p, frame)
            worst = max(worst, abs(V - heisenberg_potential(m, s, p, frame)))
    checks.append(at_most('general potential against the H^n form', worst,
                          1e-8, points=2 * count))

    m = Rototranslation()
    worst = level = 0.0
    for seed, s in enumerate((rototranslation_plane(),
                              rototranslation_graph())):
        for p in chart_samples(s, count, seed=seed):
            frame = surface_frame(m, s, p)
            V, parts = second_variation_potential(m, s, p, frame)
            reduced = rototranslation_potential(m, s, p, frame)
            worst = max(worst, abs(V + parts['H'] ** 2 - reduced))
            if seed == 0:
                level = max(level, abs(reduced - (
                    rototranslation_level_set_potential(m, s.phi, p))))
    checks.append(at_most('general potential against the rototranslation '
                          'form', worst, 1e-8, points=2 * count))
    checks.append(at_most('rototranslation level set form', level, 1e-6,
                          points=count))

    for case in second_variation_cases():
        for order, tolerance in ((case.order // 2, 1e-2),
                                 (case.order, 1e-3)):
            formula = second_variation(case.m, case.s, case.v, order).value
            oracle = second_variation_fd_oracle(case.m, case.s, case.v,
                                                2 * order)
            checks.append(at_most(
                '%s second variation (order %d)' % (case.name, order),
                _relative(formula, oracle), tolerance, formula=formula,
                oracle=oracle))

    m, s = Heisenberg(1), vertical_plane()
    form = assemble_chart_form(m, s, 4)
    checks.append(at_most('discrete form symmetry', form.asymmetry, 1e-10))
    report = stability_spectrum(m, s, modes=4)
    checks.append(at_least('vertical plane minimal eigenvalue',
                           report.modes[0].min_eigenvalue, 0.0,
                           verdict=report.verdict))
    return checks


# Fourier inequality

@suite('fourier')
def fourier_suite(samples=200, K=8, seed=0, **options):
    checks = []
    rng = np.random.default_rng(seed)
    gaps, agreement, held = [], 0.0, 0
    for _ in range(samples):
        a, b = random_admissible_coefficients(K, rng)
        g, dg = fourier_series(a, b)
        check = fourier_inequality_check(g, K=K, derivative=dg)
        gaps.append(check.gap)
        agreement = max(agreement, abs(check.gap - check.gap_quadrature))
        held += int(check.holds)
    checks.append(at_least('smallest admissible gap', min(gaps), -1e-9,
                           held=held, samples=samples))
    checks.append(at_most('coefficient and quadrature gaps', agreement,
                          1e-8))
    equality = fourier_inequality_check(
        lambda theta: np.cos(theta) * np.sin(theta), K=K,
        derivative=lambda theta: np.cos(2 * theta))
    checks.append(at_most('equality case h = cos(theta)', abs(equality.gap),
                          1e-10))
    # without g(0) = 0 the inequality fails
    endpoint = fourier_inequality_check(([1.0, 1.0], [0.0, 0.0]))
    checks.append(at_most('series violating g(0) = 0', endpoint.gap, 0.0,
                          admissible=endpoint.admissible))
    return checks


# Characteristic sets

@suite('charset')
def charset_suite(L=1.0, **options):
    checks = []
    m = Heisenberg(2)
    scan = characteristic_scan(m, bubble(L, 2), resolution=16)
    checks.append(at_most('bubble characteristic components',
                          abs(scan.components - 2), 0,
                          components=scan.components))
    checks.append(at_most('bubble dimension estimate', scan.dimension, 0.3,
                          counts=scan.counts))

    m, s = sharp_example(4, 2)
    scan = characteristic_scan(m, s, resolution=8, refinements=2)
    checks.append(at_most('sharp example dimension estimate',
                          abs(scan.dimension - 2.0), 0.2,
                          estimate=scan.dimension, counts=scan.counts))
    step = bracket_generation_step(m.horizontal, np.zeros(4))
    checks.append(at_most('sharp example generation step', abs(step - 3), 0,
                          step=step))

    m = Heisenberg(2)
    s = paraboloid(2, domain=[(-0.5, 0.5)] * 4)
    report = characteristic_report(m, s, resolution=4, refinements=1)
    ranks = [rank for rank in report.ranks if rank is not None]
    if not ranks:
        raise PreconditionError('no characteristic point found on the '
                                'H^2 paraboloid')
    checks.append(at_least('H^2 paraboloid skew Hessian rank', min(ranks), 2,
                           points=len(report.points)))
    return checks


ORDER = ['bubble', 'minkowski', 'first-variation', 'geometry',
         'second-variation', 'fourier', 'charset']


def run_suite(name, **options):
    """
    Run one suite. A check that raises is recorded as failed.
    """
    try:
        func = SUITES[name]
    except KeyError:
        raise PreconditionError('unknown suite %r, expected one of %s' %
                                (name, ', '.join(ORDER + ['all'])))
    result = SuiteResult(suite=name)
    try:
        result.checks = func(**options)
    except SRMError as exc:
        logger.error('suite %s stopped: %s', name, exc)
        result.checks.append(Check(name='%s raised' % name, value=np.nan,
                                   tolerance=0.0, passed=False,
                                   detail={'error': str(exc)}))
    for check in result.checks:
        logger.info('%s: %s %s %.3g %s %.3g', name, check.name,
                    'ok' if check.passed else 'FAILED', check.value,
                    check.comparison, check.tolerance)
    return result


def run_suites(name, **options):
    names = ORDER if name == 'all' else [name]
    return [run_suite(item, **options) for item in names]


__all__ = ['Check', 'SuiteResult', 'SUITES', 'ORDER', 'run_suite',
           'run_suites']
