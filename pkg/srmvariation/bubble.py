"""
Closed forms and stability of the bubble set in ``H^2``.

The bubble of radius ``L`` is the double graph ``t = +-phi(r)``. All radial
integrals are written in the angle ``theta`` with ``r = L sin(theta)``, and
radial functions are carried as ``h = rho0 sin(theta)``, which stays bounded
at the poles. In these units the second variation of a bidegree ``(p, q)``
block is ``L^3/2`` times

    int (h' sin - h cos)^2 + (q - p)^2 h^2 sin^2 + 2 (c - 1) h^2 dtheta

with ``c = p(q+1) + q(p+1)``, against the mass ``L^5/2 int h^2 sin^2``.
The volume constraint only touches the ``(0, 0)`` block:
``int h sin^3 = 0``.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import null_space

from srmvariation import settings
from srmvariation.exceptions import ConvergenceError, PreconditionError
from srmvariation.fields import CBRT_EPS
from srmvariation.quadrature import gauss_legendre
from srmvariation.surfaces import bubble_profile
from srmvariation.variation import (ModeResult, StabilityReport,
                                    constrained_spectrum,
                                    eigenvalue_converged, verdict)


logger = logging.getLogger(__name__)

# Homogeneous dimension of H^2.
Q = 6


@dataclass
class BubbleSpec(object):
    """
    One sheet ``t = sheet * phi(r)`` of the bubble of radius ``L``.
    """
    L: float
    sheet: int = 1
    Q: int = Q

    def __post_init__(self):
        self.L = float(self.L)
        if not self.L > 0:
            raise PreconditionError('bubble radius must be positive, got %r'
                                    % self.L)
        if self.sheet not in (1, -1):
            raise PreconditionError('sheet must be +1 or -1, got %r'
                                    % self.sheet)

    def phi(self, r):
        return self.sheet * bubble_profile(self.L)[0](r)

    def dphi(self, r):
        return self.sheet * bubble_profile(self.L)[1](r)


@dataclass
class ClosedForms(object):
    L: float
    r: float
    phi: float
    W: float
    pbar: List[float]
    qbar: List[float]
    II0: np.ndarray
    eigenvalues: np.ndarray
    H: float
    trace_II0_sq: float
    a: float
    Jnu_a: float
    N0_norm: float
    lam: float

    def to_dict(self):
        return {
            'L': self.L, 'r': self.r, 'phi': self.phi, 'W': self.W,
            'pbar': list(self.pbar), 'qbar': list(self.qbar),
            'II0': self.II0.tolist(),
            'eigenvalues': [[float(z.real), float(z.imag)]
                            for z in self.eigenvalues],
            'H': self.H, 'trace_II0_sq': self.trace_II0_sq, 'a': self.a,
            'Jnu_a': self.Jnu_a, 'N0_norm': self.N0_norm,
            'lambda': self.lam,
        }


def bubble_closed_forms(L, r):
    """
    Every closed form of the upper sheet at ``(x1, x2, y1, y2) = (r, 0, 0, 0)``.

    ``II0`` is written in the frame ``(J nu, e, J e)``. ``lam`` is the
    perimeter density ``Lambda`` per ``dr`` per unit measure of ``S^3``.
    """
    spec = BubbleSpec(L)
    L = spec.L
    r = float(r)
    if not 0 < r < L:
        raise PreconditionError('radius %r is outside (0, %r)' % (r, L))
    s = np.sqrt(L * L - r * r)
    k = s / (L * r)
    II0 = np.array([[2 / L, 0.0, 0.0],
                    [0.0, 1 / L, -k],
                    [0.0, k, 1 / L]])
    eigenvalues = np.array([2 / L, complex(1 / L, k), complex(1 / L, -k)],
                           dtype=complex)
    return ClosedForms(
        L=L, r=r, phi=float(spec.phi(r)), W=L * r / (2 * s),
        pbar=[r / L, 0.0], qbar=[s / L, 0.0], II0=II0,
        eigenvalues=eigenvalues, H=4 / L,
        trace_II0_sq=6 / L ** 2 - 2 * (L * L - r * r) / (L * L * r * r),
        a=2 * s / (L * r), Jnu_a=-2 / r ** 2,
        N0_norm=L * r / np.sqrt(4 * L * L - 4 * r * r + L * L * r * r),
        lam=L * r ** 4 / (2 * s))


def bubble_perimeter(L):
    """
    ``P0 = 3 pi^3 L^5 / 8``.
    """
    return 3 * np.pi ** 3 * float(L) ** 5 / 8


def bubble_volume(L):
    """
    ``Vol = 5 pi^3 L^6 / 64``, from ``(Q-1) P0 = Q H Vol``.
    """
    return 5 * np.pi ** 3 * float(L) ** 6 / 64


# Reduced radial inequality

def sv_reduced_integrand(L, theta, h, dh, form='h'):
    """
    ``(lhs, rhs)`` densities in ``theta`` of the reduced inequality for the
    ``(0, 0)`` block. ``form`` picks the unknown:

    ``'rho'``: ``rho0``, densities ``2 L^2 rho0'^2 sin^4`` and
    ``4 L^2 rho0^2 sin^2``;
    ``'h'``: ``h = rho0 sin``, densities ``(h' sin - h cos)^2`` and ``2 h^2``;
    ``'fourier'``: ``g = h sin``, densities ``g'^2`` and ``4 g^2``.

    The three agree after integration over ``(0, pi)``, up to the factor
    ``2 L^2`` of the first.
    """
    theta = np.asarray(theta, dtype=float)
    h = np.asarray(h, dtype=float)
    dh = np.asarray(dh, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    if form == 'rho':
        return 2 * L * L * dh ** 2 * s ** 4, 4 * L * L * h ** 2 * s ** 2
    if form == 'h':
        return (dh * s - h * c) ** 2, 2 * h ** 2
    if form == 'fourier':
        return dh ** 2, 4 * h ** 2
    raise ValueError('unknown form %r' % form)


def sv_density(L, theta, rho, drho):
    """
    Integrand of the second variation per ``dtheta``, normalized by
    ``L^3/2``, for a rotationally invariant Riemannian speed ``rho(theta)``.
    ``rho0 = rho / |N0|`` is singular at the poles; the density is not.
    """
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    root = np.sqrt(4 * c * c + L * L * s * s)
    # h = rho0 sin = rho * root / L
    h = rho * root / L
    dh = (drho * root + rho * (L * L - 4) * s * c / root) / L
    lhs, rhs = sv_reduced_integrand(L, theta, h, dh)
    return lhs - rhs


def truncated_sv_integral(L, rho, drho, epsilon, order=64):
    """
    ``int_eps^{pi - eps} sv_density``, split at ``pi/2`` so each half is
    resolved near its pole.
    """
    total = 0.0
    for interval in ((epsilon, np.pi / 2), (np.pi / 2, np.pi - epsilon)):
        thetas, weights = gauss_legendre(order, interval)
        total += weights.dot(sv_density(L, thetas, rho(thetas),
                                        drho(thetas)))
    return float(total)


# Fourier form of the (0, 0) inequality

@dataclass
class FourierCheck(object):
    """
    ``g = a_0/2 + sum a_k cos(2k theta) + b_k sin(2k theta)`` on
    ``(0, pi)``; ``gap = int g'^2 - 4 g^2`` from the coefficients and by
    direct quadrature. ``constraint`` is ``int g sin^2``, ``endpoint`` is
    ``g(0)``; both vanish for admissible ``g``.
    """
    a: np.ndarray
    b: np.ndarray
    lhs: float
    rhs: float
    gap: float
    gap_quadrature: Optional[float]
    constraint: float
    endpoint: float
    admissible: bool
    holds: bool

    def to_dict(self):
        return {
            'a': self.a.tolist(), 'b': self.b.tolist(),
            'lhs': self.lhs, 'rhs': self.rhs, 'gap': self.gap,
            'gap_quadrature': self.gap_quadrature,
            'constraint': self.constraint, 'endpoint': self.endpoint,
            'admissible': self.admissible, 'holds': self.holds,
        }


def fourier_gap(a, b):
    """
    ``(pi/2) (-2 a_0^2 + sum_{k>=1} (4k^2 - 4)(a_k^2 + b_k^2))``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = np.arange(len(a))
    weights = 4.0 * k ** 2 - 4.0
    return float(np.pi / 2 * (-2 * a[0] ** 2 +
                              np.sum((weights * (a ** 2 + b ** 2))[1:])))


def fourier_series(a, b):
    """
    ``(g, g')`` callables of the even frequency series.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = 2.0 * np.arange(1, len(a))

    def g(theta):
        theta = np.asarray(theta, dtype=float)[..., None]
        return (a[0] / 2 + np.sum(a[1:] * np.cos(k * theta) +
                                  b[1:] * np.sin(k * theta), axis=-1))

    def dg(theta):
        theta = np.asarray(theta, dtype=float)[..., None]
        return np.sum(k * (b[1:] * np.cos(k * theta) -
                           a[1:] * np.sin(k * theta)), axis=-1)

    return g, dg


def _central_difference(g, step=None):
    step = CBRT_EPS if step is None else step

    def dg(theta):
        theta = np.asarray(theta, dtype=float)
        return (g(theta + step) - g(theta - step)) / (2 * step)

    return dg


def fourier_inequality_check(g, K=None, derivative=None, order=None,
                             tolerance=None):
    """
    Check ``int g'^2 >= 4 int g^2`` for ``g`` on ``(0, pi)``.

    ``g`` is a callable (its coefficients up to frequency ``2K`` are computed
    by quadrature) or a pair ``(a, b)`` of coefficient sequences. An input
    violating ``int g sin^2 = 0`` or ``g(0) = 0`` is reported as not
    admissible; ``holds`` is only asserted for admissible input.
    """
    tolerance = settings.FOURIER_TOLERANCE if tolerance is None \
        else tolerance
    if callable(g):
        K = 16 if K is None else int(K)
        order = max(128, 8 * K) if order is None else order
        thetas, weights = gauss_legendre(order, (0.0, np.pi))
        values = g(thetas)
        k = 2.0 * np.arange(K + 1)
        a = 2 / np.pi * (np.cos(np.outer(k, thetas)) * values).dot(weights)
        b = 2 / np.pi * (np.sin(np.outer(k, thetas)) * values).dot(weights)
        b[0] = 0.0
        dg = derivative if derivative is not None else _central_difference(g)
        gap_quadrature = float(weights.dot(dg(thetas) ** 2 -
                                           4 * values ** 2))
        constraint = float(weights.dot(values * np.sin(thetas) ** 2))
        endpoint = float(g(np.array(0.0)))
    else:
        a, b = (np.array(x, dtype=float) for x in g)
        if a.shape != b.shape or a.ndim != 1:
            raise PreconditionError('coefficient sequences must have equal '
                                    'length')
        if K is not None:
            a, b = a[:K + 1], b[:K + 1]
        b = b.copy()
        b[0] = 0.0
        gap_quadrature = None
        constraint = float(np.pi / 4 * (a[0] - (a[1] if len(a) > 1 else 0)))
        endpoint = float(a[0] / 2 + np.sum(a[1:]))

    k = np.arange(len(a))
    energy = np.pi * a[0] ** 2 / 4 + np.pi / 2 * np.sum((a ** 2 + b ** 2)[1:])
    lhs = float(np.pi / 2 * np.sum((4.0 * k ** 2 * (a ** 2 + b ** 2))[1:]))
    gap = fourier_gap(a, b)
    admissible = abs(constraint) <= tolerance and abs(endpoint) <= tolerance
    if not admissible:
        logger.info('input not admissible: constraint %.3g, g(0) %.3g',
                    constraint, endpoint)
    return FourierCheck(a=a, b=b, lhs=lhs, rhs=float(4 * energy), gap=gap,
                        gap_quadrature=gap_quadrature, constraint=constraint,
                        endpoint=endpoint, admissible=admissible,
                        holds=bool(admissible and gap >= -tolerance))


def random_admissible_coefficients(K, rng=None):
    """
    Random ``(a, b)`` with ``a_0 = a_1`` and ``a_0/2 + sum a_k = 0``.
    """
    if K < 2:
        raise PreconditionError('admissible series need K >= 2')
    rng = np.random.default_rng(rng)
    constraints = np.zeros((2, K + 1))
    constraints[0, :2] = [1.0, -1.0]
    constraints[1] = 1.0
    constraints[1, 0] = 0.5
    Z = null_space(constraints)
    a = Z.dot(Z.T.dot(rng.standard_normal(K + 1)))
    b = rng.standard_normal(K + 1)
    b[0] = 0.0
    return a, b


# Mode problems

def angular_coefficient(p, q):
    """
    ``2 [p(q+1) + q(p+1)]``, the eigenvalue of ``-(Z Zbar + Zbar Z)`` on
    bidegree ``(p, q)`` harmonics, doubled.
    """
    return 2 * (p * (q + 1) + q * (p + 1))


@dataclass
class ModeProblem(object):
    """
    Piecewise linear discretization of one bidegree block in ``h`` on a
    uniform ``theta`` grid. ``A`` and ``M`` are in normalized units
    (physical eigenvalues are ``lambda / L^2``).
    """
    p: int
    q: int
    coefficient: int
    grid: np.ndarray
    A: np.ndarray
    M: np.ndarray
    constraint: Optional[np.ndarray] = None

    @property
    def asymmetry(self):
        return float(max(np.max(np.abs(self.A - self.A.T)),
                         np.max(np.abs(self.M - self.M.T))))


def _element_rule(grid, points=3):
    y, w = leggauss(points)
    u = (1 + y) / 2
    width = np.diff(grid)
    thetas = grid[:-1, None] + width[:, None] * u
    weights = width[:, None] * w / 2
    # shape values and slopes of the two hats on each element
    shapes = np.stack([1 - u, u])
    slopes = np.stack([-1 / width, 1 / width], axis=1)
    return thetas, weights, shapes, slopes


def mode_problem(p, q, resolution):
    """
    Assemble stiffness, mass and (for the ``(0, 0)`` block) constraint
    vector with three point Gauss rules per element.
    """
    if p < 0 or q < 0:
        raise PreconditionError('bidegree must be nonnegative, got (%d, %d)'
                                % (p, q))
    n = int(resolution)
    if n < 4:
        raise PreconditionError('radial resolution must be at least 4')
    coefficient = angular_coefficient(p, q)
    grid = np.linspace(0.0, np.pi, n + 1)
    thetas, weights, shapes, slopes = _element_rule(grid)
    s, c = np.sin(thetas), np.cos(thetas)
    potential = (q - p) ** 2 * s ** 2 + coefficient - 2

    # operator (h' sin - h cos) applied to each hat: (element, hat, point)
    D = slopes[:, :, None] * s[:, None, :] - shapes[None, :, :] * c[:, None, :]
    N = np.broadcast_to(shapes[None, :, :], D.shape)
    local_A = (np.einsum('eip,ejp,ep->eij', D, D, weights) +
               np.einsum('eip,ejp,ep->eij', N, N, weights * potential))
    local_M = np.einsum('eip,ejp,ep->eij', N, N, weights * s ** 2)

    index = np.arange(n)[:, None] + np.arange(2)[None, :]
    rows = np.broadcast_to(index[:, :, None], local_A.shape)
    cols = np.broadcast_to(index[:, None, :], local_A.shape)
    A = np.zeros((n + 1, n + 1))
    M = np.zeros((n + 1, n + 1))
    np.add.at(A, (rows, cols), local_A)
    np.add.at(M, (rows, cols), local_M)

    constraint = None
    if p == 0 and q == 0:
        constraint = np.zeros(n + 1)
        np.add.at(constraint, index,
                  np.einsum('eip,ep->ei', N, weights * s ** 3))
    return ModeProblem(p=p, q=q, coefficient=coefficient, grid=grid, A=A,
                       M=M, constraint=constraint)


def _solve(problem):
    values, vectors = constrained_spectrum(problem.A, problem.M,
                                           problem.constraint)
    return values, vectors


def _mass_correlation(M, u, v):
    return float(abs(u.dot(M).dot(v)) /
                 np.sqrt(u.dot(M).dot(u) * v.dot(M).dot(v)))


def _block_key(p, q):
    return angular_coefficient(p, q), (q - p) ** 2


def _solve_block(key, resolution):
    coefficient, shift = key
    # any representative with the same coefficients assembles the same form
    p, q = _representative(coefficient, shift)
    coarse = mode_problem(p, q, resolution)
    fine = mode_problem(p, q, 2 * resolution)
    coarse_values, _ = _solve(coarse)
    fine_values, fine_vectors = _solve(fine)
    return coarse, coarse_values, fine, fine_values, fine_vectors


def _representative(coefficient, shift):
    d = int(round(np.sqrt(shift)))
    # c = 2pq + p + q with q = p + d
    for p in range(0, coefficient + 1):
        q = p + d
        if angular_coefficient(p, q) == coefficient:
            return p, q
    raise PreconditionError('no bidegree with coefficient %d and shift %d'
                            % (coefficient, shift))


@dataclass
class BubbleStability(StabilityReport):
    """
    ``StabilityReport`` of the bubble with the ``(0, 0)`` block details:
    ``correlation`` of its minimizer with ``h = cos(theta)`` in the mass
    inner product, the normalized ``spectral_gap`` to the next constrained
    eigenvalue, and the minimizer itself on ``grid``.
    """
    L: float = 1.0
    correlation: Optional[float] = None
    spectral_gap: Optional[float] = None
    grid: List[float] = field(default_factory=list)
    null_vector: List[float] = field(default_factory=list)

    def to_dict(self):
        out = super(BubbleStability, self).to_dict()
        out.update(L=self.L, correlation=self.correlation,
                   spectral_gap=self.spectral_gap)
        return out

    def null_vector_rows(self):
        return list(zip(self.grid, self.null_vector))


def bubble_stability(L, resolution=None, cutoff=None, tolerance=None,
                     threads=None, strict=False):
    """
    Spectra of every bidegree block with ``p + q <= cutoff``, each solved at
    ``resolution`` and ``2 * resolution`` elements. Blocks are independent
    and solved on a thread pool. Eigenvalues are reported in physical units
    ``lambda / L^2``; the verdict compares them against ``tolerance / L^2``.
    With ``strict`` an unconverged block raises ``ConvergenceError``.
    """
    L = BubbleSpec(L).L
    resolution = settings.BUBBLE_RESOLUTION if resolution is None \
        else int(resolution)
    cutoff = settings.BUBBLE_MODE_CUTOFF if cutoff is None else int(cutoff)
    tolerance = settings.STABILITY_TOLERANCE if tolerance is None \
        else tolerance
    threads = settings.THREADS if threads is None else max(1, int(threads))
    if cutoff < 2:
        raise PreconditionError('mode cutoff must be at least 2, got %d'
                                % cutoff)

    modes = [(p, total - p) for total in range(cutoff + 1)
             for p in range(total + 1)]
    keys = sorted(set(_block_key(p, q) for p, q in modes))
    workers = min(threads, len(keys))
    logger.info('solving %d distinct blocks for %d modes on %d threads',
                len(keys), len(modes), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        solved = dict(zip(keys, pool.map(
            lambda key: _solve_block(key, resolution), keys)))

    scale = 1 / L ** 2
    results = []
    for p, q in modes:
        coarse, coarse_values, fine, fine_values, vectors = \
            solved[_block_key(p, q)]
        change = float(abs(fine_values[0] - coarse_values[0]))
        converged = eigenvalue_converged(change, fine_values[0])
        if not converged:
            logger.warning('mode (%d, %d) moved by %.3g between %d and %d '
                           'elements', p, q, change, resolution,
                           2 * resolution)
            if strict:
                raise ConvergenceError('mode (%d, %d) did not converge'
                                       % (p, q), change=change)
        vector = vectors[:, 0]
        residual = None
        if fine.constraint is not None:
            residual = float(abs(fine.constraint.dot(vector)))
        step = max(1, len(vector) // 8)
        results.append(ModeResult(
            mode=(p, q), min_eigenvalue=float(fine_values[0] * scale),
            eigenvalues=[float(x * scale) for x in fine_values[:6]],
            eigenvector_sample=[float(x) for x in vector[::step]],
            constraint_residual=residual, converged=converged,
            change=change * scale))

    notes = []
    bound = all(angular_coefficient(p, q) >= 2 for p, q in modes
                if p + q >= 1)
    notes.append('angular coefficient 2[p(q+1)+q(p+1)] >= 2 for all modes '
                 'with p+q >= 1: %s' % ('yes' if bound else 'no'))
    notes.append('higher bidegrees only raise the angular term while the '
                 'potential stays 2/r^2; cutoff p+q <= %d' % cutoff)
    notes.append('eigenvalues in units of 1/L^2 times the normalized form')

    _, _, zero, values, vectors = solved[_block_key(0, 0)]
    null = vectors[:, 0]
    # the sign of an eigenvector is arbitrary
    if null.dot(zero.M).dot(np.cos(zero.grid)) < 0:
        null = -null
    correlation = _mass_correlation(zero.M, null, np.cos(zero.grid))
    gap = float(values[1] - values[0]) if len(values) > 1 else None
    notes.append('mode (0,0) minimizer correlates %.8f with h = cos(theta)'
                 % correlation)

    report = BubbleStability(
        modes=results, verdict=verdict(results, tolerance * scale),
        resolution=2 * resolution, notes=notes, L=L,
        correlation=correlation, spectral_gap=gap,
        grid=[float(x) for x in zero.grid],
        null_vector=[float(x) for x in null / np.max(np.abs(null))])
    logger.info('bubble L=%g: %s, min eigenvalue %.3g', L, report.verdict,
                min(mode.min_eigenvalue for mode in results))
    return report


@dataclass
class BubbleReport(object):
    L: float
    closed_forms: List[dict]
    perimeter: dict
    volume: dict
    minkowski: dict
    fourier: dict
    stability: BubbleStability

    def to_dict(self):
        return {
            'L': self.L,
            'closed_forms': self.closed_forms,
            'perimeter': self.perimeter,
            'volume': self.volume,
            'minkowski': self.minkowski,
            'stability': self.stability.to_dict(),
            'fourier': self.fourier,
        }


def bubble_report(L, modes=None, resolution=None, order=None, radii=8,
                  fourier_samples=20, seed=0, threads=None):
    """
    Closed forms on a radius table, analytic and computed perimeter and
    volume, the Minkowski residual, the stability report and a Fourier
    check over random admissible series for the bubble of radius ``L``.
    """
    from srmvariation.geometry import perimeter
    from srmvariation.models import Heisenberg
    from srmvariation.surfaces import bubble
    from srmvariation.variation import minkowski_check

    L = BubbleSpec(L).L
    m = Heisenberg(2)
    s = bubble(L, 2)
    table = [bubble_closed_forms(L, r).to_dict()
             for r in L * np.linspace(0.05, 0.95, radii)]
    P0 = perimeter(m, s, order)
    minkowski = minkowski_check(m, s, order)
    stability = bubble_stability(L, resolution=resolution, cutoff=modes,
                                 threads=threads)

    rng = np.random.default_rng(seed)
    checks = [fourier_inequality_check(random_admissible_coefficients(8, rng))
              for _ in range(fourier_samples)]
    equality = fourier_inequality_check(
        lambda theta: np.cos(theta) * np.sin(theta), K=8,
        derivative=lambda theta: np.cos(2 * theta))

    return BubbleReport(
        L=L, closed_forms=table,
        perimeter={'analytic': bubble_perimeter(L), 'computed': P0.to_dict()},
        volume={'analytic': bubble_volume(L), 'computed': minkowski.volume,
                'slab': minkowski.slab_volume},
        minkowski=minkowski.to_dict(),
        fourier={'samples': len(checks),
                 'min_gap': min(c.gap for c in checks) if checks else None,
                 'all_hold': all(c.holds for c in checks),
                 'equality_gap': equality.gap},
        stability=stability)


__all__ = ['BubbleSpec', 'ClosedForms', 'bubble_closed_forms',
           'bubble_perimeter', 'bubble_volume', 'sv_reduced_integrand',
           'sv_density', 'truncated_sv_integral', 'FourierCheck',
           'fourier_gap', 'fourier_series', 'fourier_inequality_check',
           'random_admissible_coefficients', 'angular_coefficient',
           'ModeProblem', 'mode_problem', 'BubbleStability',
           'bubble_stability', 'BubbleReport', 'bubble_report']
