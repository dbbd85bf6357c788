"""
First and second variation of the horizontal perimeter.

Variations are described by their normal speed. ``rho`` is the Riemannian
speed, ``rho0 = rho / |N0|`` the horizontal one. Finite difference oracles
deform a chart of the surface along the straight line
``F_t(xi) = G(xi) + t rho N`` and differentiate ``P0(Sigma_t)``.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import eigh, null_space

from srmvariation import settings
from srmvariation.exceptions import (CharacteristicPoint, NotCMC,
                                     NumericalBreakdown, PreconditionError,
                                     QuadratureError)
from srmvariation.fields import as_point, fd_directional, fd_jacobian
from srmvariation.geometry import (cmc_spread, perimeter, ricci_nu_nu,
                                   second_fundamental_form, upsilon_integral,
                                   enclosed_volume)
from srmvariation.quadrature import check_domain, gauss_legendre, \
    product_rule
from srmvariation.surfaces import (cofactor_normal, flag_cells,
                                   normal_data, normal_jet, surface_frame,
                                   tangent_basis)


logger = logging.getLogger(__name__)


@dataclass
class VariationField(object):
    """
    A variation of a surface through its normal speed.

    Give ``rho`` or ``rho0`` (point functions); the other follows from
    ``rho = |N0| rho0``. ``support`` is ``'away-from-char'`` or
    ``'over-char'``. ``family`` optionally replaces the straight line normal
    flow with an explicit ``(xi, t) -> point`` map on the surface chart.
    """
    rho: Optional[Callable] = None
    rho0: Optional[Callable] = None
    support: str = 'away-from-char'
    family: Optional[Callable] = None
    t_range: tuple = (-1e-3, 1e-3)
    name: str = 'rho'

    def __post_init__(self):
        if self.rho is None and self.rho0 is None:
            raise PreconditionError('a variation needs rho or rho0')
        if self.support not in ('away-from-char', 'over-char'):
            raise PreconditionError('unknown support %r' % self.support)

    def rho_at(self, m, s, p):
        if self.rho is not None:
            return float(self.rho(p))
        return normal_data(m, s, p)[1] * float(self.rho0(p))

    def rho0_at(self, m, s, p):
        if self.rho0 is not None:
            return float(self.rho0(p))
        N0 = normal_data(m, s, p)[1]
        if N0 < settings.CHARACTERISTIC_THRESHOLD:
            raise CharacteristicPoint('rho0 is undefined at %r' % (p,))
        return float(self.rho(p)) / N0


@dataclass
class FirstVariationResult(object):
    """
    ``divergence_form`` integrates ``rho div nu - div_S(rho nu_top)``,
    ``horizontal_form`` integrates ``rho0 div nu`` against the perimeter
    measure. ``value`` is the horizontal form for variations supported
    away from the characteristic set and the divergence form otherwise.
    """
    value: float
    divergence_form: float
    horizontal_form: float
    error: float
    nodes: int
    skipped: int = 0

    def to_dict(self):
        return {
            'value': self.value,
            'divergence_form': self.divergence_form,
            'horizontal_form': self.horizontal_form,
            'error': self.error,
            'nodes': self.nodes,
            'skipped': self.skipped,
        }


@dataclass
class SecondVariationResult(object):
    value: float
    error: float
    case: str
    constraint: float
    nodes: int

    def to_dict(self):
        return {'value': self.value, 'error': self.error, 'case': self.case,
                'constraint': self.constraint, 'nodes': self.nodes}


@dataclass
class ModeResult(object):
    """
    Spectrum of one block of the second variation form. ``mode`` is
    ``(p, q)`` for harmonic blocks of a surface of revolution and a label
    otherwise.
    """
    mode: object
    min_eigenvalue: float
    eigenvalues: List[float]
    eigenvector_sample: List[float] = field(default_factory=list)
    constraint_residual: Optional[float] = None
    converged: bool = True
    change: float = 0.0

    def to_dict(self):
        mode = list(self.mode) if isinstance(self.mode, tuple) else self.mode
        return {
            'mode': mode,
            'min_eigenvalue': self.min_eigenvalue,
            'eigenvalues': list(self.eigenvalues),
            'eigenvector_sample': list(self.eigenvector_sample),
            'constraint_residual': self.constraint_residual,
            'converged': self.converged,
            'change': self.change,
        }


@dataclass
class StabilityReport(object):
    modes: List[ModeResult]
    verdict: str
    resolution: int
    notes: List[str] = field(default_factory=list)

    @property
    def stable(self):
        return self.verdict == 'stable'

    def to_dict(self):
        return {
            'verdict': self.verdict,
            'resolution': self.resolution,
            'modes': [mode.to_dict() for mode in self.modes],
            'notes': list(self.notes),
        }


def relative_change(change, value):
    """
    Change of an eigenvalue between two resolutions relative to
    ``max(1, |value|)``. Both are taken in the same units.
    """
    return float(abs(change)) / max(1.0, abs(float(value)))


def eigenvalue_converged(change, value, tolerance=None):
    tolerance = (settings.EIGENVALUE_CONVERGENCE if tolerance is None
                 else tolerance)
    return relative_change(change, value) < tolerance


def verdict(modes, tolerance=None):
    """
    ``'inconclusive'`` if some mode did not converge, ``'unstable'`` if some
    minimal eigenvalue is below ``-tolerance``, ``'stable'`` otherwise.
    """
    tolerance = (settings.STABILITY_TOLERANCE if tolerance is None
                 else tolerance)
    if not all(mode.converged for mode in modes):
        return 'inconclusive'
    if any(mode.min_eigenvalue < -tolerance for mode in modes):
        return 'unstable'
    return 'stable'


def _tangent_derivative(m, s, func, p, coefficients):
    return s.tangent_derivative(m, func, p, m.vector(p, coefficients))


def _nu_top(m, s, q):
    """
    Tangential part ``nu - |N0| N`` of the horizontal normal at ``q``.
    """
    g = s.normal_covector(m, q)
    k = m.dim_horizontal
    norm = np.linalg.norm(g)
    horizontal = np.linalg.norm(g[:k])
    if not horizontal > 0:
        return np.zeros(m.dim_total)
    nu = np.zeros(m.dim_total)
    nu[:k] = g[:k] / horizontal
    return nu - horizontal / norm * (g / norm)


def _check_support(m, s, v, order=6):
    """
    Raise unless ``rho`` vanishes on the boundary faces of the chart.
    """
    chart = s.chart
    if chart is None or chart.closed:
        return
    lower = [a for a, _ in chart.domain]
    upper = [b for _, b in chart.domain]
    for axis in range(chart.dimension):
        others = [interval for d, interval in enumerate(chart.domain)
                  if d != axis]
        params, _ = product_rule(others, order)
        for end in (lower[axis], upper[axis]):
            for u in params:
                xi = np.insert(u, axis, end)
                value = v.rho_at(m, s, chart.point(xi))
                if abs(value) > 1e-12:
                    raise PreconditionError(
                        'variation %s is %.3g on the boundary of the surface'
                        % (v.name, value))


def div_sigma_flux(m, s, v, frame):
    """
    ``div_S(rho nu_top)`` at ``frame.p`` over a Riemannian orthonormal
    tangent basis.
    """
    p = frame.p

    def flux(q):
        return v.rho_at(m, s, q) * _nu_top(m, s, q)

    W = flux(p)
    total = 0.0
    for t in tangent_basis(frame):
        dW = _tangent_derivative(m, s, flux, p, t)
        total += m.covariant_derivative(p, t, W, dW).dot(t)
    return float(total)


def _variation_rule(m, s, v, order):
    """
    The surface rule, or the orbit rule of a surface of revolution when
    ``v`` is not constant along its orbits.
    """
    if s.rotational and not s.is_invariant(lambda q: v.rho_at(m, s, q)):
        logger.debug('%s is not rotationally invariant, integrating over '
                     'orbits', v.name)
        return s.orbit_rule(m, order)
    return s.rule(m, order)


def _first_variation_sums(m, s, v, order):
    points, weights = _variation_rule(m, s, v, order)
    divergence = horizontal = 0.0
    skipped = 0
    for p, w in zip(points, weights):
        try:
            frame = surface_frame(m, s, p, check=False)
        except CharacteristicPoint:
            skipped += 1
            continue
        H = float(np.trace(second_fundamental_form(m, s, p, frame)))
        div = H - m.div_correction(p, frame.nu)
        rho = v.rho_at(m, s, p)
        horizontal += w * rho * div
        divergence += w * (rho * div - div_sigma_flux(m, s, v, frame))
    return divergence, horizontal, len(weights), skipped


def first_variation(m, s, v, order=None, tolerance=None):
    """
    First variation of ``P0`` along ``v``, evaluated at two quadrature
    orders. Both integrand forms are computed; for variations supported away
    from the characteristic set they must agree to ``tolerance``.
    """
    order = settings.QUADRATURE_NODES if order is None else order
    tolerance = (settings.FIRST_VARIATION_TOLERANCE if tolerance is None
                 else tolerance)
    _check_support(m, s, v)

    coarse = _first_variation_sums(m, s, v, order)
    divergence, horizontal, nodes, skipped = _first_variation_sums(
        m, s, v, 2 * order)
    if not (np.isfinite(divergence) and np.isfinite(horizontal)):
        raise QuadratureError('first variation integrand is not finite')
    error = max(abs(divergence - coarse[0]), abs(horizontal - coarse[1]))
    logger.debug('first variation of %s: divergence %.12g, horizontal %.12g '
                 '(%d nodes, %d characteristic)', v.name, divergence,
                 horizontal, nodes, skipped)

    if v.support == 'away-from-char':
        gap = abs(divergence - horizontal)
        if gap > tolerance * max(1.0, abs(horizontal)) + 10 * error:
            raise QuadratureError('divergence and horizontal forms differ by '
                                  '%.3g' % gap)
        value = horizontal
    else:
        value = divergence
    return FirstVariationResult(value=float(value),
                                divergence_form=float(divergence),
                                horizontal_form=float(horizontal),
                                error=float(error), nodes=nodes,
                                skipped=skipped)


class NormalFlow(object):
    """
    ``F_t(xi) = G(xi) + t rho(G(xi)) N(G(xi))`` over the chart of ``s``.
    """

    def __init__(self, m, s, v):
        if s.chart is None:
            raise QuadratureError('surface has no parameter chart')
        self.m = m
        self.s = s
        self.v = v
        self.chart = s.chart

    @property
    def domain(self):
        return self.chart.domain

    def speed(self, xi):
        p = self.chart.point(xi)
        g, _ = normal_data(self.m, self.s, p)
        N = self.m.vector(p, g / np.linalg.norm(g))
        return self.v.rho_at(self.m, self.s, p) * N

    def point(self, xi, t):
        point = self.chart.point(xi)
        if t == 0:
            return point
        return point + t * self.speed(xi)

    def jacobian(self, xi, t):
        J = self.chart.jacobian(xi)
        if t == 0:
            return J
        return J + t * fd_jacobian(self.speed, xi)


class ExplicitFamily(object):
    """
    A user supplied ``(xi, t) -> point`` family over a parameter box.
    """

    def __init__(self, mapping, domain):
        self.mapping = mapping
        self.domain = domain

    def point(self, xi, t):
        return as_point(self.mapping(as_point(xi), t))

    def jacobian(self, xi, t):
        return fd_jacobian(lambda u: self.point(u, t), xi)


def perimeter_of_family(m, family, t, order=None):
    """
    ``P0`` of the chart image ``family.point(., t)``, integrating the
    horizontal part of the cofactor normal.
    """
    order = settings.QUADRATURE_NODES if order is None else order
    check_domain(family.domain)
    params, weights = product_rule(family.domain, order)
    k = m.dim_horizontal
    total = 0.0
    for xi, w in zip(params, weights):
        p = family.point(xi, t)
        tangents = np.linalg.solve(m.frame(p), family.jacobian(xi, t))
        total += w * np.linalg.norm(cofactor_normal(tangents)[:k])
    return float(total)


def _rotational_perimeter(m, s, v, t, order):
    """
    ``P0`` of a surface of revolution moved by an invariant speed: the
    moved meridian point has radius ``|w|`` and height ``t``.
    """
    n2 = 2 * s.n

    def profile(theta):
        theta = float(np.reshape(theta, -1)[0])
        p = s.chart.point(theta)
        if t != 0:
            g, _ = normal_data(m, s, p)
            p = p + t * v.rho_at(m, s, p) * m.vector(p, g / np.linalg.norm(g))
        return np.array([np.linalg.norm(p[:n2]), p[-1]])

    thetas, weights = gauss_legendre(order, s.chart.domain[0])
    total = 0.0
    for theta, w in zip(thetas, weights):
        R, tau = profile(theta)
        dR, dtau = fd_jacobian(profile, [theta])[:, 0]
        total += w * R ** (n2 - 1) * np.sqrt(R * R * dR * dR / 4 + dtau ** 2)
    return float(s.sphere * total)


def family_perimeter(m, s, v, t, order=None):
    """
    ``P0(Sigma_t)`` for the family attached to ``v`` (the normal flow when
    ``v.family`` is not set).
    """
    order = settings.QUADRATURE_NODES if order is None else order
    if v.family is not None:
        if s.rotational:
            raise PreconditionError('explicit families need a parameter '
                                    'chart, not a meridian')
        return perimeter_of_family(m, ExplicitFamily(v.family, s.chart.domain),
                                   t, order)
    if s.rotational:
        if not s.is_invariant(lambda q: v.rho_at(m, s, q)):
            raise PreconditionError('the meridian flow needs a speed '
                                    'constant along orbits')
        return _rotational_perimeter(m, s, v, t, order)
    return perimeter_of_family(m, NormalFlow(m, s, v), t, order)


def first_variation_fd_oracle(m, s, v, order=None, step=None):
    """
    Central difference ``(P0(h) - P0(-h)) / 2h``.
    """
    h = settings.FIRST_VARIATION_STEP if step is None else step
    return (family_perimeter(m, s, v, h, order) -
            family_perimeter(m, s, v, -h, order)) / (2 * h)


def second_variation_fd_oracle(m, s, v, order=None, step=None):
    """
    Five point second difference of ``P0(Sigma_t)`` at ``t = 0``.
    """
    h = settings.SECOND_VARIATION_STEP if step is None else step
    values = [family_perimeter(m, s, v, c * h, order)
              for c in (-2, -1, 0, 1, 2)]
    return (-values[0] + 16 * values[1] - 30 * values[2] + 16 * values[3] -
            values[4]) / (12 * h * h)


# Second variation potentials

def second_variation_potential(m, s, p, frame=None):
    """
    The zeroth order coefficient ``V`` of the second variation integrand
    ``|grad rho0|^2 + V rho0^2`` at ``p``, and its parts::

        V = - Ric(nu, nu) - tr(II0^2) - 2 C.A - 2 a D C - 4 c_b(a_b)
            - 2 a_b div(c_b) - 4 sum_j (a_b C_0j^b)^2

    with ``C_0j^b = 1/2 <Tor(nu, e_j), T_b>``, ``A_jb = <Tor(e_j, T_b), nu>``,
    ``D_jb^g = <Tor(e_j, T_b), T_g>`` and ``c_b = sum_j C_0j^b e_j``.
    """
    frame = surface_frame(m, s, p) if frame is None else frame
    p = frame.p
    k = m.dim_horizontal
    nu, a, e = frame.nu, frame.a, frame.e
    vertical = np.eye(m.dim_total)[k:]
    tor = m.torsion_tensor(p)

    # w[b, x] = <Tor(nu, E_x), T_b>
    w = np.einsum('bix,i->bx', tor[k:], nu)
    C = 0.5 * w.dot(e.T)
    A = np.array([[m.torsion_coefficients(p, ej, T, tor).dot(nu)
                   for T in vertical] for ej in e])
    D = np.array([[m.torsion_coefficients(p, ej, T, tor)[k:]
                   for T in vertical] for ej in e])
    # D[j, b, g] -> D[g, j, b]
    D = D.transpose(2, 0, 1)

    P = np.zeros((m.dim_total, m.dim_total))
    P[:k, :k] = np.eye(k) - np.outer(nu[:k], nu[:k])
    c = 0.5 * w.dot(P)

    II0 = second_fundamental_form(m, s, p, frame)
    c_of_a = sum(normal_jet(m, s, p, c[beta])[1][beta]
                 for beta in range(m.dim_vertical))

    h = settings.DIRECTIONAL_STEP * max(1.0, float(np.max(np.abs(p))))
    a_div_c = 0.0
    for ej in e:
        dnu, _ = normal_jet(m, s, p, ej)
        dtor = fd_directional(m.torsion_tensor, p, m.vector(p, ej), step=h)
        dw = (np.einsum('bix,i->bx', tor[k:], dnu) +
              np.einsum('bix,i->bx', dtor[k:], nu))
        dP = np.zeros_like(P)
        dP[:k, :k] = -(np.outer(dnu[:k], nu[:k]) + np.outer(nu[:k], dnu[:k]))
        dc = 0.5 * (w.dot(dP) + dw.dot(P))
        for beta in range(m.dim_vertical):
            nabla = m.covariant_derivative(p, ej, c[beta], dc[beta])
            a_div_c += a[beta] * nabla.dot(ej)

    parts = {
        'ric': ricci_nu_nu(m, s, p, frame),
        'trace_II0_sq': float(np.trace(II0.dot(II0))),
        'H': float(np.trace(II0)),
        'torsion_CA': float(np.einsum('bj,jb->', C, A)),
        'torsion_aDC': float(np.einsum('g,gjb,bj->', a, D, C)),
        'c_of_a': float(c_of_a),
        'a_div_c': float(a_div_c),
        'a_C_squared': float(np.sum(a.dot(C) ** 2)),
    }
    V = (-parts['ric'] - parts['trace_II0_sq'] - 2 * parts['torsion_CA'] -
         2 * parts['torsion_aDC'] - 4 * parts['c_of_a'] -
         2 * parts['a_div_c'] - 4 * parts['a_C_squared'])
    return float(V), parts


def heisenberg_potential(m, s, p, frame=None):
    """
    ``-tr(II0^2) - 2 J nu(a) - n a^2`` on ``H^n``.
    """
    if not m._meta.complex_structure:
        raise PreconditionError('%s has no complex structure' % m.name)
    frame = surface_frame(m, s, p) if frame is None else frame
    II0 = second_fundamental_form(m, s, frame.p, frame)
    _, da = normal_jet(m, s, frame.p, m.complex_structure(frame.nu))
    a = float(frame.a[0])
    return float(-np.trace(II0.dot(II0)) - 2 * da[0] - m.n * a * a)


def _rototranslation(m):
    if m.name != 'rototranslation':
        raise PreconditionError('expected the rototranslation group, got %s'
                                % m.name)


def rototranslation_potential(m, s, p, frame=None):
    """
    ``-pbar^2 - 2 e1(a) - a^2`` for ``nu = pbar X1 + qbar X2`` and
    ``e1 = qbar X1 - pbar X2``; equal to ``V + H^2``.
    """
    _rototranslation(m)
    frame = surface_frame(m, s, p) if frame is None else frame
    pbar, qbar = frame.nu[:2]
    e1 = np.array([qbar, -pbar, 0.0])
    _, da = normal_jet(m, s, frame.p, e1)
    a = float(frame.a[0])
    return float(-pbar * pbar - 2 * da[0] - a * a)


def rototranslation_level_set_potential(m, phi, p, step=None):
    """
    The same quantity written with the normalized frame derivatives of a
    defining function ``phi``::

        pbar^2 + 2 (pbar T qbar - qbar T pbar)
               + 2 w (qbar nu pbar - pbar nu qbar) + w^2
    """
    _rototranslation(m)
    p = m.check_point(p)
    h = (settings.DIRECTIONAL_STEP * max(1.0, float(np.max(np.abs(p))))
         if step is None else step)

    def normalized(q):
        g = m.frame(q).T.dot(phi.gradient(q))
        return g / np.linalg.norm(g[:2])

    pbar, qbar, omega = normalized(p)
    F = m.frame(p)
    dT = fd_directional(normalized, p, F[:, 2], step=h)
    dnu = fd_directional(normalized, p, F.dot([pbar, qbar, 0.0]), step=h)
    return float(pbar ** 2 + 2 * (pbar * dT[1] - qbar * dT[0]) +
                 2 * omega * (qbar * dnu[0] - pbar * dnu[1]) + omega ** 2)


# Second variation

def _second_variation_sums(m, s, v, order):
    points, weights = _variation_rule(m, s, v, order)
    total = constraint = magnitude = 0.0
    Hs = []
    for p, w in zip(points, weights):
        try:
            frame = surface_frame(m, s, p, check=False)
        except CharacteristicPoint:
            continue
        rho0 = v.rho0_at(m, s, p)
        V, parts = second_variation_potential(m, s, p, frame)
        gradient = [_tangent_derivative(
            m, s, lambda q: v.rho0_at(m, s, q), p, ej) for ej in frame.e]
        weight = w * frame.N0_norm
        total += weight * (float(np.sum(np.square(gradient))) +
                           V * rho0 * rho0)
        constraint += weight * rho0
        magnitude += weight * abs(rho0)
        Hs.append(parts['H'] - m.div_correction(p, frame.nu))
    return total, constraint, magnitude, np.array(Hs), len(weights)


def second_variation(m, s, v, order=None):
    """
    Second variation of ``P0`` for a vertically rigid manifold and a
    variation supported away from the characteristic set. The surface must
    be minimal, or have constant mean curvature with ``v`` preserving
    volume to first order (``int rho0 Lambda = 0``).
    """
    order = settings.QUADRATURE_NODES if order is None else order
    points, _ = s.rule(m, min(order, 4))
    m.ensure_rigid(points)
    if v.support != 'away-from-char':
        raise PreconditionError('second variation needs a variation '
                                'supported away from the characteristic set')
    _check_support(m, s, v)

    coarse, _, _, _, _ = _second_variation_sums(m, s, v, order)
    value, constraint, magnitude, Hs, nodes = _second_variation_sums(
        m, s, v, 2 * order)
    if not Hs.size:
        raise QuadratureError('no noncharacteristic nodes on the surface')

    if np.max(np.abs(Hs)) < settings.MINIMAL_TOLERANCE:
        case = 'minimal'
    else:
        spread = float(np.max(Hs) - np.min(Hs))
        if spread > settings.CMC_TOLERANCE * max(1.0, np.max(np.abs(Hs))):
            raise NotCMC('mean curvature varies by %.3g' % spread,
                         spread=spread)
        if abs(constraint) > settings.CONSTRAINT_TOLERANCE * max(1.0,
                                                                 magnitude):
            raise PreconditionError('variation changes the volume: '
                                    'int rho0 Lambda = %.3g' % constraint)
        case = 'volume-preserving'
    logger.debug('second variation (%s case) %.12g', case, value)
    return SecondVariationResult(value=float(value),
                                 error=float(abs(value - coarse)), case=case,
                                 constraint=float(constraint), nodes=nodes)


# Stability

@dataclass
class DiscreteForm(object):
    """
    ``A`` (second variation), ``M`` (mass against ``Lambda``) and ``c``
    (``int phi_a Lambda``) over a basis.
    """
    A: np.ndarray
    M: np.ndarray
    c: np.ndarray
    H: np.ndarray

    @property
    def asymmetry(self):
        return float(np.max(np.abs(self.A - self.A.T)))


def sine_basis(domain, modes):
    """
    Dirichlet tensor sine basis on a box: ``(values, gradients)`` callables
    for ``prod_d sin(k_d pi u_d)`` with ``1 <= k_d <= modes``.
    """
    lower = np.array([a for a, _ in domain])
    width = np.array([b - a for a, b in domain])
    ks = np.array(list(np.ndindex(*([modes] * len(domain))))) + 1

    def values(xi):
        u = (as_point(xi) - lower) / width
        return np.prod(np.sin(np.pi * ks * u), axis=1)

    def gradients(xi):
        u = (as_point(xi) - lower) / width
        s = np.sin(np.pi * ks * u)
        ds = np.pi * ks / width * np.cos(np.pi * ks * u)
        out = np.empty(ks.shape)
        for d in range(ks.shape[1]):
            out[:, d] = ds[:, d] * np.prod(np.delete(s, d, axis=1), axis=1)
        return out

    return values, gradients, len(ks)


def assemble_chart_form(m, s, modes, order=None):
    """
    Assemble the second variation form of a chart surface over the
    Dirichlet sine basis of its parameter box.
    """
    chart = s.chart
    if chart is None or chart.closed:
        raise PreconditionError('stability on charts needs a bounded patch')
    order = max(settings.QUADRATURE_NODES, 4 * modes) if order is None \
        else order
    values, gradients, count = sine_basis(chart.domain, modes)
    params, weights = product_rule(chart.domain, order)

    A = np.zeros((count, count))
    M = np.zeros((count, count))
    c = np.zeros(count)
    Hs = []
    for xi, w in zip(params, weights):
        p = chart.point(xi)
        try:
            frame = surface_frame(m, s, p, check=False)
        except CharacteristicPoint:
            continue
        F = m.frame(p)
        J = chart.jacobian(xi)
        area = np.linalg.norm(cofactor_normal(np.linalg.solve(F, J)))
        weight = w * area * frame.N0_norm
        V, parts = second_variation_potential(m, s, p, frame)
        Hs.append(parts['H'] - m.div_correction(p, frame.nu))

        phi = values(xi)
        grad = gradients(xi)
        # velocities[:, j] is the parameter velocity of e_j
        velocities = np.linalg.lstsq(J, F.dot(frame.e.T), rcond=None)[0]
        derivatives = grad.dot(velocities)
        A += weight * (derivatives.dot(derivatives.T) + V * np.outer(phi, phi))
        M += weight * np.outer(phi, phi)
        c += weight * phi
    return DiscreteForm(A=A, M=M, c=c, H=np.array(Hs))


def constrained_spectrum(A, M, c=None):
    """
    Generalized eigenpairs of ``(A, M)``, restricted to ``c . x = 0`` when
    ``c`` is given. Eigenvectors are returned in the full basis.
    """
    Z = np.eye(A.shape[0]) if c is None else null_space(c[None, :])
    try:
        values, vectors = eigh(Z.T.dot(A).dot(Z), Z.T.dot(M).dot(Z))
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown('mass matrix is not positive definite: %s'
                                 % exc)
    return values, Z.dot(vectors)


def _chart_mode(m, s, modes, order, constrained):
    form = assemble_chart_form(m, s, modes, order)
    c = form.c if constrained else None
    values, vectors = constrained_spectrum(form.A, form.M, c)
    vector = vectors[:, 0]
    residual = None if c is None else float(abs(c.dot(vector)))
    return values, vector, residual, form


def stability_spectrum(m, s, modes=4, order=None, tolerance=None, **kwargs):
    """
    Minimal eigenvalues of the second variation form, constrained to volume
    preserving variations when the surface is not minimal. Surfaces of
    revolution go through the harmonic reduction of ``bubble``; other
    surfaces use a Dirichlet sine basis on their chart, checked for
    convergence between ``modes`` and ``modes + 2`` functions per direction.
    """
    if s.rotational:
        from srmvariation.bubble import bubble_stability
        if s.n != 2:
            raise PreconditionError('harmonic reduction is only available in '
                                    'H^2')
        return bubble_stability(s.radius, tolerance=tolerance, **kwargs)

    mean, spread = cmc_spread(m, s, order)
    if spread > settings.CMC_TOLERANCE * max(1.0, abs(mean)):
        raise NotCMC('div nu varies by %.3g around %.6g' % (spread, mean),
                     spread=spread)
    points, _ = s.rule(m, 4)
    m.ensure_rigid(points)
    constrained = abs(mean) >= settings.MINIMAL_TOLERANCE

    values, vector, residual, form = _chart_mode(m, s, modes, order,
                                                 constrained)
    finer, _, _, _ = _chart_mode(m, s, modes + 2, order, constrained)
    change = float(abs(finer[0] - values[0]))
    converged = eigenvalue_converged(change, finer[0])
    mode = ModeResult(
        mode='dirichlet', min_eigenvalue=float(finer[0]),
        eigenvalues=[float(x) for x in values[:8]],
        eigenvector_sample=[float(x) for x in vector[:8]],
        constraint_residual=residual, converged=converged, change=change)
    notes = ['sine basis with %d functions per direction' % (modes + 2),
             'form asymmetry %.3g' % form.asymmetry]
    if constrained:
        notes.append('volume constraint imposed (H = %.6g)' % mean)
    return StabilityReport(modes=[mode], verdict=verdict([mode], tolerance),
                           resolution=modes + 2, notes=notes)


# Minkowski formula

@dataclass
class MinkowskiReport(object):
    P0: float
    upsilon: float
    boundary: float
    H: float
    Q: float
    residual: float
    volume: Optional[float] = None
    slab_volume: Optional[float] = None
    volume_residual: Optional[float] = None

    @property
    def relative_residual(self):
        return abs(self.residual) / max((self.Q - 1) * self.P0, 1e-300)

    def to_dict(self):
        out = {
            'P0': self.P0,
            'upsilon': self.upsilon,
            'boundary': self.boundary,
            'H': self.H,
            'Q': self.Q,
            'residual': self.residual,
            'relative_residual': self.relative_residual,
        }
        if self.volume is not None:
            out.update(volume=self.volume, slab_volume=self.slab_volume,
                       volume_residual=self.volume_residual)
        return out


def minkowski_boundary_term(m, s, order=None):
    """
    ``int_{dS} X -| Lambda`` over the faces of the chart box, with
    ``Lambda(u_1 .. u_n) = <N, u-normal> det[nu, u_1 .. u_n]`` oriented like
    the perimeter.
    """
    chart = s.chart
    if chart is None or chart.closed:
        return 0.0
    order = settings.QUADRATURE_NODES if order is None else order
    generator = m.dilation.generator
    total = 0.0
    for axis in range(chart.dimension):
        others = [interval for d, interval in enumerate(chart.domain)
                  if d != axis]
        params, weights = product_rule(others, order)
        for end, sign in ((chart.domain[axis][0], -1.0),
                          (chart.domain[axis][1], 1.0)):
            for u, w in zip(params, weights):
                xi = np.insert(u, axis, end)
                p = chart.point(xi)
                frame = surface_frame(m, s, p, check=False)
                tangents = np.linalg.solve(m.frame(p), chart.jacobian(xi))
                orientation = np.sign(cofactor_normal(tangents).dot(frame.nu))
                X = m.coefficients(p, generator(p))
                columns = np.column_stack([frame.nu, X,
                                           np.delete(tangents, axis, axis=1)])
                total += ((-1) ** axis * sign * orientation * w *
                          np.linalg.det(columns))
    return float(total)


def minkowski_check(m, s, order=None):
    """
    Residual of ``(Q-1) P0 = Q H int Upsilon + int_{dS} X -| Lambda`` for a
    constant mean curvature surface, and for closed surfaces of revolution
    the volume form ``(Q-1) P0 = Q H Vol`` with both volume methods.
    """
    if m.dilation is None:
        raise PreconditionError('%s has no dilating flow' % m.name)
    mean, spread = cmc_spread(m, s, order)
    if spread > settings.CMC_TOLERANCE * max(1.0, abs(mean)):
        raise NotCMC('mean curvature varies by %.3g' % spread, spread=spread)
    Q = float(m.dilation.Q)
    P0 = perimeter(m, s, order).value
    upsilon = upsilon_integral(m, s, order).value
    boundary = minkowski_boundary_term(m, s, order)
    report = MinkowskiReport(P0=P0, upsilon=upsilon, boundary=boundary,
                             H=mean, Q=Q,
                             residual=(Q - 1) * P0 - Q * mean * upsilon -
                             boundary)
    if s.chart is not None and s.chart.closed:
        report.volume = upsilon
        if s.rotational:
            report.slab_volume = enclosed_volume(m, s, order,
                                                 method='slab').value
            report.volume_residual = abs(report.slab_volume - upsilon)
    logger.info('Minkowski residual %.3g (P0 %.12g, H %.12g)',
                report.residual, P0, mean)
    return report


# Boundary of the characteristic cover

@dataclass
class BoundaryLimitResult(object):
    deltas: List[float]
    values: List[float]
    cells: List[int]
    exponent: Optional[float] = None

    def to_dict(self):
        return {'deltas': list(self.deltas), 'values': list(self.values),
                'cells': list(self.cells), 'exponent': self.exponent}


def _conormal(N, face, crossing):
    """
    Unit vector along ``crossing`` orthogonal to ``N`` and to the face.
    """
    basis, _ = np.linalg.qr(np.column_stack([N, face]))
    u = crossing - basis.dot(basis.T.dot(crossing))
    return u / np.linalg.norm(u)


def _boundary_faces(flagged, closed):
    """
    ``(axis, index, sign)`` for each face between a flagged and an unflagged
    cell; ``sign`` points out of the flagged side.
    """
    faces = []
    for axis in range(flagged.ndim):
        n = flagged.shape[axis]
        if not closed and np.take(flagged, [0, n - 1], axis=axis).any():
            raise PreconditionError('characteristic cover touches the '
                                    'boundary of the surface')
        lower = np.take(flagged, range(n - 1), axis=axis)
        upper = np.take(flagged, range(1, n), axis=axis)
        for index in np.argwhere(lower != upper):
            index = tuple(int(i) for i in index)
            faces.append((axis, index, 1.0 if lower[index] else -1.0))
    return faces


def _face_integral(m, s, v, axes, face, order):
    chart = s.chart
    axis, index, sign = face
    others = [d for d in range(chart.dimension) if d != axis]
    intervals = [(axes[d][index[d]], axes[d][index[d] + 1]) for d in others]
    params, weights = product_rule(intervals, order)
    total = 0.0
    for u, w in zip(params, weights):
        xi = np.empty(chart.dimension)
        xi[axis] = axes[axis][index[axis] + 1]
        xi[others] = u
        p = chart.point(xi)
        try:
            frame = surface_frame(m, s, p, check=False)
        except CharacteristicPoint:
            continue
        F = m.frame(p)
        tangents = np.linalg.solve(F, chart.jacobian(xi))
        if s.rotational:
            spanning = np.linalg.solve(F, s.orbit_tangents(p))
            w = w * s.sphere
        else:
            spanning = tangents[:, others]
        conormal = _conormal(frame.N, spanning, sign * tangents[:, axis])
        measure = np.sqrt(np.linalg.det(spanning.T.dot(spanning))) \
            if spanning.size else 1.0
        total += w * measure * v.rho_at(m, s, p) * frame.nu.dot(conormal)
    return total


def boundary_limit_term(m, s, v, deltas, order=4, threshold_factor=None):
    """
    ``int_{dO} rho <nu, n_O>`` over the boundary of the cover ``O`` of the
    characteristic set by grid cells of size ``delta`` whose ``|N0|`` falls
    below ``threshold_factor * delta``, for each ``delta``. The fitted decay
    exponent is reported when every value is nonzero.
    """
    chart = s.chart
    if chart is None:
        raise PreconditionError('surface has no parameter chart')
    check_domain(chart.domain)
    factor = (settings.SCAN_THRESHOLD_FACTOR if threshold_factor is None
              else threshold_factor)
    values, cells = [], []
    for delta in deltas:
        shape = [max(1, int(round((b - a) / delta))) for a, b in chart.domain]
        size = max((b - a) / count for (a, b), count in zip(chart.domain,
                                                             shape))
        flagged, _ = flag_cells(m, s, chart, shape, factor * size)
        axes = [np.linspace(a, b, count + 1) for (a, b), count in
                zip(chart.domain, shape)]
        faces = _boundary_faces(flagged, chart.closed)
        value = float(sum(_face_integral(m, s, v, axes, face, order)
                          for face in faces))
        logger.debug('delta %g: %d cells, %d faces, boundary term %.6g',
                     delta, int(flagged.sum()), len(faces), value)
        values.append(value)
        cells.append(int(flagged.sum()))

    exponent = None
    magnitudes = np.abs(values)
    if len(values) > 1 and np.all(magnitudes > 1e-14):
        exponent = float(np.polyfit(np.log(deltas), np.log(magnitudes), 1)[0])
    return BoundaryLimitResult(deltas=[float(d) for d in deltas],
                               values=values, cells=cells, exponent=exponent)
