"""
Horizontal curvature of hypersurfaces and the measures built on it.
"""
import logging
from dataclasses import dataclass

import numpy as np

from srmvariation import settings
from srmvariation.exceptions import CharacteristicPoint, PreconditionError, \
    QuadratureError
from srmvariation.quadrature import MeasureResult, gauss_legendre, refine
from srmvariation.surfaces import normal_data, normal_jet, surface_frame, \
    tangent_basis


logger = logging.getLogger(__name__)


@dataclass
class CurvatureData(object):
    II0: np.ndarray
    H: float
    trace_II0_sq: float
    eigenvalues: np.ndarray
    div_nu: float
    div_sigma_nu: float
    ric_nu_nu: float

    def to_dict(self):
        return {
            'II0': self.II0.tolist(),
            'H': self.H,
            'trace_II0_sq': self.trace_II0_sq,
            'eigenvalues': [[float(z.real), float(z.imag)]
                            for z in self.eigenvalues],
            'div_nu': self.div_nu,
            'div_sigma_nu': self.div_sigma_nu,
            'ric_nu_nu': self.ric_nu_nu,
        }


def _frame(m, s, p, frame):
    return surface_frame(m, s, p) if frame is None else frame


def nabla_nu(m, s, frame, v):
    """
    Coefficients of ``nabla_v nu`` for a tangent vector ``v``.
    """
    dnu, _ = normal_jet(m, s, frame.p, v)
    return m.covariant_derivative(frame.p, v, frame.nu, dnu)


def second_fundamental_form(m, s, p, frame=None, e=None):
    """
    ``II0[i, j] = <nabla_{e_i} nu, e_j>`` in the horizontal tangent frame
    ``e`` (the surface frame when omitted).
    """
    frame = _frame(m, s, p, frame)
    e = frame.e if e is None else np.asarray(e, dtype=float)
    rows = np.array([nabla_nu(m, s, frame, ei) for ei in e])
    return rows.dot(e.T)


def mean_curvature(m, s, p, frame=None):
    return float(np.trace(second_fundamental_form(m, s, p, frame)))


def paired_eigenvalues(matrix, tolerance=None):
    """
    Eigenvalues of a real matrix with conjugates made exact and adjacent.
    """
    tolerance = (settings.CONJUGATE_PAIR_TOLERANCE if tolerance is None
                 else tolerance)
    values = np.linalg.eigvals(matrix) if matrix.size else np.zeros(0)
    real = [complex(z.real, 0.0) for z in values if abs(z.imag) <= tolerance]
    upper = sorted((z for z in values if z.imag > tolerance),
                   key=lambda z: (z.real, z.imag))
    out = sorted(real, key=lambda z: z.real)
    for z in upper:
        out.extend([z, z.conjugate()])
    return np.array(out, dtype=complex)


def div_nu(m, s, p, frame=None, H=None):
    """
    ``div nu = H - sum_b <[nu, T_b], T_b>``.
    """
    frame = _frame(m, s, p, frame)
    if H is None:
        H = mean_curvature(m, s, p, frame)
    return H - m.div_correction(frame.p, frame.nu)


def div_sigma_nu(m, s, p, frame=None):
    """
    Divergence of ``nu`` along the surface over a Riemannian orthonormal
    tangent basis.
    """
    frame = _frame(m, s, p, frame)
    return float(sum(nabla_nu(m, s, frame, t).dot(t)
                     for t in tangent_basis(frame)))


def ricci_nu_nu(m, s, p, frame=None):
    """
    ``sum_j <R(e_j, nu) nu, e_j>`` for the adapted connection.
    """
    frame = _frame(m, s, p, frame)
    R = m.curvature(frame.p)
    return float(sum(np.einsum('nabc,a,b,c,n->', R, ej, frame.nu, frame.nu,
                               ej) for ej in frame.e))


def curvature_data(m, s, p, frame=None):
    frame = _frame(m, s, p, frame)
    II0 = second_fundamental_form(m, s, p, frame)
    H = float(np.trace(II0))
    return CurvatureData(
        II0=II0, H=H, trace_II0_sq=float(np.trace(II0.dot(II0))),
        eigenvalues=paired_eigenvalues(II0),
        div_nu=div_nu(m, s, p, frame, H),
        div_sigma_nu=div_sigma_nu(m, s, p, frame),
        ric_nu_nu=ricci_nu_nu(m, s, p, frame))


def surface_integral(m, s, integrand, order):
    """
    ``sum w f(p)`` over the Riemannian area rule of ``s``.
    """
    points, weights = s.rule(m, order)
    return float(sum(w * integrand(p) for p, w in zip(points, weights)))


def perimeter(m, s, order=None):
    """
    ``P0 = int |N0| dV``.
    """
    order = settings.QUADRATURE_NODES if order is None else order
    return refine(lambda n: surface_integral(
        m, s, lambda p: normal_data(m, s, p)[1], n), order)


def riemannian_area(m, s, order=None):
    order = settings.QUADRATURE_NODES if order is None else order
    return refine(lambda n: surface_integral(m, s, lambda p: 1.0, n), order)


def upsilon_integral(m, s, order=None):
    """
    ``int Upsilon = Q^-1 int <X, N> dV`` with ``X`` the dilation generator.
    """
    if m.dilation is None:
        raise PreconditionError('%s has no dilating flow' % m.name)
    order = settings.QUADRATURE_NODES if order is None else order
    generator = m.dilation.generator

    def integrand(p):
        g, _ = normal_data(m, s, p)
        return m.coefficients(p, generator(p)).dot(g / np.linalg.norm(g))

    return refine(lambda n: surface_integral(m, s, integrand, n) /
                  m.dilation.Q, order, rule='gauss-legendre/divergence')


def enclosed_volume(m, s, order=None, method='divergence'):
    """
    Volume of the region bounded by a closed, outward oriented surface.
    ``divergence`` integrates ``Upsilon`` over the surface; ``slab``
    integrates horizontal cross sections of a surface of revolution.
    """
    order = settings.QUADRATURE_NODES if order is None else order
    if method == 'divergence':
        return upsilon_integral(m, s, order)
    if method != 'slab':
        raise ValueError('unknown volume method %r' % method)
    if not s.rotational:
        raise QuadratureError('slab volume needs a surface of revolution')

    def slab(n):
        thetas, weights = gauss_legendre(n, (0.0, np.pi))
        total = 0.0
        for theta, w in zip(thetas, weights):
            R, dR, tau, dtau = s.meridian(theta)
            total += w * tau * R ** (2 * s.n - 1) * dR
        return s.sphere * total

    return refine(slab, order, rule='gauss-legendre/slab')


def sample_curvature(m, s, points):
    """
    ``(point, CurvatureData or None)`` pairs; characteristic points map to
    ``None``.
    """
    out = []
    for p in points:
        try:
            out.append((p, curvature_data(m, s, p)))
        except CharacteristicPoint:
            logger.debug('skipping characteristic point %r', p)
            out.append((p, None))
    return out


def cmc_spread(m, s, order=None):
    """
    ``(mean, max |div nu - mean|)`` over the noncharacteristic quadrature
    points of ``s``.
    """
    order = settings.QUADRATURE_NODES if order is None else order
    points, _ = s.rule(m, order)
    values = [div_nu(m, s, p, frame) for p, frame in
              _noncharacteristic(m, s, points)]
    if not values:
        raise QuadratureError('no noncharacteristic points to sample')
    values = np.array(values)
    mean = float(np.mean(values))
    return mean, float(np.max(np.abs(values - mean)))


def _noncharacteristic(m, s, points):
    for p in points:
        try:
            yield p, surface_frame(m, s, p, check=False)
        except CharacteristicPoint:
            continue


__all__ = ['CurvatureData', 'MeasureResult', 'second_fundamental_form',
           'mean_curvature', 'div_nu', 'div_sigma_nu', 'ricci_nu_nu',
           'curvature_data', 'perimeter', 'riemannian_area',
           'upsilon_integral', 'enclosed_volume', 'paired_eigenvalues',
           'nabla_nu', 'surface_integral', 'cmc_spread', 'sample_curvature']
