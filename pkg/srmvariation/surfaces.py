"""
Hypersurfaces, their normals and horizontal frames.

A surface supplies an (unnormalized) normal covector at each of its points,
expressed in the frame coefficients of the model: for a level set
``{phi = 0}`` these are ``g_a = E_a(phi)``. Everything else follows from
``g``: the unit normal ``N = g/|g|``, ``|N0| = |g_h|/|g|``, the unit
horizontal normal ``nu = g_h/|g_h|`` and the vertical coefficients
``a = g_v/|g_h|`` with ``N`` proportional to ``nu + a_b T_b``.
"""
import itertools
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import ndimage
from scipy.linalg import null_space
from scipy.optimize import least_squares
from scipy.special import gamma

from srmvariation import settings
from srmvariation.exceptions import (CharacteristicPoint, NotOnSurface,
                                     PreconditionError, QuadratureError,
                                     UnboundedDomain)
from srmvariation.fields import ScalarField, as_point, fd_jacobian
from srmvariation.quadrature import check_domain, gauss_legendre, \
    product_rule


logger = logging.getLogger(__name__)


@dataclass
class SurfaceFrame(object):
    """
    Frame data at a point of a surface, as model frame coefficients.

    ``nu``, ``a``, ``e`` and ``nu_top`` are ``None`` at characteristic
    points. ``e`` holds the horizontal tangent frame as rows.
    """
    p: np.ndarray
    N: np.ndarray
    N0_norm: float
    g: np.ndarray = field(repr=False, default=None)
    nu: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    nu_top: Optional[np.ndarray] = None

    @property
    def characteristic(self):
        return self.nu is None


@dataclass
class CharScanResult(object):
    """
    Cells flagged by ``characteristic_scan`` at the finest resolution.
    """
    cells: List[tuple]
    centers: np.ndarray
    min_N0: float
    counts: List[int]
    resolutions: List[int]
    components: int
    dimension: Optional[float]

    def to_dict(self):
        return {
            'cells': len(self.cells),
            'min_N0': self.min_N0,
            'counts': list(self.counts),
            'resolutions': list(self.resolutions),
            'components': self.components,
            'dimension_estimate': self.dimension,
        }


class Chart(object):
    """
    A parametrization ``G: box -> M`` with optional analytic Jacobian.
    ``closed`` marks charts whose box faces are not boundary of the surface
    (the meridian chart of a closed surface of revolution).
    """

    def __init__(self, mapping, domain, jacobian=None, closed=False):
        self._mapping = mapping
        self._jacobian = jacobian
        self.domain = [tuple(map(float, interval)) for interval in domain]
        self.closed = closed
        self._registry = OrderedDict()

    @property
    def dimension(self):
        return len(self.domain)

    def point(self, xi):
        xi = as_point(xi)
        p = np.asarray(self._mapping(xi), dtype=float)
        self._remember(p, xi)
        return p

    def _remember(self, p, xi):
        key = p.tobytes()
        self._registry[key] = xi
        self._registry.move_to_end(key)
        while len(self._registry) > settings.CHART_CACHE_SIZE:
            self._registry.popitem(last=False)

    def jacobian(self, xi):
        xi = as_point(xi)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(xi), dtype=float)
        return fd_jacobian(lambda u: np.asarray(self._mapping(u), dtype=float),
                           xi)

    def center(self):
        return np.array([(a + b) / 2 for a, b in self.domain])

    def locate(self, p):
        """
        Parameter of a point of the chart image. Points produced by
        ``point`` are looked up, others are found by least squares.
        """
        p = as_point(p)
        xi = self._registry.get(p.tobytes())
        if xi is not None:
            self._registry.move_to_end(p.tobytes())
            return xi
        lower = [a for a, _ in self.domain]
        upper = [b for _, b in self.domain]
        fit = least_squares(lambda u: np.asarray(self._mapping(u)) - p,
                            self.center(), jac=lambda u: self.jacobian(u),
                            bounds=(lower, upper), xtol=1e-15, ftol=1e-15,
                            gtol=1e-15)
        return fit.x


def cofactor_normal(tangents):
    """
    The vector ``w`` with ``w . v = det[v, tangents]`` for every ``v``.
    ``|w|`` is the volume of the parallelotope spanned by ``tangents``.
    """
    n = tangents.shape[0]
    w = np.empty(n)
    for a in range(n):
        minor = np.delete(tangents, a, axis=0)
        w[a] = (-1) ** a * np.linalg.det(minor)
    return w


def horizontal_tangent_frame(m, nu, drop=None):
    """
    Orthonormal basis of the horizontal vectors orthogonal to ``nu``:
    project the horizontal frame onto ``nu``'s complement, drop the
    shortest projection (or the one at ``drop``) and orthonormalize the rest
    in index order.
    """
    k = m.dim_horizontal
    nu_h = nu[:k]
    projected = np.eye(k) - np.outer(nu_h, nu_h)
    if drop is None:
        drop = int(np.argmin(np.linalg.norm(projected, axis=1)))
    rows = []
    for index in range(k):
        if index == drop:
            continue
        v = projected[index].copy()
        for u in rows:
            v -= v.dot(u) * u
        v /= np.linalg.norm(v)
        rows.append(v)
    e = np.zeros((k - 1, m.dim_total))
    if rows:
        e[:, :k] = np.array(rows)
    return e


class Hypersurface(object):
    """
    Base class for surface representations.
    """
    kind = None
    chart = None
    orientation = 1
    tolerance = 1e-8

    def normal_covector(self, m, p):
        raise NotImplementedError()

    def covector_jet(self, m, p, v):
        """
        ``(g, dg)``: the normal covector at ``p`` and its derivative along
        the ambient tangent vector ``v``, taken with the same scaling.
        """
        g = self.normal_covector(m, p)
        dg = self.tangent_derivative(m, lambda q: self.normal_covector(m, q),
                                     p, v)
        return g, dg

    def tangent_derivative(self, m, func, p, v):
        """
        Derivative of a point function along the tangent vector ``v``.
        """
        p = as_point(p)
        h = settings.DIRECTIONAL_STEP * max(1.0, float(np.max(np.abs(p))))
        return (np.asarray(func(p + h * v), dtype=float) -
                np.asarray(func(p - h * v), dtype=float)) / (2 * h)

    def residual(self, p):
        return 0.0

    def tangent_frame(self, m, p, nu):
        return None

    def rule(self, m, order):
        """
        Quadrature points on the surface with Riemannian area weights.
        """
        if self.chart is None:
            raise QuadratureError('%s has no parameter chart' %
                                  self.__class__.__name__)
        return chart_rule(m, self, self.chart, order)

    @property
    def rotational(self):
        return False


class LevelSet(Hypersurface):
    """
    ``{phi = 0}`` for a ``ScalarField`` ``phi``. The Hessian of ``phi``, when
    analytic, gives exact derivatives of ``nu``. ``chart`` parametrizes a
    bounded piece for integration; ``frame`` overrides the Gram-Schmidt
    horizontal tangent frame with a callable ``(m, p, nu) -> rows``.
    """
    kind = 'level-set'

    def __init__(self, phi, chart=None, orientation=1, frame=None,
                 tolerance=1e-8):
        if not isinstance(phi, ScalarField):
            phi = ScalarField(phi)
        self.phi = phi
        self.chart = chart
        self.orientation = orientation
        self._frame = frame
        self.tolerance = tolerance

    def normal_covector(self, m, p):
        return self.orientation * m.frame(p).T.dot(self.phi.gradient(p))

    def covector_jet(self, m, p, v):
        if not self.phi.has_analytic_hessian:
            return super(LevelSet, self).covector_jet(m, p, v)
        p = as_point(p)
        F = m.frame(p)
        grad = self.phi.gradient(p)
        hess = self.phi.hessian(p)
        g = F.T.dot(grad)
        # dg[m, c] = sum_i dE_m^i/dx_c d_i phi + E_m^i H_ic
        dg = np.stack([E.jacobian(p).T.dot(grad) for E in m.frame_fields])
        dg = dg + F.T.dot(hess)
        return self.orientation * g, self.orientation * dg.dot(v)

    def residual(self, p):
        return abs(self.phi(p))

    def tangent_frame(self, m, p, nu):
        if self._frame is None:
            return None
        return self._frame(m, p, nu)


class ParamImmersion(Hypersurface):
    """
    A parametrized surface ``F: box -> M``. Its normal is the cofactor
    vector of the tangent frame, oriented so that ``det[N, dF] > 0``
    (flip with ``orientation=-1``).
    """
    kind = 'immersion'

    def __init__(self, mapping, domain, jacobian=None, orientation=1,
                 tolerance=1e-8):
        check_domain(domain)
        self.chart = Chart(mapping, domain, jacobian)
        self.orientation = orientation
        self.tolerance = tolerance

    def normal_at(self, m, xi):
        p = self.chart.point(xi)
        tangents = np.linalg.solve(m.frame(p), self.chart.jacobian(xi))
        return self.orientation * cofactor_normal(tangents)

    def normal_covector(self, m, p):
        return self.normal_at(m, self.chart.locate(p))

    def tangent_derivative(self, m, func, p, v):
        xi = self.chart.locate(p)
        velocity = np.linalg.lstsq(self.chart.jacobian(xi), v, rcond=None)[0]
        h = settings.DIRECTIONAL_STEP * max(1.0, float(np.max(np.abs(xi))))
        return (np.asarray(func(self.chart.point(xi + h * velocity))) -
                np.asarray(func(self.chart.point(xi - h * velocity)))) / (2 * h)

    def residual(self, p):
        p = as_point(p)
        return float(np.linalg.norm(self.chart.point(self.chart.locate(p)) - p))


def sphere_measure(dimension):
    """
    Measure of the unit sphere ``S^dimension``.
    """
    return 2 * np.pi ** ((dimension + 1) / 2.0) / gamma((dimension + 1) / 2.0)


def sphere_rule(n, order):
    """
    Nodes and weights on the unit sphere ``S^(2n-1)`` of ``C^n``, ordered as
    ``(x_1 .. x_n, y_1 .. y_n)``. With ``|z_j|^2 = s_j`` the sphere measure
    is ``2^(1-n) ds dalpha`` over the simplex of ``s`` times the torus of
    phases: Gauss-Legendre in collapsed simplex coordinates, equispaced
    phases with ``2 order`` nodes each. Weights sum to ``sphere_measure``.
    """
    n = int(n)
    order = int(order)
    if n < 1 or order < 1:
        raise PreconditionError('sphere rule needs n >= 1 and order >= 1')
    u, wu = gauss_legendre(order, (0.0, 1.0))
    simplex = [(np.ones(1), 1.0)]
    for _ in range(n - 1):
        grown = []
        for s, w in simplex:
            rest = s[-1]
            for uk, wk in zip(u, wu):
                # the last entry carries the unassigned mass
                point = np.concatenate([s[:-1], [rest * uk, rest * (1 - uk)]])
                grown.append((point, w * wk * rest))
        simplex = grown
    phases = 2 * np.pi * np.arange(2 * order) / (2 * order)
    step = 2 * np.pi / (2 * order)
    directions, weights = [], []
    for s, w in simplex:
        radii = np.sqrt(s)
        for alpha in itertools.product(phases, repeat=n):
            alpha = np.asarray(alpha)
            directions.append(np.concatenate([radii * np.cos(alpha),
                                              radii * np.sin(alpha)]))
            weights.append(w * step ** n * 2.0 ** (1 - n))
    return np.array(directions), np.array(weights)


class RotationalProfile(Hypersurface):
    """
    A closed ``U(n)`` invariant surface in ``H^n`` described by its meridian
    ``theta -> (R(theta), tau(theta))`` on ``[0, pi]`` and, for the two
    sheets ``t = +-phi(r)``, by the profile ``phi`` with two derivatives.

    ``rule`` integrates over the meridian chart and is only valid for
    rotationally invariant integrands; ``orbit_rule`` integrates over whole
    orbits.
    """
    kind = 'rotational'

    def __init__(self, radius, n, meridian, profile, angle, frame=None):
        self.radius = float(radius)
        self.n = int(n)
        self._R, self._dR, self._tau, self._dtau = meridian
        self._phi, self._dphi, self._ddphi = profile
        self._angle = angle
        self._frame = frame
        self.chart = Chart(self.meridian_point, [(0.0, np.pi)], closed=True)
        self.sphere = sphere_measure(2 * self.n - 1)

    @property
    def rotational(self):
        return True

    def meridian_point(self, theta):
        theta = float(np.reshape(theta, -1)[0])
        p = np.zeros(2 * self.n + 1)
        p[0] = self._R(theta)
        p[-1] = self._tau(theta)
        return p

    def meridian(self, theta):
        return (self._R(theta), self._dR(theta), self._tau(theta),
                self._dtau(theta))

    def split(self, p):
        p = as_point(p)
        w = p[:2 * self.n]
        return w, float(np.linalg.norm(w)), float(p[-1])

    def sheet(self, sign):
        """
        The sheet ``sign * t - phi(r) = 0`` as a level set with analytic
        derivatives.
        """
        n2 = 2 * self.n

        def value(p):
            r = np.linalg.norm(p[:n2])
            return sign * p[-1] - self._phi(r)

        def gradient(p):
            r = np.linalg.norm(p[:n2])
            g = np.zeros(n2 + 1)
            if r > 0:
                g[:n2] = -self._dphi(r) * p[:n2] / r
            g[-1] = sign
            return g

        def hessian(p):
            r = np.linalg.norm(p[:n2])
            H = np.zeros((n2 + 1, n2 + 1))
            if r > 0:
                w = p[:n2] / r
                radial = np.outer(w, w)
                H[:n2, :n2] = (-self._ddphi(r) * radial -
                               self._dphi(r) / r * (np.eye(n2) - radial))
            else:
                H[:n2, :n2] = -self._ddphi(0.0) * np.eye(n2)
            return H

        return LevelSet(ScalarField(value, gradient, hessian),
                        frame=self._frame)

    def _on_sheet(self, p):
        w, r, t = self.split(p)
        return r < self.radius * (1 - 1e-3)

    def _meridian_covector(self, m, p):
        w, r, t = self.split(p)
        theta = self._angle(r, t)
        grad = np.zeros(2 * self.n + 1)
        if r > 0:
            grad[:2 * self.n] = -self._dtau(theta) * w / r
        grad[-1] = self._dR(theta)
        return m.frame(p).T.dot(grad)

    def normal_covector(self, m, p):
        if self._on_sheet(p):
            w, r, t = self.split(p)
            return self.sheet(1 if t >= 0 else -1).normal_covector(m, p)
        return self._meridian_covector(m, p)

    def covector_jet(self, m, p, v):
        if self._on_sheet(p):
            w, r, t = self.split(p)
            return self.sheet(1 if t >= 0 else -1).covector_jet(m, p, v)
        g = self._meridian_covector(m, p)
        dg = self.tangent_derivative(
            m, lambda q: self._meridian_covector(m, q), p, v)
        return g, dg

    def residual(self, p):
        w, r, t = self.split(p)
        if r > self.radius:
            return r - self.radius
        return abs(abs(t) - self._phi(r))

    def tangent_frame(self, m, p, nu):
        if self._frame is None:
            return None
        return self._frame(m, p, nu)

    def area_density(self, theta):
        """
        Riemannian area per ``d theta`` per unit sphere measure.
        """
        R, dR, tau, dtau = self.meridian(theta)
        return R ** (2 * self.n - 1) * np.sqrt(dR ** 2 * (1 + R ** 2 / 4) +
                                               dtau ** 2)

    def perimeter_density(self, theta):
        """
        Horizontal perimeter per ``d theta`` per unit sphere measure.
        """
        R, dR, tau, dtau = self.meridian(theta)
        return R ** (2 * self.n - 1) * np.sqrt(R ** 2 * dR ** 2 / 4 +
                                               dtau ** 2)

    def rule(self, m, order):
        thetas, weights = gauss_legendre(order, (0.0, np.pi))
        points = [self.chart.point(theta) for theta in thetas]
        return points, weights * self.sphere * np.array(
            [self.area_density(theta) for theta in thetas])

    def orbit_point(self, theta, direction):
        R, _, tau, _ = self.meridian(theta)
        return np.concatenate([R * np.asarray(direction, dtype=float), [tau]])

    def orbit_rule(self, m, order, nodes=None):
        """
        Product of the meridian rule with ``sphere_rule`` over each orbit,
        for integrands that are not ``U(n)`` invariant. The area density is
        constant along orbits.
        """
        nodes = settings.ORBIT_NODES if nodes is None else int(nodes)
        thetas, weights = gauss_legendre(order, (0.0, np.pi))
        directions, spread = sphere_rule(self.n, nodes)
        points, out = [], []
        for theta, w in zip(thetas, weights):
            density = w * self.area_density(theta)
            for direction, dw in zip(directions, spread):
                points.append(self.orbit_point(theta, direction))
                out.append(density * dw)
        return points, np.array(out)

    def is_invariant(self, func, tolerance=1e-9):
        """
        Whether ``func`` is constant along the orbits through a few meridian
        points.
        """
        directions, _ = sphere_rule(self.n, 2)
        for theta in (0.3, 1.1, 2.0, 2.8):
            reference = float(func(self.meridian_point(theta)))
            bound = tolerance * max(1.0, abs(reference))
            for direction in directions:
                value = float(func(self.orbit_point(theta, direction)))
                if abs(value - reference) > bound:
                    return False
        return True

    def orbit_tangents(self, p):
        """
        Ambient vectors spanning the tangent space of the ``U(n)`` orbit
        through ``p``, scaled by its radius.
        """
        w, r, t = self.split(p)
        basis = null_space(w[None, :]) * r
        out = np.zeros((2 * self.n + 1, basis.shape[1]))
        out[:2 * self.n] = basis
        return out


def bubble_frame(m, p, nu):
    """
    ``(J nu, e, J e)`` with ``e = (x2, -x1, -y2, y1)/r`` on ``H^2``.
    """
    x1, x2, y1, y2 = p[:4]
    r = np.sqrt(x1 ** 2 + x2 ** 2 + y1 ** 2 + y2 ** 2)
    e = np.array([x2, -x1, -y2, y1, 0.0]) / r
    return np.array([m.complex_structure(nu), e, m.complex_structure(e)])


def bubble_profile(L):
    """
    ``(phi, dphi, ddphi)`` of the upper sheet of the bubble of radius ``L``.
    They accept arrays.
    """
    L = float(L)

    def phi(r):
        s = np.sqrt(np.maximum(L * L - r * r, 0.0))
        return L * L * np.pi / 8 - L * L / 4 * np.arctan2(r, s) + r * s / 4

    def dphi(r):
        return -r * r / (2 * np.sqrt(L * L - r * r))

    def ddphi(r):
        s = np.sqrt(L * L - r * r)
        return -r * (2 * L * L - r * r) / (2 * s ** 3)

    return phi, dphi, ddphi


def bubble(L, n=2):
    """
    The bubble set of radius ``L`` in ``H^n``: the double graph
    ``t = +-phi(r)`` with
    ``phi(r) = L^2 pi/8 - L^2/4 arctan(r/sqrt(L^2-r^2)) + r sqrt(L^2-r^2)/4``.
    With ``r = L sin(theta)`` both sheets form one meridian on ``[0, pi]``.
    """
    L = float(L)
    if not L > 0:
        raise PreconditionError('bubble radius must be positive, got %r' % L)
    phi, dphi, ddphi = bubble_profile(L)

    def R(theta):
        return L * np.sin(theta)

    def dR(theta):
        return L * np.cos(theta)

    def tau(theta):
        return L * L / 4 * (np.pi / 2 - theta + np.sin(theta) * np.cos(theta))

    def dtau(theta):
        return -L * L / 2 * np.sin(theta) ** 2

    def angle(r, t):
        alpha = np.arcsin(min(r / L, 1.0))
        return alpha if t >= 0 else np.pi - alpha

    return RotationalProfile(L, n, (R, dR, tau, dtau), (phi, dphi, ddphi),
                             angle, frame=bubble_frame if n == 2 else None)


def normal_data(m, s, p):
    """
    ``(g, N0_norm)`` at ``p`` without building the frame.
    """
    g = s.normal_covector(m, p)
    norm = np.linalg.norm(g)
    if not norm > 0:
        raise PreconditionError('degenerate normal at %r' % (p,))
    return g, float(np.linalg.norm(g[:m.dim_horizontal]) / norm)


def surface_frame(m, s, p, threshold=None, check=True):
    """
    Build the ``SurfaceFrame`` of ``s`` at ``p``.

    Raises ``NotOnSurface`` when ``p`` is off the surface and
    ``CharacteristicPoint`` (carrying the partial frame) when
    ``|N0| < threshold``.
    """
    threshold = (settings.CHARACTERISTIC_THRESHOLD if threshold is None
                 else threshold)
    p = m.check_point(p)
    if check:
        residual = s.residual(p)
        if residual > s.tolerance * max(1.0, float(np.max(np.abs(p)))):
            raise NotOnSurface('point %r is off the surface (residual %.3g)'
                               % (p, residual))
    g = s.normal_covector(m, p)
    norm = np.linalg.norm(g)
    if not norm > 0:
        raise PreconditionError('degenerate normal at %r' % (p,))
    k = m.dim_horizontal
    N = g / norm
    horizontal = np.linalg.norm(g[:k])
    frame = SurfaceFrame(p=p, N=N, N0_norm=float(horizontal / norm), g=g)
    if frame.N0_norm < threshold:
        raise CharacteristicPoint('%r is characteristic (|N0| = %.3g)' %
                                  (p, frame.N0_norm), frame=frame)

    nu = np.zeros(m.dim_total)
    nu[:k] = g[:k] / horizontal
    e = s.tangent_frame(m, p, nu)
    if e is None:
        e = horizontal_tangent_frame(m, nu)
    frame.nu = nu
    frame.a = g[k:] / horizontal
    frame.e = np.asarray(e, dtype=float)
    frame.nu_top = nu - frame.N0_norm * N
    return frame


def is_characteristic(m, s, p, threshold=None):
    threshold = (settings.CHARACTERISTIC_THRESHOLD if threshold is None
                 else threshold)
    p = m.check_point(p)
    if s.residual(p) > s.tolerance * max(1.0, float(np.max(np.abs(p)))):
        raise NotOnSurface('point %r is off the surface' % (p,))
    return normal_data(m, s, p)[1] < threshold


def normal_jet(m, s, p, v):
    """
    Derivatives of ``nu`` (coefficients) and of ``a`` along the tangent
    vector with frame coefficients ``v``.
    """
    k = m.dim_horizontal
    g, dg = s.covector_jet(m, p, m.vector(p, v))
    norm = np.linalg.norm(g[:k])
    nu_h = g[:k] / norm
    radial = nu_h.dot(dg[:k])
    dnu = np.zeros(m.dim_total)
    dnu[:k] = (dg[:k] - nu_h * radial) / norm
    da = (dg[k:] - g[k:] / norm * radial) / norm
    return dnu, da


def tangent_basis(frame):
    """
    Orthonormal basis (rows) of the Riemannian tangent space.
    """
    return null_space(frame.N[None, :]).T


def chart_rule(m, s, chart, order):
    """
    Points and Riemannian area weights of a Gauss-Legendre product rule on
    a chart.
    """
    check_domain(chart.domain)
    params, weights = product_rule(chart.domain, order)
    points = []
    areas = np.empty(len(weights))
    for index, xi in enumerate(params):
        p = chart.point(xi)
        tangents = np.linalg.solve(m.frame(p), chart.jacobian(xi))
        areas[index] = np.linalg.norm(cofactor_normal(tangents))
        points.append(p)
    return points, weights * areas


def _cell_grid(chart, shape):
    axes = [np.linspace(a, b, count + 1) for (a, b), count in
            zip(chart.domain, shape)]
    return axes


def flag_cells(m, s, chart, shape, threshold):
    """
    Boolean array over the cells of a uniform grid: true where the minimum
    of ``|N0|`` over corners and center is below ``threshold``. Also
    returns the smallest ``|N0|`` seen.
    """
    axes = _cell_grid(chart, shape)
    corners = np.empty([count + 1 for count in shape])
    for index in np.ndindex(*corners.shape):
        xi = np.array([axis[i] for axis, i in zip(axes, index)])
        corners[index] = normal_data(m, s, chart.point(xi))[1]
    centers = np.empty(shape)
    for index in np.ndindex(*shape):
        xi = np.array([(axis[i] + axis[i + 1]) / 2
                       for axis, i in zip(axes, index)])
        centers[index] = normal_data(m, s, chart.point(xi))[1]

    lowest = centers.copy()
    for offset in np.ndindex(*([2] * len(shape))):
        window = tuple(slice(o, o + count) for o, count in zip(offset, shape))
        lowest = np.minimum(lowest, corners[window])
    return lowest < threshold, float(min(corners.min(), centers.min()))


def characteristic_scan(m, s, resolution=8, refinements=2,
                        threshold_factor=None):
    """
    Flag grid cells of the parameter domain that may contain characteristic
    points, at ``resolution`` cells per direction and ``refinements``
    successive halvings. The dimension estimate is the mean of
    ``log2(count(h/2)/count(h))`` over the halvings.
    """
    chart = s.chart
    if chart is None:
        raise UnboundedDomain('surface has no bounded parameter domain')
    check_domain(chart.domain)
    factor = (settings.SCAN_THRESHOLD_FACTOR if threshold_factor is None
              else threshold_factor)
    extent = max(b - a for a, b in chart.domain)

    counts, resolutions = [], []
    lowest = np.inf
    flagged = None
    for level in range(refinements + 1):
        count = resolution * 2 ** level
        shape = [count] * chart.dimension
        h = extent / count
        flagged, seen = flag_cells(m, s, chart, shape, factor * h)
        lowest = min(lowest, seen)
        counts.append(int(flagged.sum()))
        resolutions.append(count)
        logger.debug('scan at %d cells per direction: %d flagged', count,
                     counts[-1])

    structure = np.ones((3,) * chart.dimension)
    labels, components = ndimage.label(flagged, structure=structure)
    cells = [tuple(int(i) for i in index) for index in np.argwhere(flagged)]
    axes = _cell_grid(chart, flagged.shape)
    centers = np.array([[(axes[d][i] + axes[d][i + 1]) / 2
                         for d, i in enumerate(cell)] for cell in cells])

    dimension = None
    if refinements > 0 and all(c > 0 for c in counts):
        dimension = float(np.mean(np.log2(np.array(counts[1:], dtype=float) /
                                          np.array(counts[:-1], dtype=float))))
    return CharScanResult(cells=cells, centers=centers, min_N0=lowest,
                          counts=counts, resolutions=resolutions,
                          components=int(components), dimension=dimension)


def locate_characteristic(m, s, xi0):
    """
    Refine a parameter guess to a zero of the horizontal normal by least
    squares. Returns the point.
    """
    chart = s.chart
    k = m.dim_horizontal

    def horizontal(xi):
        g = s.normal_covector(m, chart.point(xi))
        return g[:k] / np.linalg.norm(g)

    lower = [a for a, _ in chart.domain]
    upper = [b for _, b in chart.domain]
    fit = least_squares(horizontal, as_point(xi0), bounds=(lower, upper),
                        xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return chart.point(fit.x)
