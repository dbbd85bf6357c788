"""
Reference surfaces and variations.

Every surface here has a known answer: planes in ``H^1`` and the plane
``{y = 0}`` of the rototranslation group are minimal, the paraboloids are
neither minimal nor CMC, and the bubble has ``H = 4/L``. Bumps are products
of ``sin^2`` over the chart box, so they vanish on its faces together with
their first derivatives.
"""
from dataclasses import dataclass

import numpy as np

from srmvariation.fields import ScalarField
from srmvariation.models import Heisenberg, ManifoldModel, Rototranslation
from srmvariation.surfaces import Chart, Hypersurface, LevelSet, bubble
from srmvariation.variation import VariationField


@dataclass
class Case(object):
    """
    A surface with a variation and the quadrature order it is run at.
    ``minimal`` cases have a vanishing first variation, so comparisons use
    an absolute floor instead of a relative error.
    """
    name: str
    m: ManifoldModel
    s: Hypersurface
    v: VariationField
    order: int
    minimal: bool = False


def bump(domain, axes):
    """
    ``prod sin^2(pi (p[axis] - a) / (b - a))`` over the box ``domain`` in the
    coordinates ``axes`` of a point, zero outside.
    """
    lower = np.array([a for a, _ in domain], dtype=float)
    width = np.array([b - a for a, b in domain], dtype=float)
    axes = list(axes)

    def rho(p):
        u = (np.asarray(p, dtype=float)[axes] - lower) / width
        if np.any(u < 0) or np.any(u > 1):
            return 0.0
        return float(np.prod(np.sin(np.pi * u) ** 2))

    return rho


def _linear_level_set(dim, axis, offset=0.0, name=None):
    direction = np.eye(dim)[axis]
    return ScalarField(lambda p: p[axis] - offset,
                       gradient=lambda p: direction.copy(),
                       hessian=lambda p: np.zeros((dim, dim)),
                       name=name)


def vertical_plane(offset=0.0, extent=1.0):
    """
    ``{x = offset}`` in ``H^1`` over ``(y, t)`` in ``[-extent, extent]^2``.
    It has no characteristic points and ``nu = X``.
    """
    def mapping(xi):
        return np.array([offset, xi[0], xi[1]])

    def jacobian(xi):
        return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    chart = Chart(mapping, [(-extent, extent)] * 2, jacobian)
    return LevelSet(_linear_level_set(3, 0, offset, name='vertical-plane'),
                    chart=chart)


def paraboloid(n=1, domain=None):
    """
    The graph ``t = |x|^2 / 2`` in ``H^n`` over a box in
    ``(x_1 .. x_n, y_1 .. y_n)``. Its only characteristic point is the
    origin, which the default box avoids.
    """
    dim = 2 * n + 1
    if domain is None:
        domain = ([(0.5, 1.5), (-0.5, 0.5)] if n == 1 else
                  [(0.5, 1.0)] + [(-0.25, 0.25)] * (2 * n - 1))

    def value(p):
        return p[-1] - 0.5 * np.sum(p[:n] ** 2)

    def gradient(p):
        g = np.zeros(dim)
        g[:n] = -p[:n]
        g[-1] = 1.0
        return g

    def hessian(p):
        H = np.zeros((dim, dim))
        H[:n, :n] = -np.eye(n)
        return H

    def mapping(xi):
        return np.append(xi, 0.5 * np.sum(xi[:n] ** 2))

    def jacobian(xi):
        J = np.zeros((dim, dim - 1))
        J[:dim - 1] = np.eye(dim - 1)
        J[-1, :n] = xi[:n]
        return J

    return LevelSet(ScalarField(value, gradient, hessian, name='paraboloid'),
                    chart=Chart(mapping, domain, jacobian))


def rototranslation_plane(theta=(0.5, np.pi - 0.5), extent=1.0):
    """
    ``{y = 0}`` in the rototranslation group over ``(x, theta)``. It is
    minimal with ``nu = X_1`` for ``0 < theta < pi``, and characteristic
    where ``sin(theta) = 0``.
    """
    def mapping(xi):
        return np.array([xi[0], 0.0, xi[1]])

    def jacobian(xi):
        return np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

    chart = Chart(mapping, [(-extent, extent), theta], jacobian)
    return LevelSet(_linear_level_set(3, 1, name='rototranslation-plane'),
                    chart=chart)


def rototranslation_graph(c=0.25, theta=(0.7, np.pi - 0.7), extent=1.0):
    """
    ``{y = c x^2}`` in the rototranslation group over ``(x, theta)``; not
    minimal. Characteristic where ``tan(theta) = 2 c x``, outside the
    default box.
    """
    def value(p):
        return p[1] - c * p[0] ** 2

    def gradient(p):
        return np.array([-2 * c * p[0], 1.0, 0.0])

    def hessian(p):
        H = np.zeros((3, 3))
        H[0, 0] = -2 * c
        return H

    def mapping(xi):
        return np.array([xi[0], c * xi[0] ** 2, xi[1]])

    def jacobian(xi):
        return np.array([[1.0, 0.0], [2 * c * xi[0], 0.0], [0.0, 1.0]])

    return LevelSet(ScalarField(value, gradient, hessian,
                                name='rototranslation-graph'),
                    chart=Chart(mapping, [(-extent, extent), theta],
                                jacobian))


def _chart_bump(s, axes):
    return bump(s.chart.domain, axes)


def first_variation_cases(order=None):
    """
    The five reference pairs of a surface and a variation for the first
    variation. ``order`` replaces each case's default quadrature order.
    """
    h1 = Heisenberg(1)
    h2 = Heisenberg(2)
    roto = Rototranslation()

    plane = vertical_plane()
    graph = paraboloid(1)
    graph2 = paraboloid(2)
    flat = rototranslation_plane()
    sphere = bubble(1.0, 2)

    cases = [
        Case('vertical-plane', h1, plane,
             VariationField(rho=_chart_bump(plane, (1, 2)),
                            name='bump'), 12, minimal=True),
        Case('heisenberg-graph', h1, graph,
             VariationField(rho=_chart_bump(graph, (0, 1)), name='bump'),
             12),
        Case('bubble', h2, sphere,
             VariationField(rho=lambda p: float(np.dot(p[:4], p[:4]) + p[4]),
                            support='over-char', name='r^2+t'), 24),
        Case('rototranslation-plane', roto, flat,
             VariationField(rho=_chart_bump(flat, (0, 2)), name='bump'), 12,
             minimal=True),
        Case('heisenberg2-graph', h2, graph2,
             VariationField(rho=_chart_bump(graph2, (0, 1, 2, 3)),
                            name='bump'), 3),
    ]
    if order is not None:
        for case in cases:
            case.order = int(order)
    return cases


def second_variation_cases(order=None):
    """
    Minimal patches with a bump supported inside the chart. On the plane of
    ``H^1`` the potential vanishes; on the rototranslation plane it is
    ``1 / sin(theta)^2``.
    """
    plane = vertical_plane()
    flat = rototranslation_plane()
    cases = [
        Case('vertical-plane', Heisenberg(1), plane,
             VariationField(rho=_chart_bump(plane, (1, 2)), name='bump'), 8,
             minimal=True),
        Case('rototranslation-plane', Rototranslation(), flat,
             VariationField(rho=_chart_bump(flat, (0, 2)), name='bump'), 8,
             minimal=True),
    ]
    if order is not None:
        for case in cases:
            case.order = int(order)
    return cases


def chart_samples(s, count, seed=0, margin=0.05):
    """
    ``count`` points of ``s`` at uniform random parameters, kept ``margin``
    (relative) away from the faces of the chart box.
    """
    rng = np.random.default_rng(seed)
    lower = np.array([a for a, _ in s.chart.domain])
    upper = np.array([b for _, b in s.chart.domain])
    inset = margin * (upper - lower)
    params = rng.uniform(lower + inset, upper - inset,
                         size=(count, len(lower)))
    return [s.chart.point(xi) for xi in params]


__all__ = ['Case', 'bump', 'vertical_plane', 'paraboloid',
           'rototranslation_plane', 'rototranslation_graph',
           'first_variation_cases',
           'second_variation_cases', 'chart_samples']
