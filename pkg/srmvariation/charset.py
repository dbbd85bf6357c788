"""
Size of characteristic sets.

The skew Hessian of ``phi`` against a family ``X_1 .. X_k`` is the matrix
``([X_j, X_k] phi)(p)``. At a characteristic point of ``{phi = 0}`` with
``d phi != 0`` a skew Hessian of rank ``2 l`` puts the characteristic set
locally inside a submanifold of dimension ``n - l - 1``.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import ndimage

from srmvariation import settings
from srmvariation.exceptions import (NumericalBreakdown, PreconditionError,
                                     SRMError)
from srmvariation.fields import ScalarField, VectorField, as_point
from srmvariation.models import ManifoldModel
from srmvariation.surfaces import (Chart, LevelSet, characteristic_scan,
                                   locate_characteristic, normal_data)


logger = logging.getLogger(__name__)

# Singular values below this are zero whatever the largest one is.
ABSOLUTE_FLOOR = 1e-12


@dataclass
class SkewHessianResult(object):
    """
    ``matrix`` is the skew part ``X_j X_k phi - X_k X_j phi``; ``full`` the
    ordered Hessian ``X_j X_k phi`` when second derivatives were taken.
    ``bound`` is ``n - rank/2 - 1`` for ``rank > 0`` and ``None`` otherwise,
    an estimate rather than a certificate.
    """
    matrix: np.ndarray
    rank: int
    singular_values: np.ndarray
    dimension: int
    bound: Optional[int] = None
    full: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def skewness(self):
        return float(np.max(np.abs(self.matrix + self.matrix.T))) \
            if self.matrix.size else 0.0

    def to_dict(self):
        return {
            'matrix': self.matrix.tolist(),
            'rank': self.rank,
            'singular_values': self.singular_values.tolist(),
            'dimension': self.dimension,
            'bound': self.bound,
            'label': 'estimate',
        }


def numerical_rank(matrix, tolerance=None, check_gap=True):
    """
    ``(rank, singular values)`` counting values above ``tolerance`` times
    the largest. Raises ``NumericalBreakdown`` when a value sits within a
    factor ten of the cut, where noise and signal cannot be told apart.
    """
    tolerance = settings.RANK_TOLERANCE if tolerance is None else tolerance
    sigma = np.linalg.svd(np.atleast_2d(matrix), compute_uv=False) \
        if np.size(matrix) else np.zeros(0)
    if not sigma.size or sigma[0] <= ABSOLUTE_FLOOR:
        return 0, sigma
    cut = tolerance * sigma[0]
    if check_gap:
        ambiguous = (sigma > cut / 10) & (sigma <= cut * 10)
        if ambiguous.any():
            raise NumericalBreakdown(
                'singular values %s are within a factor 10 of the rank cut '
                '%.3g' % (sigma[ambiguous], cut))
    return int(np.sum(sigma > cut)), sigma


def _as_scalar(phi):
    return phi if isinstance(phi, ScalarField) else ScalarField(phi)


def _package(matrix, dimension, full=None, tolerance=None):
    # keep only the antisymmetric part
    matrix = 0.5 * (matrix - matrix.T)
    rank, sigma = numerical_rank(matrix, tolerance)
    if rank % 2:
        raise NumericalBreakdown('skew matrix has odd numerical rank %d'
                                 % rank)
    bound = dimension - rank // 2 - 1 if rank else None
    return SkewHessianResult(matrix=matrix, rank=rank, singular_values=sigma,
                             dimension=dimension, bound=bound, full=full)


def skew_hessian(fields, phi, p, tolerance=None):
    """
    ``X_j X_k phi`` at ``p`` from the gradient and Hessian of ``phi`` and
    the Jacobians of the fields (analytic when available), and its skew
    part.
    """
    phi = _as_scalar(phi)
    p = as_point(p)
    grad = phi.gradient(p)
    hess = phi.hessian(p)
    values = np.column_stack([X(p) for X in fields]) if fields else \
        np.zeros((p.size, 0))
    # X_j (X_k phi) = X_k^T Hess X_j + grad . (J_{X_k} X_j)
    full = values.T.dot(hess).dot(values)
    for j in range(len(fields)):
        for k, Xk in enumerate(fields):
            full[j, k] += grad.dot(Xk.jacobian(p).dot(values[:, j]))
    return _package(full - full.T, p.size, full=full, tolerance=tolerance)


def bracket_hessian(fields, covector, p, tolerance=None):
    """
    Skew Hessian from brackets alone: ``d phi([X_j, X_k])`` with ``d phi``
    the coordinate ``covector`` at ``p``.
    """
    p = as_point(p)
    covector = as_point(covector)
    k = len(fields)
    matrix = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            matrix[a, b] = covector.dot(fields[a].bracket(fields[b], p))
            matrix[b, a] = -matrix[a, b]
    return _package(matrix, p.size, tolerance=tolerance)


def surface_skew_hessian(m, s, p, tolerance=None):
    """
    Skew Hessian of ``s`` at ``p`` against the horizontal frame of ``m``,
    using the normal covector of ``s`` in place of ``d phi``.
    """
    p = m.check_point(p)
    g = s.normal_covector(m, p)
    covector = np.linalg.solve(m.frame(p).T, g / np.linalg.norm(g))
    return bracket_hessian(m.horizontal, covector, p, tolerance)


def iterated_skew_hessian(fields, covector, p, max_depth=None,
                          tolerance=None):
    """
    Repeat the skew Hessian on the family enlarged by brackets while it
    vanishes: a point where it does is characteristic for the enlarged
    family too. Returns ``(depth, result)`` for the first nonzero one, or
    ``(None, last result)`` when ``max_depth`` is reached.
    """
    max_depth = settings.MAX_BRACKET_DEPTH if max_depth is None \
        else max_depth
    family = list(fields)
    result = bracket_hessian(family, covector, p, tolerance)
    for depth in range(1, max_depth + 1):
        if result.rank:
            return depth, result
        family = family + [X.bracket_field(Y) for i, X in enumerate(family)
                           for Y in family[i + 1:]]
        family = _independent(family, p)
        result = bracket_hessian(family, covector, p, tolerance)
    return (max_depth + 1 if result.rank else None), result


def _independent(family, p, tolerance=1e-6):
    kept, columns = [], []
    for X in family:
        trial = columns + [X(p)]
        rank, _ = numerical_rank(np.column_stack(trial), tolerance,
                                 check_gap=False)
        if rank == len(trial):
            kept.append(X)
            columns = trial
    return kept


def bracket_generation_step(fields, p, max_depth=None, tolerance=1e-6):
    """
    Smallest step at which iterated brackets of ``fields`` span the tangent
    space at ``p``, or ``None`` within ``max_depth`` brackets. Each level
    keeps the brackets that enlarge the span, so a ``None`` is not a proof
    of failure.
    """
    max_depth = settings.MAX_BRACKET_DEPTH if max_depth is None \
        else max_depth
    p = as_point(p)
    n = p.size
    span = _independent(fields, p, tolerance)
    rank = len(span)
    level = list(span)
    for step in range(1, max_depth + 2):
        if rank == n:
            return step
        if step > max_depth or not level:
            break
        candidates = [X.bracket_field(Y) for X in fields for Y in level]
        grown = _independent(span + candidates, p, tolerance)
        level = grown[len(span):]
        span = grown
        rank = len(span)
    logger.info('brackets reach rank %d of %d within depth %d', rank, n,
                max_depth)
    return None


def sharp_example_fields(n, k):
    """
    ``X_j = d_j`` for ``j < k`` and
    ``X_k = d_k + x_1 d_{k+1} + x_1^2 d_{k+2} + .. + x_1^(n-k) d_n`` on
    ``R^n``. They bracket generate at step ``n - k + 1``.
    """
    n, k = int(n), int(k)
    if not n > k >= 2:
        raise PreconditionError('need n > k >= 2, got n=%d k=%d' % (n, k))
    fields = []
    for j in range(k - 1):
        direction = np.eye(n)[j]
        fields.append(VectorField(lambda p, d=direction: d.copy(),
                                  jacobian=lambda p: np.zeros((n, n)),
                                  name='X%d' % (j + 1)))
    powers = np.arange(1, n - k + 1)

    def last(p):
        v = np.zeros(n)
        v[k - 1] = 1.0
        v[k:] = p[0] ** powers
        return v

    def last_jacobian(p):
        J = np.zeros((n, n))
        J[k:, 0] = powers * p[0] ** (powers - 1)
        return J

    fields.append(VectorField(last, jacobian=last_jacobian, name='X%d' % k))
    return fields


def sharp_example(n, k, extent=1.0):
    """
    The model completed from ``sharp_example_fields`` and the surface
    ``x_n = x_1^2`` over the box ``[-extent, extent]^(n-1)``. Its
    characteristic set contains ``{x_1 = x_n = 0}``.
    """
    fields = sharp_example_fields(n, k)
    m = ManifoldModel.from_horizontal(fields, n)

    def value(p):
        return p[-1] - p[0] ** 2

    def gradient(p):
        g = np.zeros(n)
        g[0] = -2 * p[0]
        g[-1] = 1.0
        return g

    def hessian(p):
        H = np.zeros((n, n))
        H[0, 0] = -2.0
        return H

    def mapping(xi):
        return np.append(xi, xi[0] ** 2)

    def jacobian(xi):
        J = np.zeros((n, n - 1))
        J[:n - 1] = np.eye(n - 1)
        J[-1, 0] = 2 * xi[0]
        return J

    chart = Chart(mapping, [(-extent, extent)] * (n - 1), jacobian)
    s = LevelSet(ScalarField(value, gradient, hessian, name='sharp'),
                 chart=chart)
    return m, s


@dataclass
class CharsetReport(object):
    scan: dict
    points: List[list]
    ranks: List[Optional[int]]
    bounds: List[Optional[int]]
    failures: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            'scan': self.scan,
            'points': self.points,
            'skew_hessian_ranks': self.ranks,
            'bounds': self.bounds,
            'failures': self.failures,
        }


def _representatives(scan, limit):
    shape = [scan.resolutions[-1]] * (scan.centers.shape[1]
                                      if scan.centers.size else 0)
    if not scan.cells:
        return []
    flagged = np.zeros(shape, dtype=bool)
    for cell in scan.cells:
        flagged[cell] = True
    labels, count = ndimage.label(flagged,
                                  structure=np.ones((3,) * len(shape)))
    out = []
    for label in range(1, min(count, limit) + 1):
        index = np.argwhere(labels == label)[0]
        out.append(scan.centers[scan.cells.index(tuple(int(i)
                                                       for i in index))])
    return out


def characteristic_report(m, s, resolution=8, refinements=2, limit=8,
                          tolerance=None):
    """
    Scan ``s`` for characteristic cells, refine one point per connected
    component and evaluate the skew Hessian there.
    """
    scan = characteristic_scan(m, s, resolution, refinements)
    points, ranks, bounds, failures = [], [], [], []
    for xi in _representatives(scan, limit):
        p = locate_characteristic(m, s, xi)
        N0 = normal_data(m, s, p)[1]
        points.append([float(x) for x in p])
        try:
            result = surface_skew_hessian(m, s, p, tolerance)
        except SRMError as exc:
            logger.warning('skew Hessian failed at %r: %s', p, exc)
            failures.append(str(exc))
            ranks.append(None)
            bounds.append(None)
            continue
        logger.debug('characteristic point %r: |N0| %.3g, rank %d', p, N0,
                     result.rank)
        ranks.append(result.rank)
        bounds.append(result.bound)
    return CharsetReport(scan=scan.to_dict(), points=points, ranks=ranks,
                         bounds=bounds, failures=failures)


__all__ = ['SkewHessianResult', 'numerical_rank', 'skew_hessian',
           'bracket_hessian', 'surface_skew_hessian',
           'iterated_skew_hessian', 'bracket_generation_step',
           'sharp_example_fields', 'sharp_example', 'CharsetReport',
           'characteristic_report']
