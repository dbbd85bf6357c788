"""
Gauss-Legendre rules and error-estimated integrals.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from srmvariation.exceptions import QuadratureError, UnboundedDomain


logger = logging.getLogger(__name__)


@dataclass
class MeasureResult(object):
    """
    ``value`` comes from the finer of two rules; ``error`` is the absolute
    difference between them.
    """
    value: float
    error: float
    nodes: int
    rule: str = 'gauss-legendre'

    def to_dict(self):
        return {'value': self.value, 'error': self.error,
                'nodes': self.nodes, 'rule': self.rule}


def gauss_legendre(order, interval=(-1.0, 1.0)):
    """
    Nodes and weights of the ``order`` point rule on ``[a, b]``.
    """
    if order < 1:
        raise QuadratureError('rule order must be positive, got %r' % order)
    a, b = interval
    if not (np.isfinite(a) and np.isfinite(b)):
        raise UnboundedDomain('interval [%r, %r] is not bounded' % (a, b))
    y, w = leggauss(order)
    nodes = (a * (1 - y) + b * (1 + y)) / 2
    weights = w * (b - a) / 2
    return nodes, weights


def product_rule(domain, order):
    """
    Tensor product rule over the box ``domain = [(a1, b1), ...]``. Returns
    ``(points, weights)`` with one point per row.
    """
    if not domain:
        return np.zeros((1, 0)), np.ones(1)
    rules = [gauss_legendre(order, interval) for interval in domain]
    grids = np.meshgrid(*[nodes for nodes, _ in rules], indexing='ij')
    wgrids = np.meshgrid(*[weights for _, weights in rules], indexing='ij')
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return points, weights


def check_domain(domain):
    for a, b in domain:
        if not (np.isfinite(a) and np.isfinite(b)):
            raise UnboundedDomain('parameter domain %r is not bounded' %
                                  (domain,))
        if not b > a:
            raise QuadratureError('empty parameter interval [%r, %r]' % (a, b))


def refine(evaluate, order, rule='gauss-legendre'):
    """
    Run ``evaluate(order)`` and ``evaluate(2 * order)`` and package the
    finer value with the difference as error estimate.
    """
    coarse = evaluate(order)
    fine = evaluate(2 * order)
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        raise QuadratureError('integral is not finite (%r, %r)' %
                              (coarse, fine))
    logger.debug('%s rule %d -> %.15g, %d -> %.15g', rule, order, coarse,
                 2 * order, fine)
    return MeasureResult(value=float(fine), error=float(abs(fine - coarse)),
                         nodes=2 * order, rule=rule)
