"""
Vector and scalar fields given by their coordinate components.

Fields carry optional analytic derivatives. Whatever is missing is
recovered with central differences using a step scaled to the point,
``h = cbrt(eps) * max(1, |p|)``.
"""
import numpy as np

from srmvariation.exceptions import StepUnderflow


EPS = np.finfo(float).eps
CBRT_EPS = np.cbrt(EPS)
QUARTIC_ROOT_EPS = EPS ** 0.25


def as_point(p):
    return np.asarray(p, dtype=float).reshape(-1)


def fd_step(p, base=CBRT_EPS):
    """
    Central difference step for the point ``p``. Raises ``StepUnderflow``
    when the step would vanish against a coordinate of ``p``.
    """
    p = as_point(p)
    scale = max(1.0, float(np.max(np.abs(p))) if p.size else 1.0)
    h = base * scale
    if not np.all(np.isfinite(p)):
        raise StepUnderflow('non finite point %r' % (p,))
    if np.any((p + h) - p == 0.0):
        raise StepUnderflow('step %g vanishes at %r' % (h, p))
    return h


def fd_jacobian(func, p, step=None):
    """
    ``J[i, c] = d func_i / d x_c`` by central differences.
    """
    p = as_point(p)
    h = fd_step(p) if step is None else step
    columns = []
    for c in range(p.size):
        dp = np.zeros_like(p)
        dp[c] = h
        columns.append((np.asarray(func(p + dp), dtype=float) -
                        np.asarray(func(p - dp), dtype=float)) / (2.0 * h))
    return np.stack(columns, axis=-1)


def fd_directional(func, p, direction, step=None):
    """
    Derivative of ``func`` at ``p`` along the straight line ``p + s v``.
    """
    p = as_point(p)
    v = as_point(direction)
    h = fd_step(p) if step is None else step
    return (np.asarray(func(p + h * v), dtype=float) -
            np.asarray(func(p - h * v), dtype=float)) / (2.0 * h)


class VectorField(object):
    """
    A vector field on a single global chart.

    ``components`` maps a point to the coordinate components of the field;
    ``jacobian`` (optional) maps a point to ``J[i, c] = dV_i/dx_c``.
    """

    def __init__(self, components, jacobian=None, name=None):
        self._components = components
        self._jacobian = jacobian
        self.name = name or getattr(components, '__name__', 'field')

    def __repr__(self):
        return '<VectorField %s>' % self.name

    def __call__(self, p):
        return np.asarray(self._components(as_point(p)), dtype=float)

    @property
    def has_analytic_jacobian(self):
        return self._jacobian is not None

    def jacobian(self, p, step=None):
        p = as_point(p)
        if self._jacobian is not None and step is None:
            return np.asarray(self._jacobian(p), dtype=float)
        return fd_jacobian(self, p, step)

    def derivative(self, func, p):
        """
        ``X(f)(p)`` for a scalar or vector valued ``func``.
        """
        return fd_directional(func, p, self(p))

    def bracket(self, other, p, step=None):
        """
        ``[self, other](p) = J_other X - J_self Y``.
        """
        p = as_point(p)
        return (other.jacobian(p, step).dot(self(p)) -
                self.jacobian(p, step).dot(other(p)))

    def bracket_field(self, other):
        """
        The bracket as a new field. Its own Jacobian is taken numerically.
        """
        return VectorField(lambda p: self.bracket(other, p),
                           name='[%s,%s]' % (self.name, other.name))


class ScalarField(object):
    """
    A scalar function with optional analytic gradient and Hessian.
    """

    def __init__(self, func, gradient=None, hessian=None, name=None):
        self._func = func
        self._gradient = gradient
        self._hessian = hessian
        self.name = name or 'phi'

    def __call__(self, p):
        return float(self._func(as_point(p)))

    @property
    def has_analytic_gradient(self):
        return self._gradient is not None

    @property
    def has_analytic_hessian(self):
        return self._hessian is not None

    def gradient(self, p):
        p = as_point(p)
        if self._gradient is not None:
            return np.asarray(self._gradient(p), dtype=float)
        return fd_jacobian(lambda q: np.array([self(q)]), p)[0]

    def hessian(self, p):
        p = as_point(p)
        if self._hessian is not None:
            return np.asarray(self._hessian(p), dtype=float)
        if self._gradient is not None:
            H = fd_jacobian(self.gradient, p)
        else:
            H = fd_jacobian(self.gradient, p,
                            step=QUARTIC_ROOT_EPS * max(1.0, np.max(np.abs(p))))
        return 0.5 * (H + H.T)
