"""
Vertically rigid sub-Riemannian manifold models.

A model is a global chart together with a graded frame ``X_0 .. X_k``
(horizontal) and ``T_1 .. T_l`` (vertical) declared orthonormal, an adapted
connection given by its Christoffel symbols in that frame, and an optional
dilating flow.

Everything downstream works with *frame coefficients*: a tangent vector at
``p`` is stored as the vector ``c`` with ``v = sum_a c_a E_a(p)``, so the
metric is the Euclidean product of coefficient vectors.

Subclasses describe themselves with an inner ``Meta`` class, the same way
resources do::

    class Rototranslation(ManifoldModel):
        class Meta:
            name = 'rototranslation'
            periodic = (2,)
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from srmvariation import settings
from srmvariation.exceptions import (ChartError, NonOrthonormalFrame,
                                     NotRigid, PreconditionError)
from srmvariation.fields import VectorField, as_point, fd_directional, \
    fd_jacobian


logger = logging.getLogger(__name__)


class ModelOptions(object):
    """
    Default ``Meta`` values for a manifold model. Any attribute declared on
    a model's inner ``Meta`` overrides the one here.
    """
    name = 'manifold'
    # Coordinate indices taken modulo 2*pi.
    periodic = ()
    # 'closed-form' or 'finite-difference'.
    connection = 'closed-form'
    complex_structure = False
    normal_pseudohermitian = False

    def __new__(cls, meta=None):
        overrides = {}

        if meta:
            for override_name in dir(meta):
                if not override_name.startswith('_'):
                    overrides[override_name] = getattr(meta, override_name)

        return object.__new__(type('ModelOptions', (cls,), overrides))


class ManifoldMetaclass(type):
    """
    Builds ``_meta`` from the inner ``Meta`` class, inheriting the options of
    the parent model when a subclass does not declare its own.
    """

    def __new__(cls, name, bases, attrs):
        new_class = super(ManifoldMetaclass, cls).__new__(cls, name, bases,
                                                          attrs)
        opts = attrs.get('Meta', None)
        parent = getattr(new_class, '_meta', None)

        if opts is None and parent is not None:
            new_class._meta = parent
        else:
            new_class._meta = ModelOptions(opts)

        return new_class


@dataclass(frozen=True)
class ConnectionData(object):
    """
    ``christoffel(p)`` returns ``G[m, b, a]`` with
    ``nabla_{E_b} E_a = sum_m G[m, b, a] E_m``; ``torsion(p, X, Y)`` works
    on ambient vectors.
    """
    christoffel: Callable
    torsion: Callable
    mode: str = 'closed-form'


@dataclass(frozen=True)
class DilationData(object):
    weights: Tuple[float, ...]
    flow: Callable
    generator: VectorField
    Q: float = 0.0


@dataclass
class TorsionComponents(object):
    """
    Torsion of the adapted connection against a graded orthonormal frame
    ``E_0 .. E_k, T_1 .. T_l``::

        C[b, j, i] = 1/2 <Tor(E_j, E_i), T_b>
        A[j, i, a] = <Tor(E_i, T_a), E_j>
        B[j, a, b] = 1/2 <Tor(T_a, T_b), E_j>
        D[b, j, a] = <Tor(E_j, T_a), T_b>
        E[b, a, c] = 1/2 <Tor(T_a, T_c), T_b>
    """
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    frame: np.ndarray = field(repr=False, default=None)


class ManifoldModel(object, metaclass=ManifoldMetaclass):
    """
    A sub-Riemannian manifold with a vertical complement on one global chart.

    ``horizontal`` and ``vertical`` are lists of ``VectorField``.
    ``partition`` groups vertical indices (0-based) into rigidity classes,
    singletons by default. ``christoffel`` maps a point to ``G[m, b, a]``;
    when omitted the frame is parallel (all symbols vanish).
    """

    class Meta:
        name = 'manifold'

    def __init__(self, dimension, horizontal, vertical, partition=None,
                 christoffel=None, dilation=None):
        self.dim_total = int(dimension)
        self.horizontal = list(horizontal)
        self.vertical = list(vertical)
        self.dim_horizontal = len(self.horizontal)
        self.dim_vertical = len(self.vertical)

        if self.dim_horizontal + self.dim_vertical != self.dim_total:
            raise PreconditionError(
                'frame has %d fields for a %d dimensional manifold' %
                (self.dim_horizontal + self.dim_vertical, self.dim_total))

        if partition is None:
            partition = [[beta] for beta in range(self.dim_vertical)]
        self.rigidity_partition = [tuple(cls) for cls in partition]
        covered = sorted(beta for cls in self.rigidity_partition
                         for beta in cls)
        if covered != list(range(self.dim_vertical)):
            raise PreconditionError('partition %r does not cover %d vertical '
                                    'fields' % (partition, self.dim_vertical))

        self._christoffel = christoffel

        if dilation is not None and not dilation.Q:
            dilation = DilationData(
                weights=tuple(dilation.weights), flow=dilation.flow,
                generator=dilation.generator,
                Q=self.dim_horizontal + float(sum(dilation.weights)))
        self.dilation = dilation

    def __repr__(self):
        return '<%s %s dim=%d>' % (self.__class__.__name__, self._meta.name,
                                   self.dim_total)

    @property
    def name(self):
        return self._meta.name

    @property
    def frame_fields(self):
        return self.horizontal + self.vertical

    @property
    def horizontal_slice(self):
        return slice(0, self.dim_horizontal)

    @property
    def vertical_slice(self):
        return slice(self.dim_horizontal, self.dim_total)

    @property
    def connection(self):
        return ConnectionData(christoffel=self.christoffel,
                              torsion=self.torsion, mode=self._meta.connection)

    def check_point(self, p):
        """
        Validate ``p`` against the chart and wrap periodic coordinates.
        """
        p = as_point(p)
        if p.size != self.dim_total:
            raise ChartError('point %r has %d coordinates, expected %d' %
                             (p, p.size, self.dim_total))
        if not np.all(np.isfinite(p)):
            raise ChartError('point %r is not finite' % (p,))
        if self._meta.periodic:
            p = p.copy()
            for index in self._meta.periodic:
                p[index] = np.mod(p[index] + np.pi, 2 * np.pi) - np.pi
        return p

    # Frame algebra

    def frame(self, p):
        """
        Matrix whose columns are ``E_a(p)`` in coordinates.
        """
        return np.column_stack([E(p) for E in self.frame_fields])

    def coefficients(self, p, v):
        return np.linalg.solve(self.frame(p), as_point(v))

    def vector(self, p, coefficients):
        return self.frame(p).dot(coefficients)

    def metric(self, p, X, Y):
        """
        ``<X, Y>`` of two ambient vectors at ``p``.
        """
        F = self.frame(p)
        return float(np.linalg.solve(F, X).dot(np.linalg.solve(F, Y)))

    def structure_constants(self, p):
        """
        ``c[m, a, b]`` with ``[E_a, E_b] = sum_m c[m, a, b] E_m``.
        """
        F = self.frame(p)
        jacobians = np.stack([E.jacobian(p) for E in self.frame_fields])
        # JF[b, i, a] = (J_b E_a)_i
        JF = np.einsum('bic,ca->bia', jacobians, F)
        brackets = JF - JF.transpose(2, 1, 0)
        # brackets[b, i, a] = [E_a, E_b]_i
        c = np.linalg.solve(F, brackets.transpose(1, 2, 0).reshape(
            self.dim_total, -1)).reshape(self.dim_total, self.dim_total,
                                         self.dim_total)
        return c

    def christoffel(self, p):
        if self._christoffel is None:
            return np.zeros((self.dim_total,) * 3)
        return np.asarray(self._christoffel(as_point(p)), dtype=float)

    def torsion_tensor(self, p):
        """
        ``Tor[m, i, j]``: coefficients of ``Tor(E_i, E_j)``.
        """
        G = self.christoffel(p)
        return G - G.transpose(0, 2, 1) - self.structure_constants(p)

    def torsion_coefficients(self, p, u, v, tensor=None):
        T = self.torsion_tensor(p) if tensor is None else tensor
        return np.einsum('mij,i,j->m', T, u, v)

    def torsion(self, p, X, Y):
        """
        ``Tor(X, Y)`` of two ambient vectors, as an ambient vector.
        """
        F = self.frame(p)
        u = np.linalg.solve(F, X)
        v = np.linalg.solve(F, Y)
        return F.dot(self.torsion_coefficients(p, u, v))

    def covariant_derivative(self, p, u, v, dv):
        """
        Coefficients of ``nabla_U V`` where ``u`` holds the coefficients of
        ``U`` and ``dv`` the derivative of the coefficients of ``V`` along
        ``U``.
        """
        return dv + np.einsum('mba,b,a->m', self.christoffel(p), u, v)

    def curvature(self, p):
        """
        ``R[n, a, b, c]`` with ``R(E_a, E_b) E_c = sum_n R[n, a, b, c] E_n``.
        """
        G = self.christoffel(p)
        c = self.structure_constants(p)
        if self._christoffel is None:
            dG = np.zeros((self.dim_total,) * 4)
        else:
            F = self.frame(p)
            dG = np.stack([fd_directional(self.christoffel, p, F[:, a])
                           for a in range(self.dim_total)])
        # dG[a, n, b, c] = E_a(G[n, b, c])
        R = (np.einsum('anbc->nabc', dG) - np.einsum('bnac->nabc', dG) +
             np.einsum('mbc,nam->nabc', G, G) -
             np.einsum('mac,nbm->nabc', G, G) -
             np.einsum('mab,nmc->nabc', c, G))
        return R

    # Invariant checks

    def rigidity_residual(self, p):
        """
        ``max |<[X, T_a], T_b>|`` over horizontal ``X`` and ``a ~ b``.
        """
        c = self.structure_constants(p)
        k = self.dim_horizontal
        worst = 0.0
        for cls in self.rigidity_partition:
            for alpha in cls:
                for beta in cls:
                    worst = max(worst, float(np.max(np.abs(
                        c[k + beta, :k, k + alpha]))))
        return worst

    def ensure_rigid(self, points, tolerance=1e-8):
        for p in points:
            residual = self.rigidity_residual(p)
            if residual > tolerance:
                raise NotRigid('%s is not vertically rigid at %r '
                               '(residual %.3g)' % (self.name, p, residual))

    def connection_residuals(self, p):
        """
        Residuals of the adapted connection conditions at ``p``: parallel
        vertical frame, vertical horizontal torsion and metric compatibility.
        """
        G = self.christoffel(p)
        k = self.dim_horizontal
        T = self.torsion_tensor(p)
        return {
            'vertical_parallel': float(np.max(np.abs(G[:, :, k:]))),
            'horizontal_torsion': float(np.max(np.abs(T[:k, :k, :k]))),
            'metric_compatibility': float(np.max(np.abs(
                G + G.transpose(2, 1, 0)))),
        }

    def frame_determinant(self, p):
        """
        ``|det|`` of the coordinate frame; nonzero where it is a basis.
        """
        return abs(np.linalg.det(self.frame(p)))

    def div_correction(self, p, nu):
        """
        ``sum_b <[nu, T_b], T_b>`` for a horizontal coefficient vector.
        """
        c = self.structure_constants(p)
        k = self.dim_horizontal
        total = 0.0
        for beta in range(self.dim_vertical):
            total += float(c[k + beta, :k, k + beta].dot(nu[:k]))
        return total

    def dilation_residuals(self, p, lam, mu=0.3):
        """
        The three dilating flow properties at ``p``: horizontal vectors scale
        by ``e^lam``, ``T_b`` by ``e^(gamma_b lam)``, and the flows compose.
        """
        if self.dilation is None:
            raise PreconditionError('%s has no dilating flow' % self.name)
        flow = self.dilation.flow
        p = as_point(p)
        q = flow(p, lam)
        push = fd_jacobian(lambda x: flow(x, lam), p)
        Fq = self.frame(q)
        horizontal = 0.0
        for X in self.horizontal:
            image = np.linalg.solve(Fq, push.dot(X(p)))
            horizontal = max(horizontal,
                             float(np.max(np.abs(image[self.vertical_slice]))),
                             abs(np.linalg.norm(image) - np.exp(lam)))
        vertical = 0.0
        for weight, T in zip(self.dilation.weights, self.vertical):
            image = push.dot(T(p))
            vertical = max(vertical, float(np.max(np.abs(
                image - np.exp(weight * lam) * T(q)))))
        group = float(np.max(np.abs(flow(flow(p, mu), lam) -
                                    flow(p, lam + mu))))
        return {'horizontal': horizontal, 'vertical': vertical,
                'group': group}

    @classmethod
    def from_horizontal(cls, horizontal, dimension, sample=None, **kwargs):
        """
        Complete a horizontal family to a frame with coordinate fields,
        picking the first coordinate directions that keep the frame
        independent at ``sample``.
        """
        sample = np.zeros(dimension) if sample is None else as_point(sample)
        columns = [X(sample) for X in horizontal]
        vertical = []
        for index in range(dimension):
            if len(columns) == dimension:
                break
            direction = np.zeros(dimension)
            direction[index] = 1.0
            trial = np.column_stack(columns + [direction])
            if np.linalg.matrix_rank(trial) == trial.shape[1]:
                columns.append(direction)
                vertical.append(_constant_field(direction, 'd%d' % (index + 1)))
        logger.debug('completed %d horizontal fields with %s',
                     len(horizontal), [T.name for T in vertical])
        return cls(dimension, horizontal, vertical, **kwargs)


def _constant_field(direction, name):
    direction = np.array(direction, dtype=float)
    n = direction.size
    return VectorField(lambda p: direction.copy(),
                       jacobian=lambda p: np.zeros((n, n)), name=name)


def integrate_flow(generator, p, lam):
    """
    Flow of ``generator`` for time ``lam``.
    """
    if lam == 0:
        return as_point(p)
    solution = solve_ivp(lambda s, x: generator(x), (0.0, lam), as_point(p),
                         rtol=1e-12, atol=1e-12)
    return solution.y[:, -1]


class Heisenberg(ManifoldModel):
    """
    ``H^n`` with coordinates ``(x_1 .. x_n, y_1 .. y_n, t)``, horizontal frame
    ``X_j = d_xj - y_j/2 d_t``, ``Y_j = d_yj + x_j/2 d_t`` and ``T = d_t``.
    The frame is parallel for the adapted connection.
    """

    class Meta:
        name = 'heisenberg'
        complex_structure = True
        normal_pseudohermitian = True

    def __init__(self, n=1):
        n = int(n)
        if n < 1:
            raise PreconditionError('Heisenberg group needs n >= 1, got %d' % n)
        self.n = n
        dim = 2 * n + 1
        horizontal = []
        for j in range(n):
            horizontal.append(self._frame_field(dim, j, n + j, -0.5,
                                                'X%d' % (j + 1)))
        for j in range(n):
            horizontal.append(self._frame_field(dim, n + j, j, 0.5,
                                                'Y%d' % (j + 1)))
        vertical = [_constant_field(np.eye(dim)[-1], 'T')]

        weights = np.concatenate([np.ones(2 * n), [2.0]])
        generator = VectorField(lambda p: weights * p,
                                jacobian=lambda p: np.diag(weights),
                                name='dilation')
        dilation = DilationData(weights=(2.0,),
                                flow=lambda p, lam: np.exp(lam * weights) *
                                as_point(p),
                                generator=generator)
        super(Heisenberg, self).__init__(dim, horizontal, vertical,
                                         dilation=dilation)

    @staticmethod
    def _frame_field(dim, axis, other, coefficient, name):
        def components(p):
            v = np.zeros(dim)
            v[axis] = 1.0
            v[-1] = coefficient * p[other]
            return v

        def jacobian(p):
            J = np.zeros((dim, dim))
            J[-1, other] = coefficient
            return J

        return VectorField(components, jacobian=jacobian, name=name)

    def complex_structure(self, coefficients):
        """
        ``J`` on frame coefficients: ``J X_j = -Y_j`` and ``J Y_j = X_j``.
        """
        n = self.n
        out = np.zeros_like(coefficients)
        out[:n] = coefficients[n:2 * n]
        out[n:2 * n] = -coefficients[:n]
        return out


class Rototranslation(ManifoldModel):
    """
    ``R^2 x S^1`` with coordinates ``(x, y, theta)``,
    ``X_1 = cos d_x + sin d_y``, ``X_2 = d_theta`` and
    ``T = sin d_x - cos d_y``.
    """

    class Meta:
        name = 'rototranslation'
        periodic = (2,)

    def __init__(self):
        def x1(p):
            return np.array([np.cos(p[2]), np.sin(p[2]), 0.0])

        def x1_jacobian(p):
            J = np.zeros((3, 3))
            J[0, 2] = -np.sin(p[2])
            J[1, 2] = np.cos(p[2])
            return J

        def t(p):
            return np.array([np.sin(p[2]), -np.cos(p[2]), 0.0])

        def t_jacobian(p):
            J = np.zeros((3, 3))
            J[0, 2] = np.cos(p[2])
            J[1, 2] = np.sin(p[2])
            return J

        horizontal = [VectorField(x1, jacobian=x1_jacobian, name='X1'),
                      _constant_field([0.0, 0.0, 1.0], 'X2')]
        vertical = [VectorField(t, jacobian=t_jacobian, name='T')]
        super(Rototranslation, self).__init__(3, horizontal, vertical)


BUILTINS = {
    'heisenberg': Heisenberg,
    'rototranslation': Rototranslation,
}


def builtin_heisenberg(n=1):
    return Heisenberg(n)


def builtin_rototranslation():
    return Rototranslation()


def _resolve_field(m, X):
    if isinstance(X, VectorField):
        return X
    return m.frame_fields[int(X)]


def bracket(m, X, Y, p):
    """
    ``[X, Y](p)`` for frame indices or ``VectorField`` instances, in
    coordinates.
    """
    p = m.check_point(p)
    X = _resolve_field(m, X)
    Y = _resolve_field(m, Y)
    if X is Y:
        return np.zeros(m.dim_total)
    return X.bracket(Y, p)


def check_graded_frame(m, frame, tolerance=None):
    """
    ``frame`` holds coefficient rows, horizontal block first. Raises
    ``NonOrthonormalFrame`` unless it is orthonormal and graded.
    """
    tolerance = settings.FRAME_TOLERANCE if tolerance is None else tolerance
    frame = np.atleast_2d(np.asarray(frame, dtype=float))
    k = m.dim_horizontal
    if frame.shape != (m.dim_total, m.dim_total):
        raise NonOrthonormalFrame('frame has shape %r' % (frame.shape,))
    gram = frame.dot(frame.T)
    residual = float(np.max(np.abs(gram - np.eye(m.dim_total))))
    mixing = max(float(np.max(np.abs(frame[:k, k:]))) if k < m.dim_total
                 else 0.0,
                 float(np.max(np.abs(frame[k:, :k]))) if k < m.dim_total
                 else 0.0)
    if residual > tolerance or mixing > tolerance:
        raise NonOrthonormalFrame('frame is not graded orthonormal (gram '
                                  'residual %.3g, mixing %.3g)' %
                                  (residual, mixing))
    return frame


def torsion_components(m, p, frame=None):
    """
    Evaluate the torsion tensors at ``p`` against a graded orthonormal frame
    given as coefficient rows (the model frame when omitted).
    """
    p = m.check_point(p)
    frame = np.eye(m.dim_total) if frame is None else check_graded_frame(m,
                                                                         frame)
    k = m.dim_horizontal
    T = m.torsion_tensor(p)
    # tor[x, y, :] = coefficients of Tor(F_x, F_y) projected on F
    tor = np.einsum('mij,xi,yj,zm->xyz', T, frame, frame, frame)
    H = slice(0, k)
    V = slice(k, m.dim_total)

    C = 0.5 * np.einsum('jib->bji', tor[H, H, V])
    A = np.einsum('iaj->jia', tor[H, V, H])
    B = 0.5 * np.einsum('abj->jab', tor[V, V, H])
    D = np.einsum('jab->bja', tor[H, V, V])
    E = 0.5 * np.einsum('acb->bac', tor[V, V, V])

    C = 0.5 * (C - C.transpose(0, 2, 1))
    B = 0.5 * (B - B.transpose(0, 2, 1))
    E = 0.5 * (E - E.transpose(0, 2, 1))
    return TorsionComponents(C=C, A=A, B=B, D=D, E=E, frame=frame)


def sample_points(m, count, radius=1.0, seed=0):
    """
    Deterministic sample points in the box ``[-radius, radius]^n``.
    """
    rng = np.random.default_rng(seed)
    return [m.check_point(q) for q in
            rng.uniform(-radius, radius, size=(count, m.dim_total))]
