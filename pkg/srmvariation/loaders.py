"""
Readers for ``srm-v1`` definition files.

A manifold file is either a builtin::

    {"version": "srm-v1", "builtin": "heisenberg", "n": 2}

or a frame given by component expressions in ``x1 .. xn``::

    {"version": "srm-v1", "name": "h1", "dimension": 3,
     "horizontal": [["1", "0", "-x2/2"], ["0", "1", "x1/2"]],
     "vertical": [["0", "0", "1"]],
     "partition": [[1]],
     "dilation": {"coordinate_weights": [1, 1, 2]},
     "periodic": []}

Vertical indices in ``partition`` and coordinate indices in ``periodic``
are 1-based. The adapted connection of a loaded frame is the one making
the frame parallel.

A surface file has a ``type``: ``level-set`` (``phi`` in ``x1 .. xn`` and
an optional ``chart``), ``immersion`` (``components`` in ``u1 .. ud`` and
a ``domain`` box) or ``bubble`` (``L`` and ``n``).
"""
import json
import logging
import os

import numpy as np

from srmvariation.exceptions import ParseError, SRMError
from srmvariation.expressions import (Expression, compile_field,
                                      compile_scalar, variable_names)
from srmvariation.fields import VectorField
from srmvariation.models import BUILTINS, DilationData, ManifoldModel
from srmvariation.surfaces import Chart, LevelSet, ParamImmersion, bubble
from srmvariation.variation import VariationField


logger = logging.getLogger(__name__)

VERSION = 'srm-v1'


def read_document(source):
    """
    Parse ``source`` (a path, a JSON string or an already decoded ``dict``)
    and check its version. Returns ``(document, name)``.
    """
    if isinstance(source, dict):
        document, name = source, '<dict>'
    else:
        text, name = source, '<string>'
        if os.path.exists(source):
            name = source
            with open(source) as handle:
                text = handle.read()
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, column=exc.colno,
                             source=name)
    if not isinstance(document, dict):
        raise ParseError('top level must be an object', source=name)
    version = document.get('version')
    if version != VERSION:
        raise ParseError('unsupported version %r, expected %r' %
                         (version, VERSION), source=name)
    return document, name


def _require(document, key, name):
    try:
        return document[key]
    except KeyError:
        raise ParseError('missing field %r' % key, source=name)


def _field(texts, variables, name, label):
    if not isinstance(texts, list) or len(texts) != len(variables):
        raise ParseError('%s must list %d components' %
                         (label, len(variables)), source=name)
    return compile_field(texts, variables, '%s:%s' % (name, label),
                         name=label)


def _model_class(name, periodic):
    meta = type('Meta', (object,), {'name': name,
                                    'periodic': tuple(periodic),
                                    'connection': 'finite-difference'})
    return type('LoadedManifold', (ManifoldModel,), {'Meta': meta})


def load_manifold(source):
    """
    Build a ``ManifoldModel`` from an ``srm-v1`` manifold definition.
    """
    document, name = read_document(source)
    builtin = document.get('builtin')
    if builtin is not None:
        try:
            cls = BUILTINS[builtin]
        except KeyError:
            raise ParseError('unknown builtin %r' % builtin, source=name)
        kwargs = {}
        if 'n' in document:
            kwargs['n'] = int(document['n'])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ParseError(str(exc), source=name)

    dimension = int(_require(document, 'dimension', name))
    variables = variable_names('x', dimension)
    horizontal = [_field(texts, variables, name, 'horizontal[%d]' % i)
                  for i, texts in enumerate(_require(document, 'horizontal',
                                                     name))]
    vertical = [_field(texts, variables, name, 'vertical[%d]' % i)
                for i, texts in enumerate(document.get('vertical', []))]
    partition = document.get('partition')
    if partition is not None:
        partition = [[int(beta) - 1 for beta in cls] for cls in partition]
    periodic = [int(index) - 1 for index in document.get('periodic', [])]

    dilation = None
    spec = document.get('dilation')
    if spec is not None:
        weights = np.array(_require(spec, 'coordinate_weights', name),
                           dtype=float)
        if weights.size != dimension:
            raise ParseError('coordinate_weights must have %d entries' %
                             dimension, source=name)
        vertical_weights = spec.get('weights')
        if vertical_weights is None:
            vertical_weights = weights[len(horizontal):]
        generator = VectorField(lambda p: weights * p,
                                jacobian=lambda p: np.diag(weights),
                                name='dilation')
        dilation = DilationData(
            weights=tuple(float(w) for w in vertical_weights),
            flow=lambda p, lam: np.exp(lam * weights) * np.asarray(p),
            generator=generator)

    cls = _model_class(document.get('name', 'loaded'), periodic)
    try:
        m = cls(dimension, horizontal, vertical, partition=partition,
                dilation=dilation)
    except SRMError as exc:
        raise ParseError(str(exc), source=name)
    logger.info('loaded %r from %s', m, name)
    return m


def _domain(document, name):
    domain = _require(document, 'domain', name)
    try:
        return [(float(a), float(b)) for a, b in domain]
    except (TypeError, ValueError):
        raise ParseError('domain must be a list of [lower, upper] pairs',
                         source=name)


def load_surface(source, m):
    """
    Build a ``Hypersurface`` in ``m`` from an ``srm-v1`` surface definition.
    """
    document, name = read_document(source)
    kind = _require(document, 'type', name)
    orientation = int(document.get('orientation', 1))

    if kind == 'bubble':
        return bubble(float(_require(document, 'L', name)),
                      int(document.get('n', 2)))

    if kind == 'level-set':
        variables = variable_names('x', m.dim_total)
        phi = compile_scalar(_require(document, 'phi', name), variables,
                             '%s:phi' % name, name='phi')
        chart = None
        if 'chart' in document:
            spec = document['chart']
            domain = _domain(spec, name)
            parameters = variable_names('u', len(domain))
            mapping = compile_field(_require(spec, 'components', name),
                                    parameters, '%s:chart' % name)
            chart = Chart(mapping, domain, jacobian=mapping.jacobian)
        return LevelSet(phi, chart=chart,
                        orientation=orientation,
                        tolerance=float(document.get('tolerance', 1e-8)))

    if kind == 'immersion':
        domain = _domain(document, name)
        parameters = variable_names('u', len(domain))
        components = _require(document, 'components', name)
        if len(components) != m.dim_total:
            raise ParseError('immersion needs %d components' % m.dim_total,
                             source=name)
        mapping = compile_field(components, parameters,
                                '%s:components' % name)
        return ParamImmersion(mapping, domain, jacobian=mapping.jacobian,
                              orientation=orientation,
                              tolerance=float(document.get('tolerance',
                                                           1e-8)))

    raise ParseError('unknown surface type %r' % kind, source=name)


def load_variation(source, m):
    """
    ``{"rho": expr}`` or ``{"rho0": expr}`` in ``x1 .. xn`` plus an optional
    ``support`` (``away-from-char`` or ``over-char``).
    """
    if isinstance(source, str) and not os.path.exists(source) and \
            not source.lstrip().startswith('{'):
        document, name = {'version': VERSION, 'rho': source}, '<rho>'
    else:
        document, name = read_document(source)
    variables = variable_names('x', m.dim_total)
    kwargs = {}
    for key in ('rho', 'rho0'):
        if key in document:
            kwargs[key] = Expression(document[key], variables,
                                     '%s:%s' % (name, key))
    if not kwargs:
        raise ParseError('variation needs rho or rho0', source=name)
    try:
        return VariationField(support=document.get('support',
                                                   'away-from-char'),
                              name=document.get('name', 'rho'), **kwargs)
    except SRMError as exc:
        raise ParseError(str(exc), source=name)


def load_points(source, m, s=None):
    """
    Points given as ``{"points": [...]}``, ``{"parameters": [...]}`` (mapped
    through the chart of ``s``) or a bare list of points.
    """
    if isinstance(source, list):
        document, name = {'points': source}, '<list>'
    else:
        if isinstance(source, str) and source.lstrip().startswith('['):
            source = '{"version": "%s", "points": %s}' % (VERSION, source)
        document, name = read_document(source)
    if 'parameters' in document:
        if s is None or s.chart is None:
            raise ParseError('parameters need a surface with a chart',
                             source=name)
        return [s.chart.point(np.atleast_1d(np.asarray(xi, dtype=float)))
                for xi in document['parameters']]
    points = _require(document, 'points', name)
    out = []
    for index, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        if p.shape != (m.dim_total,):
            raise ParseError('point %d has shape %r' % (index, p.shape),
                             source=name)
        out.append(p)
    return out


__all__ = ['VERSION', 'read_document', 'load_manifold', 'load_surface',
           'load_variation', 'load_points']
