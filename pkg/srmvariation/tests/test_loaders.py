import json
import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose

from srmvariation.exceptions import ParseError
from srmvariation.loaders import (load_manifold, load_points, load_surface,
                                  load_variation, read_document)
from srmvariation.models import Heisenberg, Rototranslation
from srmvariation.surfaces import LevelSet, ParamImmersion


H1 = {
    'version': 'srm-v1',
    'name': 'h1',
    'dimension': 3,
    'horizontal': [['1', '0', '-x2/2'], ['0', '1', 'x1/2']],
    'vertical': [['0', '0', '1']],
    'partition': [[1]],
    'dilation': {'coordinate_weights': [1, 1, 2]},
    'periodic': [],
}


class DocumentTest(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_reads_files(self):
        path = os.path.join(self.directory, 'h1.json')
        with open(path, 'w') as handle:
            json.dump(H1, handle)
        document, name = read_document(path)
        self.assertEqual(name, path)
        self.assertEqual(document['name'], 'h1')

    def test_syntax_error_location(self):
        """
        JSON errors carry the line and column of the offending token.
        """
        text = '{"version": "srm-v1",\n "n": }'
        with self.assertRaises(ParseError) as context:
            read_document(text)
        self.assertEqual(context.exception.line, 2)
        self.assertEqual(context.exception.column, 7)
        self.assertIn('line 2', str(context.exception))

    def test_version_is_required(self):
        with self.assertRaises(ParseError):
            read_document({'builtin': 'heisenberg'})
        with self.assertRaises(ParseError):
            read_document({'version': 'srm-v2', 'builtin': 'heisenberg'})
        with self.assertRaises(ParseError):
            read_document('[1, 2]')


class ManifoldLoaderTest(unittest.TestCase):

    def test_builtins(self):
        m = load_manifold({'version': 'srm-v1', 'builtin': 'heisenberg',
                           'n': 2})
        self.assertIsInstance(m, Heisenberg)
        self.assertEqual(m.dim_total, 5)
        roto = load_manifold('{"version": "srm-v1", '
                             '"builtin": "rototranslation"}')
        self.assertIsInstance(roto, Rototranslation)

    def test_unknown_builtin(self):
        with self.assertRaises(ParseError):
            load_manifold({'version': 'srm-v1', 'builtin': 'engel'})
        with self.assertRaises(ParseError):
            load_manifold({'version': 'srm-v1', 'builtin': 'rototranslation',
                           'n': 2})

    def test_custom_frame_matches_builtin(self):
        m = load_manifold(H1)
        h = Heisenberg(1)
        p = np.array([0.3, -0.7, 1.1])
        assert_allclose(m.frame(p), h.frame(p))
        assert_allclose(m.torsion_tensor(p), h.torsion_tensor(p), atol=1e-8)
        self.assertEqual(m.name, 'h1')
        self.assertEqual(m.dilation.Q, 4.0)
        assert_allclose(m.dilation.flow(p, np.log(2.0)),
                        [0.6, -1.4, 4.4])

    def test_periodic_indices(self):
        document = dict(H1, periodic=[3])
        self.assertEqual(tuple(load_manifold(document)._meta.periodic), (2,))

    def test_component_count(self):
        document = dict(H1, horizontal=[['1', '0'], ['0', '1', 'x1/2']])
        with self.assertRaises(ParseError):
            load_manifold(document)

    def test_frame_size(self):
        document = dict(H1, vertical=[])
        with self.assertRaises(ParseError):
            load_manifold(document)

    def test_bad_expression(self):
        document = dict(H1, vertical=[['0', '0', 'z']])
        with self.assertRaises(ParseError) as context:
            load_manifold(document)
        self.assertEqual(context.exception.column, 1)


class SurfaceLoaderTest(unittest.TestCase):

    def setUp(self):
        self.m = Heisenberg(1)

    def test_bubble(self):
        s = load_surface({'version': 'srm-v1', 'type': 'bubble', 'L': 2.0},
                         Heisenberg(2))
        self.assertEqual(s.radius, 2.0)
        self.assertTrue(s.rotational)

    def test_level_set_with_chart(self):
        s = load_surface({
            'version': 'srm-v1', 'type': 'level-set', 'phi': 'x1 - 1',
            'chart': {'components': ['1', 'u1', 'u2'],
                      'domain': [[-1, 1], [-1, 1]]},
        }, self.m)
        self.assertIsInstance(s, LevelSet)
        p = s.chart.point(np.array([0.5, 0.25]))
        assert_allclose(p, [1.0, 0.5, 0.25])
        self.assertAlmostEqual(s.phi(p), 0.0)

    def test_immersion(self):
        s = load_surface({
            'version': 'srm-v1', 'type': 'immersion',
            'components': ['u1', 'u2', '(u1^2 + u2^2)/2'],
            'domain': [[0.5, 1.5], [-0.5, 0.5]],
        }, self.m)
        self.assertIsInstance(s, ParamImmersion)

    def test_immersion_component_count(self):
        with self.assertRaises(ParseError):
            load_surface({'version': 'srm-v1', 'type': 'immersion',
                          'components': ['u1', 'u2'],
                          'domain': [[0, 1], [0, 1]]}, self.m)

    def test_bad_domain(self):
        with self.assertRaises(ParseError):
            load_surface({'version': 'srm-v1', 'type': 'immersion',
                          'components': ['u1', 'u2', '0'],
                          'domain': [0, 1]}, self.m)

    def test_unknown_type(self):
        with self.assertRaises(ParseError):
            load_surface({'version': 'srm-v1', 'type': 'torus'}, self.m)
        with self.assertRaises(ParseError):
            load_surface({'version': 'srm-v1'}, self.m)


class VariationLoaderTest(unittest.TestCase):

    def setUp(self):
        self.m = Heisenberg(1)

    def test_bare_expression(self):
        v = load_variation('x1^2 + x3', self.m)
        self.assertEqual(v.rho([2.0, 0.0, 1.0]), 5.0)
        self.assertEqual(v.support, 'away-from-char')

    def test_document(self):
        v = load_variation('{"version": "srm-v1", "rho0": "1", '
                           '"support": "over-char", "name": "unit"}', self.m)
        self.assertIsNone(v.rho)
        self.assertEqual(v.rho0([0.0, 0.0, 0.0]), 1.0)
        self.assertEqual(v.support, 'over-char')
        self.assertEqual(v.name, 'unit')

    def test_needs_a_speed(self):
        with self.assertRaises(ParseError):
            load_variation({'version': 'srm-v1'}, self.m)
        with self.assertRaises(ParseError):
            load_variation({'version': 'srm-v1', 'rho': '1',
                            'support': 'anywhere'}, self.m)


class PointLoaderTest(unittest.TestCase):

    def setUp(self):
        self.m = Heisenberg(1)

    def test_lists(self):
        points = load_points([[0, 0, 1], [1, 2, 3]], self.m)
        self.assertEqual(len(points), 2)
        assert_allclose(points[1], [1.0, 2.0, 3.0])
        points = load_points('[[0, 0, 1]]', self.m)
        assert_allclose(points[0], [0.0, 0.0, 1.0])

    def test_parameters(self):
        s = load_surface({
            'version': 'srm-v1', 'type': 'level-set', 'phi': 'x1',
            'chart': {'components': ['0', 'u1', 'u2'],
                      'domain': [[-1, 1], [-1, 1]]},
        }, self.m)
        points = load_points({'version': 'srm-v1',
                              'parameters': [[0.5, -0.5]]}, self.m, s)
        assert_allclose(points[0], [0.0, 0.5, -0.5])
        with self.assertRaises(ParseError):
            load_points({'version': 'srm-v1', 'parameters': [[0.5, -0.5]]},
                        self.m)

    def test_shape(self):
        with self.assertRaises(ParseError):
            load_points([[0, 0]], self.m)
