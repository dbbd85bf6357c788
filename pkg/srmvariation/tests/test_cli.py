import csv
import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

import numpy as np

from srmvariation.bubble import BubbleSpec
from srmvariation.cli import (EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_NOT_CMC,
                              EXIT_OK, build_parser, main)


H1 = json.dumps({'version': 'srm-v1', 'builtin': 'heisenberg', 'n': 1})

PLANE = json.dumps({
    'version': 'srm-v1', 'type': 'level-set', 'phi': 'x1',
    'chart': {'components': ['0', 'u1', 'u2'],
              'domain': [[-1, 1], [-1, 1]]},
})

PARABOLOID = json.dumps({
    'version': 'srm-v1', 'type': 'level-set',
    'phi': 'x3 - (x1^2 + x2^2)/2',
    'chart': {'components': ['u1', 'u2', '(u1^2 + u2^2)/2'],
              'domain': [[0.5, 1.5], [-0.5, 0.5]]},
})


class CommandTestCase(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def run_command(self, *argv):
        """
        ``(exit code, report or None, stderr text)``.
        """
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(list(argv))
        text = stdout.getvalue()
        return code, json.loads(text) if text else None, stderr.getvalue()


class ParserTest(unittest.TestCase):

    def test_subcommands(self):
        parser = build_parser()
        for command in ('curvature', 'perimeter', 'first-variation',
                        'second-variation', 'stability', 'minkowski-check',
                        'bubble-report', 'charset'):
            args = parser.parse_args([command])
            self.assertEqual(args.command, command)
        self.assertEqual(parser.parse_args(['verify', 'all']).suite, 'all')

    def test_command_is_required(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                build_parser().parse_args([])


class CurvatureCommandTest(CommandTestCase):

    def test_bubble_points(self):
        """
        ``H = 4/L`` away from the poles; the north pole is reported as
        characteristic.
        """
        r = np.sin(1.0)
        points = json.dumps([[r, 0, 0, 0, float(BubbleSpec(1.0).phi(r))],
                             [0, 0, 0, 0, np.pi / 8]])
        code, report, _ = self.run_command('curvature', '--L', '1',
                                           '--points', points)
        self.assertEqual(code, EXIT_OK)
        regular, pole = report['results']['points']
        self.assertAlmostEqual(regular['H'], 4.0, places=6)
        self.assertFalse(regular['characteristic'])
        self.assertTrue(pole['characteristic'])
        self.assertEqual(report['command'], 'curvature')

    def test_point_off_the_surface(self):
        code, report, _ = self.run_command('curvature', '--L', '1',
                                           '--points', '[[2, 0, 0, 0, 0]]')
        self.assertEqual(code, EXIT_FAILURE)
        self.assertEqual(len(report['results']['rejected']), 1)


class StabilityCommandTest(CommandTestCase):

    def test_vertical_plane_is_stable(self):
        path = os.path.join(self.directory, 'modes.csv')
        code, report, _ = self.run_command(
            'stability', '--manifold', H1, '--surface', PLANE,
            '--modes', '2', '--dump-csv', path)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['results']['stability']['verdict'], 'stable')
        self.assertIn('surface', report['inputs'])
        with open(path) as handle:
            self.assertEqual(handle.readline().strip(),
                             'mode,index,eigenvalue')

    def test_bubble_report_dumps_null_vector(self):
        """
        The CSV holds ``(theta, h)`` for the constrained minimizer, which
        follows ``cos(theta)``.
        """
        path = os.path.join(self.directory, 'null.csv')
        code, report, _ = self.run_command(
            'bubble-report', '--L', '1', '--modes', '2', '--resolution', '32',
            '--dump-csv', path)
        self.assertIn(code, (EXIT_OK, EXIT_INCONCLUSIVE))
        with open(path) as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['theta', 'h'])
        self.assertEqual(len(rows), 66)
        theta, h = np.array(rows[1:], dtype=float).T
        self.assertAlmostEqual(theta[0], 0.0)
        self.assertAlmostEqual(theta[-1], np.pi)
        self.assertGreater(np.corrcoef(h, np.cos(theta))[0, 1], 0.98)

    def test_paraboloid_is_not_cmc(self):
        code, report, _ = self.run_command(
            'stability', '--manifold', H1, '--surface', PARABOLOID,
            '--modes', '2')
        self.assertEqual(code, EXIT_NOT_CMC)
        self.assertEqual(report['results']['error'], 'not-cmc')
        self.assertGreater(report['results']['spread'], 1e-3)


class VariationCommandTest(CommandTestCase):

    def test_zero_variation(self):
        code, report, _ = self.run_command('first-variation', '--L', '1',
                                           '--order', '8', '--rho', '0')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['results']['first_variation']['value'], 0.0)

    def test_missing_variation(self):
        code, report, err = self.run_command('first-variation', '--L', '1')
        self.assertEqual(code, EXIT_FAILURE)
        self.assertIsNone(report)
        self.assertIn('--rho', err)


class OutputTest(CommandTestCase):

    def test_repeatable_output(self):
        first = self.run_command('perimeter', '--L', '1', '--order', '24')
        second = self.run_command('perimeter', '--L', '1', '--order', '24')
        self.assertEqual(first[1], second[1])
        self.assertNotIn('timing', first[1])
        self.assertAlmostEqual(first[1]['results']['perimeter']['value'],
                               3 * np.pi ** 3 / 8)

    def test_json_path_and_timing(self):
        path = os.path.join(self.directory, 'report.json')
        code, report, _ = self.run_command('perimeter', '--L', '1',
                                           '--order', '8', '--json', path,
                                           '--timing')
        self.assertEqual(code, EXIT_OK)
        self.assertIsNone(report)
        with open(path) as handle:
            data = json.load(handle)
        self.assertIn('timing', data)
        self.assertEqual(data['schema'], 'srm-report-v1')

    def test_malformed_definition(self):
        code, report, err = self.run_command('perimeter', '--surface',
                                             '{"version": ')
        self.assertEqual(code, EXIT_FAILURE)
        self.assertIn('parse error', err)

    def test_verify_fourier(self):
        code, report, _ = self.run_command('verify', 'fourier')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(report['results']['passed'])
