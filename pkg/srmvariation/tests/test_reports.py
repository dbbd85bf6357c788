import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from srmvariation import __version__
from srmvariation.reports import (SCHEMA, ReportEnvelope, canonical_json,
                                  digest_input, jsonable, write_csv)


class JsonableTest(unittest.TestCase):

    def test_numpy_values(self):
        value = jsonable({'a': np.float64(1.5), 'b': np.arange(3),
                          'c': np.bool_(True), 'd': np.int64(4)})
        self.assertEqual(value, {'a': 1.5, 'b': [0, 1, 2], 'c': True,
                                 'd': 4})
        self.assertIsInstance(value['b'][0], int)

    def test_non_finite(self):
        self.assertEqual(jsonable([np.nan, np.inf, 1.0]), [None, None, 1.0])

    def test_complex_and_objects(self):
        class Result(object):
            def to_dict(self):
                return {'z': 1 + 2j}

        self.assertEqual(jsonable(Result()), {'z': [1.0, 2.0]})

    def test_canonical_order(self):
        self.assertEqual(canonical_json({'b': 1, 'a': [1.0, 2]}),
                         '{"a":[1.0,2],"b":1}')


class EnvelopeTest(unittest.TestCase):

    def envelope(self, **kwargs):
        return ReportEnvelope(command='perimeter',
                              parameters={'L': 1.0, 'order': None},
                              results={'perimeter': {'value': np.pi}},
                              inputs={'surface': digest_input('{}')},
                              **kwargs)

    def test_deterministic(self):
        """
        Equal inputs serialize to equal bytes, with no wall clock unless
        timing was asked for.
        """
        first, second = self.envelope().to_json(), self.envelope().to_json()
        self.assertEqual(first, second)
        data = json.loads(first)
        self.assertNotIn('timing', data)
        self.assertEqual(data['schema'], SCHEMA)
        self.assertEqual(data['version'], __version__)
        self.assertIn('timing', json.loads(
            self.envelope(timing=0.25).to_json()))

    def test_round_trip(self):
        envelope = self.envelope(timing=1.0)
        parsed = ReportEnvelope.from_json(envelope.to_json())
        self.assertEqual(parsed.to_dict(), envelope.to_dict())

    def test_foreign_schema(self):
        with self.assertRaises(ValueError):
            ReportEnvelope.from_json('{"schema": "other"}')

    def test_digest(self):
        self.assertEqual(digest_input('x1'), digest_input('x1'))
        self.assertNotEqual(digest_input('x1'), digest_input('x2'))
        self.assertEqual(digest_input({'b': 1, 'a': 2}),
                         digest_input({'a': 2, 'b': 1}))
        self.assertEqual(len(digest_input('x1')), 64)


class CsvTest(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_write(self):
        path = os.path.join(self.directory, 'plots', 'density.csv')
        write_csv(path, ['theta', 'value'], [(0.1, np.float64(1 / 3)),
                                             (0.2, 2)])
        with open(path) as handle:
            lines = handle.read().splitlines()
        self.assertEqual(lines[0], 'theta,value')
        self.assertEqual(lines[1], '0.1,%r' % (1 / 3))
        self.assertEqual(lines[2], '0.2,2')
