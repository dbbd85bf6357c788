import os
import unittest

from srmvariation.settings import thread_count


class ThreadCountTest(unittest.TestCase):

    def test_environment(self):
        self.assertEqual(thread_count({'SRM_THREADS': '3'}), 3)
        self.assertEqual(thread_count({'SRM_THREADS': '0'}), 1)
        self.assertEqual(thread_count({}), os.cpu_count() or 1)

    def test_malformed_value(self):
        """
        A value that is not an integer falls back to the CPU count.
        """
        with self.assertLogs('srmvariation.settings', 'WARNING') as logs:
            count = thread_count({'SRM_THREADS': 'four'})
        self.assertEqual(count, os.cpu_count() or 1)
        self.assertIn('four', logs.output[0])
