import unittest

import numpy as np
from numpy.testing import assert_allclose

from srmvariation.bubble import (bubble_closed_forms, bubble_perimeter,
                                 bubble_volume)
from srmvariation.catalog import (chart_samples, paraboloid,
                                  rototranslation_graph,
                                  rototranslation_plane, vertical_plane)
from srmvariation.geometry import (cmc_spread, curvature_data, div_nu,
                                   div_sigma_nu, enclosed_volume,
                                   mean_curvature, paired_eigenvalues,
                                   perimeter, ricci_nu_nu, sample_curvature,
                                   second_fundamental_form)
from srmvariation.models import Heisenberg, Rototranslation
from srmvariation.surfaces import bubble, surface_frame


class BubbleCurvatureTest(unittest.TestCase):
    """
    The generic pipeline against the closed forms of the bubble.
    """

    def check_radius(self, L, r):
        m = Heisenberg(2)
        s = bubble(L, 2)
        expected = bubble_closed_forms(L, r)
        p = np.array([r, 0.0, 0.0, 0.0, expected.phi])
        frame = surface_frame(m, s, p)
        data = curvature_data(m, s, p, frame)
        self.assertAlmostEqual(data.H, 4 / L, places=8)
        assert_allclose(data.trace_II0_sq, expected.trace_II0_sq, rtol=1e-7,
                        atol=1e-12)
        assert_allclose(abs(frame.a[0]), expected.a, rtol=1e-7)
        assert_allclose(frame.N0_norm, expected.N0_norm, rtol=1e-7)
        assert_allclose(data.eigenvalues, expected.eigenvalues, rtol=1e-7)

    def test_unit_bubble(self):
        for r in (0.1, 0.5, 0.9):
            self.check_radius(1.0, r)

    def test_other_radii(self):
        self.check_radius(0.5, 0.2)
        self.check_radius(2.0, 1.5)

    def test_second_fundamental_form(self):
        """
        II0 is 3 by 3 in H^2 with trace H, and the adapted connection of
        the Heisenberg group is flat.
        """
        m = Heisenberg(2)
        s = bubble(1.0, 2)
        p = np.array([0.5, 0.0, 0.0, 0.0, bubble_closed_forms(1.0, 0.5).phi])
        II0 = second_fundamental_form(m, s, p)
        self.assertEqual(II0.shape, (3, 3))
        self.assertAlmostEqual(np.trace(II0), mean_curvature(m, s, p),
                               places=12)
        self.assertAlmostEqual(ricci_nu_nu(m, s, p), 0.0, places=12)

    def test_constant_mean_curvature(self):
        m = Heisenberg(2)
        mean, spread = cmc_spread(m, bubble(1.0, 2), order=24)
        self.assertAlmostEqual(mean, 4.0, places=7)
        self.assertLess(spread, 1e-7)

    def test_perimeter_and_volume(self):
        m = Heisenberg(2)
        s = bubble(1.0, 2)
        P0 = perimeter(m, s, order=24)
        assert_allclose(P0.value, bubble_perimeter(1.0), rtol=1e-10)
        assert_allclose(P0.value, 3 * np.pi ** 3 / 8, rtol=1e-10)
        assert_allclose(enclosed_volume(m, s, 24).value, bubble_volume(1.0),
                        rtol=1e-8)
        assert_allclose(enclosed_volume(m, s, 24, method='slab').value,
                        bubble_volume(1.0), rtol=1e-8)

    def test_pole_is_skipped(self):
        m = Heisenberg(2)
        s = bubble(1.0, 2)
        entries = sample_curvature(m, s, [s.chart.point(0.0),
                                          s.chart.point(1.0)])
        self.assertIsNone(entries[0][1])
        self.assertAlmostEqual(entries[1][1].H, 4.0, places=8)


class MinimalSurfaceTest(unittest.TestCase):

    def test_vertical_plane(self):
        m = Heisenberg(1)
        s = vertical_plane()
        data = curvature_data(m, s, s.chart.point([0.1, 0.7]))
        self.assertAlmostEqual(data.H, 0.0)
        self.assertAlmostEqual(data.div_nu, 0.0)

    def test_rototranslation_plane(self):
        m = Rototranslation()
        s = rototranslation_plane()
        for p in chart_samples(s, 5):
            self.assertAlmostEqual(curvature_data(m, s, p).H, 0.0, places=9)


class DivergenceTest(unittest.TestCase):

    def test_div_nu_equals_surface_divergence(self):
        """
        ``div nu`` and its tangential divergence agree on every builtin.
        """
        cases = [(Heisenberg(1), paraboloid(1)),
                 (Heisenberg(2), paraboloid(2)),
                 (Rototranslation(), rototranslation_graph())]
        for m, s in cases:
            for p in chart_samples(s, 10, seed=3):
                frame = surface_frame(m, s, p)
                self.assertLess(abs(div_nu(m, s, p, frame) -
                                    div_sigma_nu(m, s, p, frame)), 1e-6)
                self.assertLess(abs(m.div_correction(p, frame.nu)), 1e-10)

    def test_paraboloid_is_not_cmc(self):
        m = Heisenberg(1)
        mean, spread = cmc_spread(m, paraboloid(1), order=8)
        self.assertGreater(spread, 1e-3)


class PairedEigenvaluesTest(unittest.TestCase):

    def test_conjugates_are_adjacent(self):
        matrix = np.array([[2.0, 0.0, 0.0],
                           [0.0, 1.0, -0.5],
                           [0.0, 0.5, 1.0]])
        values = paired_eigenvalues(matrix)
        assert_allclose(values, [2.0, 1.0 + 0.5j, 1.0 - 0.5j])
