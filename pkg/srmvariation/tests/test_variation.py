import unittest

import numpy as np
from numpy.testing import assert_allclose

from srmvariation.catalog import (bump, chart_samples, first_variation_cases,
                                  paraboloid, rototranslation_plane,
                                  second_variation_cases, vertical_plane)
from srmvariation.exceptions import NotCMC, NotRigid, PreconditionError
from srmvariation.models import Heisenberg, ManifoldModel, Rototranslation
from srmvariation.fields import VectorField
from srmvariation.surfaces import bubble, surface_frame
from srmvariation.variation import (ModeResult, VariationField,
                                    assemble_chart_form,
                                    boundary_limit_term,
                                    constrained_spectrum,
                                    eigenvalue_converged, family_perimeter,
                                    first_variation,
                                    first_variation_fd_oracle,
                                    heisenberg_potential, minkowski_check,
                                    relative_change,
                                    rototranslation_level_set_potential,
                                    rototranslation_potential,
                                    second_variation,
                                    second_variation_fd_oracle,
                                    second_variation_potential,
                                    stability_spectrum, verdict)


def case(name, cases):
    return next(item for item in cases if item.name == name)


class VariationFieldTest(unittest.TestCase):

    def test_needs_a_speed(self):
        with self.assertRaises(PreconditionError):
            VariationField()
        with self.assertRaises(PreconditionError):
            VariationField(rho=lambda p: 1.0, support='everywhere')

    def test_rho_from_rho0(self):
        """
        ``rho = |N0| rho0``.
        """
        m = Rototranslation()
        s = rototranslation_plane()
        p = s.chart.point([0.0, 1.0])
        v = VariationField(rho0=lambda q: 2.0)
        self.assertAlmostEqual(v.rho_at(m, s, p), 2.0 * np.sin(1.0))
        w = VariationField(rho=lambda q: 2.0 * np.sin(1.0))
        self.assertAlmostEqual(w.rho0_at(m, s, p), 2.0)


class FirstVariationTest(unittest.TestCase):

    def test_zero_variation(self):
        m = Heisenberg(1)
        s = paraboloid(1)
        v = VariationField(rho=lambda p: 0.0)
        self.assertEqual(first_variation(m, s, v, order=4).value, 0.0)

    def test_minimal_plane(self):
        item = case('vertical-plane', first_variation_cases())
        result = first_variation(item.m, item.s, item.v, order=8)
        self.assertLess(abs(result.value), 1e-10)

    def test_support_touching_boundary(self):
        m = Heisenberg(1)
        with self.assertRaises(PreconditionError):
            first_variation(m, vertical_plane(), VariationField(
                rho=lambda p: 1.0), order=4)

    def test_graph_against_oracle(self):
        """
        The horizontal form, the divergence form and the finite difference
        of the perimeter agree on the paraboloid.
        """
        item = case('heisenberg-graph', first_variation_cases())
        result = first_variation(item.m, item.s, item.v, order=10)
        oracle = first_variation_fd_oracle(item.m, item.s, item.v, order=20)
        self.assertAlmostEqual(result.divergence_form,
                               result.horizontal_form, places=5)
        assert_allclose(result.value, oracle, rtol=1e-3)
        self.assertGreater(abs(result.value), 1e-3)

    def test_bubble_against_oracle(self):
        item = case('bubble', first_variation_cases())
        result = first_variation(item.m, item.s, item.v, order=item.order)
        oracle = first_variation_fd_oracle(item.m, item.s, item.v,
                                           order=2 * item.order)
        assert_allclose(result.value, oracle, rtol=1e-3)

    def test_bubble_speed_not_constant_on_orbits(self):
        """
        Speeds that vary along the ``U(n)`` orbits are integrated over the
        orbits: ``x1`` and ``x2`` both give zero, ``x1^2`` and ``x2^2``
        agree.
        """
        m = Heisenberg(2)
        s = bubble(1.0, 2)

        def horizontal(rho):
            v = VariationField(rho=rho, support='over-char')
            return first_variation(m, s, v, order=6).horizontal_form

        odd = [horizontal(lambda p, k=k: p[k]) for k in (0, 1)]
        assert_allclose(odd, 0.0, atol=1e-6)
        even = [horizontal(lambda p, k=k: p[k] ** 2) for k in (0, 1)]
        radial = horizontal(lambda p: np.sum(p[:4] ** 2))
        self.assertGreater(abs(even[0]), 1e-3)
        assert_allclose(even, [radial / 4] * 2, rtol=1e-6)

    def test_meridian_oracle_needs_invariant_speed(self):
        m = Heisenberg(2)
        s = bubble(1.0, 2)
        v = VariationField(rho=lambda p: p[0])
        with self.assertRaises(PreconditionError):
            family_perimeter(m, s, v, 1e-3, order=4)

    def test_oracle_of_static_family(self):
        m = Heisenberg(1)
        s = vertical_plane()
        v = VariationField(rho=lambda p: 0.0, family=lambda xi, t:
                           s.chart.point(xi))
        self.assertAlmostEqual(first_variation_fd_oracle(m, s, v, order=4),
                               0.0)
        self.assertAlmostEqual(second_variation_fd_oracle(m, s, v, order=4),
                               0.0)
        self.assertAlmostEqual(family_perimeter(m, s, v, 0.0, order=4), 4.0)


class BoundaryLimitTest(unittest.TestCase):

    def test_no_characteristic_points(self):
        m = Heisenberg(1)
        s = vertical_plane()
        v = VariationField(rho=lambda p: 1.0, support='over-char')
        result = boundary_limit_term(m, s, v, [0.25, 0.125])
        self.assertEqual(result.values, [0.0, 0.0])
        self.assertEqual(result.cells, [0, 0])
        self.assertIsNone(result.exponent)

    def test_bubble_poles(self):
        """
        The boundary term around the poles of the bubble shrinks with the
        cover.
        """
        v = VariationField(rho=lambda p: 1.0, support='over-char')
        result = boundary_limit_term(Heisenberg(2), bubble(1.0, 2), v,
                                     [0.1, 0.05, 0.025])
        magnitudes = np.abs(result.values)
        self.assertTrue(np.all(np.diff(magnitudes) < 0))
        self.assertGreater(result.exponent, 1.0)


class PotentialTest(unittest.TestCase):

    def test_heisenberg_specialization(self):
        """
        The general potential reduces to ``-tr(II0^2) - 2 J nu(a) - n a^2``.
        """
        for n in (1, 2):
            m = Heisenberg(n)
            s = paraboloid(n)
            for p in chart_samples(s, 5, seed=n):
                frame = surface_frame(m, s, p)
                V, parts = second_variation_potential(m, s, p, frame)
                self.assertAlmostEqual(V, heisenberg_potential(m, s, p,
                                                               frame),
                                       places=6)
                self.assertAlmostEqual(parts['ric'], 0.0)

    def test_rototranslation_plane(self):
        """
        On ``{y = 0}`` the potential is ``1 / sin(theta)^2``.
        """
        m = Rototranslation()
        s = rototranslation_plane()
        for theta in (0.7, 1.3, 2.2):
            p = s.chart.point([0.2, theta])
            V, parts = second_variation_potential(m, s, p)
            self.assertAlmostEqual(V, 1 / np.sin(theta) ** 2, places=6)
            self.assertAlmostEqual(rototranslation_potential(m, s, p),
                                   V + parts['H'] ** 2, places=6)
            self.assertAlmostEqual(rototranslation_level_set_potential(
                m, s.phi, p), V, places=6)

    def test_specializations_need_the_right_group(self):
        m = Heisenberg(1)
        s = vertical_plane()
        p = s.chart.point([0.0, 0.0])
        with self.assertRaises(PreconditionError):
            rototranslation_potential(m, s, p)
        with self.assertRaises(PreconditionError):
            heisenberg_potential(Rototranslation(), rototranslation_plane(),
                                 rototranslation_plane().chart.point(
                                     [0.0, 1.0]))


class SecondVariationTest(unittest.TestCase):

    def test_against_oracle(self):
        for item in second_variation_cases():
            result = second_variation(item.m, item.s, item.v, item.order)
            oracle = second_variation_fd_oracle(item.m, item.s, item.v,
                                                2 * item.order)
            self.assertEqual(result.case, 'minimal')
            assert_allclose(result.value, oracle, rtol=1e-3)
            self.assertGreater(result.value, 0.0)

    def test_zero_variation(self):
        item = second_variation_cases()[0]
        v = VariationField(rho=lambda p: 0.0)
        self.assertEqual(second_variation(item.m, item.s, v, 4).value, 0.0)

    def test_rejects_variations_over_the_characteristic_set(self):
        item = second_variation_cases()[0]
        v = VariationField(rho=item.v.rho, support='over-char')
        with self.assertRaises(PreconditionError):
            second_variation(item.m, item.s, v, 4)

    def test_rejects_non_cmc(self):
        m = Heisenberg(1)
        s = paraboloid(1)
        v = VariationField(rho=bump(s.chart.domain, (0, 1)))
        with self.assertRaises(NotCMC):
            second_variation(m, s, v, 6)

    def test_rejects_non_rigid(self):
        """
        With ``T = exp(x) d_t`` the bracket ``[X, T] = T`` has a vertical
        component.
        """
        X = VectorField(lambda p: np.array([1.0, 0.0, 0.0]),
                        jacobian=lambda p: np.zeros((3, 3)))
        Y = VectorField(lambda p: np.array([0.0, 1.0, p[0]]),
                        jacobian=lambda p: np.array([[0, 0, 0], [0, 0, 0],
                                                     [1.0, 0, 0]]))
        T = VectorField(lambda p: np.array([0.0, 0.0, np.exp(p[0])]),
                        jacobian=lambda p: np.array(
                            [[0, 0, 0], [0, 0, 0], [np.exp(p[0]), 0, 0]]))
        m = ManifoldModel(3, [X, Y], [T])
        s = vertical_plane(offset=0.5)
        v = VariationField(rho=bump(s.chart.domain, (1, 2)))
        with self.assertRaises(NotRigid):
            second_variation(m, s, v, 4)


class StabilityTest(unittest.TestCase):

    def test_constrained_spectrum(self):
        A = np.diag([1.0, 2.0, 3.0])
        M = np.eye(3)
        values, vectors = constrained_spectrum(A, M, np.array([1.0, 0, 0]))
        assert_allclose(values, [2.0, 3.0])
        self.assertAlmostEqual(vectors[0, 0], 0.0)

    def test_vertical_plane_is_stable(self):
        m = Heisenberg(1)
        s = vertical_plane()
        form = assemble_chart_form(m, s, 3)
        self.assertLess(form.asymmetry, 1e-10)
        report = stability_spectrum(m, s, modes=3)
        self.assertEqual(report.verdict, 'stable')
        self.assertGreater(report.modes[0].min_eigenvalue, 0.0)

    def test_non_cmc_surface(self):
        with self.assertRaises(NotCMC):
            stability_spectrum(Heisenberg(1), paraboloid(1), modes=2)

    def test_relative_convergence(self):
        """
        Changes are measured against ``max(1, |lambda|)``.
        """
        self.assertAlmostEqual(relative_change(1.2e-4, 40.0), 3e-6)
        self.assertAlmostEqual(relative_change(-5e-5, 0.01), 5e-5)
        self.assertTrue(eigenvalue_converged(1.2e-4, 40.0))
        self.assertFalse(eigenvalue_converged(1.2e-4, 0.5))
        self.assertTrue(eigenvalue_converged(1.2e-4, 0.5, tolerance=1e-3))

    def test_verdict(self):
        stable = ModeResult(mode='a', min_eigenvalue=-1e-9, eigenvalues=[])
        unstable = ModeResult(mode='b', min_eigenvalue=-0.1, eigenvalues=[])
        loose = ModeResult(mode='c', min_eigenvalue=1.0, eigenvalues=[],
                           converged=False)
        self.assertEqual(verdict([stable]), 'stable')
        self.assertEqual(verdict([stable, unstable]), 'unstable')
        self.assertEqual(verdict([unstable, loose]), 'inconclusive')


class MinkowskiTest(unittest.TestCase):

    def test_plane_patch(self):
        """
        ``{x = 1}`` is minimal; ``(Q - 1) P0`` is carried by the boundary.
        """
        report = minkowski_check(Heisenberg(1), vertical_plane(offset=1.0),
                                 order=8)
        self.assertAlmostEqual(report.P0, 4.0)
        self.assertAlmostEqual(report.boundary, 12.0, places=8)
        self.assertLess(report.relative_residual, 1e-8)

    def test_bubble(self):
        report = minkowski_check(Heisenberg(2), bubble(1.0, 2), order=24)
        self.assertLess(report.relative_residual, 1e-6)
        self.assertLess(report.volume_residual, 1e-8)

    def test_needs_dilation(self):
        with self.assertRaises(PreconditionError):
            minkowski_check(Rototranslation(), rototranslation_plane())
