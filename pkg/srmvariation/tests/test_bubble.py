import unittest

import numpy as np
from numpy.testing import assert_allclose

from srmvariation.bubble import (BubbleSpec, angular_coefficient,
                                 bubble_closed_forms, bubble_perimeter,
                                 bubble_stability, bubble_volume,
                                 fourier_gap, fourier_inequality_check,
                                 fourier_series, mode_problem,
                                 random_admissible_coefficients,
                                 sv_reduced_integrand, truncated_sv_integral)
from srmvariation.exceptions import ConvergenceError, PreconditionError
from srmvariation.quadrature import gauss_legendre
from srmvariation.surfaces import bubble
from srmvariation.variation import eigenvalue_converged


class ClosedFormsTest(unittest.TestCase):

    def test_mean_curvature_and_trace(self):
        for L in (0.5, 1.0, 2.0):
            for r in L * np.linspace(0.1, 0.9, 5):
                forms = bubble_closed_forms(L, r)
                self.assertAlmostEqual(np.trace(forms.II0), 4 / L)
                self.assertAlmostEqual(np.trace(forms.II0.dot(forms.II0)),
                                       forms.trace_II0_sq)
                self.assertAlmostEqual(forms.H, 4 / L)
                self.assertAlmostEqual(forms.pbar[0] ** 2 +
                                       forms.qbar[0] ** 2, 1.0)

    def test_lambda_integrates_to_perimeter(self):
        """
        Two sheets times ``|S^3| = 2 pi^2`` times ``int lambda dr``.
        """
        L = 1.5
        thetas, weights = gauss_legendre(32, (0.0, np.pi / 2))
        density = [bubble_closed_forms(L, L * np.sin(theta)).lam *
                   L * np.cos(theta) for theta in thetas]
        total = 2 * 2 * np.pi ** 2 * weights.dot(density)
        self.assertAlmostEqual(total / bubble_perimeter(L), 1.0, places=10)

    def test_scaling(self):
        self.assertAlmostEqual(bubble_perimeter(2.0) / bubble_perimeter(1.0),
                               32.0)
        self.assertAlmostEqual(bubble_volume(2.0) / bubble_volume(1.0), 64.0)
        # (Q - 1) P0 = Q H Vol with Q = 6 and H = 4/L
        L = 0.7
        self.assertAlmostEqual(5 * bubble_perimeter(L),
                               6 * 4 / L * bubble_volume(L))

    def test_preconditions(self):
        for L, r in ((1.0, 0.0), (1.0, 1.0), (1.0, 1.2), (-1.0, 0.5)):
            with self.assertRaises(PreconditionError):
                bubble_closed_forms(L, r)
        with self.assertRaises(PreconditionError):
            BubbleSpec(1.0, sheet=0)

    def test_sheets_meet_at_equator(self):
        spec = BubbleSpec(1.0)
        self.assertAlmostEqual(spec.phi(1.0), 0.0)
        self.assertAlmostEqual(spec.phi(0.0), np.pi / 8)
        self.assertAlmostEqual(BubbleSpec(1.0, sheet=-1).phi(0.0), -np.pi / 8)

    def test_sheets_lie_on_the_surface(self):
        """
        Both sheets describe the same surface as ``bubble``.
        """
        for L in (0.5, 2.0):
            s = bubble(L, 2)
            for sheet in (1, -1):
                spec = BubbleSpec(L, sheet=sheet)
                for r in L * np.array([0.1, 0.6, 0.95]):
                    p = np.array([r, 0.0, 0.0, 0.0, spec.phi(r)])
                    self.assertLess(s.residual(p), 1e-12)
                    slope = s.sheet(sheet).phi.gradient(p)[0]
                    self.assertAlmostEqual(sheet * spec.dphi(r), -slope)


class ReducedInequalityTest(unittest.TestCase):

    def test_forms_agree_after_integration(self):
        """
        The ``rho``, ``h`` and Fourier forms of the radial integrand carry
        the same gap.
        """
        L = 1.3
        thetas, weights = gauss_legendre(64, (0.0, np.pi))
        s, c = np.sin(thetas), np.cos(thetas)
        rho0 = c + 0.3 * c ** 2 - 0.1
        drho0 = -s - 0.6 * c * s
        h = rho0 * s
        dh = drho0 * s + rho0 * c
        g = h * s
        dg = dh * s + h * c

        gaps = []
        for form, u, du, scale in (('rho', rho0, drho0, 2 * L * L),
                                   ('h', h, dh, 1.0),
                                   ('fourier', g, dg, 1.0)):
            lhs, rhs = sv_reduced_integrand(L, thetas, u, du, form=form)
            gaps.append(weights.dot(lhs - rhs) / scale)
        assert_allclose(gaps, gaps[0], rtol=1e-10, atol=1e-12)

    def test_unknown_form(self):
        with self.assertRaises(ValueError):
            sv_reduced_integrand(1.0, 0.5, 1.0, 1.0, form='z')

    def test_null_direction(self):
        """
        ``h = cos(theta)`` has zero second variation: the truncated integral
        is ``sin(2 epsilon)``.
        """
        L = 1.5

        def rho(theta):
            s, c = np.sin(theta), np.cos(theta)
            return L * c / np.sqrt(4 * c * c + L * L * s * s)

        def drho(theta):
            s, c = np.sin(theta), np.cos(theta)
            root = np.sqrt(4 * c * c + L * L * s * s)
            droot = (L * L - 4) * s * c / root
            return L * (-s * root - c * droot) / root ** 2

        for epsilon in (1e-2, 1e-3):
            self.assertAlmostEqual(truncated_sv_integral(L, rho, drho,
                                                         epsilon),
                                   np.sin(2 * epsilon), places=9)


class FourierTest(unittest.TestCase):

    def test_gap(self):
        self.assertAlmostEqual(fourier_gap([1.0], [0.0]), -np.pi)
        self.assertAlmostEqual(fourier_gap([0.0, 1.0], [0.0, 0.0]), 0.0)
        self.assertAlmostEqual(fourier_gap([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
                               6 * np.pi)

    def test_random_admissible_series_hold(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b = random_admissible_coefficients(6, rng)
            self.assertAlmostEqual(a[0], a[1])
            check = fourier_inequality_check((a, b))
            self.assertTrue(check.admissible)
            self.assertTrue(check.holds)
            self.assertGreaterEqual(check.gap, 0.0)

    def test_quadrature_matches_coefficients(self):
        a, b = random_admissible_coefficients(5, 3)
        g, dg = fourier_series(a, b)
        self.assertAlmostEqual(float(g(np.array(0.0))), 0.0)
        check = fourier_inequality_check(g, K=5, derivative=dg)
        assert_allclose(check.a, a, atol=1e-12)
        assert_allclose(check.b, b, atol=1e-12)
        self.assertAlmostEqual(check.gap, check.gap_quadrature, places=8)
        self.assertTrue(check.holds)

    def test_equality_case(self):
        check = fourier_inequality_check(
            lambda theta: np.cos(theta) * np.sin(theta), K=8,
            derivative=lambda theta: np.cos(2 * theta))
        self.assertTrue(check.admissible)
        self.assertAlmostEqual(check.gap, 0.0, places=10)
        self.assertAlmostEqual(check.gap_quadrature, 0.0, places=10)

    def test_endpoint_condition_is_needed(self):
        """
        ``a = (1, 1)`` meets the volume constraint but not ``g(0) = 0``,
        and the inequality fails for it.
        """
        check = fourier_inequality_check(([1.0, 1.0], [0.0, 0.0]))
        self.assertAlmostEqual(check.constraint, 0.0)
        self.assertAlmostEqual(check.endpoint, 1.5)
        self.assertLess(check.gap, 0.0)
        self.assertFalse(check.admissible)
        self.assertFalse(check.holds)

    def test_default_tolerance(self):
        """
        A residual of ``1e-7`` in the constraints is not admissible by
        default.
        """
        check = fourier_inequality_check(([1e-7], [0.0]))
        self.assertFalse(check.admissible)
        self.assertFalse(check.holds)
        loose = fourier_inequality_check(([1e-7], [0.0]), tolerance=1e-6)
        self.assertTrue(loose.admissible)
        self.assertTrue(loose.holds)

    def test_mismatched_coefficients(self):
        with self.assertRaises(PreconditionError):
            fourier_inequality_check(([1.0, 1.0], [0.0]))
        with self.assertRaises(PreconditionError):
            random_admissible_coefficients(1)


class ModeProblemTest(unittest.TestCase):

    def test_angular_coefficient(self):
        self.assertEqual(angular_coefficient(0, 0), 0)
        self.assertEqual(angular_coefficient(1, 0), 2)
        self.assertEqual(angular_coefficient(0, 1), 2)
        self.assertEqual(angular_coefficient(1, 1), 8)
        self.assertEqual(angular_coefficient(2, 1), 14)

    def test_assembly(self):
        problem = mode_problem(0, 0, 32)
        self.assertLess(problem.asymmetry, 1e-12)
        self.assertEqual(problem.A.shape, (33, 33))
        self.assertIsNotNone(problem.constraint)
        # int sin^3 cos = 0 over (0, pi)
        self.assertAlmostEqual(problem.constraint.dot(np.cos(problem.grid)),
                               0.0)
        self.assertIsNone(mode_problem(1, 0, 8).constraint)

    def test_mass_is_positive(self):
        problem = mode_problem(1, 2, 16)
        self.assertGreater(np.min(np.linalg.eigvalsh(problem.M)), 0.0)

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            mode_problem(-1, 0, 8)
        with self.assertRaises(PreconditionError):
            mode_problem(0, 0, 3)


class BubbleStabilityTest(unittest.TestCase):

    def test_nonnegative_and_null_direction(self):
        report = bubble_stability(1.0, resolution=64, cutoff=2, threads=2)
        self.assertEqual(len(report.modes), 6)
        for mode in report.modes:
            self.assertGreaterEqual(mode.min_eigenvalue, -1e-6)
        self.assertGreater(report.correlation, 0.99)
        zero = report.modes[0]
        self.assertEqual(zero.mode, (0, 0))
        self.assertLess(zero.constraint_residual, 1e-10)
        self.assertEqual(len(report.null_vector_rows()), 129)

    def test_physical_units(self):
        """
        Eigenvalues scale like ``1 / L^2``.
        """
        small = bubble_stability(0.5, resolution=32, cutoff=2, threads=1)
        unit = bubble_stability(1.0, resolution=32, cutoff=2, threads=1)
        for a, b in zip(small.modes, unit.modes):
            self.assertAlmostEqual(a.min_eigenvalue, 4 * b.min_eigenvalue)

    def test_convergence_flags_match_reported_change(self):
        """
        ``converged`` follows from the reported change and eigenvalue once
        both are taken back to the unit bubble.
        """
        L = 0.5
        report = bubble_stability(L, resolution=16, cutoff=3, threads=2)
        for mode in report.modes:
            self.assertEqual(mode.converged, eigenvalue_converged(
                mode.change * L ** 2, mode.min_eigenvalue * L ** 2))

    def test_strict_resolution(self):
        with self.assertRaises(ConvergenceError):
            bubble_stability(1.0, resolution=4, cutoff=2, threads=1,
                             strict=True)

    def test_cutoff(self):
        with self.assertRaises(PreconditionError):
            bubble_stability(1.0, resolution=8, cutoff=1)
