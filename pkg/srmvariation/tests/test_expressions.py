import unittest

import numpy as np

from srmvariation.exceptions import ParseError
from srmvariation.expressions import (Expression, compile_field,
                                      compile_scalar, tokenize,
                                      variable_names)


XY = ('x1', 'x2')


class ExpressionTest(unittest.TestCase):

    def test_arithmetic(self):
        self.assertEqual(Expression('x1^2 + 2*x2', XY)([3.0, 4.0]), 17.0)
        self.assertEqual(Expression('(x1 - x2) / 2', XY)([3.0, 4.0]), -0.5)
        self.assertEqual(Expression('1.5e1 + .5', XY)([0.0, 0.0]), 15.5)

    def test_precedence(self):
        """
        Unary minus binds looser than ``^``, which is right associative.
        """
        self.assertEqual(Expression('-x1^2', XY)([3.0, 0.0]), -9.0)
        self.assertEqual(Expression('2^3^2', XY)([0.0, 0.0]), 512.0)
        self.assertEqual(Expression('2*-x2', XY)([0.0, 1.5]), -3.0)

    def test_functions_and_constants(self):
        value = Expression('sin(pi/2) + sqrt(4) + exp(0) + log(1)', XY)
        self.assertAlmostEqual(value([0.0, 0.0]), 4.0)
        self.assertAlmostEqual(Expression('atan(x1)', XY)([1.0, 0.0]),
                               np.pi / 4)

    def test_documented_functions(self):
        """
        Every function and constant of the definition format evaluates.
        """
        cases = [
            ('e', 0.0, np.e),
            ('abs(x1)', -2.5, 2.5),
            ('sinh(x1)', 0.7, np.sinh(0.7)),
            ('cosh(x1)', 0.7, np.cosh(0.7)),
            ('tanh(x1)', 0.7, np.tanh(0.7)),
            ('tan(x1)', 0.7, np.tan(0.7)),
            ('log(e^x1)', 1.3, 1.3),
        ]
        for text, x, expected in cases:
            self.assertAlmostEqual(Expression(text, XY)([x, 0.0]), expected,
                                   places=12, msg=text)

    def test_exact_derivatives(self):
        """
        Gradients and Hessians come from the symbolic expression.
        """
        f = Expression('x1^2 * x2 + sin(x2)', XY)
        p = [1.5, 0.3]
        np.testing.assert_allclose(f.gradient(p),
                                   [2 * 1.5 * 0.3, 1.5 ** 2 + np.cos(0.3)],
                                   rtol=1e-14)
        np.testing.assert_allclose(f.hessian(p),
                                   [[0.6, 3.0], [3.0, -np.sin(0.3)]],
                                   rtol=1e-14, atol=1e-15)

    def test_compiled_fields_are_analytic(self):
        field = compile_field(['1', '0', '-x2/2'], XY, name='X')
        self.assertTrue(field.has_analytic_jacobian)
        np.testing.assert_allclose(field.jacobian(np.array([0.2, 0.4])),
                                   [[0, 0], [0, 0], [0, -0.5]])
        phi = compile_scalar('x1^3 - x2', XY)
        self.assertTrue(phi.has_analytic_hessian)
        np.testing.assert_allclose(phi.hessian(np.array([2.0, 1.0])),
                                   [[12.0, 0.0], [0.0, 0.0]])

    def test_numbers_are_accepted(self):
        self.assertEqual(Expression(3, XY)([0.0, 0.0]), 3.0)
        with self.assertRaises(ParseError):
            Expression([1], XY)

    def test_variable_names(self):
        self.assertEqual(variable_names('u', 3), ('u1', 'u2', 'u3'))

    def test_compile_field(self):
        field = compile_field(['x2', '-x1', '1'], XY)
        np.testing.assert_array_equal(field(np.array([1.0, 2.0])),
                                      [2.0, -1.0, 1.0])


class ParseErrorTest(unittest.TestCase):

    def assertColumn(self, text, column, fragment):
        with self.assertRaises(ParseError) as context:
            Expression(text, XY, source='test')
        self.assertEqual(context.exception.column, column)
        self.assertIn(fragment, str(context.exception))
        self.assertIn('test', str(context.exception))

    def test_unknown_variable(self):
        self.assertColumn('x1 + y', 6, "unknown variable 'y'")

    def test_unknown_function(self):
        self.assertColumn('foo(x1)', 1, "unknown function 'foo'")

    def test_bad_character(self):
        self.assertColumn('x1 $ 2', 4, "'$'")

    def test_unbalanced(self):
        self.assertColumn('(x1', 4, "expected ')'")

    def test_unexpected_close(self):
        self.assertColumn('x1)', 3, "unexpected ')'")

    def test_incomplete(self):
        self.assertColumn('x1 +', 5, 'incomplete expression')

    def test_empty(self):
        self.assertColumn('  ', 1, 'empty expression')

    def test_trailing_tokens(self):
        self.assertColumn('x1 x2', 4, "unexpected 'x2'")

    def test_tokenize_columns(self):
        tokens = tokenize('x1 +  2')
        self.assertEqual([column for _, _, column in tokens], [1, 4, 7, 8])
