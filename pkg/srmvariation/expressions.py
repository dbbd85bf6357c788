"""
Component expressions of ``srm-v1`` definition files.

Expressions are plain arithmetic in the variables of the file (``x1 .. xn``
for points, ``u1 .. ud`` for chart parameters) with ``^`` for powers, the
constants in ``CONSTANTS`` and the functions in ``FUNCTIONS``. sympy parses
them and supplies exact derivatives; evaluation goes through ``lambdify``
with the numpy backend.

Names are checked on the token stream first so that errors carry the
column of the offending token.
"""
import io
import tokenize as pytokenize

import numpy as np
import sympy
from sympy.core.sympify import SympifyError
from sympy.parsing.sympy_parser import (convert_xor, parse_expr,
                                        standard_transformations)

from srmvariation.exceptions import ParseError
from srmvariation.fields import ScalarField, VectorField


FUNCTIONS = {
    'sin': sympy.sin,
    'cos': sympy.cos,
    'tan': sympy.tan,
    'atan': sympy.atan,
    'sinh': sympy.sinh,
    'cosh': sympy.cosh,
    'tanh': sympy.tanh,
    'exp': sympy.exp,
    'log': sympy.log,
    'sqrt': sympy.sqrt,
    'abs': sympy.Abs,
}

CONSTANTS = {
    'pi': sympy.pi,
    'e': sympy.E,
}

ALLOWED = frozenset('+-*/^()._ \t')

TRANSFORMATIONS = standard_transformations + (convert_xor,)

# parse_expr evaluates generated code; only these names are reachable.
GLOBALS = {
    'Integer': sympy.Integer,
    'Float': sympy.Float,
    'Rational': sympy.Rational,
    'Symbol': sympy.Symbol,
}

_KINDS = {
    pytokenize.NUMBER: 'number',
    pytokenize.NAME: 'name',
    pytokenize.OP: 'op',
}


def _check_characters(text, source):
    depth = []
    for offset, char in enumerate(text):
        if not (char.isalnum() or char in ALLOWED):
            raise ParseError('unexpected character %r' % char,
                             column=offset + 1, source=source)
        if char == '(':
            depth.append(offset)
        elif char == ')':
            if not depth:
                raise ParseError("unexpected ')'", column=offset + 1,
                                 source=source)
            depth.pop()
    if depth:
        raise ParseError("expected ')' to close the '(' at column %d"
                         % (depth[-1] + 1), column=len(text) + 1,
                         source=source)


def tokenize(text, source=None):
    """
    ``(kind, text, column)`` triples with 1-based columns, closed by an
    ``end`` token.
    """
    text = text.replace('\n', ' ').rstrip()
    _check_characters(text, source)
    tokens = []
    for token in pytokenize.generate_tokens(io.StringIO(text).readline):
        kind = _KINDS.get(token.type)
        if kind is not None:
            tokens.append((kind, token.string, token.start[1] + 1))
    tokens.append(('end', None, len(text) + 1))
    return tokens


def _check_names(tokens, variables, source):
    operand_end = False
    for index, (kind, text, column) in enumerate(tokens[:-1]):
        call = tokens[index + 1][1] == '('
        if kind == 'name':
            if call and text not in FUNCTIONS:
                raise ParseError('unknown function %r' % text,
                                 column=column, source=source)
            if not call and text not in CONSTANTS and text not in variables:
                raise ParseError('unknown variable %r' % text,
                                 column=column, source=source)
        starts_operand = kind in ('name', 'number') or text == '('
        if operand_end and starts_operand:
            raise ParseError('unexpected %r' % text, column=column,
                             source=source)
        operand_end = (kind == 'number' or text == ')' or
                       (kind == 'name' and not call))


class Expression(object):
    """
    A compiled expression. Call it with the vector of variable values;
    ``gradient`` and ``hessian`` are exact.
    """

    def __init__(self, text, variables, source=None):
        if not isinstance(text, str):
            if isinstance(text, (int, float)):
                text = repr(float(text))
            else:
                raise ParseError('expression must be a string, got %r'
                                 % (text,), source=source)
        self.text = text
        self.variables = tuple(variables)
        self.source = source
        self.symbols = [sympy.Symbol(name) for name in self.variables]

        tokens = tokenize(text, source)
        if len(tokens) == 1:
            raise ParseError('empty expression', column=1, source=source)
        _check_names(tokens, self.variables, source)
        names = dict(zip(self.variables, self.symbols))
        names.update(FUNCTIONS)
        names.update(CONSTANTS)
        try:
            self.expr = parse_expr(text.replace('\n', ' '),
                                   local_dict=names,
                                   global_dict=dict(GLOBALS),
                                   transformations=TRANSFORMATIONS)
        except (SympifyError, SyntaxError, TypeError,
                pytokenize.TokenError) as exc:
            raise ParseError('incomplete expression (%s)' % exc,
                             column=tokens[-1][2], source=source)
        self._value = sympy.lambdify(self.symbols, self.expr, 'numpy')
        self._gradient = None
        self._hessian = None

    def __repr__(self):
        return '<Expression %s>' % self.text

    def __call__(self, values):
        return float(self._value(*np.asarray(values, dtype=float)))

    def gradient(self, values):
        if self._gradient is None:
            self._gradient = sympy.lambdify(
                self.symbols, [sympy.diff(self.expr, x)
                               for x in self.symbols], 'numpy')
        return np.array(self._gradient(*np.asarray(values, dtype=float)),
                        dtype=float)

    def hessian(self, values):
        if self._hessian is None:
            self._hessian = sympy.lambdify(
                self.symbols, sympy.hessian(self.expr, self.symbols).tolist(),
                'numpy')
        return np.array(self._hessian(*np.asarray(values, dtype=float)),
                        dtype=float)


def variable_names(prefix, count):
    return tuple('%s%d' % (prefix, i + 1) for i in range(count))


def _compile(texts, variables, source):
    return [Expression(text, variables, '%s[%d]' % (source or 'vector', i))
            for i, text in enumerate(texts)]


def compile_field(texts, variables, source=None, name=None):
    """
    A ``VectorField`` with the exact Jacobian of its components.
    """
    compiled = _compile(texts, variables, source)

    def components(p):
        return np.array([c(p) for c in compiled])

    def jacobian(p):
        return np.array([c.gradient(p) for c in compiled])

    return VectorField(components, jacobian=jacobian, name=name)


def compile_scalar(text, variables, source=None, name=None):
    """
    A ``ScalarField`` with exact gradient and Hessian.
    """
    compiled = Expression(text, variables, source)
    return ScalarField(compiled, compiled.gradient, compiled.hessian,
                       name=name)
