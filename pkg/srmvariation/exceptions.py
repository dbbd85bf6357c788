"""
Exceptions raised by ``srmvariation``.

All of them derive from ``SRMError`` so callers (and the command line) can
catch the whole family at once.
"""


class SRMError(Exception):
    pass


class ChartError(SRMError):
    """
    A point lies outside the chart of a manifold or a surface.
    """
    pass


class StepUnderflow(SRMError):
    """
    A finite difference step collapsed below representable resolution.
    """
    pass


class NonOrthonormalFrame(SRMError):
    pass


class NotRigid(SRMError):
    """
    An operation that needs a vertically rigid manifold got a model that
    fails the rigidity test.
    """
    pass


class NotOnSurface(SRMError):
    pass


class CharacteristicPoint(SRMError):
    """
    Raised when a horizontal normal is requested at a characteristic point.

    ``frame`` carries the partial ``SurfaceFrame`` with ``N`` and
    ``N0_norm`` filled in and ``nu``/``e`` left as ``None``.
    """

    def __init__(self, message, frame=None):
        super(CharacteristicPoint, self).__init__(message)
        self.frame = frame


class UnboundedDomain(SRMError):
    pass


class QuadratureError(SRMError):
    pass


class PreconditionError(SRMError):
    """
    The input does not meet the hypotheses of the requested formula.
    """
    pass


class NotCMC(PreconditionError):
    """
    The surface does not have constant mean curvature. ``spread`` is the
    measured max |div nu - c|.
    """

    def __init__(self, message, spread=None):
        super(NotCMC, self).__init__(message)
        self.spread = spread


class ConvergenceError(SRMError):
    """
    A discretized quantity did not settle between two resolutions.
    """

    def __init__(self, message, change=None):
        super(ConvergenceError, self).__init__(message)
        self.change = change


class NumericalBreakdown(SRMError):
    pass


class ParseError(SRMError):
    """
    A definition file or expression failed to parse. ``line`` and
    ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        location = []
        if source:
            location.append(source)
        if line is not None:
            location.append('line %d' % line)
        if column is not None:
            location.append('column %d' % column)
        if location:
            message = '%s (%s)' % (message, ', '.join(location))
        super(ParseError, self).__init__(message)
