"""
Default numerical settings for ``srmvariation``.

Every constant here may be overridden per call through keyword arguments;
the command line exposes the most common ones as flags.
"""
import logging
import os

# Points with |N0| below this are characteristic.
CHARACTERISTIC_THRESHOLD = 1e-8

# Scan threshold is SCAN_THRESHOLD_FACTOR * cell size (|N0| is Lipschitz).
SCAN_THRESHOLD_FACTOR = 2.0

# Relative singular value cut-off for skew Hessian ranks.
RANK_TOLERANCE = 1e-6

# Iterated brackets are never expanded past this depth.
MAX_BRACKET_DEPTH = 6

# Step for directional derivatives of surface quantities, times max(1, |p|).
DIRECTIONAL_STEP = 1e-5

# Imaginary parts closer than this pair up as conjugates.
CONJUGATE_PAIR_TOLERANCE = 1e-9

# Orthonormality residual allowed for user supplied graded frames.
FRAME_TOLERANCE = 1e-8

# Below this max |H| a surface is treated as minimal.
MINIMAL_TOLERANCE = 1e-8

# Volume constraint residual required for constant mean curvature surfaces.
CONSTRAINT_TOLERANCE = 1e-8

# Spread of div(nu) allowed for a surface to count as CMC.
CMC_TOLERANCE = 1e-6

# Default Gauss-Legendre nodes per parameter direction.
QUADRATURE_NODES = 16

# Sphere nodes per direction when integrating over whole orbits.
ORBIT_NODES = 3

# Chart points remembered for inverse lookup.
CHART_CACHE_SIZE = 4096

# Bubble stability defaults.
BUBBLE_RESOLUTION = 400
BUBBLE_MODE_CUTOFF = 6
EIGENVALUE_CONVERGENCE = 1e-4


def thread_count(environ=None):
    """
    Worker cap from ``SRM_THREADS``, or the CPU count when it is unset or
    not an integer.
    """
    environ = os.environ if environ is None else environ
    default = os.cpu_count() or 1
    value = environ.get('SRM_THREADS')
    if value is None:
        return default
    try:
        return max(1, int(value))
    except ValueError:
        logging.getLogger(__name__).warning(
            'ignoring SRM_THREADS=%r, using %d threads', value, default)
        return default


# Worker cap for independent subproblems.
THREADS = thread_count()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'brief': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'brief',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        'srmvariation': {
            'handlers': ['stderr'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}

# Eigenvalues above -STABILITY_TOLERANCE count as nonnegative.
STABILITY_TOLERANCE = 1e-6

# Admissibility residuals and gaps allowed by the Fourier inequality check.
FOURIER_TOLERANCE = 1e-9

# Relative gap allowed between the two first variation forms.
FIRST_VARIATION_TOLERANCE = 1e-6

# Time steps of the finite difference oracles.
FIRST_VARIATION_STEP = 1e-4
SECOND_VARIATION_STEP = 1e-3
