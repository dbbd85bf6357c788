__version__ = '0.1-dev'

from .models import Heisenberg, ManifoldModel, Rototranslation
from .surfaces import LevelSet, ParamImmersion, bubble
from .variation import VariationField
