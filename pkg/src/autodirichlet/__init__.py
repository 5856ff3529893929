"""Dirichlet series with q-automatic coefficients: evaluation, continuation, poles and digit-sum products."""
from .automaton import *  # noqa: F401,F403
from .continuation import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .estimator import AutomaticDirichletSeries
from .polynomial import *  # noqa: F401,F403
from .products import *  # noqa: F401,F403

__version__ = "0.1.0"
