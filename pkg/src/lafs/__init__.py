"""Learning-automata wrapper feature selection around a from-scratch linear SVM."""

__version__ = "0.1.0"

from ._solver import BACKEND as SOLVER_BACKEND

__all__ = ["SOLVER_BACKEND", "__version__"]
