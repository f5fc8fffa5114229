"""Distributional spectral decompositions verified against smooth test functions."""

__version__ = "0.1.0"

from ._kernels import BACKEND as backend  # noqa: F401
