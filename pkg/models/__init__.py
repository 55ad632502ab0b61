"""
CHC Portfolio Solver - Models Package
-------------------------------------
This package contains the core models: the CHC representation and its
parser/printer, the C code generator, the saturation oracle, the verifier
portfolio and the benchmark runner.
"""

from .chc import ChcSystem, classify_linearity, detect_theory, normalize
from .parser import parse_chc
from .printer import print_chc

__all__ = ['ChcSystem', 'classify_linearity', 'detect_theory', 'normalize', 'parse_chc', 'print_chc']
