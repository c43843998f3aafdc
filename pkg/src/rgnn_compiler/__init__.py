"""Init data"""
from __future__ import annotations

from importlib.metadata import version

from rgnn_compiler.algorithms import MpAlgorithm, Mpcga, MpLga, SMpGa, Step
from rgnn_compiler.graphs import FeaturedGraph
from rgnn_compiler.rgnn.assembler import Rgnn, assemble_rgnn
from rgnn_compiler.rgnn.runner import run_rgnn

__all__ = [
    "FeaturedGraph",
    "MpAlgorithm",
    "MpLga",
    "Mpcga",
    "Rgnn",
    "SMpGa",
    "Step",
    "assemble_rgnn",
    "run_rgnn",
]

# Load the version
__version__ = version("rgnn_compiler")
