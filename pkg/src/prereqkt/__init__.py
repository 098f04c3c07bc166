"""Prerequisite-tree knowledge tracing toolkit.

Subpackages:
  trees       concept trees (majority / ALL / ANY / alternating) and evaluation
  circuits    Boolean + threshold circuit IR, tree compilers, rewrites
  analysis    exact joint (root value, leaf sum) distribution and ceilings
  datasets    seeded dataset generation (flat and scaffold encodings)
  diagnostics prediction-file scoring (permutation drop, separator accuracy)
  verify      exhaustive equivalence and audit suites
  cli         command-line entry point (``prereqkt`` / ``python -m prereqkt``)
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
