"""Spike-computation toolkit.

Integer-to-spike codecs (unary and binary-weighted), spike-driven linear
algebra with exact dense oracles, modality-aware timestep allocation from
cross-layer drift, firing-rate/FLOPs accounting, and a cycle-level
simulator of a spike-driven dot-product PE array.
"""

__version__ = "0.1.0"

from ._kernels import backend_name

__all__ = ["backend_name", "__version__"]
