"""Kernel backend selection.

The compiled Cython extension is used when available, with the NumPy
implementation as fallback. SPIKEKIT_BACKEND=python|compiled forces one.
Both backends take identical array arguments (dtype and contiguity are
normalised by the callers) and return bit-identical int64 results.
"""

import contextlib
import os

from . import _py

try:
    from . import _core
except ImportError:
    _core = None

_FORCED = os.environ.get("SPIKEKIT_BACKEND", "").strip().lower()

if _FORCED in ("", "auto"):
    _impl = _core if _core is not None else _py
elif _FORCED in ("compiled", "cython", "c"):
    if _core is None:
        raise ImportError(
            "SPIKEKIT_BACKEND=compiled but the extension is not built; "
            "reinstall with a C compiler and Cython available"
        )
    _impl = _core
elif _FORCED in ("python", "py", "numpy"):
    _impl = _py
else:
    raise ImportError(f"unknown SPIKEKIT_BACKEND value: {_FORCED!r}")


def backend_name():
    return "compiled" if _impl is not _py else "python"


def available_backends():
    """Names usable with use_backend(), compiled first when present."""
    names = ["python"]
    if _core is not None:
        names.insert(0, "compiled")
    return names


def _module_for(name):
    if name == "python":
        return _py
    if name == "compiled":
        if _core is None:
            raise ValueError("compiled backend is not built")
        return _core
    raise ValueError(f"unknown backend: {name!r}")


@contextlib.contextmanager
def use_backend(name):
    """Temporarily route all kernel calls through one backend."""
    global _impl
    previous = _impl
    _impl = _module_for(name)
    try:
        yield
    finally:
        _impl = previous


def unfold_unary(values, timesteps):
    return _impl.unfold_unary(values, timesteps)


def unfold_binary(magnitudes, timesteps):
    return _impl.unfold_binary(magnitudes, timesteps)


def fold_planes(planes, weights, polarity):
    return _impl.fold_planes(planes, weights, polarity)


def gated_accumulate(wt, planes, polarity, weights):
    return _impl.gated_accumulate(wt, planes, polarity, weights)


def pe_dot(planes, polarity, w):
    return _impl.pe_dot(planes, polarity, w)


def spike_gemm(planes, polarity, w):
    return _impl.spike_gemm(planes, polarity, w)
