"""Backend selection for the hot 1D convolution kernels.

The compiled Cython extension is preferred; the pure-numpy module is the
fallback. Selection happens once at import, or can be forced with the
``WELDWATCH_KERNELS`` environment variable (``cython`` or ``python``).
Both backends honor the same accumulation-order contract and produce
bit-identical float64 outputs.
"""

import os

import numpy as np

from . import _python

try:
    from . import _conv1d as _cython
except ImportError:
    _cython = None

_FORCED = os.environ.get("WELDWATCH_KERNELS", "").strip().lower()
if _FORCED == "python":
    _active = _python
    _active_name = "python"
elif _FORCED == "cython":
    if _cython is None:
        raise ImportError(
            "WELDWATCH_KERNELS=cython but the compiled extension is not built; "
            "reinstall the package or unset the variable"
        )
    _active = _cython
    _active_name = "cython"
elif _cython is not None:
    _active = _cython
    _active_name = "cython"
else:
    _active = _python
    _active_name = "python"


def backend_name():
    """Name of the kernel backend selected at import ('cython' or 'python')."""
    return _active_name


def available_backends():
    names = ["python"]
    if _cython is not None:
        names.insert(0, "cython")
    return names


def get_backend(name):
    """Fetch a backend module by name (for benchmarks and equivalence tests)."""
    if name == "python":
        return _python
    if name == "cython":
        if _cython is None:
            raise KeyError("cython backend not built")
        return _cython
    raise KeyError(f"unknown kernel backend {name!r}")


def _as_c3(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def correlate_valid(a, w):
    return _active.correlate_valid(_as_c3(a), _as_c3(w))


def scatter_full(a, w):
    return _active.scatter_full(_as_c3(a), _as_c3(w))


def weight_grad(g, x):
    return _active.weight_grad(_as_c3(g), _as_c3(x))
