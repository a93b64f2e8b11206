"""Kernel backend selection.

The hot inner kernels (row softmax, attention column means, layer norm,
GELU, mask dilation) exist twice: numba ``@njit`` versions and pure-numpy
fallbacks.  The active set is chosen once at import from the
``ATTNFILTER_BACKEND`` environment variable ("numba" or "numpy"); without
the variable, numba is used when it imports cleanly.  ``use_backend``
switches at runtime, which the tests and ``benchmarks/compare_backends.py``
rely on.

Dense matrix products are BLAS-backed numpy in both modes; numba offers no
advantage over a tuned GEMM.
"""

import os

from . import kernels_numpy

ENV_VAR = "ATTNFILTER_BACKEND"

_BACKENDS = {"numpy": kernels_numpy}
_NUMBA_IMPORT_ERROR = None
try:
    from . import kernels_numba

    _BACKENDS["numba"] = kernels_numba
except ImportError as exc:  # pragma: no cover - depends on environment
    _NUMBA_IMPORT_ERROR = exc


def _select_default():
    requested = os.environ.get(ENV_VAR)
    if requested is None:
        return "numba" if "numba" in _BACKENDS else "numpy"
    name = requested.strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR} must be 'numba' or 'numpy', got {requested!r}"
        )
    if name not in _BACKENDS:
        raise ImportError(
            f"{ENV_VAR}={name} requested but numba is not importable"
        ) from _NUMBA_IMPORT_ERROR
    return name


_active = _select_default()


def available_backends():
    return tuple(sorted(_BACKENDS))


def current_backend():
    return _active


def use_backend(name):
    """Activate a kernel backend; returns the previously active name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        )
    previous = _active
    _active = name
    return previous


def kernels():
    """The module holding the active kernel implementations."""
    return _BACKENDS[_active]
