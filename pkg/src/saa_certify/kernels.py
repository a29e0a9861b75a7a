"""Dispatch to the compiled kernels, or the numpy fallback when they are absent.

The compiled extension ``_ckernels`` is built from Cython at install time.
If it failed to build (no compiler, no Cython) the package still works on
the pure-Python path. Callers go through the module-level names below so
:func:`use_backend` can swap implementations at runtime, e.g. for benchmarks
or for checking that both paths agree.
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

OPTIMAL = _pykernels.OPTIMAL
UNBOUNDED = _pykernels.UNBOUNDED
ITERATION_LIMIT = _pykernels.ITERATION_LIMIT

_NAMES = ("max_shattered", "pivot", "simplex_iterate", "adjacent_pairs")

backend = None


def available_backends():
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def use_backend(name):
    """Select ``"compiled"`` or ``"python"`` kernels for the whole package."""
    global backend
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; reinstall with a C compiler and Cython")
        impl = _ckernels
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    g = globals()
    for attr in _NAMES:
        g[attr] = getattr(impl, attr)
    backend = name


use_backend("compiled" if _ckernels is not None else "python")
