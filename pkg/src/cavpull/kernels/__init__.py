"""Numerical kernel dispatch.

The compiled Cython extension is preferred when importable; otherwise the
pure-numpy implementations are used. Set CAVPULL_KERNELS=numpy|cython|auto
before import to force a backend ("cython" raises if the extension is
missing). Both backends expose the same functions and agree to float
precision.
"""

import os

from . import numpy_backend

__all__ = [
    "lorentzian_profile", "sideband_profile", "multi_lorentz_model",
    "multi_lorentz_jacobian", "convolve_reflect", "trapezoid_uniform",
    "backend_name", "get_backend", "available_backends",
]


def _load_compiled():
    from . import _fast
    return _fast


def get_backend(name=None):
    """Return a kernel namespace by name ('numpy' or 'cython'); default active."""
    if name is None:
        return _active
    if name == "numpy":
        return numpy_backend
    if name == "cython":
        return _load_compiled()
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["numpy"]
    try:
        _load_compiled()
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


_choice = os.environ.get("CAVPULL_KERNELS", "auto")
if _choice == "numpy":
    _active = numpy_backend
elif _choice == "cython":
    _active = _load_compiled()
elif _choice == "auto":
    try:
        _active = _load_compiled()
    except ImportError:
        _active = numpy_backend
else:
    raise ImportError(f"CAVPULL_KERNELS={_choice!r} is not one of auto/numpy/cython")


def backend_name():
    """Name of the kernel backend selected at import time."""
    return _active.name


lorentzian_profile = _active.lorentzian_profile
sideband_profile = _active.sideband_profile
multi_lorentz_model = _active.multi_lorentz_model
multi_lorentz_jacobian = _active.multi_lorentz_jacobian
convolve_reflect = _active.convolve_reflect
trapezoid_uniform = _active.trapezoid_uniform
