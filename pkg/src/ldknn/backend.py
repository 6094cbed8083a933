"""Selection of the batch-kernel backend.

The accelerated numba backend is used when importable; set the
environment variable ``LDKNN_BACKEND=numpy`` to force the pure-numpy
fallback, or ``LDKNN_BACKEND=numba`` to fail loudly if numba is
unavailable. The two backends produce identical predictions.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_numpy

_CHOICE = os.environ.get("LDKNN_BACKEND", "auto").strip().lower()

if _CHOICE not in ("auto", "numba", "numpy"):
    raise ValueError(f"LDKNN_BACKEND must be auto, numba or numpy, not {_CHOICE!r}")

_numba_kernels = None
if _CHOICE in ("auto", "numba"):
    try:
        from . import _kernels_numba as _numba_kernels
    except ImportError as exc:
        if _CHOICE == "numba":
            raise ImportError(f"LDKNN_BACKEND=numba but numba is unavailable: {exc}") from exc
        warnings.warn(f"numba unavailable ({exc}); falling back to the numpy backend")

_ACTIVE = "numba" if _numba_kernels is not None else "numpy"


def active_backend() -> str:
    """Name of the backend batch classification will use."""
    return _ACTIVE


def kernels(name: str | None = None):
    """The kernel module for ``name`` (default: the active backend)."""
    name = name or _ACTIVE
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        if _numba_kernels is None:
            raise ValueError("numba backend is not available in this process")
        return _numba_kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _numba_kernels is not None else ("numpy",)
