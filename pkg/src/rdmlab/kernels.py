"""Backend selection for the propagation kernels.

The compiled ``_kernels`` extension is used when importable; otherwise, or
when ``RDMLAB_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation in ``_kernels_py`` is used.  Both expose ``propagate``,
``transfer`` and ``batch_counts`` with identical signatures.
"""
import importlib
import os

from . import _kernels_py

BC_DIRICHLET = _kernels_py.BC_DIRICHLET
BC_NEUMANN = _kernels_py.BC_NEUMANN
AMBIGUOUS_TOL = _kernels_py.AMBIGUOUS_TOL
NUDGE = _kernels_py.NUDGE


def load(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("rdmlab._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if os.environ.get("RDMLAB_PURE_PYTHON"):
    BACKEND = "python"
else:
    BACKEND = available()[0]
_impl = load(BACKEND)

propagate = _impl.propagate
transfer = _impl.transfer
batch_counts = _impl.batch_counts
