"""Span kernels: the compiled extension when it is built, otherwise pure Python.

Set ``ADVNER_PURE_PYTHON=1`` to force the fallback.
"""
import os
from array import array

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ADVNER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

N_SCHEMAS = _pykernels.N_SCHEMAS
N_CATEGORIES = _pykernels.N_CATEGORIES


def as_int_array(values):
    return values if isinstance(values, array) and values.typecode == "q" else array("q", values)


def extract_flat(codes, offsets, impl=None):
    impl = impl or _impl
    if impl is _pykernels:
        return impl.extract_flat(codes, offsets)
    return impl.extract_flat(as_int_array(codes), as_int_array(offsets))


def classify_flat(gold, pred, n_types, impl=None):
    """``gold``/``pred`` are (starts, ends, types, offsets) tuples."""
    impl = impl or _impl
    if impl is _pykernels:
        return impl.classify_flat(*gold, *pred, n_types)
    return list(impl.classify_flat(*map(as_int_array, gold), *map(as_int_array, pred), n_types))


def available():
    """name -> module for every backend importable in this environment."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
