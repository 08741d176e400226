"""Kernel backend selection.

Two lanes implement the same kernel contracts: a numba @njit lane and a
pure-numpy fallback. The env flag KMCORESET_BACKEND picks one ("numba" or
"numpy"); unset, the numba lane is used when importable, numpy otherwise.
`set_backend` overrides the flag in-process (tests, benchmarks).
"""

import os

ENV_FLAG = "KMCORESET_BACKEND"

_active = None
_forced = None


def _load(name):
    if name == "numba":
        from . import numba_backend
        return numba_backend
    if name == "numpy":
        from . import numpy_backend
        return numpy_backend
    raise ValueError(f"unknown kernel backend {name!r}; expected 'numba' or 'numpy'")


def get_backend():
    """The active kernel module. Resolved once, then cached."""
    global _active
    if _active is None:
        if _forced is not None:
            _active = _load(_forced)
            return _active
        choice = os.environ.get(ENV_FLAG, "").strip().lower()
        if choice not in ("", "numba", "numpy"):
            raise ValueError(
                f"{ENV_FLAG}={choice!r} is not valid; use 'numba' or 'numpy'")
        if choice == "numpy":
            _active = _load("numpy")
        else:
            try:
                _active = _load("numba")
            except ImportError:
                if choice == "numba":
                    raise
                _active = _load("numpy")
    return _active


def backend_name():
    mod = get_backend()
    return "numba" if mod.__name__.endswith("numba_backend") else "numpy"


def set_backend(name):
    """Force a lane by name, or restore env-flag resolution with None."""
    global _active, _forced
    if name is not None:
        _load(name)  # validate eagerly
    _forced = name
    _active = None
