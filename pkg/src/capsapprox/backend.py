"""Selects between the numba-compiled row kernels and the pure-numpy path.

Set ``CAPSAPPROX_BACKEND=numpy`` to force the numpy path (useful when numba
is missing or for debugging).  Both paths are bit-identical; the test suite
checks this on every pipeline.
"""
from __future__ import annotations

import importlib.util
import os

BACKENDS = ("numba", "numpy")

HAVE_NUMBA = importlib.util.find_spec("numba") is not None


def default_backend() -> str:
    name = os.environ.get("CAPSAPPROX_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"CAPSAPPROX_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
