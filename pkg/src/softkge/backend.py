"""Numeric kernel backend selection.

The hot inner loops (pairwise SGD updates, candidate scoring) exist twice
with identical call signatures: numba-jitted loops in
:mod:`softkge.kernels_numba` and a pure-numpy fallback in
:mod:`softkge.kernels_numpy`. The environment variable ``SOFTKGE_BACKEND``
(``numba`` or ``numpy``) forces a choice; by default numba is used whenever
it imports cleanly.

Both backends are deterministic run-to-run. They may differ from each other
in the last few floating-point bits because reductions are ordered
differently; ``benchmarks/bench_kernels.py`` measures the speed gap and the
numeric deviation side by side.
"""

from __future__ import annotations

import importlib
import os
import warnings

ENV_VAR = "SOFTKGE_BACKEND"
BACKENDS = ("numba", "numpy")

_modules: dict = {}


def numba_available() -> bool:
    try:
        importlib.import_module("numba")
        return True
    except ImportError:
        return False


def resolve_backend(name: str | None = None) -> str:
    """Pick the backend name from an explicit argument or the environment."""
    if name is None:
        name = os.environ.get(ENV_VAR, "").strip().lower() or None
    if name is None:
        if numba_available():
            return "numba"
        warnings.warn("numba is not importable; falling back to the pure-numpy kernels")
        return "numpy"
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose one of {BACKENDS}")
    if name == "numba" and not numba_available():
        raise RuntimeError(f"{ENV_VAR}={name} requested but numba is not importable")
    return name


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (or the resolved default)."""
    name = resolve_backend(name)
    if name not in _modules:
        _modules[name] = importlib.import_module(f"softkge.kernels_{name}")
    return _modules[name]


# Bound once at import; everything in the package routes through this.
kernels = get_kernels()
active = resolve_backend()
