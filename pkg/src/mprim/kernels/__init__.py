"""Numerical kernel backends.

Two interchangeable implementations of the hot kernels exist: a compiled
Cython extension and a pure-numpy fallback. The compiled one is picked at
import time when it was built; set MPRIM_BACKEND=python or
MPRIM_BACKEND=compiled to force a choice. `benchmarks/bench_backends.py`
compares the two.
"""

import os

from mprim.kernels import py_kernels

try:
    from mprim.kernels import _ckernels
except ImportError:
    _ckernels = None

COMPILED_AVAILABLE = _ckernels is not None


def _select(name):
    if name == "python":
        return py_kernels
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError(
                "compiled kernels requested but the extension is not built; "
                "reinstall with a C toolchain or use MPRIM_BACKEND=python")
        return _ckernels
    if name == "auto":
        return _ckernels if _ckernels is not None else py_kernels
    raise ValueError(f"unknown backend {name!r} (use auto, python or compiled)")


_active = _select(os.environ.get("MPRIM_BACKEND", "auto"))


def active_backend():
    """Name of the backend currently in use ('python' or 'compiled')."""
    return _active.NAME


def set_backend(name):
    """Switch backends at runtime (mainly for tests and benchmarks)."""
    global _active
    _active = _select(name)


def get_backend(name):
    """Return a specific backend module without activating it."""
    return _select(name)


def basis_matrix(z, centers, width):
    return _active.basis_matrix(z, centers, width)


def mlp_forward_acts(x, weights, biases):
    return _active.mlp_forward_acts(x, weights, biases)


def mlp_backward_acts(acts, weights, delta_out):
    return _active.mlp_backward_acts(acts, weights, delta_out)


def dmp_rollout(start, goal, forcing_weights, centers, widths, tau,
                alpha_z, beta_z, alpha_x, dt, steps):
    return _active.dmp_rollout(start, goal, forcing_weights, centers, widths,
                               tau, alpha_z, beta_z, alpha_x, dt, steps)
