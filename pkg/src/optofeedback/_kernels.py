"""Kernel backend selection.

The compiled extension is used when importable, unless the environment
variable ``OPTOFEEDBACK_PURE_PYTHON`` is set to a non-empty value other
than ``0``.
"""
import os

from . import _pykernels

BACKEND = "python"
_force_python = os.environ.get("OPTOFEEDBACK_PURE_PYTHON", "") not in ("", "0")

if not _force_python:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

rk4_lyapunov = _impl.rk4_lyapunov
chsh_value = _impl.chsh_value
nelder_mead_bell = _impl.nelder_mead_bell


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python') or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
