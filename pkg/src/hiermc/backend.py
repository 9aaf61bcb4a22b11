"""Kernel backend selection.

The hot inner loops (pair scanning, cumulative-logit likelihood, path
simulation) exist twice: numba @njit versions in ``_kernels_numba`` and
pure-numpy versions in ``_kernels_numpy``. ``HIERMC_BACKEND`` picks one
("numba" or "numpy"); unset, numba is used when importable. Integer kernel
outputs are bit-identical across backends; float reductions agree to
rounding.
"""

import os

from .errors import ConfigError

BACKEND_ENV_VAR = "HIERMC_BACKEND"
_BACKENDS = ("numba", "numpy")

_active = None


def available_backends():
    names = ["numpy"]
    try:
        import numba  # noqa: F401

        names.insert(0, "numba")
    except ImportError:
        pass
    return tuple(names)


def load_backend(name):
    """Import and return the kernel module for ``name``."""
    if name == "numpy":
        from . import _kernels_numpy as mod
    elif name == "numba":
        from . import _kernels_numba as mod
    else:
        raise ConfigError(
            f"unknown kernel backend {name!r}; expected one of {_BACKENDS}",
            code="BAD_BACKEND",
        )
    return mod


def default_backend_name():
    env = os.environ.get(BACKEND_ENV_VAR, "").strip().lower()
    if env:
        if env not in _BACKENDS:
            raise ConfigError(
                f"{BACKEND_ENV_VAR}={env!r} is not valid; expected one of {_BACKENDS}",
                code="BAD_BACKEND",
            )
        return env
    return "numba" if "numba" in available_backends() else "numpy"


def kernels():
    """The active kernel module (resolved lazily from the environment)."""
    global _active
    if _active is None:
        _active = load_backend(default_backend_name())
    return _active


def use_backend(name):
    """Force a backend (tests and benchmarks); returns the kernel module."""
    global _active
    _active = load_backend(name)
    return _active


def worker_count():
    """Worker cap from HIERMC_THREADS (default 1)."""
    raw = os.environ.get("HIERMC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HIERMC_THREADS={raw!r} is not an integer", code="BAD_THREADS")
    return max(1, n)
