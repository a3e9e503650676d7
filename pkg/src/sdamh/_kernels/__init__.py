"""Kernel backend selection.

The hot loops (simulation, sequential filtering, Monte-Carlo impulse
responses) exist twice: a Cython extension and a pure-Python twin. The
compiled backend is picked when importable; set SDAMH_BACKEND=python or
SDAMH_BACKEND=compiled to force one (the latter raises if the extension is
missing).
"""

import os

from . import pykernels

_forced = os.environ.get("SDAMH_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise RuntimeError(f"SDAMH_BACKEND must be 'python' or 'compiled', got {_forced!r}")

if _forced == "python":
    kernels = pykernels
    BACKEND = "python"
else:
    try:
        from . import cykernels as _cy
        kernels = _cy
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        kernels = pykernels
        BACKEND = "python"


def get_backend(name: str):
    """Return a specific kernel module by name ('python' or 'compiled')."""
    if name == "python":
        return pykernels
    if name == "compiled":
        from . import cykernels
        return cykernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> tuple:
    names = ["python"]
    try:
        from . import cykernels  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    return tuple(names)
