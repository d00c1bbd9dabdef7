"""Kernel backend selection.

The compiled Cython core is preferred when present; setting the
environment variable ``NPCHARM_PURE=1`` forces the pure-Python reference
kernels.  Both expose the same module-level API (see ``pure.py``).
"""

import os

_force_pure = os.environ.get("NPCHARM_PURE", "").strip() not in ("", "0")

if _force_pure:
    from . import pure as kernels
    HAVE_COMPILED = False
else:
    try:
        from . import core as kernels  # type: ignore[attr-defined]
        HAVE_COMPILED = True
    except ImportError:
        from . import pure as kernels
        HAVE_COMPILED = False


def backend_name() -> str:
    return kernels.BACKEND
