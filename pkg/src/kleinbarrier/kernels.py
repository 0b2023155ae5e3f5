"""Pick the stepping backend: the compiled extension when built, numpy otherwise.

Set ``KLEINBARRIER_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
taylor_steps = _kernels_py.taylor_steps

if os.environ.get("KLEINBARRIER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        taylor_steps = _kernels.taylor_steps

__all__ = ["BACKEND", "taylor_steps"]
