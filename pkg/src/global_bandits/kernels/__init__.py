"""Simulation loops over precomputed reward tables.

The compiled extension is used when it imports; otherwise the pure-Python
versions take over. Set ``GLOBAL_BANDITS_BACKEND=python`` to force the
fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("GLOBAL_BANDITS_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

run_wagp_gp = _impl.run_wagp_gp
run_windowed_wagp = _impl.run_windowed_wagp
run_ucb1 = _impl.run_ucb1

__all__ = ["BACKEND", "run_wagp_gp", "run_windowed_wagp", "run_ucb1",
           "python_backend", "compiled_backend"]
