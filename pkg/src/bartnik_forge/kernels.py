"""Backend selection for the radial march.

The compiled extension is used when it imports; setting the environment
variable BARTNIK_FORGE_PURE_PYTHON=1 forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_compiled = None
if os.environ.get("BARTNIK_FORGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def march_preset(kind, p0, p1, m, u0, h, n, tol, max_halvings, backend=None):
    use = backend or BACKEND
    if use == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.march_preset(int(kind), float(p0), float(p1), float(m), float(u0), float(h),
                                      int(n), float(tol), int(max_halvings))
    return _kernels_py.march_preset(kind, p0, p1, m, u0, h, n, tol, max_halvings)


march_callable = _kernels_py.march_callable
