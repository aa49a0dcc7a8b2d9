"""Hot geometry kernels.

Selects the compiled extension at import time when it is present and the
UVHUMAN_PURE_PY environment variable is unset; otherwise falls back to the
numpy reference implementation. Both expose the same two functions.
"""

import os

from . import _ref

if os.environ.get("UVHUMAN_PURE_PY", ""):
    _impl = _ref
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref

nearest_triangles = _impl.nearest_triangles
ray_capsules = _impl.ray_capsules
BACKEND = "compiled" if _impl is not _ref else "numpy"

__all__ = ["nearest_triangles", "ray_capsules", "BACKEND"]
