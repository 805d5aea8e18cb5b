"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``PVMPPT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

fallback = _fallback

if os.environ.get("PVMPPT_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

kernels = compiled if compiled is not None else _fallback
NAME = "compiled" if compiled is not None else "python"
