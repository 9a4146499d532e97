"""Select the compiled kernels when available, else the pure-Python ones.

Set ``EGDKIT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _purepy

if os.environ.get("EGDKIT_PURE_PYTHON") == "1":
    _impl = _purepy
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _purepy
        BACKEND = "python"

partition_search = _impl.partition_search
treewidth_dp = _impl.treewidth_dp
