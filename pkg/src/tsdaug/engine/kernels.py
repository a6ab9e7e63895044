"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the numpy
implementations are the fallback.  Set ``TSDAUG_KERNELS=numpy`` (or
``compiled``) to force a backend, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from tsdaug.engine import kernels_numpy

_forced = os.environ.get("TSDAUG_KERNELS", "").strip().lower()

if _forced == "numpy":
    _impl = kernels_numpy
else:
    try:
        from tsdaug.engine import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "compiled":
            raise ImportError(
                "TSDAUG_KERNELS=compiled but the tsdaug.engine._ckernels "
                "extension is not built; reinstall with a C compiler available"
            ) from None
        _impl = kernels_numpy

BACKEND = _impl.BACKEND_NAME

conv1d_forward = _impl.conv1d_forward
conv1d_backward_x = _impl.conv1d_backward_x
conv1d_backward_w = _impl.conv1d_backward_w
