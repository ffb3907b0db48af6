"""Hot-kernel dispatch: compiled extension when available, numpy otherwise.

Set MSAPDM_KERNELS=python or =cython to force a backend; the default
("auto") prefers the compiled extension.
"""

import os

from . import _numpy_backend

_choice = os.environ.get("MSAPDM_KERNELS", "auto")

if _choice == "python":
    _impl = _numpy_backend
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise ImportError(
                "MSAPDM_KERNELS=cython but the compiled extension is not built"
            )
        _impl = _numpy_backend
        BACKEND = "python"

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward


def available_backends():
    """Name -> module map of every importable kernel backend."""
    out = {"python": _numpy_backend}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
