"""Dense kernel backend selection.

The compiled Cython core is preferred when it was built; otherwise the NumPy
fallback is used. ``RUC_KERNELS=pure`` forces the fallback, ``RUC_KERNELS=
compiled`` insists on the extension (import error if missing). Both backends
expose the same functions and agree numerically; they are not guaranteed to
agree bit for bit, so seeded reproducibility holds per backend.
"""

import os

_choice = os.environ.get("RUC_KERNELS", "auto")
if _choice not in ("auto", "pure", "compiled"):
    raise ImportError(f"RUC_KERNELS must be auto, pure or compiled, got {_choice!r}")

if _choice == "pure":
    from ruc._kernels import pure as _impl

    BACKEND = "pure"
else:
    try:
        from ruc._kernels import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from ruc._kernels import pure as _impl

        BACKEND = "pure"

affine = _impl.affine
affine_grads = _impl.affine_grads
relu = _impl.relu
relu_grad = _impl.relu_grad
softmax = _impl.softmax
sqdist = _impl.sqdist

__all__ = [
    "BACKEND",
    "affine",
    "affine_grads",
    "relu",
    "relu_grad",
    "softmax",
    "sqdist",
]
