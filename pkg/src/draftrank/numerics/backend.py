"""Kernel backend selection.

Prefers the compiled extension, falls back to the numpy twin. Override with
``DRAFTRANK_KERNELS=python`` or ``=cython`` (the latter raises if the
extension is missing rather than silently degrading).
"""

import os

_requested = os.environ.get("DRAFTRANK_KERNELS", "").lower()

if _requested in ("py", "python"):
    from . import kernels_py as _impl

    BACKEND = "python"
elif _requested in ("c", "cython"):
    from . import _ckernels as _impl  # type: ignore[attr-defined]

    BACKEND = "cython"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import kernels_py as _impl

        BACKEND = "python"

elu_fwd = _impl.elu_fwd
elu_bwd = _impl.elu_bwd
layernorm_fwd = _impl.layernorm_fwd
layernorm_bwd = _impl.layernorm_bwd
l2norm_fwd = _impl.l2norm_fwd
l2norm_bwd = _impl.l2norm_bwd
masked_mean_fwd = _impl.masked_mean_fwd
masked_mean_bwd = _impl.masked_mean_bwd
segment_mean_fwd = _impl.segment_mean_fwd
segment_mean_bwd = _impl.segment_mean_bwd
masked_ce_fwd = _impl.masked_ce_fwd
masked_ce_bwd = _impl.masked_ce_bwd
