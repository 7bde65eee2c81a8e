"""Hot-kernel backend selection.

The compiled Cython extension is preferred; the pure NumPy fallback is used
when the extension is unavailable or ``OTFSEQ_PURE_KERNELS`` is set. Both
expose identical ``fspai_factor`` and ``bcjr`` contracts.
"""

import os

if os.environ.get("OTFSEQ_PURE_KERNELS"):
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import _pure as _impl

fspai_factor = _impl.fspai_factor
bcjr = _impl.bcjr
BACKEND = _impl.BACKEND

__all__ = ["fspai_factor", "bcjr", "BACKEND"]
