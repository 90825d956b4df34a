"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels`` takes over.  Setting the environment
variable ``ENSEMBLE_EFFORT_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("ENSEMBLE_EFFORT_BACKEND", "").lower() == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

lasso_cd_gram = _impl.lasso_cd_gram
huber_irls = _impl.huber_irls
signed_rank_counts = _impl.signed_rank_counts
huber_loss = _pykernels.huber_loss


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
