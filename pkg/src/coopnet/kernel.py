"""Backend selection for the slot loop.

The compiled extension is used when it imports; otherwise the NumPy version.
``COOPNET_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernel

try:
    from . import _kernel as _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = {"python": _pykernel.run_block}
if _ckernel is not None:
    BACKENDS["compiled"] = _ckernel.run_block

if os.environ.get("COOPNET_BACKEND", "").lower() == "python" or _ckernel is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

run_block = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the ``run_block`` implementation called ``name`` (default: active)."""
    if name is None:
        return run_block
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
