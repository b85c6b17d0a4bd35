"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; the NumPy fallback is
always available.  Set ``STEIN_RMT_BACKEND=python`` or ``cython`` to force a
backend (``cython`` raises if the extension is missing).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load() -> ModuleType:
    choice = os.environ.get("STEIN_RMT_BACKEND", "auto").lower()
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels_cy  # type: ignore[attr-defined]

        return _kernels_cy
    except ImportError:
        if choice == "cython":
            raise ImportError(
                "STEIN_RMT_BACKEND=cython but the compiled extension is not available"
            )
        return _kernels_py


_impl = _load()

BACKEND: str = _impl.BACKEND
mh_sweep = _impl.mh_sweep
cot_drift_sum = _impl.cot_drift_sum
cdbm_propose = _impl.cdbm_propose


def available_backends() -> list[str]:
    out = ["python"]
    try:
        from . import _kernels_cy  # noqa: F401

        out.insert(0, "cython")
    except ImportError:
        pass
    return out
