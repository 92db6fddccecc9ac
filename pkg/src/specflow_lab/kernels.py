"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback has identical
signatures and is selected automatically when the extension is missing or
when ``SPECFLOW_LAB_PURE`` is set in the environment.
"""

from __future__ import annotations

import os

if os.environ.get("SPECFLOW_LAB_PURE"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover
        from . import _kernels_py as _impl

        BACKEND = "python"

birkhoff_batch = _impl.birkhoff_batch
flow_batch = _impl.flow_batch
crossing_scan = _impl.crossing_scan
diff_series = _impl.diff_series


def roof_args(f):
    """Positional kernel arguments derived from a RoofFunction."""
    p = f.kernel_params()
    return (p["c0"], p["d1"], p["delta1"], p["d2"], p["delta2"], p["trig"], p["gamma"])
