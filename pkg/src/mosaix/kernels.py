"""Kernel backend selection.

Imports the compiled kernels when the extension was built, otherwise the
numpy fallback. MOSAIX_PURE_PYTHON=1 forces the fallback (used by the
benchmark and for debugging). Both backends satisfy the same contract and
agree within 1e-9 relative; each is individually deterministic.
"""

from __future__ import annotations

import os

if os.environ.get("MOSAIX_PURE_PYTHON", "") not in ("", "0"):
    from mosaix import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from mosaix import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from mosaix import _pykernels as _impl  # type: ignore[no-redef]

        BACKEND = "python"

min_sq_profile = _impl.min_sq_profile
min_hamming_profile = _impl.min_hamming_profile


def backend() -> str:
    """Name of the active kernel backend: 'native' or 'python'."""
    return BACKEND
