"""Backend switch for the hot loops.

Kernels are written once in a numba-compatible subset of Python. When
``BDGMAPS_DISABLE_NUMBA`` is set to a truthy value (or numba cannot be
imported) the decorator below is the identity and the same source runs
as plain Python on numpy arrays.
"""

import os

_FLAG = os.environ.get("BDGMAPS_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by environment")
    import numba as _nb

    NUMBA_ENABLED = True
except ImportError:
    _nb = None
    NUMBA_ENABLED = False


def kernel(fn):
    """Compile ``fn`` with numba in nopython mode, or return it untouched."""
    if NUMBA_ENABLED:
        return _nb.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "python"
