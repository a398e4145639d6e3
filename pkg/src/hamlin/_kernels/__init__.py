"""Backend selection for the tape evaluator.

The compiled Cython kernel is preferred; the pure-Python twin is the
fallback.  Set HAMLIN_PURE_PYTHON=1 to force the fallback (used by the
backend-comparison benchmark and by tests that exercise parity).
"""

import os

from . import _tape_py

if os.environ.get("HAMLIN_PURE_PYTHON") == "1":
    active = _tape_py
    BACKEND = "python"
else:
    try:
        from . import _tape_cy

        active = _tape_cy
        BACKEND = "cython"
    except ImportError:
        active = _tape_py
        BACKEND = "python"


def available_backends():
    """Importable backends keyed by name (for benchmarks and parity tests)."""
    found = {"python": _tape_py}
    try:
        from . import _tape_cy as cy

        found["cython"] = cy
    except ImportError:
        pass
    return found
