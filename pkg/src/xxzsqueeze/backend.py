"""Kernel backend selection.

Hot numerical loops are compiled with numba by default. Setting the
environment variable ``XXZSQUEEZE_NUMBA`` to ``0``/``false``/``no``/``off``
(or running without numba installed) selects a pure-numpy fallback with
identical semantics. ``benchmarks/backend_bench.py`` compares the two.
"""

import os


def _env_wants_numba():
    value = os.environ.get("XXZSQUEEZE_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _env_wants_numba() and _numba_available()


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
