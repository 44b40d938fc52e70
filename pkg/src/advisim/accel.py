"""Backend selection for the hot kernels.

Every numeric kernel in this package is written once, in nopython-compatible
Python, and decorated with :func:`jit`. When numba is installed and the
environment variable ``ADVISIM_NUMBA`` is unset (or set to a truthy value),
the decorator compiles the function with ``numba.njit(cache=True)``. Setting
``ADVISIM_NUMBA=0`` runs the identical source as plain Python/NumPy instead.

The flag trades speed for debuggability only; both backends walk the same
random streams and produce the same results. ``advisim bench --compare``
measures the difference and checks output equality.
"""

import os


def _want_numba() -> bool:
    flag = os.environ.get("ADVISIM_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


NUMBA_ENABLED = False
if _want_numba():
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


if NUMBA_ENABLED:
    import numba

    def jit(func):
        """Compile ``func`` to machine code; falls back to plain Python
        when the accelerator is disabled."""
        return numba.njit(cache=True)(func)

else:

    def jit(func):
        """Accelerator disabled: return ``func`` unchanged."""
        return func


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "python"
