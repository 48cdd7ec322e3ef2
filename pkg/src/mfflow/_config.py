"""Runtime switches for the accelerated kernels."""

import os


def _truthy(value):
    return str(value).strip().lower() not in ("", "0", "false", "no", "off")


#: Set ``MFFLOW_DISABLE_NUMBA=1`` to force the pure-numpy kernels.
DISABLE_NUMBA = _truthy(os.getenv("MFFLOW_DISABLE_NUMBA", "")) or _truthy(
    os.getenv("NUMBA_DISABLE_JIT", "")
)

try:  # numba is optional at runtime
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE_NUMBA

NUMBA_OPTS = {"cache": False, "nogil": True}
