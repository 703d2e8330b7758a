"""Backend selection for the hot kernels.

Set ``CONTAINSIM_BACKEND=numpy`` to force the pure-numpy path. Any other
value (or unset) uses numba when it imports cleanly.
"""

import os

_requested = os.environ.get("CONTAINSIM_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError("numba disabled by CONTAINSIM_BACKEND")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both supported
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorate(func):
            return func

        return decorate


BACKEND = "numba" if HAVE_NUMBA else "numpy"
