"""Backend selection for the hot kernels.

Set ``CRWRUIN_DISABLE_NUMBA=1`` to force the pure-numpy kernels.  If numba
is not importable the numpy kernels are used regardless.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
NUMBA_DISABLED = os.environ.get("CRWRUIN_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
DEFAULT_BACKEND = "numba" if HAVE_NUMBA and not NUMBA_DISABLED else "numpy"
BACKENDS = ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator."""
    if numba is not None:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def resolve_backend(backend=None):
    backend = DEFAULT_BACKEND if backend is None else backend
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; choose from {BACKENDS}")
    return backend
