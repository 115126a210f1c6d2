"""Backend selection for the solver's inner sweep.

The compiled extension is used when it imports; otherwise the numpy version
is used.  Set ``BOMBER_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernel_py

BACKEND = "python"
bellman_sweep = _kernel_py.bellman_sweep

if os.environ.get("BOMBER_BACKEND", "").lower() != "python":
    try:
        from ._kernel import bellman_sweep  # noqa: F811
        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

SWEEPS = {"python": _kernel_py.bellman_sweep}
try:
    from . import _kernel as _compiled
    SWEEPS["compiled"] = _compiled.bellman_sweep
except ImportError:
    pass


def default_threads() -> int:
    """Thread cap from ``BOMBER_THREADS``, else the CPU count."""
    env = os.environ.get("BOMBER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
