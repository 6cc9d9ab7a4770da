"""Hot numeric kernels with two interchangeable backends.

The numba backend is used when numba imports cleanly. Set
``PINCHMETA_BACKEND=numpy`` to force the vectorized numpy path (useful for
debugging and for the backend comparison benchmark). Both backends are always
importable by name for cross-checking::

    from pinchmeta.kernels import get_backend
    ref = get_backend("numpy")
"""
import importlib
import os

_NAMES = (
    "outage_count",
    "secrecy_stats",
    "rates",
    "kth_largest_dist2",
    "secrecy_value_grad",
    "pilot_loss_grad",
    "policy_forward",
    "policy_loss_grad",
)


def get_backend(name):
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(f"{__name__}._{name}")


def _select():
    wanted = os.environ.get("PINCHMETA_BACKEND", "numba").strip().lower()
    if wanted == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _select()
_impl = get_backend(BACKEND)

outage_count = _impl.outage_count
secrecy_stats = _impl.secrecy_stats
rates = _impl.rates
kth_largest_dist2 = _impl.kth_largest_dist2
secrecy_value_grad = _impl.secrecy_value_grad
pilot_loss_grad = _impl.pilot_loss_grad
policy_forward = _impl.policy_forward
policy_loss_grad = _impl.policy_loss_grad

__all__ = ["BACKEND", "get_backend", *_NAMES]
