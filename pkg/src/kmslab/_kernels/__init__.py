"""Backend selection for the kinetic hot loops.

The compiled extension is used when it was built; set ``KMSLAB_BACKEND=python``
to force the NumPy fallback.
"""

import os

from . import _pure

try:
    from . import _collision as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pure}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("KMSLAB_BACKEND", "").lower() == "python" or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    name = BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available; have {available_backends()}"
        ) from None
