"""Hot-kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-NumPy
module is the fallback.  Set ``NLARCH_KERNELS=numpy`` (or ``compiled``) to
force a backend; forcing ``compiled`` raises if the extension is missing.
"""

import os

from . import _fallback

_mode = os.environ.get("NLARCH_KERNELS", "auto").lower()

if _mode == "numpy":
    _impl = _fallback
elif _mode == "compiled":
    from . import _fast as _impl
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.NAME
sample_indicators = _impl.sample_indicators
sample_factors = _impl.sample_factors
sample_loadings = _impl.sample_loadings


def available_backends():
    """Names of importable backends, compiled first when present."""
    names = []
    try:
        from . import _fast  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    names.append("numpy")
    return names


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "numpy":
        return _fallback
    if name == "compiled":
        from . import _fast
        return _fast
    raise ValueError(f"unknown kernel backend {name!r}")
