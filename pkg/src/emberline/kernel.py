"""Simulation-kernel backend selection.

Two interchangeable implementations exist: a compiled extension
(``emberline._kernel``, Cython) and a pure-Python fallback
(``emberline._kernel_py``).  They are written to produce bit-equal outputs;
the compiled one is simply much faster.  Import-time selection prefers the
compiled backend when it is present and importable, unless the environment
variable ``EMBERLINE_BACKEND`` forces a choice (``python`` or ``compiled``;
``auto`` or empty keeps the default behaviour).
"""

from __future__ import annotations

import os

from .exceptions import ConfigError

BACKEND_ENV_VAR = "EMBERLINE_BACKEND"


def backend_module(name: str):
    """Return the kernel module for ``name``: "compiled", "python" or "auto"."""
    if name == "python":
        from . import _kernel_py

        return _kernel_py
    if name == "compiled":
        from . import _kernel  # type: ignore[attr-defined]

        return _kernel
    if name == "auto":
        try:
            from . import _kernel  # type: ignore[attr-defined]

            return _kernel
        except ImportError:
            from . import _kernel_py

            return _kernel_py
    raise ConfigError(f"unknown kernel backend {name!r}; use 'auto', 'compiled' or 'python'")


def compiled_available() -> bool:
    try:
        from . import _kernel  # type: ignore[attr-defined]  # noqa: F401

        return True
    except ImportError:
        return False


_forced = os.environ.get(BACKEND_ENV_VAR, "").strip().lower() or "auto"
_impl = backend_module(_forced)

#: Name of the backend actually serving ``run_kernel``: "compiled" or "python".
ACTIVE_BACKEND: str = _impl.BACKEND

run_kernel = _impl.run_kernel
