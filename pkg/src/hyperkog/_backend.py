"""Selection between the compiled core and the pure-Python reference.

The compiled extension ``hyperkog._core`` is used when it imports and
``HYPERKOG_PURE`` is not set to a true value; otherwise everything runs in
pure Python.  Both backends round identically, so the choice only affects
speed.
"""

from __future__ import annotations

import os
from types import SimpleNamespace
from typing import Optional

from . import sweep as _sweep

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on the build
    _core = None


def _py_weights(G, J, pairs, split, upsilon, tasks):
    return _sweep._weights_py(G, J, pairs, upsilon)


def _py_multistep(G, U_star, V, J, pivots, upsilon, tasks):
    return _sweep._multistep_py(G, U_star, V, J, pivots, upsilon)


PYTHON = SimpleNamespace(name="python", weights=_py_weights, multistep=_py_multistep)

if _core is not None:
    COMPILED = SimpleNamespace(name="compiled", weights=_core.weights,
                               multistep=_core.multistep)
else:
    COMPILED = None


def _default():
    if os.environ.get("HYPERKOG_PURE", "").strip().lower() in ("1", "true", "yes", "on"):
        return PYTHON
    return COMPILED if COMPILED is not None else PYTHON


def get(name: Optional[str] = None):
    """Return the backend called ``name`` (``"python"`` or ``"compiled"``)."""
    if name is None:
        return _default()
    if name == "python":
        return PYTHON
    if name == "compiled":
        if COMPILED is None:
            raise RuntimeError("the compiled core is not available")
        return COMPILED
    raise ValueError(f"unknown backend {name!r}")


def available():
    """Names of the usable backends."""
    return ["python"] + (["compiled"] if COMPILED is not None else [])
