"""Hyperbolic singular value decomposition by a two-sided Jacobi iteration.

``G0 = U @ diag(Sigma) @ V_inv`` for a square real or complex ``G0`` and a
signature ``J0 = diag(+-1)``, where ``U`` is unitary and ``V = J0 V_inv^* J0``
is ``J0``-unitary.  Pivots are chosen dynamically by the drop of the
off-diagonal norm, several index-disjoint 2x2 steps at a time.
"""

from . import _backend
from .driver import Config, HsvdResult, RunStats, run
from .kernel2x2 import Hsvd2Result, hsvd2

__all__ = ["Config", "HsvdResult", "RunStats", "run", "Hsvd2Result", "hsvd2", "BACKEND"]
__version__ = "0.1.0"

#: name of the backend used by default ("compiled" or "python")
BACKEND = _backend.get().name
