"""Mechanics of one iteration on the full ``n x n`` matrix.

This module holds the iteration state, the pivot-pair partition, the
candidate predicate, application of 2x2 transforms to rows and columns, and
the weight of a prospective step (the drop of the squared off-diagonal
Frobenius norm it would cause).

Indices are zero-based throughout.  The functions below are the pure-Python
reference implementation; :mod:`hyperkog._backend` dispatches the batched
operations (:func:`compute_all_weights`, :func:`apply_multistep`) to the
compiled core when it is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fpcore import cfma, cmul, fma, hypot2
from .kernel2x2 import _hsvd2

__all__ = [
    "AUG_DTYPE",
    "IterationState",
    "PairPartition",
    "StepResult",
    "build_pair_partition",
    "is_candidate",
    "apply_left2",
    "apply_right2",
    "transform_columns",
    "virtual_weight",
    "compute_all_weights",
    "apply_multistep",
    "off_norm2",
]

_nan = math.nan
_isfinite = math.isfinite

#: record layout of an augmented weight ``(w, p, q)``
AUG_DTYPE = np.dtype([("w", np.float64), ("p", np.int64), ("q", np.int64)])


@dataclass
class IterationState:
    """Current iterate ``G = U_star @ G0 @ V`` with its signature.

    ``U_star`` and ``V`` are ``None`` when the factors are not accumulated.
    """

    G: np.ndarray
    J: np.ndarray
    U_star: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.G)

    @classmethod
    def start(cls, G0, J0, accumulate: bool = True) -> "IterationState":
        G0 = np.asarray(G0)
        dtype = np.complex128 if np.iscomplexobj(G0) else np.float64
        G = np.array(G0, dtype=dtype, order="C", copy=True)
        J = np.asarray(J0, dtype=np.int64).ravel().copy()
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("G0 must be square")
        if J.shape != (G.shape[0],):
            raise ValueError("J0 must have one sign per row of G0")
        if not np.all(np.abs(J) == 1):
            raise ValueError("J0 entries must be +1 or -1")
        if accumulate:
            return cls(G, J, np.eye(G.shape[0], dtype=dtype), np.eye(G.shape[0], dtype=dtype))
        return cls(G, J)


@dataclass
class PairPartition:
    """All index pairs ``p < q``; same-sign pairs first, mixed-sign after."""

    pairs: np.ndarray
    split: int

    @property
    def trig(self) -> np.ndarray:
        return self.pairs[: self.split]

    @property
    def hyp(self) -> np.ndarray:
        return self.pairs[self.split:]


@dataclass
class StepResult:
    """Outcome of one applied 2x2 step, as needed by the convergence test."""

    p: int
    q: int
    was_diagonal: bool
    u_is_identity: bool
    v_is_identity: bool
    defined: bool = True


def build_pair_partition(J) -> PairPartition:
    """Enumerate the pairs column by column and split them by sign.

    Same-sign pairs are filled from the front in enumeration order, mixed-sign
    pairs from the back, so the mixed-sign part comes out reversed.
    """
    J = np.asarray(J).ravel()
    n = J.shape[0]
    if n < 2:
        raise ValueError("need at least two indices")
    m = n * (n - 1) // 2
    pairs = np.empty((m, 2), dtype=np.int64)
    front = 0
    back = m - 1
    for q in range(1, n):
        for p in range(q):
            if J[p] == J[q]:
                pairs[front] = (p, q)
                front += 1
            else:
                pairs[back] = (p, q)
                back -= 1
    return PairPartition(pairs, front)


# ---------------------------------------------------------------------------
# candidate predicate
# ---------------------------------------------------------------------------


def _nonneg_real(z) -> bool:
    if isinstance(z, complex):
        return z.imag == 0.0 and z.real >= 0.0
    return z >= 0.0


def _candidate(gpp, gqp, gpq, gqq, jp, jq) -> bool:
    if gqp != 0 or gpq != 0:
        return True
    if not (_nonneg_real(gpp) and _nonneg_real(gqq)):
        return True
    if jp == jq:
        app = gpp.real if isinstance(gpp, complex) else gpp
        aqq = gqq.real if isinstance(gqq, complex) else gqq
        return app < aqq if jp > 0 else app > aqq
    return False


def is_candidate(G, J, p: int, q: int) -> bool:
    """Whether the pivot ``(p, q)`` of ``G`` still needs a transformation."""
    G = np.asarray(G)
    return _candidate(G[p, p].item(), G[q, p].item(), G[p, q].item(), G[q, q].item(),
                      int(J[p]), int(J[q]))


# ---------------------------------------------------------------------------
# application of 2x2 transforms
# ---------------------------------------------------------------------------


def _is_swap(m) -> bool:
    return m[0] == 0 and m[1] == 1 and m[2] == 1 and m[3] == 0


def _is_eye(m) -> bool:
    return m[0] == 1 and m[1] == 0 and m[2] == 0 and m[3] == 1


def _combine(x1, x2, a, b, cplx):
    """``x1*a + x2*b`` as one fused step on top of a product."""
    if cplx:
        return cfma(x1, a, cmul(x2, b))
    return fma(x1, a, x2 * b)


def _rows2(u, ra, rb, cplx):
    u11, u12, u21, u22 = u
    na = [_combine(u11, u12, a, b, cplx) for a, b in zip(ra, rb)]
    nb = [_combine(u21, u22, a, b, cplx) for a, b in zip(ra, rb)]
    return na, nb


def _left(M, p, q, u, cplx):
    if _is_eye(u):
        return
    if _is_swap(u):
        M[[p, q]] = M[[q, p]]
        return
    na, nb = _rows2(u, M[p].tolist(), M[q].tolist(), cplx)
    M[p] = na
    M[q] = nb


def _right(M, p, q, v, cplx):
    if _is_eye(v):
        return
    if _is_swap(v):
        M[:, [p, q]] = M[:, [q, p]]
        return
    v11, v12, v21, v22 = v
    # columns transform as rows by the transposed matrix
    na, nb = _rows2((v11, v21, v12, v22), M[:, p].tolist(), M[:, q].tolist(), cplx)
    M[:, p] = na
    M[:, q] = nb


def _flat(m, cplx):
    m = np.asarray(m)
    vals = m.astype(np.complex128 if cplx else np.float64).ravel().tolist()
    return tuple(vals)


def apply_left2(state: IterationState, p: int, q: int, U_hat_star) -> None:
    """Replace rows ``p, q`` of ``G`` (and ``U_star``) by ``U_hat_star @ rows``."""
    cplx = state.is_complex
    u = _flat(U_hat_star, cplx)
    _left(state.G, p, q, u, cplx)
    if state.U_star is not None:
        _left(state.U_star, p, q, u, cplx)


def transform_columns(M, p: int, q: int, V_hat) -> None:
    """Replace columns ``p, q`` of the array ``M`` by ``cols @ V_hat``, in place.

    Uses the same fused arithmetic as the iteration itself; ``M`` may have
    any number of rows.
    """
    cplx = np.iscomplexobj(M)
    _right(M, p, q, _flat(V_hat, cplx), cplx)


def apply_right2(state: IterationState, p: int, q: int, V_hat,
                 sigma_pp: float, sigma_qq: float) -> None:
    """Replace columns ``p, q`` by ``cols @ V_hat`` and store the pivot exactly."""
    cplx = state.is_complex
    v = _flat(V_hat, cplx)
    _right(state.G, p, q, v, cplx)
    if state.V is not None:
        _right(state.V, p, q, v, cplx)
    state.G[p, p] = sigma_pp
    state.G[q, q] = sigma_qq
    state.G[p, q] = 0.0
    state.G[q, p] = 0.0


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


def _acc(s, c, x, y):
    """Add the exact product ``x*y`` to the compensated sum ``s + c``."""
    h = x * y
    e = fma(x, y, -h)
    t = s + h
    z = t - s
    return t, c + (((s - (t - z)) + (h - z)) + e)


def _mag(z, cplx):
    if cplx:
        return hypot2(z.real, z.imag)
    return abs(z)


def _finite(z, cplx):
    if cplx:
        return _isfinite(z.real) and _isfinite(z.imag)
    return _isfinite(z)


def _pivot_weight(s, c, gqp, gpq, cplx):
    a = _mag(gqp, cplx)
    s, c = _acc(s, c, a, a)
    b = _mag(gpq, cplx)
    return _acc(s, c, b, b)


def _weight(Gl, J, p, q, upsilon, cplx, Ml=None):
    """Weight of the pivot ``(p, q)`` of ``Gl`` (a list of row lists).

    ``Ml`` optionally holds the precomputed moduli of the entries.
    """
    gpp = Gl[p][p]
    gqp = Gl[q][p]
    gpq = Gl[p][q]
    gqq = Gl[q][q]
    if not (_finite(gpp, cplx) and _finite(gqp, cplx) and _finite(gpq, cplx)
            and _finite(gqq, cplx)):
        return _nan
    jp = int(J[p])
    jq = int(J[q])
    if not _candidate(gpp, gqp, gpq, gqq, jp, jq):
        return _nan
    if jp == jq:
        s, c = _pivot_weight(0.0, 0.0, gqp, gpq, cplx)
        return s + c
    u, v, _, _, _, _, v_id, ok = _hsvd2(gpp, gqp, gpq, gqq, jp, jq, upsilon, cplx)
    if not ok:
        return -math.inf
    if v_id:
        s, c = _pivot_weight(0.0, 0.0, gqp, gpq, cplx)
        return s + c
    v11, v12, v21, v22 = v
    s, c = _pivot_weight(0.0, 0.0, gqp, gpq, cplx)
    for i in range(len(Gl)):
        if i == p or i == q:
            continue
        row = Gl[i]
        a = row[p]
        b = row[q]
        if not (_finite(a, cplx) and _finite(b, cplx)):
            return _nan
        ma = _mag(a, cplx) if Ml is None else Ml[i][p]
        mat = _mag(_combine(v11, v21, a, b, cplx), cplx)
        s, c = _acc(s, c, ma - mat, ma + mat)
        mb = _mag(b, cplx) if Ml is None else Ml[i][q]
        mbt = _mag(_combine(v12, v22, a, b, cplx), cplx)
        s, c = _acc(s, c, mb - mbt, mb + mbt)
    return s + c


def virtual_weight(G, J, p: int, q: int, upsilon: float = 1.0) -> float:
    """Weight of the step on ``(p, q)`` without modifying ``G``.

    Returns NaN when the pivot is not a candidate or a scanned element is
    not finite, and ``-inf`` when the hyperbolic transform is rejected.
    """
    G = np.asarray(G)
    return _weight(G.tolist(), np.asarray(J).ravel().tolist(), p, q, upsilon,
                   np.iscomplexobj(G))


def _weights_py(G, J, pairs, upsilon):
    Gl = G.tolist()
    Jl = J.tolist()
    cplx = np.iscomplexobj(G)
    Ml = [[hypot2(z.real, z.imag) for z in row] for row in Gl] if cplx else None
    return np.array([_weight(Gl, Jl, int(p), int(q), upsilon, cplx, Ml) for p, q in pairs],
                    dtype=np.float64)


def compute_all_weights(state: IterationState, partition: PairPartition,
                        upsilon: float = 1.0, tasks: int = 1,
                        backend: Optional[str] = None) -> np.ndarray:
    """Augmented weights of every pair of ``partition``, in partition order.

    Returns a structured array with fields ``w``, ``p``, ``q``
    (:data:`AUG_DTYPE`).
    """
    from . import _backend

    w = _backend.get(backend).weights(state.G, state.J, partition.pairs,
                                      partition.split, upsilon, tasks)
    out = np.empty(len(w), dtype=AUG_DTYPE)
    out["w"] = w
    out["p"] = partition.pairs[:, 0]
    out["q"] = partition.pairs[:, 1]
    return out


# ---------------------------------------------------------------------------
# multi-step
# ---------------------------------------------------------------------------


def _multistep_py(G, Ustar, V, J, pivots, upsilon):
    """Apply index-disjoint steps: all kernels, all left, then all right."""
    cplx = np.iscomplexobj(G)
    k = len(pivots)
    flags = np.zeros((k, 4), dtype=bool)
    results = []
    for i, (p, q) in enumerate(pivots):
        p = int(p)
        q = int(q)
        r = _hsvd2(G[p, p].item(), G[q, p].item(), G[p, q].item(), G[q, q].item(),
                   int(J[p]), int(J[q]), upsilon, cplx)
        results.append(r)
        flags[i] = (r[4], r[5], r[6], r[7])
    for (p, q), r in zip(pivots, results):
        if r[7]:
            _left(G, int(p), int(q), r[0], cplx)
            if Ustar is not None:
                _left(Ustar, int(p), int(q), r[0], cplx)
    for (p, q), r in zip(pivots, results):
        if r[7]:
            p = int(p)
            q = int(q)
            _right(G, p, q, r[1], cplx)
            if V is not None:
                _right(V, p, q, r[1], cplx)
            G[p, p] = r[2]
            G[q, q] = r[3]
            G[p, q] = 0.0
            G[q, p] = 0.0
    return flags


def apply_multistep(state: IterationState, pivots, upsilon: float = 1.0,
                    tasks: int = 1, backend: Optional[str] = None) -> List[StepResult]:
    """Run one multi-step on ``state`` in place.

    ``pivots`` is a sequence of pairwise index-disjoint ``(p, q)``.  Every
    kernel is evaluated on the incoming matrix, then all left transforms are
    applied, then all right transforms.
    """
    from . import _backend

    piv = np.ascontiguousarray(np.asarray(pivots, dtype=np.int64).reshape(-1, 2))
    flags = _backend.get(backend).multistep(state.G, state.U_star, state.V, state.J,
                                            piv, upsilon, tasks)
    return [StepResult(int(p), int(q), bool(f[0]), bool(f[1]), bool(f[2]), bool(f[3]))
            for (p, q), f in zip(piv, flags)]


def off_norm2(G) -> float:
    """Squared off-diagonal Frobenius norm, summed in double-double."""
    from .ddmath import dd_sum_squares

    A = np.array(G, copy=True)
    np.fill_diagonal(A, 0)
    return dd_sum_squares(A)
