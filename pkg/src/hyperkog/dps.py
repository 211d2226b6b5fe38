"""Dynamic pivot strategy: ordering of weights and greedy pivot selection.

An augmented weight is a triple ``(w, p, q)``.  The total order used to rank
them puts first the larger weight, then the wider band ``q - p``, then the
larger ``q``.  NaN compares equal to NaN and below every number, so NaN
weights (pairs needing no transformation) always come last.

A multi-step takes pivots greedily in that order, skipping any pivot that
shares an index with one already taken.  Two equivalent constructions are
provided: a sequential scan with an occupancy table and a data-parallel
variant that kills colliding entries and takes the minimal surviving index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

import numpy as np

from .sweep import AUG_DTYPE

__all__ = ["AugWeight", "Ordering", "weight_cmp", "sort_weights", "build_ordering",
           "as_records"]


class AugWeight(NamedTuple):
    """Weight ``w`` of the pivot ``(p, q)``; NaN when no step is needed."""

    w: float
    p: int
    q: int


@dataclass
class Ordering:
    """Selected pivots and their positions in the sorted weight array."""

    entries: np.ndarray
    source_indices: np.ndarray

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def pivots(self) -> np.ndarray:
        return np.stack([self.entries["p"], self.entries["q"]], axis=1)


def as_records(weights: Union[np.ndarray, Iterable]) -> np.ndarray:
    """Convert a sequence of ``(w, p, q)`` triples to a record array."""
    if isinstance(weights, np.ndarray) and weights.dtype == AUG_DTYPE:
        return weights
    items = [tuple(a) for a in weights]
    return np.array(items, dtype=AUG_DTYPE) if items else np.empty(0, dtype=AUG_DTYPE)


def _wcmp(x: float, y: float) -> int:
    """-1 if ``x`` ranks first (is larger), 0 if equal, 1 otherwise."""
    xn = math.isnan(x)
    yn = math.isnan(y)
    if xn or yn:
        return 0 if xn and yn else (1 if xn else -1)
    if x > y:
        return -1
    return 1 if x < y else 0


def weight_cmp(a, b) -> int:
    """Compare augmented weights: -1 if ``a`` precedes ``b``, 0 if equal, 1 otherwise."""
    a = AugWeight(*a)
    b = AugWeight(*b)
    c = _wcmp(a.w, b.w)
    if c:
        return c
    ba = a.q - a.p
    bb = b.q - b.p
    if ba != bb:
        return -1 if ba > bb else 1
    if a.q != b.q:
        return -1 if a.q > b.q else 1
    return 0


def sort_weights(weights) -> np.ndarray:
    """Drop NaN and ``-inf`` weights and sort the rest in ranking order."""
    rec = as_records(weights)
    keep = ~np.isnan(rec["w"]) & (rec["w"] != -np.inf)
    rec = rec[keep]
    # lexsort takes the primary key last
    order = np.lexsort((-rec["q"], -(rec["q"] - rec["p"]), -rec["w"]))
    return rec[order]


def _sequential(p, q, start, target, n):
    busy = np.zeros(n, dtype=bool)
    taken = []
    for j in range(start, len(p)):
        a = p[j]
        b = q[j]
        if not busy[a] and not busy[b]:
            busy[a] = True
            busy[b] = True
            taken.append(j)
            if len(taken) == target:
                break
    return taken


def _parallel(p, q, start, target):
    alive = np.ones(len(p), dtype=bool)
    alive[:start] = False
    taken = []
    k = start
    while len(taken) < target:
        live = np.flatnonzero(alive[k:])
        if live.size == 0:
            break
        k = k + int(live.min())  # min-index reduction over survivors
        taken.append(k)
        a = p[k]
        b = q[k]
        alive[(p == a) | (p == b) | (q == a) | (q == b)] = False
    return taken


def build_ordering(sorted_weights, target_len: int, ell: int = 0,
                   method: str = "sequential") -> Ordering:
    """Greedily pick up to ``target_len`` index-disjoint pivots.

    Parameters
    ----------
    sorted_weights : array of augmented weights
        Output of :func:`sort_weights`.
    target_len : int
        Maximal number of pivots.
    ell : int, optional
        Zero-based position in ``sorted_weights`` of the first pivot.
    method : {"sequential", "parallel"}
        Occupancy scan or collision-kill construction; both give the same
        result.
    """
    rec = as_records(sorted_weights)
    m = len(rec)
    if m == 0 or target_len < 1:
        return Ordering(rec[:0], np.empty(0, dtype=np.int64))
    if not 0 <= ell < m:
        raise ValueError("ell out of range")
    p = rec["p"]
    q = rec["q"]
    if method == "sequential":
        n = int(max(p.max(), q.max())) + 1
        taken = _sequential(p, q, ell, target_len, n)
    elif method == "parallel":
        taken = _parallel(p, q, ell, target_len)
    else:
        raise ValueError(f"unknown method {method!r}")
    idx = np.asarray(taken, dtype=np.int64)
    return Ordering(rec[idx], idx)
