"""The outer iteration: multi-steps until convergence, then finalization.

Each multi-step computes the weight of every pair, sorts them, picks up to
``floor(n/2)`` index-disjoint pivots greedily, computes their 2x2 hyperbolic
SVDs on the current matrix, applies all left transforms and then all right
transforms.  The loop halts after a multi-step in which every step was small
(a phase or swap on a diagonal pivot, or a pair of identity transforms), or
when no candidate is left.

Usage
-----
>>> import numpy as np
>>> from hyperkog import run
>>> res = run(np.array([[2.0, 1.0], [0.0, 1.0]]), [1, -1])
>>> res.stats.outcome
'converged'
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _backend
from .fpcore import cmul, polar3
from .dps import build_ordering, sort_weights
from .sweep import (IterationState, StepResult, apply_multistep, build_pair_partition,
                    compute_all_weights, off_norm2)

__all__ = ["Config", "RunStats", "HsvdResult", "MultistepEvent", "convergence_check", "run"]

OUTCOMES = ("converged", "no_candidates", "sweep_limit", "undefined_hsvd")


@dataclass
class Config:
    """Run parameters.

    Attributes
    ----------
    upsilon : float
        Rejection bound on ``|tanh psi|``, in ``(0, 1]``.
    target_multistep_len : int or None
        Pivots per multi-step; ``None`` means ``floor(n/2)``.
    max_virtual_sweeps : int
        The loop stops after ``max_virtual_sweeps * (n - 1)`` multi-steps.
    accumulate_vectors : bool
        Form ``U`` and ``V^{-1}``.
    tasks : int
        Number of threads for the compiled core; never changes the result.
    sequential : bool
        One pivot per step, halting when every remaining pivot is rejected.
    backend : str or None
        ``"python"``, ``"compiled"`` or ``None`` for the default.
    """

    upsilon: float = 1.0
    target_multistep_len: Optional[int] = None
    max_virtual_sweeps: int = 50
    accumulate_vectors: bool = True
    tasks: int = 1
    sequential: bool = False
    backend: Optional[str] = None

    def __post_init__(self):
        if not (0.0 < self.upsilon <= 1.0):
            raise ValueError("upsilon must lie in (0, 1]")
        if self.max_virtual_sweeps < 1:
            raise ValueError("max_virtual_sweeps must be positive")
        if self.tasks < 1:
            raise ValueError("tasks must be positive")
        if self.target_multistep_len is not None and self.target_multistep_len < 1:
            raise ValueError("target_multistep_len must be positive")


@dataclass
class RunStats:
    """Counters of a run; ``cycles`` is multi-steps per ``n - 1``."""

    steps_N: int = 0
    multisteps: int = 0
    cycles: float = 0.0
    off_initial: float = 0.0
    off_final: float = 0.0
    outcome: str = "converged"
    cleanup_steps: int = 0


@dataclass
class HsvdResult:
    """``G0 = U @ diag(Sigma) @ V_inv`` with ``V_inv = J V^* J``."""

    Sigma: np.ndarray
    U: Optional[np.ndarray]
    V_inv: Optional[np.ndarray]
    J: np.ndarray
    stats: RunStats
    V: Optional[np.ndarray] = None


@dataclass
class MultistepEvent:
    """What an observer sees after each multi-step.

    ``G_before`` is the iterate the weights and kernels were computed on,
    ``entries`` the selected augmented weights and ``steps`` the flags of
    the applied steps.
    """

    index: int
    G_before: np.ndarray
    G_after: np.ndarray
    J: np.ndarray
    entries: np.ndarray
    steps: List[StepResult]
    cleanup: bool = False


def convergence_check(steps: Sequence) -> bool:
    """True (halt) when no step of the multi-step was big."""
    for s in steps:
        small = s.was_diagonal or (s.u_is_identity and s.v_is_identity)
        if not small:
            return False
    return True


def _phase_1x1(state: IterationState) -> int:
    g = state.G[0, 0].item()
    if isinstance(g, complex):
        if g.imag == 0.0 and g.real >= 0.0:
            return 0
        c, s, r = polar3(g.real, g.imag)
        f = complex(c, -s)
        state.G[0, 0] = r
        if state.U_star is not None:
            state.U_star[0, 0] = cmul(state.U_star[0, 0].item(), f)
        return 1
    if g >= 0.0:
        return 0
    state.G[0, 0] = -g
    if state.U_star is not None:
        state.U_star[0, 0] = -state.U_star[0, 0]
    return 1


def _finalize(state: IterationState, stats: RunStats, accumulate: bool) -> HsvdResult:
    Sigma = state.G.diagonal().real.copy()
    stats.off_final = math.sqrt(off_norm2(state.G))
    if accumulate:
        U = state.U_star.conj().T.copy()
        V = state.V
        J = state.J
        V_inv = (J[:, None] * V.conj().T) * J[None, :]
        return HsvdResult(Sigma, U, V_inv, J.copy(), stats, V.copy())
    return HsvdResult(Sigma, None, None, state.J.copy(), stats)


def run(G0, J0, cfg: Optional[Config] = None,
        observer: Optional[Callable[[MultistepEvent], None]] = None) -> HsvdResult:
    """Hyperbolic SVD ``G0 = U diag(Sigma) V^{-1}`` of a square ``G0``.

    Parameters
    ----------
    G0 : array_like, shape (n, n)
        Finite real or complex matrix.
    J0 : array_like, shape (n,)
        Signature, entries ``+1`` or ``-1``.
    cfg : Config, optional
        Run parameters.
    observer : callable, optional
        Called with a :class:`MultistepEvent` after every multi-step.

    Returns
    -------
    HsvdResult
    """
    cfg = cfg or Config()
    G0 = np.asarray(G0)
    if not np.all(np.isfinite(G0)):
        raise ValueError("G0 must be finite")
    state = IterationState.start(G0, J0, cfg.accumulate_vectors)
    backend = _backend.get(cfg.backend)
    n = state.n
    stats = RunStats()
    stats.off_initial = math.sqrt(off_norm2(state.G))
    if n == 1:
        stats.steps_N = _phase_1x1(state)
        stats.outcome = "converged" if stats.steps_N else "no_candidates"
        return _finalize(state, stats, cfg.accumulate_vectors)

    partition = build_pair_partition(state.J)
    target = 1 if cfg.sequential else (cfg.target_multistep_len or n // 2)
    method = "sequential" if cfg.tasks == 1 else "parallel"
    budget = cfg.max_virtual_sweeps * (n - 1)

    def step(entries, cleanup):
        G_before = state.G.copy() if observer is not None else None
        res = apply_multistep(state, np.stack([entries["p"], entries["q"]], axis=1),
                              cfg.upsilon, cfg.tasks, backend.name)
        if observer is not None:
            observer(MultistepEvent(stats.multisteps, G_before, state.G.copy(), state.J,
                                    entries.copy(), res, cleanup))
        return res

    outcome = None
    while stats.multisteps < budget:
        w = compute_all_weights(state, partition, cfg.upsilon, cfg.tasks, backend.name)
        ranked = sort_weights(w)
        if len(ranked) == 0:
            if cfg.sequential and np.any(w["w"] == -np.inf):
                outcome = "undefined_hsvd"
            else:
                # nothing left to do: converged, unless nothing was ever done
                outcome = "converged" if stats.multisteps else "no_candidates"
            break
        ordering = build_ordering(ranked, target, 0, method)
        res = step(ordering.entries, False)
        stats.multisteps += 1
        stats.steps_N += len(res)
        if convergence_check(res):
            outcome = "converged"
            break
    if outcome is None:
        outcome = "sweep_limit"

    if outcome in ("converged", "sweep_limit"):
        # small steps on diagonal pivots only, so that the diagonal ends up
        # non-negative and ordered as prescribed by the signature
        for _ in range(n * n + 1):
            w = compute_all_weights(state, partition, cfg.upsilon, cfg.tasks, backend.name)
            G = state.G
            diag = (G[w["p"], w["q"]] == 0) & (G[w["q"], w["p"]] == 0)
            ranked = sort_weights(w[diag])
            if len(ranked) == 0:
                break
            ordering = build_ordering(ranked, n // 2, 0, method)
            res = step(ordering.entries, True)
            stats.steps_N += len(res)
            stats.cleanup_steps += len(res)

    stats.outcome = outcome
    stats.cycles = stats.multisteps / (n - 1)
    return _finalize(state, stats, cfg.accumulate_vectors)
