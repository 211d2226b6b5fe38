"""Test problems with known answers, and error measures for computed results.

A problem is built from planted eigenvalues ``lam`` of ``H = G0 J0 G0^*``::

    J0 = diag(sign lam)            (positive entries first)
    G0 = Q diag(|lam|^(1/2)) W

where ``Q`` is a product of ``n - 1`` random Householder reflectors and ``W``
a product of ``ceil(n/2)`` random ``J0``-unitary plane transforms (rotations
between same-sign indices, hyperbolic rotations with ``|tanh| <= 0.5``
between opposite-sign ones).  Then ``G0 J0 G0^* = Q diag(lam) Q^*``.

The final product is evaluated in double-double and rounded once.  All
randomness comes from one seeded PCG64 stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ddmath import dd_matmul, dd_residual_norm, dd_sum_squares, two_prod

__all__ = [
    "TestSpec",
    "GenResult",
    "CheckReport",
    "make_rng",
    "gen_eigenvalues",
    "synthesize_pair",
    "generate",
    "check_decomposition",
    "check_eigenvalues",
    "check",
]

FIELDS = ("real", "complex")


@dataclass(frozen=True)
class TestSpec:
    """Parameters of a generated problem.

    ``range`` selects the eigenvalue distribution: 1 uniform on ``(0, 1]``,
    2 uniform on ``[-1, 1]``, 3 standard normal; all restricted to
    ``eps_floor < |lam| <= 1`` by rejection.
    """

    __test__ = False  # not a pytest class

    order: int
    field: str = "real"
    range: int = 2
    eps_floor: float = 1e-13
    seed: int = 0

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}")
        if self.range not in (1, 2, 3):
            raise ValueError("range must be 1, 2 or 3")
        if not 0.0 < self.eps_floor < 1.0:
            raise ValueError("eps_floor must lie in (0, 1)")


@dataclass
class GenResult:
    """A generated problem; ``planted_eigenvalues`` are those of ``G0 J0 G0^*``."""

    G0: np.ndarray
    J0: np.ndarray
    planted_eigenvalues: np.ndarray


@dataclass
class CheckReport:
    """Relative decomposition error, relative eigenvalue error and cycles."""

    err_decomp: float
    err_eigen: Optional[float]
    cycles: Optional[float]


def make_rng(seed: int) -> np.random.Generator:
    """The generator used everywhere in this module."""
    return np.random.Generator(np.random.PCG64(seed))


def gen_eigenvalues(spec: TestSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Draw ``spec.order`` eigenvalues with ``eps_floor < |lam| <= 1``."""
    rng = make_rng(spec.seed) if rng is None else rng
    out = []
    while len(out) < spec.order:
        if spec.range == 1:
            x = 1.0 - rng.random()  # (0, 1]
        elif spec.range == 2:
            x = rng.uniform(-1.0, 1.0)
        else:
            x = rng.standard_normal()
        if spec.eps_floor < abs(x) <= 1.0:
            out.append(x)
    return np.array(out)


def _random_vector(rng, n, cplx):
    v = rng.standard_normal(n)
    if cplx:
        v = v + 1j * rng.standard_normal(n)
    return v


def _householder_product(rng, n, cplx):
    Q = np.eye(n, dtype=np.complex128 if cplx else np.float64)
    for _ in range(n - 1):
        v = _random_vector(rng, n, cplx)
        v = v / np.linalg.norm(v)
        # Q := Q (I - 2 v v^*)
        Q = Q - 2.0 * np.outer(Q @ v, v.conj())
    return Q


def _plane_transforms(rng, J, cplx):
    n = len(J)
    W = np.eye(n, dtype=np.complex128 if cplx else np.float64)
    perm = rng.permutation(n)
    pairs = [(perm[2 * k], perm[2 * k + 1]) for k in range(n // 2)]
    if n % 2:
        last = perm[-1]
        other = perm[rng.integers(0, n - 1)]
        pairs.append((last, other))
    for i, j in pairs:
        if cplx:
            ph = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        else:
            ph = 1.0 if rng.random() < 0.5 else -1.0
        if J[i] == J[j]:
            th = rng.uniform(0.0, 2.0 * math.pi)
            c, s = math.cos(th), math.sin(th)
            B = np.array([[c, -ph * s], [np.conj(ph) * s, c]])
        else:
            t = rng.uniform(-0.5, 0.5)
            ch = 1.0 / math.sqrt(1.0 - t * t)
            sh = t * ch
            B = np.array([[ch, ph * sh], [np.conj(ph) * sh, ch]])
        W[:, [i, j]] = W[:, [i, j]] @ B
    return W


def synthesize_pair(lam, spec: TestSpec, rng: Optional[np.random.Generator] = None) -> GenResult:
    """Build ``(G0, J0)`` whose ``G0 J0 G0^*`` has the eigenvalues ``lam``."""
    rng = make_rng(spec.seed) if rng is None else rng
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam == 0):
        raise ValueError("eigenvalues must be non-zero")
    lam = np.concatenate([lam[lam > 0], lam[lam < 0]])  # positives first
    J0 = np.where(lam > 0, 1, -1).astype(np.int64)
    n = len(lam)
    cplx = spec.field == "complex"
    Q = _householder_product(rng, n, cplx)
    W = _plane_transforms(rng, J0, cplx)
    M = np.sqrt(np.abs(lam))[:, None] * W
    hi, lo = dd_matmul(Q, M)
    G0 = hi + lo
    return GenResult(np.ascontiguousarray(G0), J0, lam)


def generate(spec: TestSpec) -> GenResult:
    """Eigenvalues and matrix from one seeded stream."""
    rng = make_rng(spec.seed)
    lam = gen_eigenvalues(spec, rng)
    return synthesize_pair(lam, spec, rng)


def check_decomposition(G0, U, Sigma, V_inv) -> float:
    """``||G0 - U diag(Sigma) V_inv||_F / ||G0||_F`` in double-double."""
    G0 = np.asarray(G0)
    Sigma = np.asarray(Sigma, dtype=np.float64)
    V_inv = np.asarray(V_inv)
    if np.iscomplexobj(V_inv):
        rh, rl = two_prod(Sigma[:, None], V_inv.real)
        ih, il = two_prod(Sigma[:, None], V_inv.imag)
        B_hi = rh + 1j * ih
        B_lo = rl + 1j * il
    else:
        B_hi, B_lo = two_prod(Sigma[:, None], V_inv)
    hi, lo = dd_matmul(U, B_hi, B_lo=B_lo)
    den = math.sqrt(dd_sum_squares(G0))
    num = dd_residual_norm(G0, hi, lo)
    return num / den if den > 0 else num


def check_eigenvalues(lam, Sigma, J) -> float:
    """Largest relative difference between sorted ``lam`` and ``Sigma**2 * J``."""
    lam = np.asarray(lam, dtype=np.float64)
    Sigma = np.asarray(Sigma, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    if not (lam.shape == Sigma.shape == J.shape):
        raise ValueError("length mismatch")
    a = np.sort(lam)[::-1]
    b = np.sort(Sigma * Sigma * J)[::-1]
    return float(np.max(np.abs((a - b) / a))) if len(a) else 0.0


def check(G0, result, lam=None) -> CheckReport:
    """All error measures of a :class:`~hyperkog.driver.HsvdResult`."""
    err_d = check_decomposition(G0, result.U, result.Sigma, result.V_inv)
    err_e = None if lam is None else check_eigenvalues(lam, result.Sigma, result.J)
    return CheckReport(err_d, err_e, result.stats.cycles)
