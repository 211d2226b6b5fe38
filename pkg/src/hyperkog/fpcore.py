"""Floating-point primitives shared by the 2x2 kernels and the sweep.

Everything here works on IEEE-754 binary64 scalars.  The functions are written
so that the compiled core (``_core.pyx``) can mirror them operation by
operation; both backends therefore round identically.

``fma`` is a correctly rounded software fused multiply-add, since CPython 3.10
does not expose the C99 ``fma``.  It computes the exact value ``a*b + c`` as a
rational number and lets integer true division round it once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "FpConstants",
    "FP",
    "PolarForm",
    "fma",
    "ldexp",
    "exponent",
    "chi",
    "scale_param",
    "scale_matrix",
    "hypot2",
    "polar_factors",
    "cmul",
    "cfma",
    "fmin1",
    "fmax0",
    "sign",
]

_inf = math.inf
_copysign = math.copysign
_sqrt = math.sqrt
_frexp = math.frexp
_isfinite = math.isfinite


@dataclass(frozen=True)
class FpConstants:
    """Limits of binary64 used by the kernels.

    Attributes
    ----------
    eps : float
        Unit roundoff ``2**-53``.
    omega_big : float
        Largest finite value.
    omega_small : float
        Smallest positive subnormal value.
    omega_norm : float
        Smallest positive normal value.
    emax : int
        ``exponent(omega_big)``.
    emin_norm : int
        ``exponent(omega_norm)`` (the ``mu`` of the backscaling step).
    emin_sub : int
        ``exponent(omega_small)``.
    alpha : float
        ``sqrt(omega_big)``, the cap on ``tan(2 phi)``.
    """

    eps: float = 2.0 ** -53
    omega_big: float = 1.7976931348623157e308
    omega_small: float = 5e-324
    omega_norm: float = 2.2250738585072014e-308
    emax: int = 1024
    emin_norm: int = -1021
    emin_sub: int = -1073
    alpha: float = math.sqrt(1.7976931348623157e308)


FP = FpConstants()


class PolarForm(NamedTuple):
    """Cosine and sine of ``arg z``; ``(1, 0)`` for ``z == 0``."""

    cos_arg: float
    sin_arg: float


# ---------------------------------------------------------------------------
# scalar arithmetic
# ---------------------------------------------------------------------------


def fma(a: float, b: float, c: float) -> float:
    """Return ``a*b + c`` rounded once to nearest-even."""
    try:
        na, da = a.as_integer_ratio()
        nb, db = b.as_integer_ratio()
    except (OverflowError, ValueError):
        # inf or nan operand in the product: IEEE rules of a*b+c apply
        return a * b + c
    try:
        nc, dc = c.as_integer_ratio()
    except (OverflowError, ValueError):
        return c  # finite product plus inf or nan
    den = da * db
    if dc > den:
        num = na * nb * (dc // den) + nc
        den = dc
    else:
        num = na * nb + nc * (den // dc)
    if num == 0:
        # exact zero: -0 only for (-0) + (-0)
        if (na == 0 or nb == 0) and nc == 0:
            if _copysign(1.0, a) * _copysign(1.0, b) < 0 and _copysign(1.0, c) < 0:
                return -0.0
        return 0.0
    try:
        return num / den
    except OverflowError:
        return _inf if num > 0 else -_inf


def ldexp(x: float, e: int) -> float:
    """``x * 2**e`` with overflow to a signed infinity instead of an exception."""
    try:
        return math.ldexp(x, e)
    except OverflowError:
        return _copysign(_inf, x)


def exponent(a: float) -> int:
    """Exponent ``e`` of ``a = f * 2**e`` with ``1/2 <= |f| < 1``; 0 for zero."""
    if a == 0.0:
        return 0
    return _frexp(a)[1]


def chi(a: float) -> int:
    """Largest safe scaling exponent for one component ``a``."""
    a = abs(a)
    if not a > FP.omega_small:  # also catches zero
        a = FP.omega_small
    return FP.emax - exponent(a) - 2


def scale_param(G) -> int:
    """Minimum of :func:`chi` over the components of the entries of ``G``."""
    s = None
    for z in np.asarray(G).ravel().tolist():
        if isinstance(z, complex):
            k = min(chi(z.real), chi(z.imag))
        else:
            k = chi(z)
        if s is None or k < s:
            s = k
    return s


def scale_matrix(G, s: int) -> np.ndarray:
    """Return ``2**s * G`` componentwise."""
    G = np.asarray(G)
    if np.iscomplexobj(G):
        out = np.empty_like(G)
        out.real = np.ldexp(G.real, s)
        out.imag = np.ldexp(G.imag, s)
        return out
    return np.ldexp(G, s)


def fmin1(x: float) -> float:
    """``MIN(x, 1)`` where a NaN ``x`` yields 1."""
    if x != x:
        return 1.0
    return x if x < 1.0 else 1.0


def fmax0(x: float) -> float:
    """``MAX(x, 0)`` where a NaN ``x`` yields 0."""
    if x != x:
        return 0.0
    return x if x > 0.0 else 0.0


def sign(x: float) -> float:
    """``-1`` for negative ``x``, ``+1`` otherwise (including ``-0``)."""
    return -1.0 if x < 0.0 else 1.0


def hypot2(x: float, y: float) -> float:
    """``sqrt(x**2 + y**2)`` without undue overflow or underflow."""
    a = abs(x)
    b = abs(y)
    if a < b:
        a, b = b, a
    if b == 0.0 or a == _inf:
        return a
    r = b / a
    return a * _sqrt(fma(r, r, 1.0))


def polar3(re: float, im: float):
    """Return ``(cos arg z, sin arg z, |z|)`` for ``z = re + i im``."""
    r = hypot2(re, im)
    # |re|/r is NaN for z == 0; MIN turns that into 1
    c = (fmin1(abs(re) / r) if r != 0.0 else 1.0) * sign(re)
    s = im / (r if r > FP.omega_small else FP.omega_small)
    return c, s, r


def polar_factors(z: complex) -> PolarForm:
    """Cosine and sine of ``arg z``; zero maps to ``(1, 0)``."""
    z = complex(z)
    c, s, _ = polar3(z.real, z.imag)
    return PolarForm(c, s)


def cmul(a: complex, b: complex) -> complex:
    """Complex product with one fused operation per component."""
    ar = a.real
    ai = a.imag
    br = b.real
    bi = b.imag
    return complex(fma(ar, br, -(ai * bi)), fma(ar, bi, ai * br))


def cfma(a: complex, b: complex, c: complex) -> complex:
    """Complex ``a*b + c`` built from real fused operations.

    A real or purely imaginary ``a`` takes the shorter two-operation form.
    """
    ar = a.real
    ai = a.imag
    br = b.real
    bi = b.imag
    if ai == 0.0:
        return complex(fma(ar, br, c.real), fma(ar, bi, c.imag))
    if ar == 0.0:
        return complex(fma(-ai, bi, c.real), fma(ai, br, c.imag))
    return complex(fma(ar, br, fma(-ai, bi, c.real)), fma(ar, bi, fma(ai, br, c.imag)))


def is_finite(z) -> bool:
    """True when every component of the scalar ``z`` is finite."""
    if isinstance(z, complex):
        return _isfinite(z.real) and _isfinite(z.imag)
    return _isfinite(z)
