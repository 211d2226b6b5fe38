"""Hyperbolic singular value decomposition of a single 2x2 pivot.

Given a pivot ``G`` (real or complex) and a signature ``J = diag(j1, j2)``
with ``j1, j2`` in ``{+1, -1}``, :func:`hsvd2` finds a unitary ``U`` and a
``J``-unitary ``V`` such that ``U^* G V`` is diagonal with non-negative
entries.  The computation runs in four phases:

1. scale ``G`` by a power of two so that nothing can overflow;
2. reduce it to a real triangular ``T`` (:func:`jutv2`);
3. diagonalize ``T`` with a plane rotation from the left and a plane or
   hyperbolic rotation from the right (:func:`svd2_trig`,
   :func:`hsvd2_upper`, :func:`hsvd2_lower`), undoing the scaling
   (:func:`backscale`);
4. multiply the transforms of phases 2 and 3 together.

All functions here are the pure-Python reference; the compiled core follows
the same sequence of roundings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .fpcore import FP, fma, fmax0, hypot2, ldexp, polar3, cmul, exponent, chi

__all__ = [
    "SignPair",
    "Utv2",
    "Rot2",
    "Hsvd2Result",
    "jutv2",
    "backscale",
    "svd2_trig",
    "hsvd2_upper",
    "hsvd2_lower",
    "hsvd2",
]

_sqrt = math.sqrt
_ALPHA = FP.alpha


class SignPair(NamedTuple):
    """Diagonal ``(j_pp, j_qq)`` of a 2x2 signature matrix."""

    j_pp: int
    j_qq: int

    @property
    def hyperbolic(self) -> bool:
        return self.j_pp != self.j_qq


@dataclass
class Utv2:
    """Result of the triangular reduction ``U^* (2**s G) V = T``.

    ``U_star`` and ``V`` are 2x2 arrays (complex for complex input), ``T`` is
    real with non-negative entries and either upper (``long`` false) or lower
    (``long`` true) triangular.  The flags record, in order: the input was
    diagonal (``d``), the signature is mixed (``h``), the columns were swapped
    (``c``) and the rows were swapped (``r``).
    """

    U_star: np.ndarray
    V: np.ndarray
    T: np.ndarray
    s: int
    d: bool
    h: bool
    c: bool
    r: bool

    @property
    def long(self) -> bool:
        return self.h and self.c


class Rot2(NamedTuple):
    """Tangent and secant of the left angle, and the right one.

    For a trigonometric right transform ``psi_t`` is ``tan psi`` and ``psi_s``
    is ``sec psi``; for a hyperbolic one they are ``tanh psi`` and
    ``sech psi``.
    """

    tan_phi: float
    sec_phi: float
    psi_t: float
    psi_s: float


@dataclass
class Hsvd2Result:
    """Decomposition ``U_hat_star @ G @ V_hat = diag(sigma_pp, sigma_qq)``."""

    U_hat_star: np.ndarray
    V_hat: np.ndarray
    sigma_pp: float
    sigma_qq: float
    was_diagonal: bool
    u_is_identity: bool
    v_is_identity: bool
    defined: bool = True


# ---------------------------------------------------------------------------
# scalar helpers (values are floats for a real pivot, complex otherwise)
# ---------------------------------------------------------------------------


def _unphase(z, cplx):
    """Return ``|z|`` and the unit factor ``f`` with ``z * f = |z|``."""
    if cplx:
        c, s, r = polar3(z.real, z.imag)
        return complex(r, 0.0), complex(c, -s)
    return abs(z), (-1.0 if z < 0.0 else 1.0)


def _mulph(z, f, cplx):
    if cplx:
        return cmul(z, f)
    return -z if f < 0.0 else z


def _absz(z, cplx):
    if cplx:
        return hypot2(z.real, z.imag)
    return abs(z)


def _rfma(t, b, a, cplx):
    """``t*b + a`` for real ``t``."""
    if cplx:
        return complex(fma(t, b.real, a.real), fma(t, b.imag, a.imag))
    return fma(t, b, a)


def _rdiv(a, d, cplx):
    if cplx:
        return complex(a.real / d, a.imag / d)
    return a / d


def _scale(z, s, cplx):
    if cplx:
        return complex(ldexp(z.real, s), ldexp(z.imag, s))
    return ldexp(z, s)


def _chi(z, cplx):
    if cplx:
        a = chi(z.real)
        b = chi(z.imag)
        return a if a < b else b
    return chi(z)


def _rot_rows(t, sec, a, b, cplx):
    """Apply ``[[1, t], [-t, 1]] / sec`` to the pair ``(a, b)``."""
    return (_rdiv(_rfma(t, b, a, cplx), sec, cplx),
            _rdiv(_rfma(-t, a, b, cplx), sec, cplx))


# ---------------------------------------------------------------------------
# phase 2: triangular reduction
# ---------------------------------------------------------------------------


def _jutv2(a11, a21, a12, a22, jp, jq, cplx):
    """Scalar core of :func:`jutv2`.

    Returns ``(u, v, t, s, d, h, c, r)`` where ``u`` and ``v`` are row-major
    4-tuples and ``t`` the real row-major triangle.
    """
    one = complex(1.0, 0.0) if cplx else 1.0
    zero = complex(0.0, 0.0) if cplx else 0.0
    h = jp != jq
    d = a21 == 0 and a12 == 0
    s = _chi(a11, cplx)
    for z in (a21, a12, a22):
        k = _chi(z, cplx)
        if k < s:
            s = k
    a11 = _scale(a11, s, cplx)
    a21 = _scale(a21, s, cplx)
    a12 = _scale(a12, s, cplx)
    a22 = _scale(a22, s, cplx)

    # stage 1: larger column first
    n1 = hypot2(_absz(a11, cplx), _absz(a21, cplx))
    n2 = hypot2(_absz(a12, cplx), _absz(a22, cplx))
    c = n1 < n2
    if c:
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11, v12, v21, v22 = zero, one, one, zero
    else:
        v11, v12, v21, v22 = one, zero, zero, one

    # stage 2: first column to magnitudes
    a11, f1 = _unphase(a11, cplx)
    a12 = _mulph(a12, f1, cplx)
    a21, f2 = _unphase(a21, cplx)
    a22 = _mulph(a22, f2, cplx)
    u11, u12, u21, u22 = f1, zero, zero, f2

    # stage 3: larger element of the first column on top
    r = a11.real < a21.real if cplx else a11 < a21
    if r:
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12

    # stage 4: annihilate the (2,1) element
    if not d:
        g11 = a11.real if cplx else a11
        g21 = a21.real if cplx else a21
        t = g21 / g11
        sec = _sqrt(fma(t, t, 1.0))
        g11 = fma(t, g21, g11) / sec
        a11 = complex(g11, 0.0) if cplx else g11
        a21 = zero
        a12, a22 = _rot_rows(t, sec, a12, a22, cplx)
        u11, u21 = _rot_rows(t, sec, u11, u21, cplx)
        u12, u22 = _rot_rows(t, sec, u12, u22, cplx)

    if h and c:
        # 5L: swap the columns back (cancels stage 1)
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11, v12, v21, v22 = one, zero, zero, one
        # 6L: swap the rows; the matrix is now lower triangular
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12
        # 7L: (2,1) element to its magnitude via the first column
        a21, f = _unphase(a21, cplx)
        a11 = _mulph(a11, f, cplx)
        v11 = f
        # 8L: (1,1) element to its magnitude via the first row
        a11, f = _unphase(a11, cplx)
        a12 = _mulph(a12, f, cplx)
        u11 = _mulph(u11, f, cplx)
        u12 = _mulph(u12, f, cplx)
    else:
        # 5U: (1,2) element to its magnitude via the second column
        a12, f = _unphase(a12, cplx)
        a22 = _mulph(a22, f, cplx)
        v12 = _mulph(v12, f, cplx)
        v22 = _mulph(v22, f, cplx)
        # 6U: (2,2) element to its magnitude via the second row
        a22, f = _unphase(a22, cplx)
        a21 = _mulph(a21, f, cplx)
        u21 = _mulph(u21, f, cplx)
        u22 = _mulph(u22, f, cplx)

    if cplx:
        t = (a11.real, a12.real, a21.real, a22.real)
    else:
        t = (a11, a12, a21, a22)
    return (u11, u12, u21, u22), (v11, v12, v21, v22), t, s, d, h, c, r


def _as_pivot(G):
    G = np.asarray(G)
    if G.shape != (2, 2):
        raise ValueError("pivot must be a 2x2 matrix")
    cplx = np.iscomplexobj(G)
    vals = G.astype(np.complex128 if cplx else np.float64).tolist()
    return vals[0][0], vals[1][0], vals[0][1], vals[1][1], cplx


def _as_signs(J):
    jp, jq = (int(J[0]), int(J[1])) if not isinstance(J, np.ndarray) or J.ndim == 1 \
        else (int(J[0, 0]), int(J[1, 1]))
    if jp not in (1, -1) or jq not in (1, -1):
        raise ValueError("signature entries must be +1 or -1")
    return jp, jq


def _mat(x, cplx):
    return np.array([[x[0], x[1]], [x[2], x[3]]],
                    dtype=np.complex128 if cplx else np.float64)


def jutv2(G, J) -> Utv2:
    """Reduce a scaled 2x2 pivot to a real non-negative triangle.

    Parameters
    ----------
    G : array_like, shape (2, 2)
        Finite pivot, real or complex.
    J : sequence of two ints or 2x2 array
        Signature, each entry ``+1`` or ``-1``.

    Returns
    -------
    Utv2
        ``U_star @ (2**s * G) @ V == T`` up to rounding.
    """
    a11, a21, a12, a22, cplx = _as_pivot(G)
    jp, jq = _as_signs(J)
    u, v, t, s, d, h, c, r = _jutv2(a11, a21, a12, a22, jp, jq, cplx)
    T = np.array([[t[0], t[1]], [t[2], t[3]]])
    return Utv2(_mat(u, cplx), _mat(v, cplx), T, s, d, h, c, r)


# ---------------------------------------------------------------------------
# phase 3: diagonalization of the triangle
# ---------------------------------------------------------------------------


def backscale(s: int, d1: float, d2: float, f: float) -> Tuple[float, float]:
    """Return ``(2**-s * d1 * f, 2**-s * d2 / f)`` avoiding spurious overflow.

    ``f >= 1`` is a ratio of secants; the power of two is split between the
    factor and the value so that the intermediate ``f'`` stays finite.
    """
    delta = exponent(f) - FP.emin_norm
    if s > delta:
        fp = ldexp(f, -delta)
        xi = s - delta
    else:
        fp = ldexp(f, -s)
        xi = 0
    return ldexp(d1, -xi) * fp, ldexp(d2 / f, -s)


def _fdiv(a, b):
    """IEEE quotient; Python raises where C returns inf or NaN."""
    if b == 0.0:
        if a == 0.0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _svd2_trig(t11, t12, t22):
    x = fmax0(t12 / t11)
    y = fmax0(t22 / t11)
    mn, mx = (x, y) if x < y else (y, x)
    t2 = fmax0(_fdiv((2.0 * mn) * mx, fma(x - y, x + y, 1.0)))
    if not t2 < _ALPHA:
        t2 = _ALPHA
    tphi = t2 / (1.0 + _sqrt(fma(t2, t2, 1.0)))
    tpsi = fma(y, tphi, x)
    sphi = _sqrt(fma(tphi, tphi, 1.0))
    spsi = _sqrt(fma(tpsi, tpsi, 1.0))
    return tphi, sphi, tpsi, spsi


def _hyp_xy(x, y, upper):
    mn, mx = (x, y) if x < y else (y, x)
    t2 = fmax0(_fdiv((2.0 * mn) * mx, fma(y - x, y + x, 1.0)))
    if not t2 < _ALPHA:
        t2 = _ALPHA
    return -t2 if upper else t2


def _hsvd2_upper(t11, t12, t22, upsilon):
    x = fmax0(t12 / t11)
    y = fmax0(t22 / t11)
    t2 = _hyp_xy(x, y, True)
    tphi = t2 / (1.0 + _sqrt(fma(t2, t2, 1.0)))
    th = fma(-y, tphi, -x)
    if not abs(th) < upsilon:
        return None
    sphi = _sqrt(fma(tphi, tphi, 1.0))
    shpsi = _sqrt(fma(-th, th, 1.0))
    return tphi, sphi, th, shpsi


def _hsvd2_lower(t11, t21, t22, upsilon):
    x = fmax0(t21 / t22)
    y = fmax0(t11 / t22)
    t2 = _hyp_xy(x, y, False)
    tphi = t2 / (1.0 + _sqrt(fma(t2, t2, 1.0)))
    th = fma(y, tphi, -x)
    if not abs(th) < upsilon:
        return None
    sphi = _sqrt(fma(tphi, tphi, 1.0))
    shpsi = _sqrt(fma(-th, th, 1.0))
    return tphi, sphi, th, shpsi


def svd2_trig(utv: Utv2) -> Tuple[Rot2, Tuple[float, float]]:
    """Plane-rotation SVD of an upper triangle; returns rotations and ``sigma``."""
    T = utv.T
    rot = Rot2(*_svd2_trig(T[0, 0], T[0, 1], T[1, 1]))
    return rot, backscale(utv.s, T[0, 0], T[1, 1], rot.psi_s / rot.sec_phi)


def hsvd2_upper(utv: Utv2, upsilon: float = 1.0) -> Optional[Tuple[Rot2, Tuple[float, float]]]:
    """Hyperbolic SVD of an upper triangle; ``None`` when not computable."""
    T = utv.T
    res = _hsvd2_upper(T[0, 0], T[0, 1], T[1, 1], upsilon)
    if res is None:
        return None
    rot = Rot2(*res)
    s22, s11 = backscale(utv.s, T[1, 1], T[0, 0], rot.sec_phi / rot.psi_s)
    return rot, (s11, s22)


def hsvd2_lower(utv: Utv2, upsilon: float = 1.0) -> Optional[Tuple[Rot2, Tuple[float, float]]]:
    """Hyperbolic SVD of a lower triangle; ``None`` when not computable."""
    T = utv.T
    res = _hsvd2_lower(T[0, 0], T[1, 0], T[1, 1], upsilon)
    if res is None:
        return None
    rot = Rot2(*res)
    return rot, backscale(utv.s, T[0, 0], T[1, 1], rot.sec_phi / rot.psi_s)


# ---------------------------------------------------------------------------
# full kernel
# ---------------------------------------------------------------------------


def _hsvd2(a11, a21, a12, a22, jp, jq, upsilon, cplx):
    """Scalar core of :func:`hsvd2`.

    Returns ``(u, v, spp, sqq, diag, u_id, v_id, defined)`` with ``u`` and
    ``v`` row-major 4-tuples; ``None`` in place of ``u`` when undefined.
    """
    u, v, t, s, d, h, c, r = _jutv2(a11, a21, a12, a22, jp, jq, cplx)
    t11, t12, t21, t22 = t
    u11, u12, u21, u22 = u
    v11, v12, v21, v22 = v
    if t12 == 0.0 and t21 == 0.0:
        s1 = ldexp(t11, -s)
        s2 = ldexp(t22, -s)
    elif not h:
        tphi, sphi, tpsi, spsi = _svd2_trig(t11, t12, t22)
        s1, s2 = backscale(s, t11, t22, spsi / sphi)
        u11, u21 = _rot_rows(tphi, sphi, u11, u21, cplx)
        u12, u22 = _rot_rows(tphi, sphi, u12, u22, cplx)
        # columns: [[1, -tpsi], [tpsi, 1]] / spsi from the right
        v11, v12 = _rot_rows(tpsi, spsi, v11, v12, cplx)
        v21, v22 = _rot_rows(tpsi, spsi, v21, v22, cplx)
    else:
        if c:
            res = _hsvd2_lower(t11, t21, t22, upsilon)
        else:
            res = _hsvd2_upper(t11, t12, t22, upsilon)
        if res is None:
            return None, None, math.nan, math.nan, d, False, False, False
        tphi, sphi, th, shpsi = res
        if c:
            s1, s2 = backscale(s, t11, t22, sphi / shpsi)
        else:
            s2, s1 = backscale(s, t22, t11, sphi / shpsi)
        u11, u21 = _rot_rows(tphi, sphi, u11, u21, cplx)
        u12, u22 = _rot_rows(tphi, sphi, u12, u22, cplx)
        # columns: [[1, th], [th, 1]] / shpsi from the right
        v11, v12 = (_rdiv(_rfma(th, v12, v11, cplx), shpsi, cplx),
                    _rdiv(_rfma(th, v11, v12, cplx), shpsi, cplx))
        v21, v22 = (_rdiv(_rfma(th, v22, v21, cplx), shpsi, cplx),
                    _rdiv(_rfma(th, v21, v22, cplx), shpsi, cplx))
    if jp < 0 and jq < 0:
        u11, u12, u21, u22 = u21, u22, u11, u12
        v11, v12, v21, v22 = v12, v11, v22, v21
        s1, s2 = s2, s1
    u_id = u11 == 1 and u12 == 0 and u21 == 0 and u22 == 1
    v_id = v11 == 1 and v12 == 0 and v21 == 0 and v22 == 1
    return (u11, u12, u21, u22), (v11, v12, v21, v22), s1, s2, d, u_id, v_id, True


def hsvd2(G, J, upsilon: float = 1.0) -> Hsvd2Result:
    """Hyperbolic SVD of a finite 2x2 pivot.

    Parameters
    ----------
    G : array_like, shape (2, 2)
        Real or complex pivot with finite entries.
    J : sequence of two ints or 2x2 array
        Signature ``diag(j_pp, j_qq)``.
    upsilon : float, optional
        A hyperbolic transform is rejected when ``|tanh psi| >= upsilon``.

    Returns
    -------
    Hsvd2Result
        ``defined`` is false when a hyperbolic transform was rejected; the
        matrices are then identities and the singular values NaN.
    """
    a11, a21, a12, a22, cplx = _as_pivot(G)
    if not all(np.isfinite(np.asarray(G)).ravel()):
        raise ValueError("pivot must be finite")
    jp, jq = _as_signs(J)
    u, v, s1, s2, d, u_id, v_id, ok = _hsvd2(a11, a21, a12, a22, jp, jq, upsilon, cplx)
    if not ok:
        eye = np.eye(2, dtype=np.complex128 if cplx else np.float64)
        return Hsvd2Result(eye, eye.copy(), math.nan, math.nan, d, False, False, False)
    return Hsvd2Result(_mat(u, cplx), _mat(v, cplx), s1, s2, d, u_id, v_id, True)
