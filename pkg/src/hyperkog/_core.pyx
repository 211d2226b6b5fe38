# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, nonecheck=False
"""Compiled kernels: 2x2 hyperbolic SVD, batched weights and multi-steps.

Every function mirrors its pure-Python counterpart in ``kernel2x2`` and
``sweep`` operation by operation.  The extension is compiled with
``-ffp-contract=off`` so that the only fused operations are the explicit
``fma`` calls, which makes both backends round identically.

Complex matrices are handled as float64 views with interleaved real and
imaginary parts (shape ``(n, 2n)``).
"""

import numpy as np
from cython.parallel cimport prange

cdef extern from "math.h" nogil:
    double fma(double x, double y, double z)
    double sqrt(double x)
    double ldexp(double x, int e)
    double frexp(double x, int* e)
    double fabs(double x)
    bint isfinite(double x)

cdef double OMEGA_SMALL = 5e-324
cdef double ALPHA = 1.3407807929942596e+154  # sqrt of the largest double
cdef double INF = float("inf")
cdef double NAN = fabs(float("nan"))  # quiet NaN with the sign bit clear, like math.nan


cdef struct cz:
    double re
    double im


cdef struct kres:
    # row-major U^* and V, as (re, im) pairs; im unused for real pivots
    double u[8]
    double v[8]
    double spp
    double sqq
    int diag
    int uid
    int vid
    int defined


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

cdef inline cz mk(double re, double im) noexcept nogil:
    cdef cz z
    z.re = re
    z.im = im
    return z


cdef inline double fmin1(double x) noexcept nogil:
    if x != x:
        return 1.0
    return x if x < 1.0 else 1.0


cdef inline double fmax0(double x) noexcept nogil:
    if x != x:
        return 0.0
    return x if x > 0.0 else 0.0


cdef inline double sgn(double x) noexcept nogil:
    return -1.0 if x < 0.0 else 1.0


cdef inline int chi(double a) noexcept nogil:
    cdef int e
    a = fabs(a)
    if not a > OMEGA_SMALL:
        a = OMEGA_SMALL
    frexp(a, &e)
    return 1024 - e - 2


cdef inline int exponent(double a) noexcept nogil:
    cdef int e
    if a == 0.0:
        return 0
    frexp(a, &e)
    return e


cdef inline double hypot2(double x, double y) noexcept nogil:
    cdef double a = fabs(x), b = fabs(y), r
    if a < b:
        a, b = b, a
    if b == 0.0 or a == INF:
        return a
    r = b / a
    return a * sqrt(fma(r, r, 1.0))


cdef inline void polar3(double re, double im, double* c, double* s, double* r) noexcept nogil:
    r[0] = hypot2(re, im)
    if r[0] != 0.0:
        c[0] = fmin1(fabs(re) / r[0]) * sgn(re)
    else:
        c[0] = 1.0 * sgn(re)
    s[0] = im / (r[0] if r[0] > OMEGA_SMALL else OMEGA_SMALL)


cdef inline cz cmul(cz a, cz b) noexcept nogil:
    return mk(fma(a.re, b.re, -(a.im * b.im)), fma(a.re, b.im, a.im * b.re))


cdef inline cz cfma(cz a, cz b, cz c) noexcept nogil:
    if a.im == 0.0:
        return mk(fma(a.re, b.re, c.re), fma(a.re, b.im, c.im))
    if a.re == 0.0:
        return mk(fma(-a.im, b.im, c.re), fma(a.im, b.re, c.im))
    return mk(fma(a.re, b.re, fma(-a.im, b.im, c.re)), fma(a.re, b.im, fma(a.im, b.re, c.im)))


cdef inline cz crfma(double t, cz b, cz a) noexcept nogil:
    return mk(fma(t, b.re, a.re), fma(t, b.im, a.im))


cdef inline cz crdiv(cz a, double d) noexcept nogil:
    return mk(a.re / d, a.im / d)


cdef inline double cabs2(cz z) noexcept nogil:
    return hypot2(z.re, z.im)


cdef inline bint cz_is(cz z, double re) noexcept nogil:
    return z.re == re and z.im == 0.0


cdef inline void unphase_c(cz z, cz* mag, cz* f) noexcept nogil:
    cdef double c, s, r
    polar3(z.re, z.im, &c, &s, &r)
    mag[0] = mk(r, 0.0)
    f[0] = mk(c, -s)


cdef inline void rot_c(double t, double sec, cz* a, cz* b) noexcept nogil:
    cdef cz na = crdiv(crfma(t, b[0], a[0]), sec)
    cdef cz nb = crdiv(crfma(-t, a[0], b[0]), sec)
    a[0] = na
    b[0] = nb


cdef inline void rot_r(double t, double sec, double* a, double* b) noexcept nogil:
    cdef double na = fma(t, b[0], a[0]) / sec
    cdef double nb = fma(-t, a[0], b[0]) / sec
    a[0] = na
    b[0] = nb


cdef inline void backscale(int s, double d1, double d2, double f,
                           double* o1, double* o2) noexcept nogil:
    cdef int delta = exponent(f) + 1021
    cdef double fp
    cdef int xi
    if s > delta:
        fp = ldexp(f, -delta)
        xi = s - delta
    else:
        fp = ldexp(f, -s)
        xi = 0
    o1[0] = ldexp(d1, -xi) * fp
    o2[0] = ldexp(d2 / f, -s)


# ---------------------------------------------------------------------------
# phase 3 kernels on the real triangle
# ---------------------------------------------------------------------------

cdef inline double clamp_alpha(double t2) noexcept nogil:
    if not t2 < ALPHA:
        return ALPHA
    return t2


cdef inline void svd2_trig(double t11, double t12, double t22, double* r) noexcept nogil:
    cdef double x = fmax0(t12 / t11)
    cdef double y = fmax0(t22 / t11)
    cdef double mn, mx, t2, tphi, tpsi
    if x < y:
        mn = x
        mx = y
    else:
        mn = y
        mx = x
    t2 = clamp_alpha(fmax0((2.0 * mn) * mx / fma(x - y, x + y, 1.0)))
    tphi = t2 / (1.0 + sqrt(fma(t2, t2, 1.0)))
    tpsi = fma(y, tphi, x)
    r[0] = tphi
    r[1] = sqrt(fma(tphi, tphi, 1.0))
    r[2] = tpsi
    r[3] = sqrt(fma(tpsi, tpsi, 1.0))


cdef inline double hyp_t2(double x, double y, bint upper) noexcept nogil:
    cdef double mn, mx, t2
    if x < y:
        mn = x
        mx = y
    else:
        mn = y
        mx = x
    t2 = clamp_alpha(fmax0((2.0 * mn) * mx / fma(y - x, y + x, 1.0)))
    return -t2 if upper else t2


cdef inline bint hsvd2_tri(double t11, double t21, double t12, double t22, bint lower,
                           double upsilon, double* r) noexcept nogil:
    cdef double x, y, t2, tphi, th
    if lower:
        x = fmax0(t21 / t22)
        y = fmax0(t11 / t22)
    else:
        x = fmax0(t12 / t11)
        y = fmax0(t22 / t11)
    t2 = hyp_t2(x, y, not lower)
    tphi = t2 / (1.0 + sqrt(fma(t2, t2, 1.0)))
    if lower:
        th = fma(y, tphi, -x)
    else:
        th = fma(-y, tphi, -x)
    if not fabs(th) < upsilon:
        return False
    r[0] = tphi
    r[1] = sqrt(fma(tphi, tphi, 1.0))
    r[2] = th
    r[3] = sqrt(fma(-th, th, 1.0))
    return True


# ---------------------------------------------------------------------------
# full 2x2 kernel, complex
# ---------------------------------------------------------------------------

cdef void hsvd2_c(cz a11, cz a21, cz a12, cz a22, int jp, int jq, double upsilon,
                  kres* out) noexcept nogil:
    cdef cz one = mk(1.0, 0.0), zero = mk(0.0, 0.0), f, tmp
    cdef cz u11, u12, u21, u22, v11, v12, v21, v22
    cdef bint h = jp != jq
    cdef bint d = (a21.re == 0.0 and a21.im == 0.0) and (a12.re == 0.0 and a12.im == 0.0)
    cdef bint c, r
    cdef int s, k
    cdef double n1, n2, t, sec, g11, g21, t11, t12, t21, t22, s1, s2
    cdef double rot[4]

    s = chi(a11.re)
    k = chi(a11.im)
    if k < s: s = k
    k = chi(a21.re)
    if k < s: s = k
    k = chi(a21.im)
    if k < s: s = k
    k = chi(a12.re)
    if k < s: s = k
    k = chi(a12.im)
    if k < s: s = k
    k = chi(a22.re)
    if k < s: s = k
    k = chi(a22.im)
    if k < s: s = k
    a11 = mk(ldexp(a11.re, s), ldexp(a11.im, s))
    a21 = mk(ldexp(a21.re, s), ldexp(a21.im, s))
    a12 = mk(ldexp(a12.re, s), ldexp(a12.im, s))
    a22 = mk(ldexp(a22.re, s), ldexp(a22.im, s))

    # stage 1
    n1 = hypot2(cabs2(a11), cabs2(a21))
    n2 = hypot2(cabs2(a12), cabs2(a22))
    c = n1 < n2
    if c:
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11 = zero
        v12 = one
        v21 = one
        v22 = zero
    else:
        v11 = one
        v12 = zero
        v21 = zero
        v22 = one

    # stage 2
    unphase_c(a11, &a11, &f)
    a12 = cmul(a12, f)
    u11 = f
    unphase_c(a21, &a21, &f)
    a22 = cmul(a22, f)
    u22 = f
    u12 = zero
    u21 = zero

    # stage 3
    r = a11.re < a21.re
    if r:
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12

    # stage 4
    if not d:
        g11 = a11.re
        g21 = a21.re
        t = g21 / g11
        sec = sqrt(fma(t, t, 1.0))
        g11 = fma(t, g21, g11) / sec
        a11 = mk(g11, 0.0)
        a21 = zero
        rot_c(t, sec, &a12, &a22)
        rot_c(t, sec, &u11, &u21)
        rot_c(t, sec, &u12, &u22)

    if h and c:
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11 = one
        v12 = zero
        v21 = zero
        v22 = one
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12
        unphase_c(a21, &a21, &f)
        a11 = cmul(a11, f)
        v11 = f
        unphase_c(a11, &a11, &f)
        a12 = cmul(a12, f)
        u11 = cmul(u11, f)
        u12 = cmul(u12, f)
    else:
        unphase_c(a12, &a12, &f)
        a22 = cmul(a22, f)
        v12 = cmul(v12, f)
        v22 = cmul(v22, f)
        unphase_c(a22, &a22, &f)
        a21 = cmul(a21, f)
        u21 = cmul(u21, f)
        u22 = cmul(u22, f)

    t11 = a11.re
    t12 = a12.re
    t21 = a21.re
    t22 = a22.re
    out.diag = d
    if t12 == 0.0 and t21 == 0.0:
        s1 = ldexp(t11, -s)
        s2 = ldexp(t22, -s)
    elif not h:
        svd2_trig(t11, t12, t22, rot)
        backscale(s, t11, t22, rot[3] / rot[1], &s1, &s2)
        rot_c(rot[0], rot[1], &u11, &u21)
        rot_c(rot[0], rot[1], &u12, &u22)
        rot_c(rot[2], rot[3], &v11, &v12)
        rot_c(rot[2], rot[3], &v21, &v22)
    else:
        if not hsvd2_tri(t11, t21, t12, t22, c, upsilon, rot):
            out.defined = False
            out.uid = False
            out.vid = False
            out.spp = NAN
            out.sqq = NAN
            return
        if c:
            backscale(s, t11, t22, rot[1] / rot[3], &s1, &s2)
        else:
            backscale(s, t22, t11, rot[1] / rot[3], &s2, &s1)
        rot_c(rot[0], rot[1], &u11, &u21)
        rot_c(rot[0], rot[1], &u12, &u22)
        tmp = crdiv(crfma(rot[2], v12, v11), rot[3])
        v12 = crdiv(crfma(rot[2], v11, v12), rot[3])
        v11 = tmp
        tmp = crdiv(crfma(rot[2], v22, v21), rot[3])
        v22 = crdiv(crfma(rot[2], v21, v22), rot[3])
        v21 = tmp
    if jp < 0 and jq < 0:
        u11, u21 = u21, u11
        u12, u22 = u22, u12
        v11, v12 = v12, v11
        v21, v22 = v22, v21
        s1, s2 = s2, s1
    out.defined = True
    out.spp = s1
    out.sqq = s2
    out.uid = cz_is(u11, 1.0) and cz_is(u12, 0.0) and cz_is(u21, 0.0) and cz_is(u22, 1.0)
    out.vid = cz_is(v11, 1.0) and cz_is(v12, 0.0) and cz_is(v21, 0.0) and cz_is(v22, 1.0)
    out.u[0] = u11.re
    out.u[1] = u11.im
    out.u[2] = u12.re
    out.u[3] = u12.im
    out.u[4] = u21.re
    out.u[5] = u21.im
    out.u[6] = u22.re
    out.u[7] = u22.im
    out.v[0] = v11.re
    out.v[1] = v11.im
    out.v[2] = v12.re
    out.v[3] = v12.im
    out.v[4] = v21.re
    out.v[5] = v21.im
    out.v[6] = v22.re
    out.v[7] = v22.im


# ---------------------------------------------------------------------------
# full 2x2 kernel, real
# ---------------------------------------------------------------------------

cdef inline void unphase_r(double z, double* mag, double* f) noexcept nogil:
    mag[0] = fabs(z)
    f[0] = -1.0 if z < 0.0 else 1.0


cdef inline double mulph(double z, double f) noexcept nogil:
    return -z if f < 0.0 else z


cdef void hsvd2_r(double a11, double a21, double a12, double a22, int jp, int jq,
                  double upsilon, kres* out) noexcept nogil:
    cdef double u11, u12, u21, u22, v11, v12, v21, v22, f, tmp
    cdef bint h = jp != jq
    cdef bint d = a21 == 0.0 and a12 == 0.0
    cdef bint c, r
    cdef int s, k
    cdef double n1, n2, t, sec, t11, t12, t21, t22, s1, s2
    cdef double rot[4]

    s = chi(a11)
    k = chi(a21)
    if k < s: s = k
    k = chi(a12)
    if k < s: s = k
    k = chi(a22)
    if k < s: s = k
    a11 = ldexp(a11, s)
    a21 = ldexp(a21, s)
    a12 = ldexp(a12, s)
    a22 = ldexp(a22, s)

    n1 = hypot2(fabs(a11), fabs(a21))
    n2 = hypot2(fabs(a12), fabs(a22))
    c = n1 < n2
    if c:
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11 = 0.0
        v12 = 1.0
        v21 = 1.0
        v22 = 0.0
    else:
        v11 = 1.0
        v12 = 0.0
        v21 = 0.0
        v22 = 1.0

    unphase_r(a11, &a11, &f)
    a12 = mulph(a12, f)
    u11 = f
    unphase_r(a21, &a21, &f)
    a22 = mulph(a22, f)
    u22 = f
    u12 = 0.0
    u21 = 0.0

    r = a11 < a21
    if r:
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12

    if not d:
        t = a21 / a11
        sec = sqrt(fma(t, t, 1.0))
        a11 = fma(t, a21, a11) / sec
        a21 = 0.0
        rot_r(t, sec, &a12, &a22)
        rot_r(t, sec, &u11, &u21)
        rot_r(t, sec, &u12, &u22)

    if h and c:
        a11, a12 = a12, a11
        a21, a22 = a22, a21
        v11 = 1.0
        v12 = 0.0
        v21 = 0.0
        v22 = 1.0
        a11, a21 = a21, a11
        a12, a22 = a22, a12
        u11, u21 = u21, u11
        u12, u22 = u22, u12
        unphase_r(a21, &a21, &f)
        a11 = mulph(a11, f)
        v11 = f
        unphase_r(a11, &a11, &f)
        a12 = mulph(a12, f)
        u11 = mulph(u11, f)
        u12 = mulph(u12, f)
    else:
        unphase_r(a12, &a12, &f)
        a22 = mulph(a22, f)
        v12 = mulph(v12, f)
        v22 = mulph(v22, f)
        unphase_r(a22, &a22, &f)
        a21 = mulph(a21, f)
        u21 = mulph(u21, f)
        u22 = mulph(u22, f)

    t11 = a11
    t12 = a12
    t21 = a21
    t22 = a22
    out.diag = d
    if t12 == 0.0 and t21 == 0.0:
        s1 = ldexp(t11, -s)
        s2 = ldexp(t22, -s)
    elif not h:
        svd2_trig(t11, t12, t22, rot)
        backscale(s, t11, t22, rot[3] / rot[1], &s1, &s2)
        rot_r(rot[0], rot[1], &u11, &u21)
        rot_r(rot[0], rot[1], &u12, &u22)
        rot_r(rot[2], rot[3], &v11, &v12)
        rot_r(rot[2], rot[3], &v21, &v22)
    else:
        if not hsvd2_tri(t11, t21, t12, t22, c, upsilon, rot):
            out.defined = False
            out.uid = False
            out.vid = False
            out.spp = NAN
            out.sqq = NAN
            return
        if c:
            backscale(s, t11, t22, rot[1] / rot[3], &s1, &s2)
        else:
            backscale(s, t22, t11, rot[1] / rot[3], &s2, &s1)
        rot_r(rot[0], rot[1], &u11, &u21)
        rot_r(rot[0], rot[1], &u12, &u22)
        tmp = fma(rot[2], v12, v11) / rot[3]
        v12 = fma(rot[2], v11, v12) / rot[3]
        v11 = tmp
        tmp = fma(rot[2], v22, v21) / rot[3]
        v22 = fma(rot[2], v21, v22) / rot[3]
        v21 = tmp
    if jp < 0 and jq < 0:
        u11, u21 = u21, u11
        u12, u22 = u22, u12
        v11, v12 = v12, v11
        v21, v22 = v22, v21
        s1, s2 = s2, s1
    out.defined = True
    out.spp = s1
    out.sqq = s2
    out.uid = u11 == 1.0 and u12 == 0.0 and u21 == 0.0 and u22 == 1.0
    out.vid = v11 == 1.0 and v12 == 0.0 and v21 == 0.0 and v22 == 1.0
    out.u[0] = u11
    out.u[1] = 0.0
    out.u[2] = u12
    out.u[3] = 0.0
    out.u[4] = u21
    out.u[5] = 0.0
    out.u[6] = u22
    out.u[7] = 0.0
    out.v[0] = v11
    out.v[1] = 0.0
    out.v[2] = v12
    out.v[3] = 0.0
    out.v[4] = v21
    out.v[5] = 0.0
    out.v[6] = v22
    out.v[7] = 0.0


# ---------------------------------------------------------------------------
# candidate predicate and weights
# ---------------------------------------------------------------------------

cdef inline bint candidate(double ppr, double ppi, double qpr, double qpi, double pqr,
                           double pqi, double qqr, double qqi, int jp, int jq) noexcept nogil:
    if qpr != 0.0 or qpi != 0.0 or pqr != 0.0 or pqi != 0.0:
        return True
    if not (ppi == 0.0 and ppr >= 0.0 and qqi == 0.0 and qqr >= 0.0):
        return True
    if jp == jq:
        if jp > 0:
            return ppr < qqr
        return ppr > qqr
    return False


cdef inline void acc(double* s, double* c, double x, double y) noexcept nogil:
    cdef double h = x * y
    cdef double e = fma(x, y, -h)
    cdef double t = s[0] + h
    cdef double z = t - s[0]
    c[0] = c[0] + (((s[0] - (t - z)) + (h - z)) + e)
    s[0] = t


cdef double weight_c(const double[:, ::1] G, const double[:, ::1] A, const long[::1] J,
                     int p, int q, double upsilon) noexcept nogil:
    cdef int n = G.shape[0], i
    cdef cz gpp = mk(G[p, 2 * p], G[p, 2 * p + 1])
    cdef cz gqp = mk(G[q, 2 * p], G[q, 2 * p + 1])
    cdef cz gpq = mk(G[p, 2 * q], G[p, 2 * q + 1])
    cdef cz gqq = mk(G[q, 2 * q], G[q, 2 * q + 1])
    cdef cz a, b, v11, v12, v21, v22
    cdef kres res
    cdef double s = 0.0, c = 0.0, m, ma, mat, mb, mbt
    if not (isfinite(gpp.re) and isfinite(gpp.im) and isfinite(gqp.re) and isfinite(gqp.im)
            and isfinite(gpq.re) and isfinite(gpq.im) and isfinite(gqq.re)
            and isfinite(gqq.im)):
        return NAN
    if not candidate(gpp.re, gpp.im, gqp.re, gqp.im, gpq.re, gpq.im, gqq.re, gqq.im,
                     J[p], J[q]):
        return NAN
    m = cabs2(gqp)
    acc(&s, &c, m, m)
    m = cabs2(gpq)
    acc(&s, &c, m, m)
    if J[p] == J[q]:
        return s + c
    hsvd2_c(gpp, gqp, gpq, gqq, J[p], J[q], upsilon, &res)
    if not res.defined:
        return -INF
    if res.vid:
        return s + c
    v11 = mk(res.v[0], res.v[1])
    v12 = mk(res.v[2], res.v[3])
    v21 = mk(res.v[4], res.v[5])
    v22 = mk(res.v[6], res.v[7])
    for i in range(n):
        if i == p or i == q:
            continue
        a = mk(G[i, 2 * p], G[i, 2 * p + 1])
        b = mk(G[i, 2 * q], G[i, 2 * q + 1])
        if not (isfinite(a.re) and isfinite(a.im) and isfinite(b.re) and isfinite(b.im)):
            return NAN
        ma = A[i, p]
        mat = cabs2(cfma(v11, a, cmul(v21, b)))
        acc(&s, &c, ma - mat, ma + mat)
        mb = A[i, q]
        mbt = cabs2(cfma(v12, a, cmul(v22, b)))
        acc(&s, &c, mb - mbt, mb + mbt)
    return s + c


cdef double weight_r(const double[:, ::1] G, const long[::1] J, int p, int q,
                     double upsilon) noexcept nogil:
    cdef int n = G.shape[0], i
    cdef double gpp = G[p, p], gqp = G[q, p], gpq = G[p, q], gqq = G[q, q]
    cdef double a, b, v11, v12, v21, v22
    cdef kres res
    cdef double s = 0.0, c = 0.0, m, ma, mat, mb, mbt
    if not (isfinite(gpp) and isfinite(gqp) and isfinite(gpq) and isfinite(gqq)):
        return NAN
    if not candidate(gpp, 0.0, gqp, 0.0, gpq, 0.0, gqq, 0.0, J[p], J[q]):
        return NAN
    m = fabs(gqp)
    acc(&s, &c, m, m)
    m = fabs(gpq)
    acc(&s, &c, m, m)
    if J[p] == J[q]:
        return s + c
    hsvd2_r(gpp, gqp, gpq, gqq, J[p], J[q], upsilon, &res)
    if not res.defined:
        return -INF
    if res.vid:
        return s + c
    v11 = res.v[0]
    v12 = res.v[2]
    v21 = res.v[4]
    v22 = res.v[6]
    for i in range(n):
        if i == p or i == q:
            continue
        a = G[i, p]
        b = G[i, q]
        if not (isfinite(a) and isfinite(b)):
            return NAN
        ma = fabs(a)
        mat = fabs(fma(v11, a, v21 * b))
        acc(&s, &c, ma - mat, ma + mat)
        mb = fabs(b)
        mbt = fabs(fma(v12, a, v22 * b))
        acc(&s, &c, mb - mbt, mb + mbt)
    return s + c


def weights(G, J, pairs, Py_ssize_t split, double upsilon, int tasks=1):
    """Weight of every pair; same-sign pairs first, then mixed-sign pairs."""
    cdef bint cplx = np.iscomplexobj(G)
    cdef const double[:, ::1] Gv = (np.ascontiguousarray(G).view(np.float64) if cplx
                                     else np.ascontiguousarray(G, dtype=np.float64))
    cdef const long[::1] Jv = np.ascontiguousarray(J, dtype=np.int64)
    cdef const long[:, ::1] P = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef Py_ssize_t m = P.shape[0], k, i, j, n = Gv.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] w = out
    mags = np.zeros((n if cplx else 0, n if cplx else 0), dtype=np.float64)
    cdef double[:, ::1] A = mags
    if tasks < 1:
        tasks = 1
    with nogil:
        if cplx:
            # moduli of all entries, shared by every pair
            for i in prange(n, schedule="static", num_threads=tasks):
                for j in range(n):
                    A[i, j] = hypot2(Gv[i, 2 * j], Gv[i, 2 * j + 1])
        # two loops so that each has uniform per-iteration cost
        if cplx:
            for k in prange(split, schedule="static", num_threads=tasks):
                w[k] = weight_c(Gv, A, Jv, <int>P[k, 0], <int>P[k, 1], upsilon)
            for k in prange(split, m, schedule="static", num_threads=tasks):
                w[k] = weight_c(Gv, A, Jv, <int>P[k, 0], <int>P[k, 1], upsilon)
        else:
            for k in prange(split, schedule="static", num_threads=tasks):
                w[k] = weight_r(Gv, Jv, <int>P[k, 0], <int>P[k, 1], upsilon)
            for k in prange(split, m, schedule="static", num_threads=tasks):
                w[k] = weight_r(Gv, Jv, <int>P[k, 0], <int>P[k, 1], upsilon)
    return out


# ---------------------------------------------------------------------------
# application of 2x2 transforms
# ---------------------------------------------------------------------------

cdef inline bint m_is_eye(const double* m) noexcept nogil:
    return (m[0] == 1.0 and m[1] == 0.0 and m[2] == 0.0 and m[3] == 0.0
            and m[4] == 0.0 and m[5] == 0.0 and m[6] == 1.0 and m[7] == 0.0)


cdef inline bint m_is_swap(const double* m) noexcept nogil:
    return (m[0] == 0.0 and m[1] == 0.0 and m[2] == 1.0 and m[3] == 0.0
            and m[4] == 1.0 and m[5] == 0.0 and m[6] == 0.0 and m[7] == 0.0)


cdef void left_c(double[:, ::1] M, int p, int q, const double* u) noexcept nogil:
    cdef int j, n2 = M.shape[1] // 2
    cdef cz a, b, na, nb
    cdef cz u11 = mk(u[0], u[1]), u12 = mk(u[2], u[3])
    cdef cz u21 = mk(u[4], u[5]), u22 = mk(u[6], u[7])
    cdef double t
    if m_is_eye(u):
        return
    if m_is_swap(u):
        for j in range(2 * n2):
            t = M[p, j]
            M[p, j] = M[q, j]
            M[q, j] = t
        return
    for j in range(n2):
        a = mk(M[p, 2 * j], M[p, 2 * j + 1])
        b = mk(M[q, 2 * j], M[q, 2 * j + 1])
        na = cfma(u11, a, cmul(u12, b))
        nb = cfma(u21, a, cmul(u22, b))
        M[p, 2 * j] = na.re
        M[p, 2 * j + 1] = na.im
        M[q, 2 * j] = nb.re
        M[q, 2 * j + 1] = nb.im


cdef void right_c(double[:, ::1] M, int p, int q, const double* v) noexcept nogil:
    cdef int i, n = M.shape[0]
    cdef cz a, b, na, nb
    cdef cz v11 = mk(v[0], v[1]), v12 = mk(v[2], v[3])
    cdef cz v21 = mk(v[4], v[5]), v22 = mk(v[6], v[7])
    cdef double t
    if m_is_eye(v):
        return
    if m_is_swap(v):
        for i in range(n):
            t = M[i, 2 * p]
            M[i, 2 * p] = M[i, 2 * q]
            M[i, 2 * q] = t
            t = M[i, 2 * p + 1]
            M[i, 2 * p + 1] = M[i, 2 * q + 1]
            M[i, 2 * q + 1] = t
        return
    for i in range(n):
        a = mk(M[i, 2 * p], M[i, 2 * p + 1])
        b = mk(M[i, 2 * q], M[i, 2 * q + 1])
        na = cfma(v11, a, cmul(v21, b))
        nb = cfma(v12, a, cmul(v22, b))
        M[i, 2 * p] = na.re
        M[i, 2 * p + 1] = na.im
        M[i, 2 * q] = nb.re
        M[i, 2 * q + 1] = nb.im


cdef void left_r(double[:, ::1] M, int p, int q, const double* u) noexcept nogil:
    cdef int j, n = M.shape[1]
    cdef double a, b, t
    if m_is_eye(u):
        return
    if m_is_swap(u):
        for j in range(n):
            t = M[p, j]
            M[p, j] = M[q, j]
            M[q, j] = t
        return
    for j in range(n):
        a = M[p, j]
        b = M[q, j]
        M[p, j] = fma(u[0], a, u[2] * b)
        M[q, j] = fma(u[4], a, u[6] * b)


cdef void right_r(double[:, ::1] M, int p, int q, const double* v) noexcept nogil:
    cdef int i, n = M.shape[0]
    cdef double a, b, t
    if m_is_eye(v):
        return
    if m_is_swap(v):
        for i in range(n):
            t = M[i, p]
            M[i, p] = M[i, q]
            M[i, q] = t
        return
    for i in range(n):
        a = M[i, p]
        b = M[i, q]
        M[i, p] = fma(v[0], a, v[4] * b)
        M[i, q] = fma(v[2], a, v[6] * b)


def _fview(A, bint cplx):
    if A is None:
        return None
    if not A.flags.c_contiguous:
        raise ValueError("matrices must be C-contiguous")
    return A.view(np.float64) if cplx else A


def multistep(G, U_star, V, J, pivots, double upsilon, int tasks=1):
    """Apply index-disjoint steps in place: all kernels, all left, all right.

    Returns a ``(k, 4)`` boolean array of per-step flags
    ``(was_diagonal, u_is_identity, v_is_identity, defined)``.
    """
    cdef bint cplx = np.iscomplexobj(G)
    cdef double[:, ::1] Gv = _fview(G, cplx)
    cdef double[:, ::1] Uv
    cdef double[:, ::1] Vv
    cdef bint has_u = U_star is not None, has_v = V is not None
    if has_u:
        Uv = _fview(U_star, cplx)
    if has_v:
        Vv = _fview(V, cplx)
    cdef const long[::1] Jv = np.ascontiguousarray(J, dtype=np.int64)
    cdef const long[:, ::1] P = np.ascontiguousarray(pivots, dtype=np.int64)
    cdef Py_ssize_t k = P.shape[0], i
    cdef int p, q
    res_buf = np.zeros(k * sizeof(kres), dtype=np.uint8)
    cdef unsigned char[::1] rb = res_buf
    cdef kres* res = <kres*>&rb[0] if k > 0 else NULL
    flags = np.zeros((k, 4), dtype=bool)
    if k == 0:
        return flags
    if tasks < 1:
        tasks = 1
    with nogil:
        for i in prange(k, schedule="static", num_threads=tasks):
            p = <int>P[i, 0]
            q = <int>P[i, 1]
            if cplx:
                hsvd2_c(mk(Gv[p, 2 * p], Gv[p, 2 * p + 1]), mk(Gv[q, 2 * p], Gv[q, 2 * p + 1]),
                        mk(Gv[p, 2 * q], Gv[p, 2 * q + 1]), mk(Gv[q, 2 * q], Gv[q, 2 * q + 1]),
                        <int>Jv[p], <int>Jv[q], upsilon, &res[i])
            else:
                hsvd2_r(Gv[p, p], Gv[q, p], Gv[p, q], Gv[q, q], <int>Jv[p], <int>Jv[q],
                        upsilon, &res[i])
        for i in prange(k, schedule="static", num_threads=tasks):
            if res[i].defined:
                p = <int>P[i, 0]
                q = <int>P[i, 1]
                if cplx:
                    left_c(Gv, p, q, res[i].u)
                    if has_u:
                        left_c(Uv, p, q, res[i].u)
                else:
                    left_r(Gv, p, q, res[i].u)
                    if has_u:
                        left_r(Uv, p, q, res[i].u)
        for i in prange(k, schedule="static", num_threads=tasks):
            if res[i].defined:
                p = <int>P[i, 0]
                q = <int>P[i, 1]
                if cplx:
                    right_c(Gv, p, q, res[i].v)
                    if has_v:
                        right_c(Vv, p, q, res[i].v)
                    Gv[p, 2 * p] = res[i].spp
                    Gv[p, 2 * p + 1] = 0.0
                    Gv[q, 2 * q] = res[i].sqq
                    Gv[q, 2 * q + 1] = 0.0
                    Gv[p, 2 * q] = 0.0
                    Gv[p, 2 * q + 1] = 0.0
                    Gv[q, 2 * p] = 0.0
                    Gv[q, 2 * p + 1] = 0.0
                else:
                    right_r(Gv, p, q, res[i].v)
                    if has_v:
                        right_r(Vv, p, q, res[i].v)
                    Gv[p, p] = res[i].spp
                    Gv[q, q] = res[i].sqq
                    Gv[p, q] = 0.0
                    Gv[q, p] = 0.0
    for i in range(k):
        flags[i, 0] = res[i].diag
        flags[i, 1] = res[i].uid
        flags[i, 2] = res[i].vid
        flags[i, 3] = res[i].defined
    return flags


# ---------------------------------------------------------------------------
# scalar entry points for testing
# ---------------------------------------------------------------------------

def fma_(double a, double b, double c):
    """libm fused multiply-add."""
    return fma(a, b, c)


def hsvd2_raw(a11, a21, a12, a22, int jp, int jq, double upsilon=1.0, bint cplx=False):
    """Same tuple as the pure-Python scalar kernel."""
    cdef kres r
    if cplx:
        a11 = complex(a11)
        a21 = complex(a21)
        a12 = complex(a12)
        a22 = complex(a22)
        hsvd2_c(mk(a11.real, a11.imag), mk(a21.real, a21.imag), mk(a12.real, a12.imag),
                mk(a22.real, a22.imag), jp, jq, upsilon, &r)
    else:
        hsvd2_r(a11, a21, a12, a22, jp, jq, upsilon, &r)
    if not r.defined:
        return None, None, NAN, NAN, bool(r.diag), False, False, False
    if cplx:
        u = tuple(complex(r.u[2 * i], r.u[2 * i + 1]) for i in range(4))
        v = tuple(complex(r.v[2 * i], r.v[2 * i + 1]) for i in range(4))
    else:
        u = tuple(r.u[2 * i] for i in range(4))
        v = tuple(r.v[2 * i] for i in range(4))
    return u, v, r.spp, r.sqq, bool(r.diag), bool(r.uid), bool(r.vid), True
