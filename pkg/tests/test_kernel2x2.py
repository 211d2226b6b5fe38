import math
import struct

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperkog import _backend
from hyperkog.fpcore import FP
from hyperkog.kernel2x2 import (
    Utv2,
    _hsvd2,
    backscale,
    hsvd2,
    hsvd2_lower,
    hsvd2_upper,
    jutv2,
    svd2_trig,
)
from oracles import EPS, eig2_hermitian_exact, gram_defect2, max_rel

SQRT2 = math.sqrt(2.0)
P2 = np.array([[0.0, 1.0], [1.0, 0.0]])
needs_core = pytest.mark.skipif("compiled" not in _backend.available(),
                                reason="compiled core not built")


def tri(T, s=0, lower=False):
    """A hand-made reduction result holding the triangle ``T``."""
    T = np.asarray(T, dtype=float)
    return Utv2(np.eye(2), np.eye(2), T, s, False, True, lower, False)


def flat(G):
    G = np.asarray(G)
    return G[0, 0].item(), G[1, 0].item(), G[0, 1].item(), G[1, 1].item()


def random_pivot(rng, cplx):
    g = rng.standard_normal(4)
    if cplx:
        g = g + 1j * rng.standard_normal(4)
        return [complex(z) for z in g]
    return [float(z) for z in g]


# ---------------------------------------------------------------------------
# triangular reduction
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("J", [(1, 1), (-1, -1), (1, -1), (-1, 1)])
def test_jutv2_diagonal_fast_path(J):
    G = np.diag([5.0, 2.0])
    u = jutv2(G, J)
    assert u.d
    assert np.array_equal(u.U_star, np.eye(2)) and np.array_equal(u.V, np.eye(2))
    assert np.array_equal(u.T, np.ldexp(G, u.s))


@pytest.mark.parametrize("J", [(1, -1), (-1, 1)])
def test_jutv2_diagonal_hyperbolic_any_order(J):
    G = np.diag([2.0, 5.0])
    u = jutv2(G, J)
    assert u.d and u.long
    assert np.array_equal(u.U_star, np.eye(2)) and np.array_equal(u.V, np.eye(2))
    assert np.array_equal(u.T, np.ldexp(G, u.s))


@pytest.mark.parametrize("J", [(1, 1), (-1, -1)])
def test_jutv2_diagonal_trig_pivots_larger_first(J):
    # column and row pivoting also run on a diagonal input
    u = jutv2(np.diag([2.0, 5.0]), J)
    assert u.d and u.c and u.r
    assert np.array_equal(u.U_star, P2) and np.array_equal(u.V, P2)
    assert np.array_equal(u.T, np.ldexp(np.diag([5.0, 2.0]), u.s))


def test_jutv2_345_rotation():
    u = jutv2(np.array([[3.0, 0.0], [4.0, 0.0]]), (1, 1))
    assert not u.c and u.r
    scale = math.ldexp(1.0, u.s)
    assert abs(u.T[0, 0] - 5 * scale) <= 2 * np.spacing(5 * scale)
    assert u.T[0, 1] == u.T[1, 0] == u.T[1, 1] == 0.0
    # the rotation's tangent is 3/4: U^* maps (3, 4) onto (5, 0)
    assert abs(abs(u.U_star[0, 0]) - 0.6) <= 2 * EPS and abs(abs(u.U_star[0, 1]) - 0.8) <= 2 * EPS


def test_jutv2_long_pipeline_cancels_column_swap():
    u = jutv2(np.array([[0.0, 1.0], [0.0, 0.0]]), (1, -1))
    assert u.c and u.h and u.long
    assert np.array_equal(u.V, np.eye(2))
    assert np.array_equal(u.T, [[0.0, 0.0], [0.0, math.ldexp(1.0, u.s)]])


@pytest.mark.parametrize("cplx", [False, True])
def test_jutv2_invariants(cplx):
    rng = np.random.default_rng(21)
    for _ in range(400):
        g = random_pivot(rng, cplx)
        J = [(1, 1), (1, -1), (-1, 1), (-1, -1)][rng.integers(4)]
        G = np.array([[g[0], g[2]], [g[1], g[3]]])
        u = jutv2(G, J)
        G0 = np.ldexp(G.real, u.s) + (1j * np.ldexp(G.imag, u.s) if cplx else 0)
        R = u.U_star @ G0 @ u.V
        scale = np.abs(u.T).max()
        assert np.max(np.abs(R - u.T)) <= 8 * EPS * scale
        assert np.all(u.T >= 0)
        t = u.T
        if u.long:
            assert t[0, 1] == 0 and t[1, 1] >= math.hypot(t[1, 0], t[0, 0]) * (1 - 8 * EPS)
        else:
            assert t[1, 0] == 0 and t[0, 0] >= math.hypot(t[0, 1], t[1, 1]) * (1 - 8 * EPS)
        Jm = np.diag(J).astype(float)
        # phases are unit to 4 ulp, each product adds a rounding
        assert np.max(np.abs(u.V.conj().T @ Jm @ u.V - Jm)) <= 12 * EPS
        assert np.max(np.abs(u.V.conj().T @ u.V - np.eye(2))) <= 12 * EPS


# ---------------------------------------------------------------------------
# backscaling
# ---------------------------------------------------------------------------


def test_backscale_no_scale():
    f = 1.75
    assert backscale(0, 3.0, 5.0, f) == (3.0 * f, 5.0 / f)


def test_backscale_keeps_factor_normal():
    one_plus = np.nextafter(1.0, 2.0)
    s = 1023  # 2**-s = omega_norm / 2
    d1, d2 = backscale(s, 3.0, 5.0, one_plus)
    f_prime = np.nextafter(FP.omega_norm, 1.0)  # successor of omega_norm
    assert f_prime == math.ldexp(one_plus, -1022)
    assert d1 == (3.0 / 2) * f_prime  # xi = 1
    assert d2 == math.ldexp(5.0 / one_plus, -s)


def test_backscale_negative_scale():
    assert backscale(-2, 1.0, 1.0, 1.0) == (4.0, 4.0)


# ---------------------------------------------------------------------------
# triangular kernels
# ---------------------------------------------------------------------------


def test_svd2_trig_diagonal():
    rot, (s1, s2) = svd2_trig(tri([[1.0, 0.0], [0.0, 0.25]], s=3))
    assert rot.tan_phi == 0 and rot.psi_t == 0
    assert (s1, s2) == (0.125, 0.25 / 8)


def test_svd2_trig_rank_one():
    rot, (s1, s2) = svd2_trig(tri([[1.0, 1.0], [0.0, 0.0]]))
    assert rot.tan_phi == 0.0 and rot.psi_t == 1.0
    assert abs(s1 - SQRT2) <= np.spacing(SQRT2) and s2 == 0.0


def test_svd2_trig_golden_ratio():
    rot, (s1, s2) = svd2_trig(tri([[1.0, 1.0], [0.0, 1.0]]))
    with gmpy2.context(gmpy2.get_context(), precision=200):
        r5 = gmpy2.sqrt(gmpy2.mpfr(5))
        big, small = (r5 + 1) / 2, (r5 - 1) / 2
        assert abs(gmpy2.mpfr(s1) - big) <= 4 * EPS * big
        assert abs(gmpy2.mpfr(s2) - small) <= 4 * EPS * small


@settings(max_examples=3000)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(-3, 3))
def test_svd2_trig_bounds(x, y, s):
    if x * x + y * y > 1:
        return
    rot, (s1, s2) = svd2_trig(tri([[1.0, x], [0.0, y]], s=s))
    assert 0 <= rot.tan_phi <= rot.psi_t <= SQRT2
    assert s1 >= s2 >= 0


def test_svd2_trig_zero_triangle():
    rot, (s1, s2) = svd2_trig(tri([[0.0, 0.0], [0.0, 0.0]]))
    assert rot.tan_phi == 0 and rot.psi_t == 0 and (s1, s2) == (0.0, 0.0)


def test_hsvd2_upper_example():
    rot, (s1, s2) = hsvd2_upper(tri([[1.0, 0.5], [0.0, 0.0]]))
    assert rot.tan_phi == 0 and rot.psi_t == -0.5
    assert abs(s1 - math.sqrt(3) / 2) <= 2 * EPS and s2 == 0.0
    # sigma^2 j are the eigenvalues 3/4 and 0 of T J T^*
    assert abs(s1 * s1 - 0.75) <= 4 * EPS


def test_hsvd2_upper_identical_columns_undefined():
    assert hsvd2_upper(tri([[1.0, 1.0], [0.0, 0.0]]), 1.0) is None


def test_hsvd2_lower_example():
    rot, (s1, s2) = hsvd2_lower(tri([[0.0, 0.0], [0.5, 1.0]], lower=True))
    assert rot.tan_phi == 0 and rot.psi_t == -0.5
    assert s1 == 0.0 and abs(s2 - math.sqrt(3) / 2) <= 2 * EPS


def test_hsvd2_lower_identical_columns_undefined():
    assert hsvd2_lower(tri([[0.0, 0.0], [1.0, 1.0]], lower=True), 1.0) is None


def test_upsilon_rejects_steep_transforms():
    T = tri([[1.0, 0.5], [0.0, 0.0]])
    assert hsvd2_upper(T, 0.75) is not None
    assert hsvd2_upper(T, 0.5) is None


def test_lower_kernel_mirrors_upper():
    rng = np.random.default_rng(5)
    for _ in range(3000):
        t11 = 1.0
        t12, t22 = rng.random(2) / 2 ** 0.5
        up = hsvd2_upper(tri([[t11, t12], [0.0, t22]]), 1.0)
        lo = hsvd2_lower(tri([[t22, 0.0], [t12, t11]], lower=True), 1.0)
        assert (up is None) == (lo is None)
        if up is not None:
            assert up[1] == lo[1][::-1]
            assert up[0].psi_t == lo[0].psi_t


@settings(max_examples=2000)
@given(st.floats(0, 1), st.floats(0, 1))
def test_hyperbolic_tanh_below_one(x, y):
    if x * x + y * y > 1:
        return
    for res in (hsvd2_upper(tri([[1.0, x], [0.0, y]]), 1.0),
                hsvd2_lower(tri([[y, 0.0], [x, 1.0]], lower=True), 1.0)):
        if res is not None:
            rot = res[0]
            assert abs(rot.psi_t) < 1 and rot.psi_s > 0
            assert abs(rot.tan_phi) < 1


# ---------------------------------------------------------------------------
# full kernel
# ---------------------------------------------------------------------------


def test_misordered_diagonal_swaps():
    r = hsvd2(np.diag([1.0, 2.0]), (1, 1))
    assert r.defined and r.was_diagonal
    assert (r.sigma_pp, r.sigma_qq) == (2.0, 1.0)
    assert np.array_equal(r.U_hat_star, P2) and np.array_equal(r.V_hat, P2)


def test_negative_definite_ordering():
    r = hsvd2(np.diag([2.0, 1.0]), (-1, -1))
    assert (r.sigma_pp, r.sigma_qq) == (1.0, 2.0)
    r = hsvd2(np.diag([1.0, 2.0]), (-1, -1))
    assert (r.sigma_pp, r.sigma_qq) == (1.0, 2.0)
    assert r.u_is_identity and r.v_is_identity


def test_ordered_diagonal_is_identity():
    r = hsvd2(np.diag([2.0, 1.0]), (1, 1))
    assert r.u_is_identity and r.v_is_identity and r.was_diagonal


def test_hyperbolic_cosh_example():
    x = 1.0 - 1e-6  # tanh(psi) = -x for the float actually stored
    r = hsvd2(np.array([[1.0, x], [0.0, 0.0]]), (1, -1))
    assert r.defined
    xq = gmpy2.mpfr(x)
    ch = 1 / gmpy2.sqrt(1 - xq * xq)
    V = r.V_hat
    # V = cosh(psi) [[1, -x], [-x, 1]]
    assert abs(V[0, 0] - ch) <= 64 * EPS * ch * ch
    assert abs(V[0, 1] + xq * ch) <= 64 * EPS * ch * ch
    assert V[0, 1] == V[1, 0] and V[0, 0] == V[1, 1]


def test_hyperbolic_sinh_minus_one_example():
    r = hsvd2(np.array([[2.0, SQRT2], [0.0, 0.0]]), (1, -1))
    V = r.V_hat
    assert abs(V[0, 0] - SQRT2) <= 4 * EPS * SQRT2 and abs(V[1, 1] - SQRT2) <= 4 * EPS * SQRT2
    assert abs(V[0, 1] + 1) <= 4 * EPS and abs(V[1, 0] + 1) <= 4 * EPS


def test_complex_diagonal_phase_step():
    r = hsvd2(np.diag([1j, -2.0 + 0j]), (1, 1))
    assert r.defined and r.was_diagonal
    assert (r.sigma_pp, r.sigma_qq) == (2.0, 1.0)
    D = r.U_hat_star @ np.diag([1j, -2.0]) @ r.V_hat
    assert np.allclose(D, np.diag([2.0, 1.0]), atol=2 * EPS)


def test_undefined_result():
    r = hsvd2(np.array([[1.0, 1.0], [0.0, 0.0]]), (1, -1))
    assert not r.defined
    assert math.isnan(r.sigma_pp) and math.isnan(r.sigma_qq)


def test_nonfinite_pivot_rejected():
    with pytest.raises(ValueError):
        hsvd2(np.array([[np.inf, 0.0], [0.0, 1.0]]), (1, 1))


@pytest.mark.parametrize("cplx", [False, True])
@pytest.mark.parametrize("J", [(1, 1), (-1, -1), (1, -1), (-1, 1)])
def test_reconstruction_and_spectrum(cplx, J):
    rng = np.random.default_rng(hash((cplx, J)) % 2 ** 32)
    jp, jq = J
    for _ in range(1500):
        g = random_pivot(rng, cplx)
        r = hsvd2(np.array([[g[0], g[2]], [g[1], g[3]]]), J)
        if not r.defined:
            continue
        G = np.array([[g[0], g[2]], [g[1], g[3]]])
        D = r.U_hat_star @ G @ r.V_hat
        smax = max(r.sigma_pp, r.sigma_qq)
        assert np.linalg.norm(D - np.diag([r.sigma_pp, r.sigma_qq])) <= \
            32 * EPS * (np.linalg.norm(G) + smax) * np.linalg.norm(r.V_hat) ** 2
        assert gram_defect2(r.U_hat_star.ravel().tolist()) <= 16 * EPS
        ch2 = float(np.sum(np.abs(r.V_hat[:, 0]) ** 2))
        assert gram_defect2(r.V_hat.ravel().tolist(), jp, jq) <= 8 * EPS * (ch2 + 1) / 2
        # Definition of the ordering for definite signatures
        if J == (1, 1):
            assert r.sigma_pp >= r.sigma_qq
        if J == (-1, -1):
            assert r.sigma_pp <= r.sigma_qq
        # eigenvalues of G J G^* are sigma^2 j up to the conditioning of G
        lam = eig2_hermitian_exact(g, jp, jq)
        sv = np.linalg.svd(G, compute_uv=False)
        kappa = sv[0] / sv[1] if sv[1] > 0 else np.inf
        err = max_rel(lam, sorted([r.sigma_pp ** 2 * jp, r.sigma_qq ** 2 * jq]))
        assert err <= 64 * EPS * kappa * ch2


def test_reproducible_bits():
    rng = np.random.default_rng(2)
    for _ in range(100):
        g = random_pivot(rng, True)
        a = _hsvd2(*g, 1, -1, 1.0, True)
        b = _hsvd2(*g, 1, -1, 1.0, True)
        assert repr(a) == repr(b)


def _bits(x):
    if isinstance(x, tuple):
        return tuple(_bits(v) for v in x)
    if isinstance(x, complex):
        return struct.pack("<dd", x.real, x.imag)
    if isinstance(x, float):
        return struct.pack("<d", x)
    return x


@needs_core
@pytest.mark.parametrize("cplx", [False, True])
def test_compiled_kernel_bitwise_equal(cplx):
    from hyperkog._core import hsvd2_raw

    rng = np.random.default_rng(99)
    specials = [0.0, -0.0, 1.0, FP.omega_small, FP.omega_norm, FP.omega_big / 3, 1e-300, 3.5]
    cases = [random_pivot(rng, cplx) for _ in range(3000)]
    for _ in range(1500):
        g = [specials[i] * (-1) ** k for i, k in zip(rng.integers(0, len(specials), 4),
                                                     rng.integers(0, 2, 4))]
        if cplx:
            g = [complex(a, b) for a, b in zip(g, rng.permutation(g))]
        cases.append(g)
    for g in cases:
        for J in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
            for ups in (1.0, 0.75):
                a = _hsvd2(*g, *J, ups, cplx)
                b = hsvd2_raw(*g, *J, ups, cplx)
                assert _bits(a) == _bits(b), (g, J)
