import math

import numpy as np
import pytest
from gmpy2 import mpq

from hyperkog import _backend
from hyperkog.kernel2x2 import hsvd2
from hyperkog.sweep import (
    IterationState,
    apply_left2,
    apply_multistep,
    apply_right2,
    build_pair_partition,
    compute_all_weights,
    is_candidate,
    off_norm2,
    transform_columns,
    virtual_weight,
)
from oracles import EPS, exact_drop, exact_off2, isolated_step

SQRT2 = math.sqrt(2.0)
P2 = np.array([[0.0, 1.0], [1.0, 0.0]])
needs_core = pytest.mark.skipif("compiled" not in _backend.available(),
                                reason="compiled core not built")


def pairs_of(a):
    return [tuple(int(v) for v in x) for x in a]


def random_problem(rng, n, cplx):
    G = rng.standard_normal((n, n))
    if cplx:
        G = G + 1j * rng.standard_normal((n, n))
    J = rng.choice([-1, 1], n)
    return G, J


# ---------------------------------------------------------------------------
# pair partition
# ---------------------------------------------------------------------------


def test_partition_definite():
    part = build_pair_partition([1, 1, 1])
    assert pairs_of(part.trig) == [(0, 1), (0, 2), (1, 2)]
    assert len(part.hyp) == 0


def test_partition_two_mixed():
    part = build_pair_partition([1, -1])
    assert len(part.trig) == 0
    assert pairs_of(part.hyp) == [(0, 1)]


def test_partition_back_filled_in_reverse():
    part = build_pair_partition([1, -1, 1])
    assert pairs_of(part.trig) == [(0, 2)]
    assert pairs_of(part.hyp) == [(1, 2), (0, 1)]


def test_partition_invariants():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(2, 20))
        J = rng.choice([-1, 1], n)
        part = build_pair_partition(J)
        assert len(part.pairs) == n * (n - 1) // 2
        assert len(set(pairs_of(part.pairs))) == len(part.pairs)
        assert all(J[p] == J[q] and p < q for p, q in part.trig)
        assert all(J[p] != J[q] and p < q for p, q in part.hyp)
        cyclic = [(p, q) for q in range(1, n) for p in range(q)]
        assert pairs_of(part.trig) == [x for x in cyclic if J[x[0]] == J[x[1]]]
        assert pairs_of(part.hyp)[::-1] == [x for x in cyclic if J[x[0]] != J[x[1]]]


def test_partition_needs_two_indices():
    with pytest.raises(ValueError):
        build_pair_partition([1])


# ---------------------------------------------------------------------------
# candidates
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("G, J, expected", [
    (np.diag([2.0, 1.0]), [1, 1], False),
    (np.diag([1.0, 2.0]), [1, 1], True),
    (np.diag([1.0, 2.0]), [1, -1], False),
    (np.diag([2.0, 1.0]), [-1, -1], True),
    (np.diag([1.0, 2.0]), [-1, -1], False),
    (np.array([[2.0, 0.0], [1e-300, 1.0]]), [1, 1], True),
    (np.array([[2.0, -0.0], [0.0, 1.0]]), [1, 1], False),
    (np.diag([-2.0, 1.0]), [1, -1], True),
    (np.diag([2.0 + 0j, 1j]), [1, 1], True),
])
def test_is_candidate(G, J, expected):
    assert is_candidate(G, J, 0, 1) is expected


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("cplx", [False, True])
def test_apply_identity_and_swap_bitwise(cplx):
    rng = np.random.default_rng(9)
    G, J = random_problem(rng, 5, cplx)
    st = IterationState.start(G, J)
    apply_left2(st, 1, 3, np.eye(2))
    assert np.array_equal(st.G, G) and np.array_equal(st.U_star, np.eye(5))
    apply_left2(st, 1, 3, P2)
    assert np.array_equal(st.G, G[[0, 3, 2, 1, 4]])
    M = G.copy()
    transform_columns(M, 0, 4, P2)
    assert np.array_equal(M, G[:, [4, 1, 2, 3, 0]])


def test_apply_left_345_rotation():
    G = np.array([[3.0, 0.0], [4.0, 0.0]])
    r = hsvd2(G, [1, 1])
    st = IterationState.start(G, [1, 1])
    apply_left2(st, 0, 1, r.U_hat_star)
    col = st.G[:, 0]
    assert abs(abs(col[0]) - 5.0) <= 2 * np.spacing(5.0)
    assert abs(col[1]) <= 2 * np.spacing(5.0)


def test_apply_right_identity_overwrites_pivot_only():
    rng = np.random.default_rng(2)
    G, J = random_problem(rng, 4, False)
    st = IterationState.start(G, J)
    apply_right2(st, 1, 2, np.eye(2), 7.0, 3.0)
    expected = G.copy()
    expected[1, 1], expected[2, 2], expected[1, 2], expected[2, 1] = 7.0, 3.0, 0.0, 0.0
    assert np.array_equal(st.G, expected)


def test_apply_right_hyperbolic_on_a_plain_row():
    V = np.array([[SQRT2, -1.0], [-1.0, SQRT2]])
    G = np.zeros((3, 3))
    G[2, 0] = 1.0
    st = IterationState.start(G, [1, -1, 1])
    apply_right2(st, 0, 1, V, 0.0, 0.0)
    assert st.G[2, 0] == SQRT2 and st.G[2, 1] == -1.0


@pytest.mark.parametrize("cplx", [False, True])
def test_pivot_off_diagonal_is_bit_zero_after_step(cplx):
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        G, J = random_problem(rng, n, cplx)
        p, q = sorted(int(i) for i in rng.choice(n, 2, replace=False))
        r = hsvd2(np.array([[G[p, p], G[p, q]], [G[q, p], G[q, q]]]), [J[p], J[q]])
        if not r.defined:
            continue
        st = IterationState.start(G, J)
        apply_left2(st, p, q, r.U_hat_star)
        apply_right2(st, p, q, r.V_hat, r.sigma_pp, r.sigma_qq)
        assert st.G[p, q] == 0 and st.G[q, p] == 0
        assert st.G[p, p] == r.sigma_pp and st.G[q, q] == r.sigma_qq


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


def test_trig_weight_is_pivot_off_diagonal_square():
    G = np.array([[1.5, 3.0], [4.0, -0.25]])
    assert virtual_weight(G, [1, 1], 0, 1) == 25.0
    assert virtual_weight(G, [-1, -1], 0, 1) == 25.0


def test_weight_negative_case():
    # pivot [[1, e-1], [0, 0]] with one extra row (1, 1): w = (e-1)^2 + 4(e-1)/e
    e = 2.0 ** -20
    G = np.array([[1.0, e - 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    w = virtual_weight(G, [1, -1, 1], 0, 1)
    eq = mpq(e)
    exact = (eq - 1) ** 2 + 4 * (eq - 1) / eq
    assert w < 0
    assert abs(mpq(w) - exact) <= 4 * EPS * abs(exact)


def test_weight_positive_case():
    # pivot [[1, 1-e], [0, 0]] with one extra row (1, 1): w = (1-e)^2 + 4(1-e)/(2-e)
    e = 2.0 ** -20
    G = np.array([[1.0, 1.0 - e, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    w = virtual_weight(G, [1, -1, 1], 0, 1)
    eq = mpq(e)
    exact = (1 - eq) ** 2 + 4 * (1 - eq) / (2 - eq)
    assert w > 0
    assert abs(mpq(w) - exact) <= 4 * EPS * abs(exact)


def test_weight_zero_case():
    # pivot [[2, sqrt 2], [0, 0]] (sinh psi = -1) with extra row (1, 0): w = 0
    G = np.array([[2.0, SQRT2, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    w = virtual_weight(G, [1, -1, 1], 0, 1)
    pivot_off = float(exact_off2(G[:2, :2]))
    assert abs(w) <= 4 * EPS * pivot_off


def test_rejected_hyperbolic_step_weighs_minus_inf():
    G = np.array([[1.0, 1.0], [0.0, 0.0]])  # identical columns
    assert virtual_weight(G, [1, -1], 0, 1) == -math.inf
    assert virtual_weight(np.array([[1.0, 0.5], [0.0, 0.0]]), [1, -1], 0, 1, 0.25) == -math.inf


def test_non_candidate_and_non_finite_weigh_nan():
    assert math.isnan(virtual_weight(np.diag([2.0, 1.0]), [1, 1], 0, 1))
    G = np.array([[1.0, 0.5, 0.0], [0.0, 0.0, 0.0], [np.inf, 0.0, 0.0]])
    assert math.isnan(virtual_weight(G, [1, -1, 1], 0, 1))


@pytest.mark.parametrize("cplx", [False, True])
def test_virtual_weight_matches_isolated_application(cplx):
    # the drop is measured on an independent application with numpy products
    rng = np.random.default_rng(23)
    for _ in range(300):
        n = int(rng.integers(3, 9))
        G, J = random_problem(rng, n, cplx)
        p, q = sorted(int(i) for i in rng.choice(n, 2, replace=False))
        w = virtual_weight(G, J, p, q)
        drop, piv = isolated_step(G, J, p, q)
        if drop is None:
            assert w == -math.inf
            continue
        off2 = float(exact_off2(G))
        assert abs(drop - w) <= 16 * EPS * off2


@pytest.mark.parametrize("cplx", [False, True])
def test_virtual_weight_matches_library_application(cplx):
    rng = np.random.default_rng(29)
    for _ in range(300):
        n = int(rng.integers(3, 9))
        G, J = random_problem(rng, n, cplx)
        p, q = sorted(int(i) for i in rng.choice(n, 2, replace=False))
        w = virtual_weight(G, J, p, q)
        if not math.isfinite(w):
            continue
        r = hsvd2(np.array([[G[p, p], G[p, q]], [G[q, p], G[q, q]]]), [J[p], J[q]])
        st = IterationState.start(G, J, accumulate=False)
        apply_left2(st, p, q, r.U_hat_star)
        apply_right2(st, p, q, r.V_hat, r.sigma_pp, r.sigma_qq)
        mask = ~np.eye(n, dtype=bool)
        drop = exact_drop(G[mask], st.G[mask])
        assert abs(drop - w) <= 16 * EPS * float(exact_off2(G))


def test_all_weights_of_conforming_matrix_are_nan():
    st = IterationState.start(np.diag([3.0, 2.0, 1.0, 0.5, 4.0, 5.0]), [1, 1, 1, 1, -1, -1])
    w = compute_all_weights(st, build_pair_partition(st.J))
    assert len(w) == 15 and np.all(np.isnan(w["w"]))


def test_misordered_diagonal_weighs_zero():
    st = IterationState.start(np.diag([1.0, 2.0]), [1, 1])
    w = compute_all_weights(st, build_pair_partition(st.J))
    assert w["w"].tolist() == [0.0]


@pytest.mark.parametrize("backend", _backend.available())
def test_equal_off_diagonals_give_equal_weights(backend):
    G = np.ones((6, 6)) + 5 * np.eye(6)
    st = IterationState.start(G, np.ones(6))
    w = compute_all_weights(st, build_pair_partition(st.J), backend=backend)
    assert len(w) == 15 and np.all(w["w"] == 2.0)


def test_weights_carry_their_pairs():
    rng = np.random.default_rng(1)
    G, J = random_problem(rng, 7, False)
    st = IterationState.start(G, J)
    part = build_pair_partition(J)
    w = compute_all_weights(st, part)
    assert pairs_of(np.stack([w["p"], w["q"]], axis=1)) == pairs_of(part.pairs)
    for rec in w:
        v = virtual_weight(G, J, int(rec["p"]), int(rec["q"]))
        assert (math.isnan(v) and math.isnan(rec["w"])) or v == rec["w"]


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


@needs_core
@pytest.mark.parametrize("cplx", [False, True])
def test_weights_bitwise_equal_across_backends(cplx):
    rng = np.random.default_rng(31)
    for _ in range(30):
        n = int(rng.integers(2, 12))
        G, J = random_problem(rng, n, cplx)
        G[rng.random((n, n)) < 0.2] = 0
        st = IterationState.start(G, J)
        part = build_pair_partition(J)
        a = compute_all_weights(st, part, backend="python")["w"]
        b = compute_all_weights(st, part, backend="compiled", tasks=3)["w"]
        assert a.tobytes() == b.tobytes()


@needs_core
@pytest.mark.parametrize("cplx", [False, True])
def test_multistep_bitwise_equal_across_backends(cplx):
    rng = np.random.default_rng(37)
    for _ in range(30):
        n = int(rng.integers(2, 12))
        G, J = random_problem(rng, n, cplx)
        perm = rng.permutation(n)
        pivots = [tuple(sorted((int(perm[2 * k]), int(perm[2 * k + 1])))) for k in range(n // 2)]
        a = IterationState.start(G, J)
        b = IterationState.start(G, J)
        fa = apply_multistep(a, pivots, backend="python")
        fb = apply_multistep(b, pivots, backend="compiled", tasks=4)
        for x, y in ((a.G, b.G), (a.U_star, b.U_star), (a.V, b.V)):
            assert x.tobytes() == y.tobytes()
        assert fa == fb


def test_multistep_equals_sequential_single_steps():
    # disjoint steps commute: a multi-step equals the steps one by one
    rng = np.random.default_rng(41)
    G, J = random_problem(rng, 6, True)
    pivots = [(0, 3), (1, 5), (2, 4)]
    a = IterationState.start(G, J)
    apply_multistep(a, pivots)
    b = IterationState.start(G, J)
    for p, q in pivots:
        r = hsvd2(np.array([[G[p, p], G[p, q]], [G[q, p], G[q, q]]]), [J[p], J[q]])
        apply_left2(b, p, q, r.U_hat_star)
    for p, q in pivots:
        r = hsvd2(np.array([[G[p, p], G[p, q]], [G[q, p], G[q, q]]]), [J[p], J[q]])
        apply_right2(b, p, q, r.V_hat, r.sigma_pp, r.sigma_qq)
    assert a.G.tobytes() == b.G.tobytes()


def test_off_norm2_matches_exact():
    rng = np.random.default_rng(43)
    for cplx in (False, True):
        G, _ = random_problem(rng, 9, cplx)
        exact = exact_off2(G)
        assert abs(mpq(off_norm2(G)) - exact) <= 2 * EPS * exact


def test_state_validation():
    with pytest.raises(ValueError):
        IterationState.start(np.ones((2, 3)), [1, 1])
    with pytest.raises(ValueError):
        IterationState.start(np.ones((2, 2)), [1, 0])
    with pytest.raises(ValueError):
        IterationState.start(np.ones((2, 2)), [1, 1, 1])
