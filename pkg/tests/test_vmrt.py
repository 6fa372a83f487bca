from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsdlab import subspaces as ss
from bsdlab import vmrt
from bsdlab.errors import BadSeed, DimensionTooLarge, NotOnVMRT, ShapeMismatch, ZeroParameter


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def minors_vanish(M, tol=1e-9):
    """Rank <= 1 oracle: every 2x2 minor is zero."""
    M = M / np.abs(M).max()
    for i, j in combinations(range(M.shape[0]), 2):
        for k, l in combinations(range(M.shape[1]), 2):
            if abs(M[i, k] * M[j, l] - M[i, l] * M[j, k]) > tol:
                return False
    return True


# ---------------------------------------------------------------- rank one


def test_rank_one_examples():
    E = np.zeros((2, 3))
    E[0, 0] = 1
    assert vmrt.is_rank_one_tangent("Gr", E)
    assert not vmrt.is_rank_one_tangent("Gr", np.eye(2))
    a, b = np.array([1.0, 2, 0]), np.array([0, 1.0, 1])
    assert vmrt.is_rank_one_tangent("OGr", np.outer(a, b) - np.outer(b, a))
    assert not vmrt.is_rank_one_tangent("OGr", np.kron(np.eye(2), [[0, 1], [-1, 0]]))
    with pytest.raises(ShapeMismatch):
        vmrt.is_rank_one_tangent("LGr", np.array([[0, 1], [0, 0]]))
    with pytest.raises(ShapeMismatch):
        vmrt.is_rank_one_tangent("LGr", np.ones((2, 3)))


def test_symmetric_rank_one_matches_minor_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v, w = cplx(rng, 4), cplx(rng, 4)
        one = np.outer(v, v)
        two = one + np.outer(w, w)
        assert vmrt.is_rank_one_tangent("LGr", one) == minors_vanish(one) is True
        assert vmrt.is_rank_one_tangent("LGr", two) == minors_vanish(two) is False


# ---------------------------------------------------------------- SGr classifier


def test_classifier_examples():
    n, q = 3, 2
    rng = np.random.default_rng(1)
    lam, mu = cplx(rng, q), cplx(rng, 2 * (n - q))
    t = vmrt.TangentVector.from_split(n, q, *vmrt.vmrt_point(lam, mu, 1.0))
    assert vmrt.sgr_vmrt_member(n, q, t) == vmrt.OPEN
    t = vmrt.TangentVector.from_split(n, q, np.outer(mu, lam), np.zeros((q, q)))
    assert vmrt.sgr_vmrt_member(n, q, t) == vmrt.SPECIAL
    lp = cplx(rng, q)
    t = vmrt.TangentVector.from_split(n, q, np.outer(mu, lam), np.outer(lp, lp))
    assert vmrt.sgr_vmrt_member(n, q, t) == vmrt.NOT_IN
    with pytest.raises(ShapeMismatch):
        vmrt.TangentVector.from_split(n, q, np.zeros((3, 2)), np.zeros((2, 2)))


@pytest.mark.parametrize("n", [3, 4])
def test_classifier_agrees_with_curve_oracle(n):
    rng = np.random.default_rng(2)
    kinds = (vmrt.OPEN, vmrt.SPECIAL, vmrt.NOT_IN)
    for j in range(300):
        kind = kinds[j % 3]
        t = vmrt.random_vmrt_tangent(n, 2, rng, kind)
        got = vmrt.sgr_vmrt_member(n, 2, t)
        assert got == vmrt.oracle_classify(n, 2, t) == kind


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([vmrt.OPEN, vmrt.SPECIAL]))
def test_classification_is_projective(seed, kind):
    rng = np.random.default_rng(seed)
    t = vmrt.random_vmrt_tangent(3, 2, rng, kind)
    c = complex(*rng.uniform(0.1, 10, 2))
    scaled = vmrt.TangentVector(t.basepoint, c * t.hom)
    assert vmrt.sgr_vmrt_member(3, 2, scaled) == kind


@pytest.mark.parametrize("n", [3, 4])
def test_second_fundamental_form_surjective_iff_open(n):
    rng = np.random.default_rng(3)
    for j in range(100):
        kind = (vmrt.OPEN, vmrt.SPECIAL)[j % 2]
        t = vmrt.random_vmrt_tangent(n, 2, rng, kind)
        assert vmrt.second_fundamental_surjective(n, 2, t) == (kind == vmrt.OPEN)
    with pytest.raises(NotOnVMRT):
        vmrt.second_fundamental_surjective(n, 2, vmrt.random_vmrt_tangent(n, 2, rng, vmrt.NOT_IN))


def test_condition_T_on_open_orbit():
    rng = np.random.default_rng(4)
    for n in (3, 4):
        for _ in range(20):
            t = vmrt.random_vmrt_tangent(n, 2, rng, vmrt.OPEN)
            res = vmrt.condition_T(n, 2, t)
            assert res.holds and res.dim_lhs == res.dim_rhs == 2 * n - 2


# ---------------------------------------------------------------- minimal curves


def test_minimal_curve_contains_A_and_lies_in_B():
    rng = np.random.default_rng(5)
    n, q = 3, 2
    J = ss.symplectic(n)
    V = vmrt.reference_point(n, q)
    for special in (True, False):
        for _ in range(20):
            A = ss.span(V.ortho @ cplx(rng, q))
            if special:
                # B isotropic: extend V by a vector of its J-annihilator
                extra = ss.intersect(ss.perp(V, J), V.complement())
            else:
                extra = ss.intersect(ss.full(2 * n), V.complement())
            B = ss.sum(V, ss.span(extra.ortho @ cplx(rng, extra.dim)))
            curve = vmrt.minimal_curve(vmrt.MinimalCurveSeed(A, V, B), n=n)
            assert curve.special == special == ss.is_isotropic(B, J)
            for t in (-1.0, 0.4, 2.5):
                P = curve(t)
                assert P.contains(A) and B.contains(P)
            E = np.eye(2 * n)
            d = curve.tangent(E[:, :q], E[:, q:])
            assert vmrt.is_rank_one_tangent("Gr", d)
            if special:
                tv = vmrt.TangentVector(V, d)
                assert vmrt.sgr_vmrt_member(n, q, tv) == vmrt.SPECIAL


def test_bad_seed():
    V = vmrt.reference_point(3, 2)
    with pytest.raises(BadSeed):
        vmrt.MinimalCurveSeed(ss.coordinate(6, [3]), V, ss.coordinate(6, [0, 1, 2]))
    with pytest.raises(BadSeed):
        vmrt.MinimalCurveSeed(ss.zero(6), V, ss.coordinate(6, [0, 1, 2]))


# ---------------------------------------------------------------- linear section witness


def integer_plane(rng, n, isotropic):
    Jm = ss.symplectic(n).matrix.real.astype(int)
    while True:
        u, w, x = (rng.integers(-3, 4, 2 * n) for _ in range(3))
        if isotropic:
            v = int(u @ Jm @ w) * x - int(u @ Jm @ x) * w
        else:
            v = w
        M = np.column_stack([u, v]).astype(np.int64)
        if np.linalg.matrix_rank(M) == 2 and (isotropic or u @ Jm @ v != 0):
            return M


def test_witness_q2_is_the_symplectic_pairing():
    wit = vmrt.linear_section_witness(3, 2)
    assert wit.matrix.shape == (1, 15)
    rng = np.random.default_rng(6)
    Jm = ss.symplectic(3).matrix.real.astype(int)
    for _ in range(20):
        M = integer_plane(rng, 3, False)
        assert wit(M)[0] == -(M[:, 0] @ Jm @ M[:, 1]) or wit(M)[0] == M[:, 0] @ Jm @ M[:, 1]


def test_witness_kernel_is_exactly_the_isotropic_planes():
    wit = vmrt.linear_section_witness(3, 2)
    rng = np.random.default_rng(7)
    for _ in range(50):
        assert wit.kernel_contains(integer_plane(rng, 3, True))
        assert not wit.kernel_contains(integer_plane(rng, 3, False))


def test_witness_for_three_planes():
    wit = vmrt.linear_section_witness(3, 3)
    J = ss.symplectic(3)
    assert wit.kernel_contains(ss.coordinate(6, [0, 1, 2]))
    assert not wit.kernel_contains(ss.coordinate(6, [0, 1, 3]))
    rng = np.random.default_rng(8)
    lag = vmrt.reference_point(3, 3)
    for _ in range(10):
        S = cplx(rng, 3, 3)
        g = np.block([[np.eye(3), np.zeros((3, 3))], [S + S.T, np.eye(3)]])
        L = ss.canonicalize(g @ lag.ortho)
        assert ss.is_isotropic(L, J)
        assert wit.kernel_contains(L, tol=1e-10)
    with pytest.raises(DimensionTooLarge):
        vmrt.linear_section_witness(20, 6)


# ---------------------------------------------------------------- dilation family


def sgr_relation(x, y, z):
    return y - y.T + x.T @ z - z.T @ x


def random_sgr_chart_point(rng, n, r):
    k = n - r
    x, z, S = cplx(rng, r, k), cplx(rng, r, k), cplx(rng, k, k)
    y = S + S.T + (z.T @ x - x.T @ z) / 2
    return x, y, z


def test_dilation_preserves_sgr_and_group_law():
    rng = np.random.default_rng(9)
    n, r = 4, 1
    assert all(np.allclose(a, b) for a, b in zip(vmrt.dilation_psi(n, r, 1.0, (np.zeros((1, 3)), np.eye(3), np.zeros((1, 3)))),
                                                   (np.zeros((1, 3)), np.eye(3), np.zeros((1, 3)))))
    for _ in range(50):
        P = random_sgr_chart_point(rng, n, r)
        assert np.abs(sgr_relation(*P)).max() < 1e-12
        s, t = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        Ps = vmrt.dilation_psi(n, r, s, P)
        assert np.abs(sgr_relation(*Ps)).max() < 1e-12
        lhs = vmrt.dilation_psi(n, r, s, vmrt.dilation_psi(n, r, t, P))
        rhs = vmrt.dilation_psi(n, r, s * t, P)
        assert all(np.abs(a - b).max() < 1e-12 for a, b in zip(lhs, rhs))
        assert all(np.allclose(a, b) for a, b in zip(vmrt.dilation_psi(n, r, 1, P), P))
        # off the variety the defect scales by s^2
        Q = (P[0], P[1] + np.triu(np.ones((n - r, n - r)), 1), P[2])
        before = sgr_relation(*Q)
        after = sgr_relation(*vmrt.dilation_psi(n, r, s, Q))
        assert np.abs(after - s * s * before).max() < 1e-12
    with pytest.raises(ZeroParameter):
        vmrt.dilation_psi(n, r, 0, P)
