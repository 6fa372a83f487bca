"""Acceptance suite.

Each test below is one acceptance criterion; the conftest hook prints a
PASS/FAIL line per criterion at the end of the session.  Run it alone with

    python3 -m pytest -v tests/test_acceptance.py
"""

import time

import numpy as np

from bsdlab import catalog
from bsdlab import frames as fr
from bsdlab import subspaces as ss
from bsdlab import vmrt
from bsdlab.domains import DomainSpec
from bsdlab.modulimap import (
    ANTIHOLOMORPHIC,
    HOLOMORPHIC,
    f_flat_classify,
    generic_sharp,
    index_bound,
    index_sequence,
    index_slots,
    sharp_oracle,
)
from bsdlab.moduli import (
    SigmaChart,
    boundary_flag,
    bracket_search,
    pr_project,
    random_flag,
    random_sigma_v1,
    random_subspace_of,
    sigma_contains,
    sigma_point,
    v1_dim,
)
from bsdlab.rigidity import (
    admissible_sequences,
    decompose,
    detect_standard,
    has_unit_step,
    rank_gap_table,
)

DIAGONAL = "diagonal I(2,2)->I(3,3), h = 0.3*z11"


def test_criterion_1_diagonal_decomposition():
    f = catalog.get(DIAGONAL)
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    res = decompose(f, rng, npoints=200)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60, elapsed
    assert res.residuals["reassembly"] < 1e-7, res.residuals
    assert detect_standard(res.F1, rng).standard
    assert res.F2 is not None


def test_criterion_2_holomorphy_classification():
    rng = np.random.default_rng(102)
    for name, kind in (("identity I(3,3)", HOLOMORPHIC), ("transpose I(3,3)", ANTIHOLOMORPHIC)):
        c = f_flat_classify(catalog.get(name), 1, rng, pairs=50)
        assert c.kind == kind
        assert c.votes[kind] == 50, c.votes


def test_criterion_3_index_monotonicity():
    rng = np.random.default_rng(103)
    bad = []
    for name in catalog.proper_maps():
        f = catalog.get(name)
        seq = index_sequence(f, rng)
        if not seq.strictly_increasing() or max(seq.values) > index_bound(f.target):
            bad.append((name, seq.values))
    assert not bad, bad


def test_criterion_4_oracle_agreement():
    rng = np.random.default_rng(104)
    worst = 0.0
    for name in catalog.proper_maps():
        f = catalog.get(name)
        if f.source.rank > 3:
            continue
        for lv in index_slots(f.source):
            for _ in range(30):
                sigma, Z0, res = generic_sharp(f, lv, rng)
                gap = res.flag.distance(sharp_oracle(f, sigma, rng, base=Z0))
                worst = max(worst, gap)
    assert worst < 1e-8, worst


SIGMA_SPECS = [DomainSpec.typeI(3, 2), DomainSpec.typeI(3, 3), DomainSpec.typeII(4),
               DomainSpec.typeII(5), DomainSpec.typeIII(3)]


def test_criterion_5_sigma_cr_suite():
    rng = np.random.default_rng(105)
    # injectivity of the projection restricted to the lifted hypersurface
    for j in range(1000):
        spec = SIGMA_SPECS[j % len(SIGMA_SPECS)]
        r = int(rng.integers(0, spec.rank))
        V1 = random_sigma_v1(spec, r, rng)
        sigma = sigma_point(spec, r, V1)
        assert pr_project(sigma).close(V1)
        assert sigma_point(spec, r, pr_project(sigma)).V2.close(sigma.V2)

    # a subgrassmannian of V1(tau) lies in Sigma exactly when tau is a boundary flag
    pairs = 0
    while pairs < 500:
        spec = SIGMA_SPECS[pairs % len(SIGMA_SPECS)]
        if spec.rank < 2:
            continue
        s = int(rng.integers(0, spec.rank - 1))
        r = s + 1
        boundary = pairs % 2 == 0
        tau = boundary_flag(spec, s, rng)[0] if boundary else random_flag(spec, s, rng)
        W = random_subspace_of(tau.V1, v1_dim(spec, r), rng)
        assert ss.is_isotropic(tau.V1, spec.hermitian) == boundary
        assert sigma_contains(spec, r, W) == boundary
        pairs += 1

    # bracket generation on Sigma_1 of the rank-three Lagrangian Grassmannian
    chart = SigmaChart(3, 1)
    for _ in range(10):
        P = chart.random_point(rng)
        T = chart.real_tangent(P)
        for _ in range(100):
            v = T @ rng.standard_normal(T.shape[1])
            assert bracket_search(3, 1, P, v) > 1e-6


FRAME_CASES = [("su", 3, 2, 1), ("su", 4, 3, 2), ("sp", 3, 3, 2), ("sp", 2, 2, 1), ("so", 4, 4, 2)]


def test_criterion_6_frame_suite():
    rng = np.random.default_rng(106)
    for case in FRAME_CASES:
        g, p, q, _ = case
        for _ in range(200):
            F = fr.random_frame(*case, rng)
            A = fr.random_algebra_element(g, p, q, rng, norm=1.0)
            path = fr.FramePath.one_parameter(F.matrix, A)
            t = rng.uniform(-1, 1)
            assert max(fr.frame_residuals(path(t), *case).values()) < 1e-10
            assert fr.maurer_cartan(path, t, *case).symmetry_residual() < 1e-10
        for _ in range(5):
            F = fr.random_frame(*case, rng)
            A, B = (fr.random_algebra_element(g, p, q, rng, norm=1.0) for _ in range(2))
            fam = fr.FrameFamily.exponential(F.matrix, A, B)
            assert fr.structure_residual(fam, 0.3, -0.2, h=1e-4) < 1e-6
        for _ in range(10):
            F = fr.random_frame(*case, rng)
            A = fr.random_algebra_element(g, p, q, rng, norm=1.0)
            path = fr.FramePath.one_parameter(F.matrix, A)
            mc = fr.maurer_cartan(path, 0.2, *case)
            for kind in fr.CHANGE_KINDS:
                prm = fr.random_change_params(F, kind, rng)
                U = fr.change_matrix(F, kind, prm)
                moved = fr.FramePath(lambda s, U=U: U @ path(s), lambda s, U=U: U @ path.velocity(s))
                new = fr.maurer_cartan(moved, 0.2, *case)
                if kind == "RealVectors":
                    theta, phi = mc.theta, mc.phi
                else:
                    theta, phi = fr.predicted_forms(kind, prm, mc.theta, mc.phi)
                assert np.abs(new.theta - theta).max(initial=0) < 1e-10
                assert np.abs(new.phi - phi).max() < 1e-10


def integer_plane(rng, n, isotropic):
    Jm = ss.symplectic(n).matrix.real.astype(int)
    while True:
        u, w, x = (rng.integers(-3, 4, 2 * n) for _ in range(3))
        v = int(u @ Jm @ w) * x - int(u @ Jm @ x) * w if isotropic else w
        M = np.column_stack([u, v]).astype(np.int64)
        if np.linalg.matrix_rank(M) == 2 and (isotropic or u @ Jm @ v != 0):
            return M


def test_criterion_7_vmrt_suite():
    rng = np.random.default_rng(107)
    n, q = 3, 2
    kinds = (vmrt.OPEN, vmrt.SPECIAL, vmrt.NOT_IN)
    disagreements = 0
    for j in range(2100):
        kind = kinds[j % 3]
        t = vmrt.random_vmrt_tangent(n, q, rng, kind)
        if not vmrt.sgr_vmrt_member(n, q, t) == vmrt.oracle_classify(n, q, t) == kind:
            disagreements += 1
    assert disagreements == 0

    for j in range(500):
        kind = (vmrt.OPEN, vmrt.SPECIAL)[j % 2]
        t = vmrt.random_vmrt_tangent(n, q, rng, kind)
        assert vmrt.second_fundamental_surjective(n, q, t) == (kind == vmrt.OPEN)

    wit = vmrt.linear_section_witness(n, q)
    for j in range(100):
        iso = j % 2 == 0
        assert wit.kernel_contains(integer_plane(rng, n, iso)) == iso

    def relation(x, y, z):
        return y - y.T + x.T @ z - z.T @ x

    m, r = 4, 1
    for _ in range(50):
        x, z, S = (rng.standard_normal(sh) + 1j * rng.standard_normal(sh) for sh in ((r, m - r), (r, m - r), (m - r, m - r)))
        P = (x, S + S.T + (z.T @ x - x.T @ z) / 2, z)
        s, u = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        assert np.abs(relation(*vmrt.dilation_psi(m, r, s, P))).max() < 1e-12
        lhs = vmrt.dilation_psi(m, r, s, vmrt.dilation_psi(m, r, u, P))
        rhs = vmrt.dilation_psi(m, r, s * u, P)
        assert all(np.abs(a - b).max() < 1e-12 for a, b in zip(lhs, rhs))


def test_criterion_8_rank_gap_arithmetic():
    t0 = time.perf_counter()
    table = rank_gap_table(max_q=6)
    assert time.perf_counter() - t0 < 5
    covered = {"I", "III"}
    for row in table:
        src, q = row["source"]["kind"], row["source"]["rank"]
        tgt, qp = row["target"]["kind"], row["target"]["rank"]
        seqs = list(admissible_sequences(src, q, tgt, qp))
        assert row["sequences"] == len(seqs)
        assert row["without_unit_step"] == sum(not has_unit_step(s, tgt) for s in seqs)
        assert all(isinstance(v, int) for s in seqs for v in s)
        if tgt not in covered:
            continue
        if 2 <= qp < 2 * q - 1:
            assert row["forced_unit_step"], row
        if src in covered and qp == 2 * q - 1:
            assert row["whitney_escape"] and not row["forced_unit_step"], row
        if src == "I" and tgt == "III" and qp < 2 * q - 1:
            assert row["verdict"] == "nonexistent", row
        if src == "II" and qp < 2 * q - 1:
            assert row["verdict"] == "nonexistent", row
