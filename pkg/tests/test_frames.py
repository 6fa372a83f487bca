import numpy as np
import pytest
from scipy.linalg import expm

from bsdlab import frames as fr
from bsdlab.errors import Degenerate, FrameDriftTooLarge, InputError, InvalidParams

CASES = [("su", 3, 2, 1), ("su", 4, 3, 2), ("su", 2, 2, 2), ("sp", 3, 3, 2), ("sp", 2, 2, 1), ("so", 4, 4, 2)]


def ids(c):
    return "{}-{}-{}-{}".format(*c)


def shifted(path, U):
    """The path t -> U(t) path(t) for a constant U."""
    return fr.FramePath(lambda t: U @ path(t), lambda t: U @ path.velocity(t))


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_reference_frame_satisfies_relations(case):
    F = fr.reference_frame(*case)
    assert max(fr.frame_residuals(F, *case).values()) < 1e-12


def test_reference_frame_has_null_z_block():
    F = fr.reference_frame("su", 3, 2, 1)
    eps = np.diag([1, 1, -1, -1, -1])
    z = F[0]
    assert abs(z @ eps @ z.conj()) < 1e-14


def test_invalid_group_parameters():
    with pytest.raises(InputError):
        fr.reference_frame("sp", 3, 2, 1)
    with pytest.raises(InputError):
        fr.reference_frame("su", 3, 2, 3)
    with pytest.raises(InputError):
        fr.reference_frame("so", 4, 4, 1)


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_make_frame_restores_relations(case):
    rng = np.random.default_rng(0)
    F0 = fr.random_frame(*case, rng).matrix
    m = F0.shape[0]
    guess = F0 + 1e-2 * (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))
    assert max(fr.frame_residuals(guess, *case).values()) > 1e-4
    frame = fr.make_frame(*case, guess)
    assert frame.residual() < 1e-12
    assert np.abs(frame.matrix - F0).max() < 0.1


def test_make_frame_rejects_bad_guesses():
    # a single vector is always null for the symplectic form, so use ell = 2
    bad = fr.reference_frame("sp", 2, 2, 2).copy()
    bad[0], bad[1] = [1, 0, 0, 0], [0, 0, 1, 0]  # J(e1, e3) = 1
    with pytest.raises(Degenerate):
        fr.make_frame("sp", 2, 2, 2, bad)
    with pytest.raises(Degenerate):
        fr.make_frame("su", 3, 2, 1, np.zeros((5, 5)))


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_maurer_cartan_symmetries(case):
    rng = np.random.default_rng(1)
    g, p, q, ell = case
    for _ in range(100):
        F = fr.random_frame(*case, rng)
        A = fr.random_algebra_element(g, p, q, rng, norm=1.0)
        path = fr.FramePath.one_parameter(F.matrix, A)
        t = rng.uniform(-1, 1)
        assert max(fr.frame_residuals(path(t), *case).values()) < 1e-10
        mc = fr.maurer_cartan(path, t, *case)
        assert mc.symmetry_residual() < 1e-10
        # along a one-parameter subgroup pi is the conjugated generator
        assert np.allclose(mc.pi, F.matrix @ A @ np.linalg.inv(F.matrix), atol=1e-10)


def test_finite_difference_path_agrees_with_exact_velocity():
    rng = np.random.default_rng(2)
    F = fr.random_frame("su", 3, 2, 1, rng)
    A = fr.random_algebra_element("su", 3, 2, rng, norm=1.0)
    exact = fr.FramePath.one_parameter(F.matrix, A)
    approx = fr.FramePath(exact.frame_fn)
    a = fr.maurer_cartan(exact, 0.1, "su", 3, 2, 1).pi
    b = fr.maurer_cartan(approx, 0.1, "su", 3, 2, 1).pi
    assert np.abs(a - b).max() < 1e-9


def test_drifting_path_is_rejected():
    F = fr.reference_frame("su", 3, 2, 1)
    path = fr.FramePath(lambda t: (1 + t) * F)
    with pytest.raises(FrameDriftTooLarge):
        fr.maurer_cartan(path, 0.5, "su", 3, 2, 1)


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_structure_equation(case):
    rng = np.random.default_rng(3)
    g, p, q, _ = case
    for _ in range(5):
        F = fr.random_frame(*case, rng)
        A, B = (fr.random_algebra_element(g, p, q, rng, norm=1.0) for _ in range(2))
        fam = fr.FrameFamily.exponential(F.matrix, A, B)
        assert fr.structure_residual(fam, 0.3, -0.2, h=1e-4) < 1e-6
        # a finite-difference family gives the same answer within truncation error
        assert fr.structure_residual(fr.FrameFamily(fam.frame_fn), 0.3, -0.2, h=1e-4) < 1e-5


def test_identity_dilation_changes_nothing():
    F = fr.random_frame("su", 4, 3, 2, np.random.default_rng(4))
    G = fr.frame_change(F, "Dilation", {"lambda": np.ones(2)})
    assert np.allclose(G.matrix, F.matrix)


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_change_laws(case):
    rng = np.random.default_rng(5)
    g, p, q, ell = case
    for _ in range(20):
        F = fr.random_frame(*case, rng)
        A = fr.random_algebra_element(g, p, q, rng, norm=1.0)
        path = fr.FramePath.one_parameter(F.matrix, A)
        mc = fr.maurer_cartan(path, 0.2, *case)
        for kind in fr.CHANGE_KINDS:
            prm = fr.random_change_params(F, kind, rng)
            assert fr.frame_change(F, kind, prm).residual() < 1e-10
            U = fr.change_matrix(F, kind, prm)
            new = fr.maurer_cartan(shifted(path, U), 0.2, *case)
            if kind == "RealVectors":
                theta, phi = mc.theta, mc.phi
            else:
                theta, phi = fr.predicted_forms(kind, prm, mc.theta, mc.phi)
            assert np.abs(new.theta - theta).max(initial=0) < 1e-10
            assert np.abs(new.phi - phi).max() < 1e-10
            if kind in ("Rotation", "Final"):
                assert np.abs(new.phi - mc.phi).max() < 1e-12


def test_dilation_scales_phi_by_inverse_products():
    rng = np.random.default_rng(6)
    F = fr.random_frame("su", 4, 3, 2, rng)
    A = fr.random_algebra_element("su", 4, 3, rng, norm=1.0)
    path = fr.FramePath.one_parameter(F.matrix, A)
    lam = np.array([0.5, 3.0])
    U = fr.change_matrix(F, "Dilation", {"lambda": lam})
    phi0 = fr.maurer_cartan(path, 0, "su", 4, 3, 2).phi
    phi1 = fr.maurer_cartan(shifted(path, U), 0, "su", 4, 3, 2).phi
    for a in range(2):
        for b in range(2):
            assert abs(phi1[a, b] - phi0[a, b] / (lam[a] * lam[b])) < 1e-12


def test_composition_of_changes_and_moving_gauge():
    rng = np.random.default_rng(7)
    case = ("su", 3, 2, 1)
    F = fr.random_frame(*case, rng)
    kinds = ("Position", "Final")
    U1, U2 = (fr.change_matrix(F, k, fr.random_change_params(F, k, rng)) for k in kinds)
    G = fr.SigmaFrame(U2 @ U1 @ F.matrix, *case)
    assert G.residual() < 1e-10
    # a moving change U(t) = exp(tN) transforms pi by dU U^-1 + U pi U^-1
    N = fr.random_algebra_element("su", 3, 2, rng, ell=1, pattern=((1, 0), (2, 0), (2, 1)))
    A = fr.random_algebra_element("su", 3, 2, rng, norm=1.0)
    path = fr.FramePath.one_parameter(F.matrix, A)
    moved = fr.FramePath(lambda t: expm(t * N) @ path(t))
    t = 0.4
    Ut = expm(t * N)
    pi = fr.maurer_cartan(path, t, *case).pi
    got = fr.maurer_cartan(moved, t, *case).pi
    want = N + Ut @ pi @ np.linalg.inv(Ut)
    assert np.abs(got - want).max() < 1e-9


def test_invalid_change_parameters():
    F = fr.random_frame("su", 4, 3, 2, np.random.default_rng(8))
    with pytest.raises(InvalidParams):
        fr.frame_change(F, "Dilation", {"lambda": np.array([1.0, -1.0])})
    with pytest.raises(InvalidParams):
        fr.frame_change(F, "Position", {"W": 2 * np.eye(2), "V": np.eye(2)})
    with pytest.raises(InvalidParams):
        fr.frame_change(F, "RealVectors", {"H": np.array([[0, 1], [0, 0]])})
    with pytest.raises(InvalidParams):
        fr.frame_change(F, "Rotation", {"U": 2 * np.eye(3)})
    prm = fr.random_change_params(F, "Final", np.random.default_rng(9))
    prm["C"] = prm["C"] + 0.1
    with pytest.raises(InvalidParams):
        fr.frame_change(F, "Final", prm)
