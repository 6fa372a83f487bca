import numpy as np
import pytest

from bsdlab import subspaces as ss
from bsdlab.domains import (
    BOUNDARY,
    INTERIOR,
    OUTSIDE,
    DomainSpec,
    boundary_stratum,
    characteristic_slice,
    chart_of,
    contains,
    embed_point,
    mobius,
    parse_spec,
    random_automorphism,
    random_boundary,
    random_interior,
    random_unitary,
)
from bsdlab.errors import (
    InputError,
    NotAnIsometry,
    NotOnBoundary,
    ShapeMismatch,
    SymmetryViolation,
)
from bsdlab.moduli import make_flag

SPECS = [DomainSpec.typeI(3, 2), DomainSpec.typeI(2, 2), DomainSpec.typeII(4),
         DomainSpec.typeII(5), DomainSpec.typeIII(3)]


def stratum_oracle(spec, Z):
    """Rank of the boundary component from the null part of the plane."""
    E = embed_point(spec, Z)
    null = ss.intersect(E, ss.perp(E, spec.hermitian, tol=1e-7), tol=1e-7)
    units = null.dim // 2 if spec.kind == "II" else null.dim
    return spec.rank - units


def test_contains_basic_cases():
    s = DomainSpec.typeI(2, 2)
    assert contains(s, np.zeros((2, 2))) == INTERIOR
    assert contains(s, np.diag([1.0, 0])) == BOUNDARY
    assert contains(s, np.diag([2.0, 0])) == OUTSIDE


def test_input_validation():
    with pytest.raises(ShapeMismatch):
        contains(DomainSpec.typeI(3, 2), np.zeros((2, 2)))
    with pytest.raises(SymmetryViolation):
        contains(DomainSpec.typeIII(2), np.array([[0, 1], [0, 0]]))
    with pytest.raises(SymmetryViolation):
        contains(DomainSpec.typeII(2), np.eye(2))
    with pytest.raises(InputError):
        DomainSpec.typeI(2, 3)
    with pytest.raises(InputError):
        parse_spec("IV:3")


def test_parse_spec():
    assert parse_spec("I:3,2") == DomainSpec.typeI(3, 2)
    assert parse_spec("II:5").rank == 2
    assert parse_spec("III:3").rank == 3


def test_boundary_strata_examples():
    s = DomainSpec.typeI(2, 2)
    assert boundary_stratum(s, np.diag([1.0, 0.5])) == 1 == stratum_oracle(s, np.diag([1.0, 0.5]))
    assert boundary_stratum(s, np.eye(2)) == 0 == stratum_oracle(s, np.eye(2))
    A = np.array([[0, 1.0], [-1.0, 0]])
    assert boundary_stratum(DomainSpec.typeII(2), A) == 0
    with pytest.raises(NotOnBoundary):
        boundary_stratum(s, np.zeros((2, 2)))


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_boundary_stratum_matches_null_part_oracle(spec):
    rng = np.random.default_rng(5)
    for r in range(spec.rank):
        for _ in range(10):
            Z = random_boundary(spec, rng, r)
            assert boundary_stratum(spec, Z) == r == stratum_oracle(spec, Z)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_embed_point_positivity_and_isotropy(spec):
    rng = np.random.default_rng(6)
    k = spec.plane_dim
    assert embed_point(spec, np.zeros(spec.shape)).close(ss.coordinate(spec.ambient, range(k)))
    for _ in range(100):
        Z = random_interior(spec, rng)
        E = embed_point(spec, Z)
        assert ss.restrict_signature(E, spec.hermitian) == (k, 0, 0)
        if spec.bilinear is not None:
            assert ss.is_isotropic(E, spec.bilinear)
        assert np.allclose(chart_of(spec, E), Z)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_mobius_equivariance_and_invariance(spec):
    rng = np.random.default_rng(7)
    for _ in range(100):
        g = random_automorphism(spec, rng)
        Z = random_interior(spec, rng)
        W = mobius(spec, g, Z)
        assert contains(spec, W) == INTERIOR
        gE = ss.canonicalize(g @ embed_point(spec, Z).ortho)
        assert embed_point(spec, W).close(gE)
    for _ in range(500):
        g = random_automorphism(spec, rng)
        assert contains(spec, mobius(spec, g, random_interior(spec, rng))) == INTERIOR
    for r in range(spec.rank):
        Zb = random_boundary(spec, rng, r)
        g = random_automorphism(spec, rng)
        assert boundary_stratum(spec, mobius(spec, g, Zb)) == r


def test_mobius_identity_and_isotropy_action():
    s = DomainSpec.typeI(3, 2)
    rng = np.random.default_rng(8)
    Z = random_interior(s, rng)
    assert np.allclose(mobius(s, np.eye(5), Z), Z)
    U, V = random_unitary(2, rng), random_unitary(3, rng)
    g = np.block([[U, np.zeros((2, 3))], [np.zeros((3, 2)), V]])
    assert np.allclose(mobius(s, g, Z), V @ Z @ np.linalg.inv(U))
    with pytest.raises(NotAnIsometry):
        mobius(s, 2 * np.eye(5), Z)


def test_characteristic_slice():
    s = DomainSpec.typeI(2, 2)
    full = make_flag(s, 2, ss.zero(4), ss.full(4))
    pred = characteristic_slice(s, full)
    rng = np.random.default_rng(9)
    for _ in range(20):
        Z = random_interior(s, rng, radius=1.2)
        assert pred(Z) == (contains(s, Z) == INTERIOR)
    # V1 = <e1 + e3/2> pins z11 = 1/2, z21 = 0; V2 = {x4 = 0} forces z22 = 0
    V1 = ss.span(np.array([1, 0, 0.5, 0]))
    V2 = ss.coordinate(4, [0, 1, 2])
    pred = characteristic_slice(s, make_flag(s, 1, V1, V2))
    w = 0.3 + 0.2j
    assert pred(np.array([[0.5, w], [0, 0]]))
    assert not pred(np.array([[0.4, w], [0, 0]]))
    assert not pred(np.array([[0.5, w], [0, 0.1]]))
