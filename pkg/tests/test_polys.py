import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsdlab import catalog
from bsdlab.domains import DomainSpec, random_interior
from bsdlab.errors import InputError, ShapeMismatch, SymmetryViolation
from bsdlab.polys import Poly, PolyMatrixMap, fit_polynomial, poly_zeros, source_variables


def random_poly_map(rng, source, target, degree=3, terms=4):
    nv = source.nvars
    out = poly_zeros(nv, target.shape)
    for idx in np.ndindex(*target.shape):
        p = Poly(nv)
        for _ in range(terms):
            e = [0] * nv
            for _ in range(int(rng.integers(0, degree + 1))):
                e[int(rng.integers(nv))] += 1
            p = p + Poly(nv, {tuple(e): int(rng.integers(-3, 4))})
        out[idx] = p
    return out, PolyMatrixMap.from_entries(source, target, out)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_taylor_coefficients_match_substitution(seed):
    # oracle: substitute x = x0 + y with Poly arithmetic; integer data keeps it exact
    rng = np.random.default_rng(seed)
    s, t = DomainSpec.typeI(2, 2), DomainSpec.typeI(2, 1)
    entries, f = random_poly_map(rng, s, t)
    x0 = rng.integers(-2, 3, s.nvars)
    shifted = [Poly.const(s.nvars, int(a)) + Poly.var(s.nvars, k) for k, a in enumerate(x0)]
    betas, coeffs = f.taylor(x0)
    where = {b: i for i, b in enumerate(betas)}
    for idx in np.ndindex(*t.shape):
        sub = Poly.const(s.nvars, 0)
        for e, c in entries[idx].terms.items():
            mono = Poly.const(s.nvars, c)
            for k, a in enumerate(e):
                mono = mono * shifted[k] ** a
            sub = sub + mono
        for b, c in sub.terms.items():
            assert coeffs[where[b]][idx] == c
        nonzero = {b for b in betas if coeffs[where[b]][idx] != 0}
        assert nonzero == set(sub.terms)


def test_derivative_tensors_match_poly_derivatives():
    rng = np.random.default_rng(1)
    s, t = DomainSpec.typeI(2, 2), DomainSpec.typeI(2, 2)
    entries, f = random_poly_map(rng, s, t)
    x0 = rng.standard_normal(s.nvars) + 1j * rng.standard_normal(s.nvars)
    D1, D2 = f.derivative_tensors(x0, 2)
    for idx in np.ndindex(*t.shape):
        p = entries[idx]
        for a in range(s.nvars):
            assert abs(D1[(a,) + idx] - p.derivative(a)(x0)) < 1e-9
            for b in range(s.nvars):
                assert abs(D2[(a, b) + idx] - p.derivative(a).derivative(b)(x0)) < 1e-9


def test_evaluation_matches_entries():
    rng = np.random.default_rng(2)
    s = DomainSpec.typeI(3, 2)
    entries, f = random_poly_map(rng, s, DomainSpec.typeI(3, 3))
    Z = random_interior(s, rng)
    x = s.coords(Z)
    W = f(Z)
    for idx in np.ndindex(*W.shape):
        assert abs(W[idx] - entries[idx](x)) < 1e-12


def test_symmetric_source_variables():
    s = DomainSpec.typeIII(3)
    Z = source_variables(s)
    assert Z[0, 1] is not None and Z[0, 1].terms == Z[1, 0].terms
    a = DomainSpec.typeII(4)
    A = source_variables(a)
    assert A[0, 1].terms == (-A[1, 0]).terms and not A[0, 0].terms


def test_target_symmetry_is_enforced():
    s = DomainSpec.typeI(2, 2)
    bad = source_variables(s)
    with pytest.raises(SymmetryViolation):
        PolyMatrixMap.from_entries(s, DomainSpec.typeIII(2), bad)
    with pytest.raises(ShapeMismatch):
        PolyMatrixMap.from_entries(s, DomainSpec.typeI(3, 3), bad)


@pytest.mark.parametrize("name", catalog.proper_maps() + ["corrupted I(2,2)"])
def test_json_round_trip(name, tmp_path):
    f = catalog.get(name)
    data = json.loads(json.dumps(f.to_json()))
    g = PolyMatrixMap.from_json(data)
    rng = np.random.default_rng(3)
    for _ in range(5):
        Z = random_interior(f.source, rng)
        assert np.allclose(f(Z), g(Z), atol=1e-14)
    path = tmp_path / "map.json"
    path.write_text(json.dumps(data))
    assert PolyMatrixMap.load(path).degree == f.degree


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("source"),
    lambda d: d["entries"][0].update(row=9),
    lambda d: d["entries"][0]["terms"][0].update(coeffs=[1, 0]),
    lambda d: d["entries"][0]["terms"][0].update(re="x"),
    lambda d: d.update(degree=0),
    lambda d: d.update(target={"kind": "IV", "n": 2}),
])
def test_malformed_map_json(mutate):
    data = catalog.get("diagonal I(2,2)->I(3,3), h = 0.3*z11").to_json()
    mutate(data)
    with pytest.raises(InputError):
        PolyMatrixMap.from_json(data)


def test_unreadable_map_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(InputError):
        PolyMatrixMap.load(bad)
    with pytest.raises(InputError):
        PolyMatrixMap.load(tmp_path / "missing.json")


def test_fit_polynomial_recovers_a_quadratic():
    rng = np.random.default_rng(4)
    f = catalog.get("diagonal I(2,2)->I(3,3), h = 0.5*z12*z21")
    Zs = [random_interior(f.source, rng) for _ in range(40)]
    g, resid = fit_polynomial(f.source, f.target, [f.source.coords(Z) for Z in Zs], [f(Z) for Z in Zs], degree=2)
    assert resid < 1e-12
    Z = random_interior(f.source, rng)
    assert np.allclose(g(Z), f(Z))
    _, resid1 = fit_polynomial(f.source, f.target, [f.source.coords(Z) for Z in Zs], [f(Z) for Z in Zs], degree=1)
    assert resid1 > 1e-3
