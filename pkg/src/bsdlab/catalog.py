"""Named polynomial maps used by the report pipeline and the test suite.

Every entry is built on demand.  ``proper`` marks the maps that are proper
holomorphic maps between the stated domains; the corrupted map is kept as a
negative control.  A reserved slot for the generalized Whitney map has no
builder, since no closed formula is available to us.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import DomainSpec, random_unitary
from .errors import InputError
from .polys import Poly, PolyMatrixMap, poly_zeros, source_variables


@dataclass(frozen=True)
class Entry:
    name: str
    description: str
    builder: object
    proper: bool = True
    tags: tuple = ()

    def build(self):
        if self.builder is None:
            raise InputError(f"catalog slot {self.name!r} is reserved and has no builder")
        f = self.builder()
        f.name = self.name
        f.claimed_proper = self.proper
        return f


def identity(spec):
    return PolyMatrixMap.from_entries(spec, spec, source_variables(spec), f"identity {spec.label()}")


def transpose(spec):
    if spec.kind != "I" or spec.p != spec.q:
        raise InputError("transpose is a self-map only for square type I domains")
    return PolyMatrixMap.from_entries(spec, spec, source_variables(spec).T, f"transpose {spec.label()}")


def block(source, target):
    """Z -> [[Z, 0], [0, 0]] (type I)."""
    Z = source_variables(source)
    out = poly_zeros(source.nvars, target.shape)
    out[: source.p, : source.q] = Z
    return PolyMatrixMap.from_entries(source, target, out, "block")


def diagonal(h_coeff, h_exponent=None):
    """Z -> diag(Z, h(Z)) from I(2,2) to I(3,3), with h = c * monomial."""
    s, t = DomainSpec.typeI(2, 2), DomainSpec.typeI(3, 3)
    Z = source_variables(s)
    out = poly_zeros(s.nvars, t.shape)
    out[:2, :2] = Z
    e = h_exponent or (1, 0, 0, 0)
    out[2, 2] = Poly(s.nvars, {tuple(e): h_coeff}) if h_coeff else Poly(s.nvars)
    return PolyMatrixMap.from_entries(s, t, out, "diagonal")


def inclusion(source, target):
    """Type II/III domain inside the square type I domain of the same size."""
    if target.kind != "I" or target.p != source.n or target.q != source.n:
        raise InputError("inclusion target must be I(n,n)")
    return PolyMatrixMap.from_entries(source, target, source_variables(source), "inclusion")


def twisted(f, seed=7):
    """m' o f o m with linear automorphisms m, m' from the isotropy groups.

    For Z -> U Z V^* (U, V unitary) the composition stays polynomial.
    """
    rng = np.random.default_rng(seed)
    s, t = f.source, f.target
    U = random_unitary(s.shape[0], rng)
    V = random_unitary(s.shape[1], rng)
    Up = random_unitary(t.shape[0], rng)
    Vp = random_unitary(t.shape[1], rng)
    Z = source_variables(s)
    inner = U @ Z @ V.conj().T
    x = [inner[i, j] for i, j in s.variables()]
    # substitute the new coordinates into f, monomial by monomial
    out = poly_zeros(s.nvars, t.shape)
    for e, C in zip(f.exps, f.coef):
        mono = Poly.const(s.nvars, 1.0)
        for k, a in enumerate(e):
            mono = mono * (x[k] ** int(a))
        out = out + C * mono
    out = Up @ out @ Vp.conj().T
    return PolyMatrixMap.from_entries(s, t, out, "twisted")


def corrupted(spec, eps=0.3):
    """Identity plus a quadratic term: not proper (negative control)."""
    Z = source_variables(spec)
    out = Z + eps * (Z @ Z)
    return PolyMatrixMap.from_entries(spec, spec, out, "corrupted")


I22, I32, I33 = DomainSpec.typeI(2, 2), DomainSpec.typeI(3, 2), DomainSpec.typeI(3, 3)

_ENTRIES = [
    Entry("identity I(3,2)", "identity map of I(3,2)", lambda: identity(I32), tags=("identity",)),
    Entry("identity I(3,3)", "identity map of I(3,3)", lambda: identity(I33), tags=("identity",)),
    Entry("transpose I(3,3)", "Z -> Z^T on I(3,3)", lambda: transpose(I33), tags=("transpose",)),
    Entry("identity III(3)", "identity map of III(3)", lambda: identity(DomainSpec.typeIII(3)), tags=("identity",)),
    Entry("identity II(5)", "identity map of II(5)", lambda: identity(DomainSpec.typeII(5)), tags=("identity",)),
    Entry("block I(2,2)->I(3,3)", "Z -> diag(Z, 0)", lambda: diagonal(0.0), tags=("standard",)),
    Entry("block I(3,2)->I(4,3)", "Z -> [[Z, 0], [0, 0]]",
          lambda: block(I32, DomainSpec.typeI(4, 3)), tags=("standard",)),
    Entry("diagonal I(2,2)->I(3,3), h = 0.3*z11", "Z -> diag(Z, 0.3 z11)",
          lambda: diagonal(0.3), tags=("diagonal",)),
    Entry("diagonal I(2,2)->I(3,3), h = 0.5*z12*z21", "Z -> diag(Z, 0.5 z12 z21)",
          lambda: diagonal(0.5, (0, 1, 1, 0)), tags=("diagonal",)),
    Entry("twisted diagonal I(2,2)->I(3,3)", "m' o diag(Z, 0.3 z11) o m, m and m' unitary",
          lambda: twisted(diagonal(0.3)), tags=("diagonal",)),
    Entry("inclusion III(2)->I(2,2)", "symmetric matrices inside I(2,2)",
          lambda: inclusion(DomainSpec.typeIII(2), I22), tags=("inclusion",)),
    Entry("inclusion II(4)->I(4,4)", "antisymmetric matrices inside I(4,4)",
          lambda: inclusion(DomainSpec.typeII(4), DomainSpec.typeI(4, 4)), tags=("inclusion",)),
    Entry("corrupted I(2,2)", "Z -> Z + 0.3 Z^2 (not proper)", lambda: corrupted(I22),
          proper=False, tags=("negative",)),
    Entry("generalized Whitney", "reserved plugin slot (no formula available)", None,
          proper=True, tags=("reserved",)),
]

CATALOG = {e.name: e for e in _ENTRIES}


def register(entry):
    """Add a user map (e.g. a Whitney-type plugin) to the catalog."""
    if entry.name in CATALOG and CATALOG[entry.name].builder is not None:
        raise InputError(f"catalog already has {entry.name!r}")
    CATALOG[entry.name] = entry


def get(name):
    try:
        return CATALOG[name].build()
    except KeyError:
        raise InputError(f"unknown catalog map {name!r}") from None


def proper_maps():
    """Names of the buildable proper maps."""
    return [e.name for e in CATALOG.values() if e.proper and e.builder is not None]
