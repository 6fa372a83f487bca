"""Polynomial maps between chart spaces.

``Poly`` is a small dict-based polynomial (exponent tuple -> coefficient)
used to *build* maps: arrange the source variables in a numpy object array,
multiply by numeric matrices, add blocks, and hand the result to
``PolyMatrixMap.from_entries``.

``PolyMatrixMap`` stores the same data densely: one exponent table shared by
all entries and a coefficient array of shape (monomials, rows, cols).  All
derivatives are exact: the Taylor coefficients of f(x0 + y) are obtained by
re-expanding every monomial binomially.
"""

from __future__ import annotations

import itertools
import json
from math import comb, factorial

import numpy as np

from .domains import DomainSpec, _validate
from .errors import InputError, ShapeMismatch, SymmetryViolation


class Poly:
    """Multivariate polynomial in ``nvars`` complex variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        for e, c in (terms or {}).items():
            if c != 0:
                self.terms[tuple(int(a) for a in e)] = complex(c)

    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, k):
        e = [0] * nvars
        e[k] = 1
        return cls(nvars, {tuple(e): 1.0})

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise InputError("polynomials in different variable sets")
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Poly.const(self.nvars, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        return sum(c * np.prod(x ** np.array(e)) for e, c in self.terms.items()) if self.terms else 0j

    def derivative(self, k):
        out = {}
        for e, c in self.terms.items():
            if e[k]:
                d = list(e)
                d[k] -= 1
                out[tuple(d)] = out.get(tuple(d), 0) + c * e[k]
        return Poly(self.nvars, out)

    def __repr__(self):
        return f"Poly({len(self.terms)} terms, degree {self.degree})"


def source_variables(spec):
    """The source chart point as an object array of ``Poly`` entries."""
    nv = spec.nvars
    xs = [Poly.var(nv, k) for k in range(nv)]
    Z = np.empty(spec.shape, dtype=object)
    for i in range(spec.shape[0]):
        for j in range(spec.shape[1]):
            Z[i, j] = Poly(nv)
    for k, (i, j) in enumerate(spec.variables()):
        Z[i, j] = xs[k]
        if spec.kind == "III" and i != j:
            Z[j, i] = xs[k]
        elif spec.kind == "II":
            Z[j, i] = -xs[k]
    return Z


def poly_zeros(nvars, shape):
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = Poly(nvars)
    return out


def _monomials(nvars, degree):
    """All exponent tuples of total degree <= degree, graded order."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return out


class PolyMatrixMap:
    """Polynomial map from a source chart into a target chart."""

    def __init__(self, source, target, exps, coef, name="", claimed_proper=True):
        self.source = source
        self.target = target
        self.exps = np.asarray(exps, dtype=int).reshape(-1, source.nvars)
        self.coef = np.asarray(coef, dtype=complex).reshape((-1,) + target.shape)
        self.name = name
        self.claimed_proper = claimed_proper
        if self.exps.shape[0] != self.coef.shape[0]:
            raise ShapeMismatch("exponent table and coefficients disagree")
        self._check_symmetry()
        self._shift_plan = None

    def _check_symmetry(self):
        C = self.coef
        scale = max(1.0, float(np.abs(C).max()) if C.size else 1.0)
        if self.target.kind == "III" and np.abs(C - C.transpose(0, 2, 1)).max(initial=0) > 1e-12 * scale:
            raise SymmetryViolation("type III target needs symmetric entries")
        if self.target.kind == "II" and np.abs(C + C.transpose(0, 2, 1)).max(initial=0) > 1e-12 * scale:
            raise SymmetryViolation("type II target needs antisymmetric entries")

    @classmethod
    def from_entries(cls, source, target, entries, name="", claimed_proper=True):
        """Build from an object array of ``Poly`` (or numbers)."""
        entries = np.asarray(entries, dtype=object)
        if entries.shape != target.shape:
            raise ShapeMismatch(f"map output {entries.shape} does not match target {target.shape}")
        nv = source.nvars
        table = {}
        for idx in np.ndindex(*entries.shape):
            p = entries[idx]
            if not isinstance(p, Poly):
                p = Poly.const(nv, p)
            for e, c in p.terms.items():
                table.setdefault(e, np.zeros(target.shape, dtype=complex))[idx] += c
        exps = sorted(table, key=lambda e: (sum(e), tuple(-a for a in e)))
        if not exps:
            exps = [(0,) * nv]
            table[exps[0]] = np.zeros(target.shape, dtype=complex)
        coef = np.array([table[e] for e in exps])
        return cls(source, target, exps, coef, name, claimed_proper)

    @classmethod
    def linear(cls, source, target, fn, name=""):
        """Map given by a function that is linear in the chart point."""
        return cls.from_entries(source, target, fn(source_variables(source)), name)

    @property
    def degree(self):
        return int(self.exps.sum(axis=1).max()) if self.exps.size else 0

    def __call__(self, Z):
        x = self.source.coords(_validate(self.source, Z))
        return self.evaluate(x)

    def evaluate(self, x):
        mon = np.prod(np.asarray(x, dtype=complex)[None, :] ** self.exps, axis=1)
        return np.tensordot(mon, self.coef, axes=1)

    # -------------------------------------------------------- derivatives

    def _plan(self):
        """Index plan for re-expanding every monomial around a point."""
        if self._shift_plan is None:
            nv = self.source.nvars
            betas = _monomials(nv, self.degree)
            where = {b: i for i, b in enumerate(betas)}
            src, dst, fac, rest = [], [], [], []
            for m, e in enumerate(self.exps):
                for b in itertools.product(*[range(a + 1) for a in e]):
                    src.append(m)
                    dst.append(where[b])
                    fac.append(np.prod([comb(int(a), int(c)) for a, c in zip(e, b)]))
                    rest.append(np.asarray(e) - np.asarray(b))
            self._shift_plan = (
                betas,
                np.array(src, dtype=int),
                np.array(dst, dtype=int),
                np.array(fac, dtype=float),
                np.array(rest, dtype=int).reshape(-1, nv),
            )
        return self._shift_plan

    def taylor(self, x0):
        """Coefficients c_beta with f(x0 + y) = sum_beta c_beta y^beta."""
        betas, src, dst, fac, rest = self._plan()
        x0 = np.asarray(x0, dtype=complex)
        w = fac * np.prod(x0[None, :] ** rest, axis=1)
        out = np.zeros((len(betas),) + self.target.shape, dtype=complex)
        np.add.at(out, dst, w[:, None, None] * self.coef[src])
        return betas, out

    def derivative_tensors(self, x0, order):
        """[D^1 f(x0), ..., D^order f(x0)] as arrays of shape (nv,)*j + target shape."""
        betas, coeffs = self.taylor(x0)
        nv = self.source.nvars
        tensors = [np.zeros((nv,) * j + self.target.shape, dtype=complex) for j in range(1, order + 1)]
        for b, c in zip(betas, coeffs):
            j = sum(b)
            if j == 0 or j > order:
                continue
            weight = np.prod([factorial(a) for a in b])
            idx = [k for k, a in enumerate(b) for _ in range(a)]
            for perm in set(itertools.permutations(idx)):
                tensors[j - 1][perm] = weight * c
        return tensors

    def compose_linear(self, left=None, right=None):
        """Entrywise matrix products left @ f @ right (numeric matrices)."""
        C = self.coef
        if left is not None:
            C = np.einsum("ij,mjk->mik", left, C)
        if right is not None:
            C = np.einsum("mij,jk->mik", C, right)
        return C

    # -------------------------------------------------------- json

    def to_json(self):
        entries = []
        rows, cols = self.target.shape
        for i in range(rows):
            for j in range(cols):
                terms = [
                    {"coeffs": [int(a) for a in e], "re": float(c.real), "im": float(c.imag)}
                    for e, c in zip(self.exps, self.coef[:, i, j])
                    if c != 0
                ]
                if terms:
                    entries.append({"row": i, "col": j, "terms": terms})
        return {
            "name": self.name,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "degree": self.degree,
            "claimed_proper": self.claimed_proper,
            "entries": entries,
        }

    @classmethod
    def from_json(cls, data):
        try:
            source = DomainSpec.from_json(data["source"])
            target = DomainSpec.from_json(data["target"])
            nv = source.nvars
            entries = poly_zeros(nv, target.shape)
            for ent in data["entries"]:
                i, j = int(ent["row"]), int(ent["col"])
                if not (0 <= i < target.shape[0] and 0 <= j < target.shape[1]):
                    raise ShapeMismatch(f"entry ({i},{j}) outside the target shape {target.shape}")
                for t in ent["terms"]:
                    e = tuple(int(a) for a in t["coeffs"])
                    if len(e) != nv:
                        raise ShapeMismatch(f"multi-index of length {len(e)}, source has {nv} variables")
                    entries[i, j] = entries[i, j] + Poly(nv, {e: complex(t["re"], t.get("im", 0.0))})
            out = cls.from_entries(source, target, entries, data.get("name", ""), data.get("claimed_proper", True))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed map config: {exc}") from exc
        declared = data.get("degree")
        if declared is not None and out.degree > int(declared):
            raise InputError(f"map has degree {out.degree}, config declares {declared}")
        return out

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read map file: {exc}") from None
        return cls.from_json(data)

    def __repr__(self):
        return f"PolyMatrixMap({self.name or '?'}: {self.source.label()} -> {self.target.label()}, degree {self.degree})"


def fit_polynomial(source, target, xs, values, degree, name=""):
    """Least-squares fit of sampled values by a polynomial map.

    Returns the map and the largest absolute residual on the samples.
    """
    exps = _monomials(source.nvars, degree)
    X = np.asarray(xs, dtype=complex)
    A = np.prod(X[:, None, :] ** np.array(exps)[None, :, :], axis=2)
    Y = np.asarray(values, dtype=complex).reshape(len(X), -1)
    sol, *_ = np.linalg.lstsq(A, Y, rcond=None)
    sol[np.abs(sol) < 1e-13] = 0
    coef = sol.reshape((len(exps),) + target.shape)
    if target.kind == "III":
        coef = (coef + coef.transpose(0, 2, 1)) / 2
    elif target.kind == "II":
        coef = (coef - coef.transpose(0, 2, 1)) / 2
    fmap = PolyMatrixMap(source, target, exps, coef, name)
    resid = float(np.abs(A @ coef.reshape(len(exps), -1) - Y).max(initial=0))
    return fmap, resid
