"""Minimal rational tangents on Grassmannians and the symplectic Grassmannian.

Everything for SGr(q, C^{2n}) is computed at the reference point
V0 = span(e_1..e_q), which is isotropic for J_n.  A tangent vector there is
a (2n-q) x q matrix in Hom(V0, C^{2n}/V0) whose rows are ordered as

    a-block: e_{q+1} .. e_n          (n - q rows)
    s-block: e_{n+1} .. e_{n+q}      (q rows)
    b-block: e_{n+q+1} .. e_{2n}     (n - q rows)

It is tangent to SGr exactly when the s-block is symmetric.  The graded
split takes g2 = s (symmetric q x q) and g1 = (a; b) (2(n-q) x q).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
from scipy import sparse

from . import subspaces as ss
from .config import PLUCKER_CAP, TOL
from .errors import (
    BadSeed,
    DimensionTooLarge,
    NotOnVMRT,
    ShapeMismatch,
    SingularPoint,
    ZeroParameter,
)

SPECIAL = "SpecialLocus"
OPEN = "OpenOrbit"
NOT_IN = "NotInVMRT"


def _normalized(M):
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return M
    k = np.unravel_index(np.argmax(np.abs(M)), M.shape)
    return M / M[k] if abs(M[k]) > 0 else M


def _rank(M, tol=TOL):
    return ss.numerical_rank(np.atleast_2d(M), tol)


@dataclass(frozen=True)
class TangentVector:
    basepoint: ss.Subspace
    hom: np.ndarray

    def __post_init__(self):
        N, q = self.basepoint.ambient_dim, self.basepoint.dim
        if np.shape(self.hom) != (N - q, q):
            raise ShapeMismatch(f"hom must be {(N - q, q)}, got {np.shape(self.hom)}")

    @classmethod
    def from_split(cls, n, q, g1, g2):
        g1 = np.asarray(g1, dtype=complex)
        g2 = np.asarray(g2, dtype=complex)
        if g1.shape != (2 * (n - q), q) or g2.shape != (q, q):
            raise ShapeMismatch("g1 must be 2(n-q) x q and g2 q x q")
        hom = np.vstack([g1[: n - q], g2, g1[n - q :]])
        return cls(reference_point(n, q), hom)

    def split(self):
        N, q = self.basepoint.ambient_dim, self.basepoint.dim
        n = N // 2
        h = self.hom
        return np.vstack([h[: n - q], h[n:]]), h[n - q : n]


def reference_point(n, q):
    return ss.coordinate(2 * n, range(q))


# ---------------------------------------------------------------- rank one


def is_rank_one_tangent(dual, t):
    """Whether t is a minimal rational tangent of Gr, LGr or OGr.

    ``t`` is either a TangentVector (Gr) or a bare matrix in the chart
    coordinates (symmetric for LGr, skew for OGr)."""
    h = t.hom if isinstance(t, TangentVector) else np.asarray(t, dtype=complex)
    if h.ndim != 2:
        raise ShapeMismatch("tangent must be a matrix")
    if dual == "Gr":
        return _rank(h) == 1
    if h.shape[0] != h.shape[1]:
        raise ShapeMismatch(f"{dual} tangents are square")
    hn = _normalized(h)
    if dual == "LGr":
        if np.abs(hn - hn.T).max() > 10 * TOL:
            raise ShapeMismatch("LGr tangent must be symmetric")
        return _rank(hn) == 1
    if dual == "OGr":
        if np.abs(hn + hn.T).max() > 10 * TOL:
            raise ShapeMismatch("OGr tangent must be skew")
        return _rank(hn) == 2
    raise ShapeMismatch(f"unknown Grassmannian {dual!r}")


# ---------------------------------------------------------------- SGr VMRT


def _check_sgr(n, q, t):
    # for q = 1 every tangent of P^{2n-1} is a line tangent and the split
    # carries no information
    if not 2 <= q < n:
        raise ShapeMismatch("need 2 <= q < n")
    if t.basepoint.ambient_dim != 2 * n or t.basepoint.dim != q:
        raise ShapeMismatch("tangent does not live on SGr(q, C^2n)")


def sgr_vmrt_member(n, q, t):
    """Closed-form classifier of a tangent at the reference point."""
    _check_sgr(n, q, t)
    scale = np.abs(t.hom).max()
    if scale == 0:
        return NOT_IN
    g1, g2 = t.split()
    g1, g2 = g1 / scale, g2 / scale
    if np.abs(g2 - g2.T).max() > 10 * TOL:
        return NOT_IN  # not even tangent to SGr
    r2 = _rank(g2) if np.abs(g2).max() > TOL else 0
    if r2 == 0:
        return SPECIAL if _rank(g1) == 1 else NOT_IN
    if r2 > 1:
        return NOT_IN
    lam = g2[np.argmax(np.linalg.norm(g2, axis=1))]
    if np.abs(g1).max() <= TOL or _rank(np.vstack([lam, g1])) == 1:
        return OPEN
    return NOT_IN


def vmrt_parameters(n, q, t):
    """(lambda, mu, c) with g1 = mu lambda and g2 = c lambda^T lambda."""
    kind = sgr_vmrt_member(n, q, t)
    if kind == NOT_IN:
        raise NotOnVMRT("tangent is not on the VMRT")
    g1, g2 = t.split()
    if kind == SPECIAL:
        u, s, vh = np.linalg.svd(g1)
        return vh[0], s[0] * u[:, 0], 0.0
    i = np.argmax(np.linalg.norm(g2, axis=1))
    lam = g2[i] / np.linalg.norm(g2[i])
    j = np.argmax(np.abs(lam))
    c = g2[j, j] / lam[j] ** 2
    mu = g1 @ lam.conj()
    return lam, mu, c


def vmrt_point(lam, mu, c):
    lam = np.asarray(lam, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    return np.outer(mu, lam), c * np.outer(lam, lam)


def _flatten(g1, g2, n, q):
    return np.vstack([g1[: n - q], g2, g1[n - q :]]).ravel()


def cone_derivatives(n, q, lam, mu, c):
    """First and second partial derivatives of (lambda, mu, c) ->
    (mu lambda, c lambda^T lambda), flattened into hom coordinates."""
    lam = np.asarray(lam, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    m = 2 * (n - q)
    E = np.eye(q)
    Em = np.eye(m)
    zero1, zero2 = np.zeros((m, q)), np.zeros((q, q))
    first = []
    for k in range(q):
        first.append(_flatten(np.outer(mu, E[k]), c * (np.outer(E[k], lam) + np.outer(lam, E[k])), n, q))
    for j in range(m):
        first.append(_flatten(np.outer(Em[j], lam), zero2, n, q))
    first.append(_flatten(zero1, np.outer(lam, lam), n, q))
    second = []
    for k in range(q):
        for l in range(k, q):
            second.append(_flatten(zero1, c * (np.outer(E[k], E[l]) + np.outer(E[l], E[k])), n, q))
        for j in range(m):
            second.append(_flatten(np.outer(Em[j], E[k]), zero2, n, q))
        second.append(_flatten(zero1, np.outer(E[k], lam) + np.outer(lam, E[k]), n, q))
    return np.array(first).T, np.array(second).T


def sgr_tangent_space_dim(n, q):
    return 2 * q * (n - q) + q * (q + 1) // 2


def second_fundamental_surjective(n, q, t):
    """Whether the projective second fundamental form of the VMRT is onto
    the normal space at [t]."""
    lam, mu, c = vmrt_parameters(n, q, t)
    first, second = cone_derivatives(n, q, lam, mu, c)
    return _rank(np.hstack([first, second])) == sgr_tangent_space_dim(n, q)


def _sgr_tangent_space(n, q):
    """T_x(SGr) inside the full hom space, as a Subspace."""
    N = (2 * n - q) * q
    cols = []
    for i in range(2 * n - q):
        for j in range(q):
            if n - q <= i < n:
                continue
            h = np.zeros((2 * n - q, q))
            h[i, j] = 1
            cols.append(h.ravel())
    for i in range(q):
        for j in range(i, q):
            h = np.zeros((2 * n - q, q))
            h[n - q + i, j] = 1
            h[n - q + j, i] = 1
            cols.append(h.ravel())
    return ss.span(*cols) if cols else ss.zero(N)


@dataclass(frozen=True)
class ConditionTResult:
    holds: bool
    dim_lhs: int
    dim_rhs: int
    lhs: ss.Subspace
    rhs: ss.Subspace


def condition_T(n, q, t):
    """Condition (T) for SGr(q, C^2n) inside Gr(q, C^2n) at the reference
    point and the VMRT point [t]."""
    lam, mu, c = vmrt_parameters(n, q, t)
    first, _ = cone_derivatives(n, q, lam, mu, c)
    lhs = ss.span(*first.T)
    if lhs.dim != 2 * n - q:
        raise SingularPoint(f"sub-VMRT cone has tangent dimension {lhs.dim}, expected {2 * n - q}")
    h = t.hom
    u, s, vh = np.linalg.svd(h)
    if _rank(h) != 1:
        raise SingularPoint("tangent is not of rank one in the ambient Grassmannian")
    w, lrow = u[:, 0] * s[0], vh[0]
    cols = []
    for i in range(h.shape[0]):
        e = np.zeros(h.shape[0])
        e[i] = 1
        cols.append(np.outer(e, lrow).ravel())
    for j in range(h.shape[1]):
        e = np.zeros(h.shape[1])
        e[j] = 1
        cols.append(np.outer(w, e).ravel())
    ambient_cone = ss.span(*cols)
    rhs = ss.intersect(ambient_cone, _sgr_tangent_space(n, q))
    return ConditionTResult(lhs == rhs, lhs.dim, rhs.dim, lhs, rhs)


# ---------------------------------------------------------------- minimal curves


@dataclass(frozen=True)
class MinimalCurveSeed:
    A: ss.Subspace
    V: ss.Subspace
    B: ss.Subspace

    def __post_init__(self):
        q = self.V.dim
        if self.A.dim != q - 1 or self.B.dim != q + 1:
            raise BadSeed("need dim A = q - 1 and dim B = q + 1")
        if not (self.V.contains(self.A) and self.B.contains(self.V)):
            raise BadSeed("need A inside V inside B")


@dataclass(frozen=True)
class MinimalCurve:
    seed: MinimalCurveSeed
    v0: np.ndarray
    w: np.ndarray
    special: bool

    def __call__(self, t):
        return ss.span(*self.seed.A.ortho.T, self.v0 + t * self.w)

    def _bases(self, basis, perp):
        Q = self.seed.V.ortho if basis is None else basis
        if perp is None:
            perp = ss.Subspace.from_orthonormal(Q).complement().ortho
        return Q, perp

    def chart(self, t, basis=None, perp=None):
        """Chart coordinates of the curve point about V, against the given
        bases of V and of a complement (orthonormal ones by default)."""
        Q, perp = self._bases(basis, perp)
        W = np.column_stack([self.seed.A.ortho, self.v0 + t * self.w])
        return (perp.conj().T @ W) @ np.linalg.inv(Q.conj().T @ W)

    def tangent(self, basis=None, perp=None):
        """d/dt of the chart at t = 0, exactly."""
        Q, perp = self._bases(basis, perp)
        W0 = np.column_stack([self.seed.A.ortho, self.v0])
        dW = np.column_stack([np.zeros_like(self.seed.A.ortho), self.w])
        top = Q.conj().T @ W0
        bot = perp.conj().T @ W0
        # derivative of bot(t) top(t)^{-1}; the second term vanishes when w is
        # orthogonal to V but is kept for general seeds
        inv = np.linalg.inv(top)
        return (perp.conj().T @ dW) @ inv - bot @ inv @ (Q.conj().T @ dW) @ inv


def minimal_curve(seed, n=None):
    V = seed.V
    if n is not None and not ss.is_isotropic(V, ss.symplectic(n)):
        raise BadSeed("basepoint is not isotropic")
    Qa = seed.A.ortho
    Qv = V.ortho
    v0 = Qv @ ss.nullspace((Qa.conj().T @ Qv))[:, 0]
    v0 = v0 - Qa @ (Qa.conj().T @ v0)
    v0 /= np.linalg.norm(v0)
    w = seed.B.ortho @ ss.nullspace(Qv.conj().T @ seed.B.ortho)[:, 0]
    w /= np.linalg.norm(w)
    special = bool(n is not None and ss.is_isotropic(seed.B, ss.symplectic(n)))
    return MinimalCurve(seed, v0, w, special)


def oracle_classify(n, q, t, samples=(0.3, -0.7, 1.1)):
    """Classify a tangent at the reference point by building the minimal
    curve it would be tangent to and testing that curve directly."""
    _check_sgr(n, q, t)
    h = t.hom
    if np.abs(h).max() == 0 or _rank(h) != 1:
        return NOT_IN
    J = ss.symplectic(n)
    V0 = reference_point(n, q)
    u, s, vh = np.linalg.svd(h)
    # image vector in C^{2n}, with its V0 components set to zero
    w = np.zeros(2 * n, dtype=complex)
    w[q:] = u[:, 0]
    A = ss.Subspace.from_orthonormal(np.eye(2 * n, dtype=complex)[:, :q] @ vh[1:].conj().T) if q > 1 else ss.zero(2 * n)
    B = ss.subspace_sum(V0, ss.span(w))
    curve = minimal_curve(MinimalCurveSeed(A, V0, B))
    for tt in samples:
        if not ss.is_isotropic(curve(tt), J):
            return NOT_IN
    E = np.eye(2 * n)
    d = curve.tangent(E[:, :q], E[:, q:])
    ratio = d.ravel() @ h.conj().ravel() / np.vdot(h.ravel(), h.ravel())
    if np.abs(d - ratio * h).max() > 1e-8 * max(1.0, np.abs(d).max()):
        return NOT_IN
    return SPECIAL if ss.is_isotropic(B, J) else OPEN


def random_vmrt_tangent(n, q, rng, kind):
    """A tangent at the reference point of the requested kind."""
    g = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    m = 2 * (n - q)
    lam, mu = g(q), g(m)
    if kind == OPEN:
        g1, g2 = vmrt_point(lam, mu, g(1)[0])
    elif kind == SPECIAL:
        g1, g2 = vmrt_point(lam, mu, 0.0)
    else:
        choice = rng.integers(4)
        if choice == 0:  # independent lambda in g1 and g2
            g1 = np.outer(mu, lam)
            lp = g(q)
            g2 = np.outer(lp, lp)
        elif choice == 1:  # symmetric rank two
            a, b = g(q), g(q)
            g1, g2 = np.zeros((m, q)), np.outer(a, a) + np.outer(b, b)
        elif choice == 2:  # rank two g1
            g1, g2 = np.outer(mu, lam) + np.outer(g(m), g(q)), np.zeros((q, q))
        else:
            s = g(q, q)
            g1, g2 = g(m, q), s + s.T
    return TangentVector.from_split(n, q, g1, g2)


# ---------------------------------------------------------------- linear section witness


def _bareiss_det(M):
    M = [[Fraction(int(x)) for x in row] for row in M]
    k = len(M)
    sign, prev = 1, Fraction(1)
    for i in range(k - 1):
        if M[i][i] == 0:
            for r in range(i + 1, k):
                if M[r][i] != 0:
                    M[i], M[r] = M[r], M[i]
                    sign = -sign
                    break
            else:
                return 0
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                M[r][c] = (M[r][c] * M[i][i] - M[r][i] * M[i][c]) / prev
        prev = M[i][i]
    return int(sign * M[k - 1][k - 1])


def plucker(M):
    """Plucker coordinates of the column span of M (2n x q), indexed by
    sorted q-subsets.  Integer input is handled exactly."""
    M = np.asarray(M)
    N, q = M.shape
    subsets = list(combinations(range(N), q))
    if np.issubdtype(M.dtype, np.integer):
        return np.array([_bareiss_det(M[list(I)]) for I in subsets], dtype=object)
    return np.array([np.linalg.det(M[list(I)]) for I in subsets])


class LinearSectionWitness:
    """The contraction Lambda^q(C^2n) -> Lambda^{q-2}(C^2n) by J_n."""

    def __init__(self, n, q, cap=PLUCKER_CAP):
        if not 2 <= q <= n:
            raise ShapeMismatch("need 2 <= q <= n")
        if comb(2 * n, q) > cap:
            raise DimensionTooLarge(f"binomial({2 * n}, {q}) exceeds {cap}")
        self.n, self.q = n, q
        N = 2 * n
        src = list(combinations(range(N), q))
        tgt = {I: k for k, I in enumerate(combinations(range(N), q - 2))}
        Jm = ss.symplectic(n).matrix.real.astype(int)
        rows, cols, vals = [], [], []
        for col, I in enumerate(src):
            for a in range(q):
                for b in range(a + 1, q):
                    j = Jm[I[a], I[b]]
                    if j:
                        rest = I[:a] + I[a + 1 : b] + I[b + 1 :]
                        rows.append(tgt[rest])
                        cols.append(col)
                        vals.append(j * (-1) ** (a + b + 1))  # 1-based a+b-1
        self.matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(len(tgt), len(src)), dtype=int)

    def __call__(self, V):
        M = V.ortho if isinstance(V, ss.Subspace) else V
        p = plucker(M)
        if p.dtype == object:
            return np.array([sum(int(self.matrix[i, j]) * p[j] for j in self.matrix[i].indices) for i in range(self.matrix.shape[0])], dtype=object)
        return self.matrix @ p

    def kernel_contains(self, V, tol=1e-12):
        out = self(V)
        if out.dtype == object:
            return all(x == 0 for x in out)
        return float(np.abs(out).max(initial=0)) < tol


def linear_section_witness(n, q, cap=PLUCKER_CAP):
    return LinearSectionWitness(n, q, cap)


# ---------------------------------------------------------------- dilation family


def dilation_psi(n, r, s, point):
    if s == 0:
        raise ZeroParameter("s must be nonzero")
    x, y, z = (np.asarray(a, dtype=complex) for a in point)
    k = n - r
    if y.shape != (k, k) or x.shape != (r, k) or z.shape != (r, k):
        raise ShapeMismatch("chart point has the wrong shape")
    I = np.eye(k)
    return s * x, s * s * (y - I) + I, s * z
