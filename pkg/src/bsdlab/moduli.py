"""Moduli of characteristic subspaces.

A characteristic subspace of rank r in the compact dual is cut out by a
flag sigma = (V1, V2): it consists of the planes E with V1 < E < V2.  The
flag lives in a level r (half-integer levels exist for type II).  Its
projection pr(sigma) = V1 lives in D_r(X).  Sigma_r is the locus of V1
isotropic for the Hermitian form.

Dimensions of V1 by level (q = rank):

    type I     q - r
    type II    2(q - r), and 2(q - r) - 1 at level r + 1/2
    type III   n - r

For types II/III the second leg is always the annihilator of V1.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import subspaces as ss
from .domains import DomainSpec, embed_point, random_boundary, random_interior, random_unitary
from .errors import (
    BadDimension,
    InputError,
    LevelOrderViolation,
    NotIsotropic,
    PointNotOnSigma,
    TangentNotTangent,
)

HALF = Fraction(1, 2)


def as_level(level):
    lv = Fraction(level).limit_denominator(2)
    if lv.denominator not in (1, 2):
        raise BadDimension(f"level {level} is not a multiple of 1/2")
    return lv


def v1_dim(spec, level):
    lv = as_level(level)
    if spec.kind == "II":
        return int(2 * (spec.rank - lv))
    if lv.denominator != 1:
        raise BadDimension("half-integer levels exist only for type II")
    if spec.kind == "I":
        return spec.q - int(lv)
    return spec.n - int(lv)


def v2_dim(spec, level):
    return spec.ambient - v1_dim(spec, level) if spec.kind != "I" else spec.p + int(as_level(level))


def level_of_dim(spec, d):
    """Inverse of v1_dim."""
    if spec.kind == "I":
        return Fraction(spec.q - d)
    if spec.kind == "III":
        return Fraction(spec.n - d)
    return spec.rank - Fraction(d, 2)


def valid_levels(spec, include_half=True):
    """Levels 0 .. rank, with half-integers for type II."""
    out = [Fraction(r) for r in range(spec.rank + 1)]
    if spec.kind == "II" and include_half:
        out += [Fraction(r) + HALF for r in range(spec.rank)]
    return sorted(out)


class FlagPair:
    """A point sigma = (V1, V2) of the flag moduli at a given level."""

    __slots__ = ("spec", "level", "V1", "_V2")

    def __init__(self, spec, level, V1, V2=None):
        self.spec = spec
        self.level = as_level(level)
        self.V1 = V1
        self._V2 = V2

    @property
    def V2(self):
        if self._V2 is None:
            self._V2 = ss.perp(self.V1, self.spec.bilinear)
        return self._V2

    def __eq__(self, other):
        if not isinstance(other, FlagPair):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.level == other.level
            and self.V1 == other.V1
            and self.V2 == other.V2
        )

    def close(self, other, tol=ss.EQ_TOL):
        return self.V1.close(other.V1, tol) and self.V2.close(other.V2, tol)

    def distance(self, other):
        return max(self.V1.distance(other.V1), self.V2.distance(other.V2))

    def __repr__(self):
        return f"FlagPair({self.spec.label()}, level={self.level}, dims=({self.V1.dim},{self.V2.dim}))"

    def to_json(self):
        out = {"dual": self.spec.to_json(), "level": str(self.level), "V1": self.V1.to_json()}
        if self.spec.kind == "I":
            out["V2"] = self.V2.to_json()
        return out

    @classmethod
    def from_json(cls, data):
        spec = DomainSpec.from_json(data["dual"])
        V1 = ss.Subspace.from_json(data["V1"])
        V2 = ss.Subspace.from_json(data["V2"]) if "V2" in data else None
        return make_flag(spec, Fraction(data["level"]), V1, V2)


def make_flag(spec, level, V1, V2=None):
    """Validated flag.  For type I V2 is required, for II/III it is derived."""
    lv = as_level(level)
    if V1.ambient_dim != spec.ambient:
        raise BadDimension("V1 lives in the wrong ambient space")
    if V1.dim != v1_dim(spec, lv):
        raise BadDimension(f"dim V1 = {V1.dim}, expected {v1_dim(spec, lv)} at level {lv}")
    if spec.kind == "I":
        if V2 is None:
            raise BadDimension("type I flags need an explicit V2")
        if V2.dim != v2_dim(spec, lv):
            raise BadDimension(f"dim V2 = {V2.dim}, expected {v2_dim(spec, lv)}")
        if not V2.contains(V1):
            raise BadDimension("V1 is not contained in V2")
        return FlagPair(spec, lv, V1, V2)
    if not ss.is_isotropic(V1, spec.bilinear, tol=1e-8):
        raise NotIsotropic("V1 is not isotropic for the bilinear form")
    flag = FlagPair(spec, lv, V1)
    if V2 is not None and not flag.V2.close(V2):
        raise BadDimension("supplied V2 is not the annihilator of V1")
    return flag


def pr_project(sigma):
    return sigma.V1


def sigma_point(spec, r, V1):
    """The unique flag of D_r(S_r) over an isotropic V1."""
    if not ss.is_isotropic(V1, spec.hermitian, tol=1e-8):
        raise NotIsotropic("V1 is not isotropic for the Hermitian form")
    if spec.kind == "I":
        return make_flag(spec, r, V1, ss.perp(V1, spec.hermitian))
    return make_flag(spec, r, V1)


# ---------------------------------------------------------------- predicates


def z_tau_contains(tau, r, W):
    r = as_level(r)
    if not tau.level < r:
        raise LevelOrderViolation(f"Z_tau needs level(tau) < r, got {tau.level} >= {r}")
    if W.dim != v1_dim(tau.spec, r):
        return False
    return tau.V1.contains(W)


def q_mu_contains(mu, r, W):
    r = as_level(r)
    if not mu.level > r:
        raise LevelOrderViolation(f"Q_mu needs level(mu) > r, got {mu.level} <= {r}")
    if W.dim != v1_dim(mu.spec, r):
        return False
    return W.contains(mu.V1) and mu.V2.contains(W)


def sigma_contains(spec, r, W):
    if W.dim != v1_dim(spec, r):
        raise BadDimension(f"dim W = {W.dim}, expected {v1_dim(spec, r)}")
    return ss.is_isotropic(W, spec.hermitian, tol=1e-8)


def q_mu_quadric(mu):
    """Hermitian form on the line parameter of Q_mu for a gap-one mu.

    Lines W = mu.V1 + <w> lying in Sigma are those with w in
    (mu.V2 cap mu.V1^perp) / mu.V1 and <w, w> = 0.  Returns the signature
    of the form on that quotient (a real hyperquadric when mixed).
    """
    spec = mu.spec
    H = spec.hermitian
    space = ss.intersect(mu.V2, ss.perp(mu.V1, H))
    quotient = ss.intersect(space, mu.V1.complement())
    return ss.restrict_signature(quotient, H)


# ---------------------------------------------------------------- sampling


def random_subspace_of(S, k, rng):
    """Random k-dimensional subspace of S."""
    G = rng.standard_normal((S.dim, k)) + 1j * rng.standard_normal((S.dim, k))
    return ss.canonicalize(S.ortho @ G)


def random_superspace_of(S, k, rng):
    """Random k-dimensional subspace containing S."""
    comp = S.complement()
    extra = random_subspace_of(comp, k - S.dim, rng)
    return ss.subspace_sum(S, extra)


def random_flag(spec, level, rng, through=None):
    """Generic flag whose characteristic subdomain meets the domain.

    ``through`` is an interior chart point contained in the slice; if
    omitted one is drawn at random.
    """
    lv = as_level(level)
    Z0 = random_interior(spec, rng, radius=0.7) if through is None else through
    E0 = embed_point(spec, Z0)
    V1 = random_subspace_of(E0, v1_dim(spec, lv), rng)
    if spec.kind == "I":
        V2 = random_superspace_of(E0, v2_dim(spec, lv), rng)
        return make_flag(spec, lv, V1, V2)
    return make_flag(spec, lv, V1)


def maximal_null_plane(spec, rng):
    """A random maximal isotropic plane [I; U] for the Hermitian form
    (and for the bilinear form in types II/III)."""
    k = spec.plane_dim
    if spec.kind == "I":
        U = random_unitary(spec.p, rng)[:, : spec.q]
        return ss.canonicalize(np.vstack([np.eye(k), U]))
    Q = random_unitary(spec.n, rng)
    if spec.kind == "III":
        return ss.canonicalize(np.vstack([np.eye(k), Q @ Q.T]))
    m = spec.rank
    Om = np.zeros((spec.n, spec.n), dtype=complex)
    for j in range(m):
        Om[2 * j, 2 * j + 1] = 1.0
        Om[2 * j + 1, 2 * j] = -1.0
    U = Q @ Om @ Q.T
    top = Q.conj()[:, : 2 * m]  # U is isometric on this range
    return ss.canonicalize(np.vstack([top, U @ top]))


def random_sigma_v1(spec, r, rng):
    """Random point of Sigma_r (an isotropic V1 at level r)."""
    W = maximal_null_plane(spec, rng)
    return random_subspace_of(W, v1_dim(spec, r), rng)


def random_sigma_flag(spec, r, rng):
    return sigma_point(spec, r, random_sigma_v1(spec, r, rng))


def boundary_flag(spec, r, rng):
    """A flag of D_r(S_r): V1 is the null space of a random point of S_r.

    Returns the flag and that boundary point (which lies on its slice).
    """
    Zb = random_boundary(spec, rng, int(r))
    k = spec.plane_dim
    B = np.vstack([np.eye(k), Zb])
    G = np.eye(k) - Zb.conj().T @ Zb
    w, v = np.linalg.eigh((G + G.conj().T) / 2)
    V1 = ss.Subspace.from_orthonormal(ss.orthonormal_basis(B @ v[:, w < 1e-8]))
    if spec.kind == "I":
        return make_flag(spec, r, V1, ss.perp(V1, spec.hermitian)), Zb
    return make_flag(spec, r, V1), Zb


# ---------------------------------------------------------------- dimensions


def predicate_dimension(W, within=None, containing=None, bilinear=None):
    """Dimension of {W' : containing < W' < within, W' isotropic} at W,
    computed from the linearized conditions on Hom(W, C^N / W)."""
    k = W.dim
    C = W.complement().ortho
    m = C.shape[1]
    cols = []
    basis = []
    for a in range(m):
        for b in range(k):
            A = np.zeros((m, k), dtype=complex)
            A[a, b] = 1.0
            basis.append(A)
    for A in basis:
        delta = C @ A
        pieces = []
        if within is not None:
            pieces.append((delta - within.ortho @ (within.ortho.conj().T @ delta)).ravel())
        if containing is not None and containing.dim:
            coeff = W.ortho.conj().T @ containing.ortho
            pieces.append((A @ coeff).ravel())
        if bilinear is not None:
            G = W.ortho.T @ bilinear.matrix @ delta
            pieces.append((G + delta.T @ bilinear.matrix @ W.ortho).ravel())
        cols.append(np.concatenate(pieces) if pieces else np.zeros(0))
    M = np.column_stack(cols)
    if M.shape[0] == 0:
        return len(basis)
    return len(basis) - ss.numerical_rank(M, tol=1e-9)


def _isotropic_grassmannian_dim(k, m, kind):
    # isotropic k-planes in a 2m-dimensional space
    if kind == "antisymmetric":
        return 2 * k * (m - k) + k * (k + 1) // 2
    return 2 * k * (m - k) + k * (k - 1) // 2


def z_tau_closed_dim(spec, tau, r):
    d = v1_dim(spec, r)
    return d * (tau.V1.dim - d)


def q_mu_closed_dim(spec, mu, r):
    d = v1_dim(spec, r)
    k = d - mu.V1.dim
    if spec.kind == "I":
        return k * (mu.V2.dim - d)
    m = spec.n - mu.V1.dim
    return _isotropic_grassmannian_dim(k, m, spec.bilinear.kind)


# ---------------------------------------------------------------- chains


def _hyperplane_containing(V, D):
    """A hyperplane of V containing D (D strictly smaller than V)."""
    R = ss.intersect(V, D.complement())
    keep = R.ortho[:, 1:]
    return ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack([D.ortho, keep])))


def _vector_outside(S, V):
    """A vector of S not in V (largest residual among S's basis)."""
    resid = S.ortho - V.ortho @ (V.ortho.conj().T @ S.ortho)
    j = int(np.argmax(np.linalg.norm(resid, axis=0)))
    return S.ortho[:, j]


def _isotropic_vector(T, form):
    """Nonzero vector of T with B(c, c) = 0 (any vector if B antisymmetric)."""
    u = T.ortho[:, 0]
    if form is None or form.kind == "antisymmetric":
        return u
    Bm = form.matrix
    if T.dim == 1:
        if abs(u @ Bm @ u) < 1e-12:
            return u
        raise InputError("no isotropic vector available")
    w = T.ortho[:, 1]
    a, b, c = w @ Bm @ w, 2 * (u @ Bm @ w), u @ Bm @ u
    if abs(c) < 1e-14:
        return u
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return w
        return u - (c / b) * w
    t = (-b + np.sqrt(b * b - 4 * a * c + 0j)) / (2 * a)
    return u + t * w


def vector_chain(spec, A, B, isotropic_sums=False):
    """V_0 = A, ..., V_m = B with dim(V_i cap V_{i+1}) = dim A - 1.

    Every V_i is isotropic for the bilinear form of the type.  With
    ``isotropic_sums`` the sums V_i + V_{i+1} are isotropic too.
    """
    form = spec.bilinear
    seq = [A]
    V = A
    guard = 0
    while not V.close(B):
        guard += 1
        if guard > 4 * spec.ambient:
            raise InputError("chain construction failed to converge")
        D = ss.intersect(V, B)
        b = None
        if form is not None and isotropic_sums:
            S = ss.intersect(B, ss.perp(V, form))
            if S.dim > D.dim:
                b = _vector_outside(S, V)
        if b is None:
            b = _vector_outside(B, V)
        bline = ss.span(b)
        if form is None:
            H = _hyperplane_containing(V, D)
        else:
            H = ss.intersect(V, ss.perp(bline, form))
            if H.dim == V.dim:
                H = _hyperplane_containing(V, D)
        if form is not None and isotropic_sums and not ss.perp(V, form).contains(bline):
            T = ss.intersect(ss.perp(V, form), ss.perp(bline, form))
            T = ss.intersect(T, H.complement())
            c = _isotropic_vector(T, form)
            mid = ss.subspace_sum(H, ss.span(c))
            seq.append(mid)
        V = ss.subspace_sum(H, bline)
        seq.append(V)
    return seq


def _extend_to(S, k):
    """Deterministic k-dim superspace of S (adds coordinate directions)."""
    comp = S.complement()
    extra = comp.ortho[:, : k - S.dim]
    return ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack([S.ortho, extra])))


def chain_connect(spec, A, B, mode="Z"):
    """Chain of flags tau_i (mode Z) or mu_i (mode Q) joining A and B.

    Mode Z: tau_i.V1 = V_i + V_{i+1}; consecutive Z_tau share V_{i+1}.
    Mode Q: mu_i.V1 = V_i cap V_{i+1}; Q_mu_i contains V_i and V_{i+1}.
    """
    if A.dim != B.dim:
        raise BadDimension("A and B have different dimensions")
    level_of_dim(spec, A.dim)  # validates the dimension
    if A.close(B):
        return []
    vs = vector_chain(spec, A, B, isotropic_sums=(mode == "Z"))
    chain = []
    for V, W in zip(vs[:-1], vs[1:]):
        if mode == "Z":
            S = ss.subspace_sum(V, W)
            lv = level_of_dim(spec, S.dim)
            if spec.kind == "I":
                chain.append(make_flag(spec, lv, S, _extend_to(S, v2_dim(spec, lv))))
            else:
                chain.append(make_flag(spec, lv, S))
        elif mode == "Q":
            S = ss.intersect(V, W)
            lv = level_of_dim(spec, S.dim)
            if spec.kind == "I":
                big = ss.subspace_sum(V, W)
                chain.append(make_flag(spec, lv, S, _extend_to(big, v2_dim(spec, lv))))
            else:
                chain.append(make_flag(spec, lv, S))
        else:
            raise InputError(f"unknown chain mode {mode!r}")
    return chain


def check_chain(spec, chain, A, B):
    """Self-check of a chain: endpoints contained, consecutive members meet."""
    if not chain:
        return A.close(B)
    r = level_of_dim(spec, A.dim)
    test = z_tau_contains if chain[0].level < r else q_mu_contains
    if not (test(chain[0], r, A) and test(chain[-1], r, B)):
        return False
    if test is z_tau_contains:
        for t1, t2 in zip(chain[:-1], chain[1:]):
            if ss.intersect(t1.V1, t2.V1).dim < A.dim:
                return False
    else:
        for m1, m2 in zip(chain[:-1], chain[1:]):
            # Q_m1 and Q_m2 share a point: a plane between both pairs
            lo = ss.subspace_sum(m1.V1, m2.V1)
            hi = ss.intersect(m1.V2, m2.V2)
            if lo.dim > A.dim or not hi.contains(lo) or hi.dim < A.dim:
                return False
    return True


# ---------------------------------------------------------------- Levi form on Sigma_r(LGr_n)


class SigmaChart:
    """The (x; y; z) chart of SGr(n - r, C^{2n}).

    A chart point is the column span of [I; x; y; z] with x, z of shape
    r x (n - r) and y of shape (n - r) x (n - r).  Coordinates are ordered
    so that [I; x] are the first n entries and [y; z] the last n.
    """

    def __init__(self, n, r):
        if not 1 <= r < n:
            raise InputError("need 1 <= r < n")
        self.n, self.r, self.k = n, r, n - r

    def plane(self, x, y, z):
        return np.vstack([np.eye(self.k), x, y, z])

    def from_subspace(self, V):
        B = V.ortho
        top = B[: self.k]
        M = B @ np.linalg.inv(top)
        k, r = self.k, self.r
        return M[k : k + r], M[k + r : k + r + k], M[k + r + k :]

    def symplectic_residual(self, x, y, z):
        return y - y.T + x.T @ z - z.T @ x

    def hermitian_residual(self, x, y, z):
        return np.eye(self.k) + x.conj().T @ x - y.conj().T @ y - z.conj().T @ z

    def base_point(self):
        k, r = self.k, self.r
        return np.zeros((r, k), complex), np.eye(k, dtype=complex), np.zeros((r, k), complex)

    def random_point(self, rng):
        spec = DomainSpec.typeIII(self.n)
        for _ in range(50):
            V = random_sigma_v1(spec, self.r, rng)
            if np.linalg.svd(V.ortho[: self.k], compute_uv=False)[-1] > 1e-3:
                return self.from_subspace(V)
        raise InputError("could not find a chart point")

    # tangent spaces ---------------------------------------------------
    def _split(self, vec):
        k, r = self.k, self.r
        dx = vec[: r * k].reshape(r, k)
        dy = vec[r * k : r * k + k * k].reshape(k, k)
        dz = vec[r * k + k * k :].reshape(r, k)
        return dx, dy, dz

    @property
    def chart_dim(self):
        return 2 * self.r * self.k + self.k * self.k

    def _linear_symplectic(self, P, vec):
        x, y, z = P
        dx, dy, dz = self._split(vec)
        return dy - dy.T + dx.T @ z + x.T @ dz - dz.T @ x - z.T @ dx

    def _linear_hermitian(self, P, vec):
        x, y, z = P
        dx, dy, dz = self._split(vec)
        G = x.conj().T @ dx - y.conj().T @ dy - z.conj().T @ dz
        return G + G.conj().T

    def holomorphic_tangent(self, P):
        """Basis (columns) of the holomorphic tangent space of SGr at P."""
        N = self.chart_dim
        M = np.column_stack([self._linear_symplectic(P, e).ravel() for e in np.eye(N)])
        return ss.nullspace(M, tol=1e-10)

    def real_tangent(self, P):
        """Real basis of T_P Sigma (as complex vectors V, real point v = (V, conj V))."""
        Nh = self.holomorphic_tangent(P)
        d = Nh.shape[1]
        cols = []
        for j in range(2 * d):
            c = np.zeros(d, complex)
            c[j % d] = 1.0 if j < d else 1j
            cols.append(self._linear_hermitian(P, Nh @ c).ravel())
        M = np.column_stack(cols)
        Mr = np.vstack([M.real, M.imag])
        _, s, vh = np.linalg.svd(Mr)
        rank = int(np.count_nonzero(s > 1e-10 * max(1.0, s[0])))
        real_null = vh[rank:].T
        coeff = real_null[:d] + 1j * real_null[d:]
        return Nh @ coeff

    def check_point(self, P, tol=1e-9):
        if np.abs(self.symplectic_residual(*P)).max() > tol or np.abs(self.hermitian_residual(*P)).max() > tol:
            raise PointNotOnSigma("chart point violates the defining equations")

    def check_tangent(self, P, vec, real=False, tol=1e-9):
        if np.abs(self._linear_symplectic(P, vec)).max() > tol:
            raise TangentNotTangent("vector violates the linearized symplectic equation")
        if real and np.abs(self._linear_hermitian(P, vec)).max() > tol:
            raise TangentNotTangent("vector is not tangent to Sigma")


def _theta(P, h):
    x, y, z = P
    hx, hy, hz = h
    return x.conj().T @ hx - y.conj().T @ hy - z.conj().T @ hz


def _dtheta(a, b):
    # a, b are pairs (holomorphic parts, antiholomorphic parts)
    (ha, aa), (hb, ab) = a, b
    out = 0
    for i, sign in zip(range(3), (1, -1, -1)):
        out = out + sign * (aa[i].T @ hb[i] - ab[i].T @ ha[i])
    return out


def _theta_tilde(P, h):
    x, y, z = P
    hx, hy, hz = h
    return hy + x.T @ hz - z.T @ hx


def _dtheta_tilde(a, b):
    (ha, _), (hb, _) = a, b
    return ha[0].T @ hb[2] - hb[0].T @ ha[2] - (ha[2].T @ hb[0] - hb[2].T @ ha[0])


def _wedge3(form, dform, P, a, b, c):
    f = lambda u: form(P, u[0])
    return f(a) @ dform(b, c) - f(b) @ dform(a, c) + f(c) @ dform(a, b)


def levi_bracket_check(n, r, P, v, w1, w2, which="theta", entry=None):
    """Value of theta ^ d theta (v, w1, conj w2) at a point of Sigma_r(LGr_n).

    v is a real tangent vector of Sigma (given by its holomorphic part),
    w1, w2 are holomorphic tangent vectors of D_r.  The forms are matrix
    valued; the returned scalar is the entry of largest modulus unless an
    explicit ``entry`` (i, j) is requested.  With which="theta_tilde" the
    holomorphic form dy + x^T dz - z^T dx is evaluated on (v, w1, w2).
    """
    chart = SigmaChart(n, r)
    chart.check_point(P)
    v, w1, w2 = (np.asarray(t, dtype=complex).ravel() for t in (v, w1, w2))
    chart.check_tangent(P, v, real=True)
    chart.check_tangent(P, w1)
    chart.check_tangent(P, w2)
    sp = chart._split
    zero = tuple(np.zeros_like(m) for m in sp(v))
    hv = sp(v)
    V = (hv, tuple(m.conj() for m in hv))
    W1 = (sp(w1), zero)
    if which == "theta":
        W2 = (zero, tuple(m.conj() for m in sp(w2)))
        M = _wedge3(_theta, _dtheta, P, V, W1, W2)
    elif which == "theta_tilde":
        W2 = (sp(w2), zero)
        M = _wedge3(_theta_tilde, _dtheta_tilde, P, V, W1, W2)
    else:
        raise InputError(f"unknown form {which!r}")
    if entry is not None:
        return complex(M[entry])
    idx = np.unravel_index(np.argmax(np.abs(M)), M.shape)
    return complex(M[idx])


def bracket_search(n, r, P, v, tol=1e-6, which="theta"):
    """Search a spanning set of holomorphic tangents for a nonzero value."""
    chart = SigmaChart(n, r)
    Nh = chart.holomorphic_tangent(P)
    best = 0.0
    for i in range(Nh.shape[1]):
        for j in range(Nh.shape[1]):
            val = abs(levi_bracket_check(n, r, P, v, Nh[:, i], Nh[:, j], which=which))
            best = max(best, val)
            if best > tol:
                return best
    return best
