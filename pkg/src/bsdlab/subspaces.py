"""Complex subspaces in canonical form, and the three forms used to cut out
isotropic subspaces (Hermitian I_{p,q}, symmetric S_n, antisymmetric J_n).

A ``Subspace`` stores a canonical basis: the columns are reduced so that a
fixed set of pivot rows carries the identity matrix.  The pivot rows are
chosen greedily from the orthogonal projector, which depends only on the
subspace and not on the basis used to describe it.
"""

from __future__ import annotations

import numpy as np

from .config import TOL
from .errors import AmbiguousRank, DimensionMismatch

# subspaces are compared at this (looser) level: sin of the largest
# principal angle between them
EQ_TOL = 1e-8


def _svd(M):
    return np.linalg.svd(M, full_matrices=True)


def numerical_rank(M, tol=TOL, strict=False):
    """Rank of M relative to its largest singular value.

    With ``strict`` an ``AmbiguousRank`` is raised when a singular value
    sits in the band [tol, 10 tol] where the decision is unreliable.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    rel = s / max(s[0], 1.0)
    if strict:
        band = (rel >= tol) & (rel <= 10 * tol)
        if np.any(band):
            raise AmbiguousRank(f"singular values {rel[band]} inside the ambiguous band")
    return int(np.count_nonzero(rel > tol))


def nullspace(M, tol=TOL):
    """Orthonormal basis of the right kernel of M (columns)."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = _svd(M)
    scale = max(s[0], 1.0) if s.size else 1.0
    r = int(np.count_nonzero(s > tol * scale))
    return vh[r:].conj().T


def orthonormal_basis(M, tol=TOL, strict=False):
    """Orthonormal basis of the column span of M."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    scale = max(s[0], 1.0)
    rel = s / scale
    if strict:
        band = (rel >= tol) & (rel <= 10 * tol)
        if np.any(band):
            raise AmbiguousRank(f"singular values {s[band]} inside the ambiguous band")
    r = int(np.count_nonzero(rel > tol))
    return u[:, :r]


def _pivot_rows(Q):
    """Greedy pivot rows of an orthonormal basis, tie broken by lowest index."""
    R = Q.copy()
    piv = []
    for _ in range(Q.shape[1]):
        norms = np.linalg.norm(R, axis=1)
        if piv:
            norms[piv] = -1.0
        best = norms.max()
        i = int(np.flatnonzero(norms >= best * (1 - 1e-6))[0])
        piv.append(i)
        v = R[i] / np.linalg.norm(R[i])
        R = R - np.outer(R @ v.conj(), v)
    return sorted(piv)


class Subspace:
    """A linear subspace of C^N.

    ``basis`` is the canonical N x k representative, ``ortho`` an orthonormal
    basis of the same space (used for all numerical work).
    """

    __slots__ = ("ambient_dim", "basis", "ortho", "pivots")

    def __init__(self, ambient_dim, basis, ortho, pivots):
        self.ambient_dim = ambient_dim
        self.basis = basis
        self.ortho = ortho
        self.pivots = pivots
        basis.flags.writeable = False
        ortho.flags.writeable = False

    @classmethod
    def from_orthonormal(cls, Q):
        Q = np.asarray(Q, dtype=complex)
        N, k = Q.shape
        if k == 0:
            return cls(N, np.zeros((N, 0), dtype=complex), Q.copy(), ())
        piv = _pivot_rows(Q)
        B = Q @ np.linalg.inv(Q[piv])
        B[piv] = np.eye(k)
        return cls(N, B, Q.copy(), tuple(piv))

    @property
    def dim(self):
        return self.basis.shape[1]

    def projector(self):
        return self.ortho @ self.ortho.conj().T

    def distance(self, other):
        """sin of the largest principal angle (1.0 if dimensions differ)."""
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch("ambient dimensions differ")
        if self.dim != other.dim:
            return 1.0
        if self.dim == 0:
            return 0.0
        resid = other.ortho - self.ortho @ (self.ortho.conj().T @ other.ortho)
        return float(np.linalg.norm(resid, 2))

    def close(self, other, tol=EQ_TOL):
        return self.distance(other) < tol

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.close(other)

    def __hash__(self):
        return hash((self.ambient_dim, self.dim))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"

    def contains_vectors(self, M, tol=EQ_TOL):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        if M.shape[0] != self.ambient_dim:
            M = M.T
        if M.size == 0:
            return True
        resid = M - self.ortho @ (self.ortho.conj().T @ M)
        scale = max(1.0, float(np.linalg.norm(M, 2)))
        return float(np.linalg.norm(resid, 2)) < tol * scale

    def contains(self, other, tol=EQ_TOL):
        """other is a subspace of self."""
        if other.ambient_dim != self.ambient_dim:
            raise DimensionMismatch("ambient dimensions differ")
        return self.contains_vectors(other.ortho, tol)

    def complement(self):
        """Orthogonal complement for the standard inner product."""
        return Subspace.from_orthonormal(nullspace(self.ortho.conj().T))

    def to_json(self):
        cols = []
        for j in range(self.dim):
            for z in self.basis[:, j]:
                cols.append([float(z.real), float(z.imag)])
        return {"ambient": self.ambient_dim, "dim": self.dim, "basis": cols}

    @classmethod
    def from_json(cls, data):
        N = int(data["ambient"])
        flat = np.array([complex(a, b) for a, b in data["basis"]], dtype=complex)
        if flat.size % N:
            raise DimensionMismatch("basis length is not a multiple of ambient")
        M = flat.reshape(-1, N).T
        return canonicalize(M) if M.shape[1] else zero(N)


def canonicalize(basis, tol=TOL):
    """Canonical Subspace spanned by the columns of ``basis``.

    Raises AmbiguousRank when the numerical rank is not clear cut.
    """
    M = np.asarray(basis, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    Q = orthonormal_basis(M, tol=tol, strict=True)
    return Subspace.from_orthonormal(Q)


def span(*vectors):
    return canonicalize(np.column_stack(vectors))


def zero(N):
    return Subspace.from_orthonormal(np.zeros((N, 0), dtype=complex))


def full(N):
    return Subspace.from_orthonormal(np.eye(N, dtype=complex))


def coordinate(N, indices):
    """span of the standard basis vectors e_i, i in ``indices`` (0-based)."""
    E = np.zeros((N, len(indices)), dtype=complex)
    for j, i in enumerate(indices):
        E[i, j] = 1.0
    return Subspace.from_orthonormal(E)


def _check(A, B):
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatch(f"ambient {A.ambient_dim} vs {B.ambient_dim}")


def intersect(A, B, tol=TOL):
    _check(A, B)
    if A.dim == 0 or B.dim == 0:
        return zero(A.ambient_dim)
    # x in A with (I - P_B) x = 0
    resid = A.ortho - B.ortho @ (B.ortho.conj().T @ A.ortho)
    c = nullspace(resid, tol=max(tol, 1e-10))
    if c.shape[1] == 0:
        return zero(A.ambient_dim)
    return Subspace.from_orthonormal(orthonormal_basis(A.ortho @ c))


def intersect_all(subspaces, tol=TOL):
    it = iter(subspaces)
    acc = next(it)
    for S in it:
        acc = intersect(acc, S, tol)
    return acc


def subspace_sum(A, B, tol=TOL):
    _check(A, B)
    return Subspace.from_orthonormal(orthonormal_basis(np.hstack([A.ortho, B.ortho]), tol=tol))


def sum_all(subspaces, N=None, tol=TOL):
    mats = [S.ortho for S in subspaces]
    if not mats:
        return zero(N)
    return Subspace.from_orthonormal(orthonormal_basis(np.hstack(mats), tol=tol))


# ---------------------------------------------------------------- forms


class HermitianForm:
    """The form <u, v> = v^* I_{p,q} u with I_{p,q} = diag(I_q, -I_p)."""

    kind = "hermitian"

    def __init__(self, p, q):
        self.p = int(p)
        self.q = int(q)
        self.matrix = np.diag(np.r_[np.ones(self.q), -np.ones(self.p)]).astype(complex)

    @property
    def dim(self):
        return self.p + self.q

    @property
    def signature(self):
        return (self.p, self.q)

    def gram(self, A, B):
        """Matrix of pairings A_i^* M B_j (conjugate-linear in A)."""
        return A.conj().T @ self.matrix @ B

    def to_json(self):
        return {"kind": self.kind, "p": self.p, "q": self.q}

    def __repr__(self):
        return f"HermitianForm(p={self.p}, q={self.q})"


class BilinearForm:
    """S_n = [[0, I], [I, 0]] (symmetric) or J_n = [[0, I], [-I, 0]]."""

    def __init__(self, kind, n):
        if kind not in ("symmetric", "antisymmetric"):
            raise ValueError(f"unknown bilinear kind {kind!r}")
        self.kind = kind
        self.n = int(n)
        I = np.eye(self.n)
        Z = np.zeros((self.n, self.n))
        sign = 1.0 if kind == "symmetric" else -1.0
        self.matrix = np.block([[Z, I], [sign * I, Z]]).astype(complex)

    @property
    def dim(self):
        return 2 * self.n

    def gram(self, A, B):
        return A.T @ self.matrix @ B

    def to_json(self):
        return {"kind": self.kind, "n": self.n}

    def __repr__(self):
        return f"BilinearForm({self.kind!r}, n={self.n})"


def symplectic(n):
    return BilinearForm("antisymmetric", n)


def orthogonal(n):
    return BilinearForm("symmetric", n)


def form_from_json(data):
    if data["kind"] == "hermitian":
        return HermitianForm(data["p"], data["q"])
    return BilinearForm(data["kind"], data["n"])


def _form_check(A, form):
    if form.dim != A.ambient_dim:
        raise DimensionMismatch(f"form acts on C^{form.dim}, subspace lives in C^{A.ambient_dim}")


def perp(A, form, tol=TOL):
    """Annihilator of A with respect to ``form``."""
    _form_check(A, form)
    if A.dim == 0:
        return full(A.ambient_dim)
    if form.kind == "hermitian":
        rows = A.ortho.conj().T @ form.matrix
    else:
        rows = A.ortho.T @ form.matrix
    return Subspace.from_orthonormal(nullspace(rows, tol=tol))


def is_isotropic(A, form, tol=TOL):
    _form_check(A, form)
    if A.dim == 0:
        return True
    G = form.gram(A.ortho, A.ortho)
    return float(np.abs(G).max()) < tol * 10


def isotropy_defect(A, form):
    """Largest entry of the restricted form (0 for isotropic subspaces)."""
    _form_check(A, form)
    if A.dim == 0:
        return 0.0
    return float(np.abs(form.gram(A.ortho, A.ortho)).max())


def restrict_signature(A, form, tol=TOL):
    """(n+, n-, n0) of the Hermitian form restricted to A."""
    _form_check(A, form)
    if A.dim == 0:
        return (0, 0, 0)
    H = form.gram(A.ortho, A.ortho)
    ev = np.linalg.eigvalsh((H + H.conj().T) / 2)
    zero_band = max(tol * 10, 1e-12)
    npos = int(np.count_nonzero(ev > zero_band))
    nneg = int(np.count_nonzero(ev < -zero_band))
    return (npos, nneg, A.dim - npos - nneg)


sum = subspace_sum  # noqa: A001  (public name matches the operation)
