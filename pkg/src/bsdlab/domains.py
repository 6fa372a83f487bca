"""Classical bounded symmetric domains of types I, II and III.

Points are matrices Z in the Harish-Chandra chart.  A point is carried to
the compact dual as the column span of [I; Z]:

* type I   (p x q matrices, q <= p): q-planes in C^{p+q}, domain I_q - Z^*Z > 0
* type II  (n x n, Z = -Z^T): n-planes in C^{2n} isotropic for S_n
* type III (n x n, Z =  Z^T): n-planes in C^{2n} isotropic for J_n

The Hermitian form on the ambient space is diag(I_k, -I_m) with k the
plane dimension, so embed_point(Z) is positive exactly on the domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import subspaces as ss
from .config import BOUNDARY_BAND, TOL
from .errors import (
    InputError,
    InvalidFlag,
    NotAnIsometry,
    NotOnBoundary,
    ShapeMismatch,
    SingularDenominator,
    SymmetryViolation,
)

INTERIOR = "Interior"
BOUNDARY = "Boundary"
OUTSIDE = "Outside"


@dataclass(frozen=True)
class DomainSpec:
    kind: str  # "I", "II", "III"
    p: int = 0
    q: int = 0
    n: int = 0

    def __post_init__(self):
        if self.kind == "I":
            if not (1 <= self.q <= self.p):
                raise InputError(f"type I needs 1 <= q <= p, got p={self.p}, q={self.q}")
        elif self.kind == "II":
            if self.n < 2:
                raise InputError("type II needs n >= 2")
        elif self.kind == "III":
            if self.n < 1:
                raise InputError("type III needs n >= 1")
        else:
            raise InputError(f"unknown domain type {self.kind!r}")

    # constructors
    @classmethod
    def typeI(cls, p, q):
        return cls("I", p=int(p), q=int(q))

    @classmethod
    def typeII(cls, n):
        return cls("II", n=int(n))

    @classmethod
    def typeIII(cls, n):
        return cls("III", n=int(n))

    @property
    def rank(self):
        if self.kind == "I":
            return self.q
        if self.kind == "II":
            return self.n // 2
        return self.n

    @property
    def shape(self):
        if self.kind == "I":
            return (self.p, self.q)
        return (self.n, self.n)

    @property
    def plane_dim(self):
        return self.q if self.kind == "I" else self.n

    @property
    def ambient(self):
        return self.p + self.q if self.kind == "I" else 2 * self.n

    @property
    def dual(self):
        return {"I": "Gr", "II": "OGr", "III": "LGr"}[self.kind]

    @property
    def hermitian(self):
        if self.kind == "I":
            return ss.HermitianForm(self.p, self.q)
        return ss.HermitianForm(self.n, self.n)

    @property
    def bilinear(self):
        if self.kind == "II":
            return ss.orthogonal(self.n)
        if self.kind == "III":
            return ss.symplectic(self.n)
        return None

    def label(self):
        if self.kind == "I":
            return f"I({self.p},{self.q})"
        return f"{self.kind}({self.n})"

    def to_json(self):
        if self.kind == "I":
            return {"type": "I", "p": self.p, "q": self.q}
        return {"type": self.kind, "n": self.n}

    @classmethod
    def from_json(cls, data):
        try:
            t = data["type"]
            if t == "I":
                return cls.typeI(data["p"], data["q"])
            if t in ("II", "III"):
                return cls(t, n=int(data["n"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad domain spec {data!r}") from exc
        raise InputError(f"unknown domain type in {data!r}")

    # chart coordinates
    def variables(self):
        """Independent matrix entries (i, j) used as polynomial variables."""
        if self.kind == "I":
            return [(i, j) for i in range(self.p) for j in range(self.q)]
        if self.kind == "III":
            return [(i, j) for i in range(self.n) for j in range(i, self.n)]
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    @property
    def nvars(self):
        return len(self.variables())

    def assemble(self, vec):
        vec = np.asarray(vec, dtype=complex)
        Z = np.zeros(self.shape, dtype=complex)
        for c, (i, j) in zip(vec, self.variables()):
            Z[i, j] = c
            if self.kind == "III":
                Z[j, i] = c
            elif self.kind == "II":
                Z[j, i] = -c
        return Z

    def coords(self, Z):
        return np.array([Z[i, j] for i, j in self.variables()], dtype=complex)

    def chart_basis(self):
        """Matrices dZ/dv for each variable v."""
        return [self.assemble(np.eye(self.nvars)[k]) for k in range(self.nvars)]


def parse_spec(text):
    """'I:3,2' -> TypeI(3,2); 'II:5' -> TypeII(5); 'III:3' -> TypeIII(3)."""
    try:
        kind, rest = text.split(":")
        nums = [int(x) for x in rest.split(",")]
        if kind == "I":
            p, q = (nums[0], nums[0]) if len(nums) == 1 else nums
            return DomainSpec.typeI(p, q)
        return DomainSpec(kind, n=nums[0])
    except (ValueError, IndexError) as exc:
        raise InputError(f"cannot parse domain {text!r}") from exc


def _validate(spec, Z, tol=1e-8):
    Z = np.asarray(Z, dtype=complex)
    if Z.shape != spec.shape:
        raise ShapeMismatch(f"expected {spec.shape}, got {Z.shape}")
    scale = max(1.0, float(np.abs(Z).max()) if Z.size else 1.0)
    if spec.kind == "III" and np.abs(Z - Z.T).max() > tol * scale:
        raise SymmetryViolation("type III point must be symmetric")
    if spec.kind == "II" and np.abs(Z + Z.T).max() > tol * scale:
        raise SymmetryViolation("type II point must be antisymmetric")
    return Z


@dataclass(frozen=True)
class DomainPoint:
    spec: DomainSpec
    Z: np.ndarray

    def __post_init__(self):
        _validate(self.spec, self.Z)


def singular_values(Z):
    return np.linalg.svd(np.asarray(Z, dtype=complex), compute_uv=False)


def contains(spec, Z):
    Z = _validate(spec, Z)
    s = singular_values(Z)
    smax = float(s.max()) if s.size else 0.0
    if smax < 1 - BOUNDARY_BAND:
        return INTERIOR
    if smax <= 1 + BOUNDARY_BAND:
        return BOUNDARY
    return OUTSIDE


def boundary_stratum(spec, Z):
    """Index r of the boundary orbit S_r containing Z."""
    if contains(spec, Z) != BOUNDARY:
        raise NotOnBoundary("point is not on the boundary")
    s = singular_values(Z)
    units = int(np.count_nonzero(np.abs(s - 1) <= BOUNDARY_BAND))
    if spec.kind == "II":
        if units % 2:
            raise SymmetryViolation(f"odd number ({units}) of unit singular values in type II")
        return spec.rank - units // 2
    return spec.rank - units


def embed_point(spec, Z):
    Z = _validate(spec, Z)
    k = spec.plane_dim
    return ss.canonicalize(np.vstack([np.eye(k), Z]))


def chart_of(spec, E, tol=1e-10):
    """Inverse of embed_point: the chart matrix of a plane (if in the cell)."""
    k = spec.plane_dim
    B = E.ortho
    top, bot = B[:k], B[k:]
    s = np.linalg.svd(top, compute_uv=False)
    if s.size == 0 or s[-1] < tol:
        raise SingularDenominator("plane is outside the Harish-Chandra chart")
    return bot @ np.linalg.inv(top)


def _is_isometry(spec, g, tol=1e-9):
    F = spec.hermitian.matrix
    scale = max(1.0, float(np.linalg.norm(g, 2)) ** 2)
    if np.abs(g.conj().T @ F @ g - F).max() > tol * scale:
        return "g^H I g != I"
    B = spec.bilinear
    if B is not None and np.abs(g.T @ B.matrix @ g - B.matrix).max() > tol * scale:
        return "g^T B g != B"
    return None


def mobius(spec, g, Z):
    """Action of a form-preserving g on chart points.

    Writing g = [[g11, g12], [g21, g22]] against the split of [I; Z], the
    image is Z' = (g21 + g22 Z)(g11 + g12 Z)^{-1}, so that
    embed_point(Z') = g . embed_point(Z).
    """
    g = np.asarray(g, dtype=complex)
    Z = _validate(spec, Z)
    N = spec.ambient
    if g.shape != (N, N):
        raise ShapeMismatch(f"g must be {N}x{N}")
    why = _is_isometry(spec, g)
    if why:
        raise NotAnIsometry(why)
    k = spec.plane_dim
    M = g @ np.vstack([np.eye(k), Z])
    top, bot = M[:k], M[k:]
    s = np.linalg.svd(top, compute_uv=False)
    if s[-1] < TOL * max(1.0, s[0]):
        raise SingularDenominator("g11 + g12 Z is singular")
    W = np.linalg.solve(top.T, bot.T).T
    if spec.kind == "III":
        W = (W + W.T) / 2
    elif spec.kind == "II":
        W = (W - W.T) / 2
    return W


def characteristic_slice(spec, sigma):
    """Predicate for membership in the characteristic subdomain of a flag."""
    V1, V2 = sigma.V1, sigma.V2
    if V1.ambient_dim != spec.ambient or V2.ambient_dim != spec.ambient:
        raise InvalidFlag("flag lives in a different ambient space")
    if not V2.contains(V1):
        raise InvalidFlag("V1 is not contained in V2")

    def predicate(Z):
        if contains(spec, Z) != INTERIOR:
            return False
        E = embed_point(spec, Z)
        return E.contains(V1) and V2.contains(E)

    return predicate


# ---------------------------------------------------------------- sampling


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_matrix(spec, rng):
    """Gaussian matrix with the right symmetry (not scaled into the domain)."""
    G = _gaussian(rng, spec.shape)
    if spec.kind == "III":
        return (G + G.T) / 2
    if spec.kind == "II":
        return (G - G.T) / 2
    return G


def random_interior(spec, rng, radius=0.9):
    """Random interior point with operator norm uniform in (0, radius)."""
    G = random_matrix(spec, rng)
    nrm = np.linalg.norm(G, 2)
    return G * (radius * rng.uniform(0.05, 1.0) / nrm)


def random_unitary(k, rng):
    Q, R = np.linalg.qr(_gaussian(rng, (k, k)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_boundary(spec, rng, r):
    """Random boundary point in the stratum S_r (0 <= r < rank)."""
    rank = spec.rank
    if not 0 <= r < rank:
        raise InputError(f"stratum index must lie in [0, {rank})")
    units = rank - r
    s = np.r_[np.ones(units), rng.uniform(0.0, 0.9, r)]
    if spec.kind == "I":
        U = random_unitary(spec.p, rng)[:, : spec.q]
        V = random_unitary(spec.q, rng)
        return U @ np.diag(s) @ V.conj().T
    U = random_unitary(spec.n, rng)
    if spec.kind == "III":
        return U @ np.diag(s) @ U.T
    D = np.zeros((spec.n, spec.n), dtype=complex)
    for k, val in enumerate(s):
        D[2 * k, 2 * k + 1] = val
        D[2 * k + 1, 2 * k] = -val
    return U @ D @ U.T


def lie_algebra_element(spec, rng, isotropy_only=False):
    """Random element of the Lie algebra of the automorphism group."""
    k = spec.plane_dim
    m = spec.ambient - k
    A = _gaussian(rng, (k, k))
    A = (A - A.conj().T) / 2
    if spec.kind == "I":
        D = _gaussian(rng, (m, m))
        D = (D - D.conj().T) / 2
        B = np.zeros((k, m), dtype=complex) if isotropy_only else _gaussian(rng, (k, m))
    else:
        D = -A.T
        if isotropy_only:
            B = np.zeros((k, k), dtype=complex)
        else:
            B = _gaussian(rng, (k, k))
            B = (B + B.T) / 2 if spec.kind == "III" else (B - B.T) / 2
    return np.block([[A, B], [B.conj().T, D]])


def random_automorphism(spec, rng, scale=0.5, isotropy_only=False):
    X = lie_algebra_element(spec, rng, isotropy_only)
    return expm(scale * X / max(1.0, np.linalg.norm(X, 2)))
