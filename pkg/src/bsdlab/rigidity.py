"""Rigidity detectors and the decomposition of proper maps.

* ``detect_trivial`` fits samples (V, H(V)) of a subspace map by the model
  H(V) = W0 + iota(V) with iota linear and W0 fixed.
* ``detect_standard`` finds the smallest characteristic subspace containing
  the image and tests whether the map is affine in its chart.
* ``decompose`` splits f into a standard factor and a residual factor using
  the trivial model of f-flat at the top level.
* ``rank_gap_analysis`` is the pure integer bookkeeping over admissible
  index sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from . import subspaces as ss
from .config import FIT_TOL
from .domains import (
    BOUNDARY,
    DomainSpec,
    chart_of,
    contains,
    embed_point,
    random_boundary,
    random_interior,
)
from .errors import (
    ChartFailure,
    InputError,
    InsufficientSamples,
    OrthogonalityResidual,
    RegimeViolation,
)
from .modulimap import (
    generic_sharp,
    index_sequence,
)
from .polys import PolyMatrixMap, fit_polynomial


def _psd_intersection(spaces, N):
    """Common subspace of several subspaces (null space of sum of I - P)."""
    if not spaces:
        return ss.full(N)
    S = sum(np.eye(N) - E.projector() for E in spaces)
    w, v = np.linalg.eigh(S)
    return ss.Subspace.from_orthonormal(v[:, w < 1e-9 * len(spaces)])


def _psd_sum(spaces, N):
    if not spaces:
        return ss.zero(N)
    S = sum(E.projector() for E in spaces)
    w, v = np.linalg.eigh(S)
    return ss.Subspace.from_orthonormal(v[:, w > 1e-9 * len(spaces)])


# ---------------------------------------------------------------- trivial


@dataclass
class TrivialEmbeddingModel:
    W0: ss.Subspace
    iota: np.ndarray  # N' x N, injective on ``domain``
    domain: ss.Subspace
    residual: float
    gap: float = 0.0

    def __post_init__(self):
        if self.W0.dim and self.domain.dim:
            img = ss.orthonormal_basis(self.iota @ self.domain.ortho)
            if ss.numerical_rank(np.hstack([self.W0.ortho, img]), tol=1e-8) != self.W0.dim + img.shape[1]:
                raise InputError("W0 meets the image of iota")

    def __call__(self, V):
        img = self.iota @ V.ortho
        return ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack([self.W0.ortho, img])))

    def to_json(self):
        return {
            "W0": self.W0.to_json(),
            "iota": [[[float(z.real), float(z.imag)] for z in row] for row in self.iota],
            "domain": self.domain.to_json(),
            "residual": self.residual,
        }


@dataclass
class Reject:
    residual: float
    reason: str

    def to_json(self):
        return {"reject": self.reason, "residual": self.residual}


def detect_trivial(samples, tol=FIT_TOL):
    """Fit H(V) = W0 + iota(V) to samples [(V, H(V)), ...]."""
    samples = list(samples)
    if not samples:
        raise InsufficientSamples("no samples")
    N = samples[0][0].ambient_dim
    Np = samples[0][1].ambient_dim
    if len({V.dim for V, _ in samples}) > 1 or len({H.dim for _, H in samples}) > 1:
        return Reject(1.0, "sample dimensions are not constant")
    S = _psd_sum([V for V, _ in samples], N)
    d = S.dim
    if len(samples) < d * (d + 1):
        raise InsufficientSamples(f"{len(samples)} samples, need at least {d * (d + 1)}")
    W0 = _psd_intersection([H for _, H in samples], Np)
    vdim, hdim = samples[0][0].dim, samples[0][1].dim
    if hdim - W0.dim != vdim:
        return Reject(1.0, f"dim H(V) - dim W0 = {hdim - W0.dim} differs from dim V = {vdim}")
    # unknown X (Np x d) with (I - P_H) X c_V = 0 and P_W0 X = 0
    rows = []
    for V, H in samples:
        c = S.ortho.conj().T @ V.ortho
        A = np.eye(Np) - H.projector()
        rows.append(np.kron(c.T, A))
    if W0.dim:
        rows.append(np.kron(np.eye(d), W0.projector()))
    M = np.vstack(rows)
    _, s, vh = np.linalg.svd(M, full_matrices=False)
    X = vh[-1].conj().reshape(d, Np).T
    gap = float(s[-2] / s[0]) if len(s) > 1 and s[0] > 0 else 0.0
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] < 1e-6 * sv[0]:
        return Reject(1.0, "fitted iota is not injective")
    X = X / sv[0]
    iota = X @ S.ortho.conj().T
    model = TrivialEmbeddingModel(W0, iota, S, 0.0, gap)
    resid = max(H.distance(model(V)) for V, H in samples)
    model.residual = float(resid)
    if resid >= tol:
        return Reject(float(resid), "samples do not fit the trivial model")
    return model


# ---------------------------------------------------------------- distances


def _herm_power(M, power):
    w, v = np.linalg.eigh((M + M.conj().T) / 2)
    return (v * w**power) @ v.conj().T


def kobayashi_distance(Z1, Z2):
    """Distance in a type I domain: artanh of the norm of phi_{Z1}(Z2)."""
    Z1 = np.asarray(Z1, dtype=complex)
    Z2 = np.asarray(Z2, dtype=complex)
    p, q = Z1.shape
    A = _herm_power(np.eye(p) - Z1 @ Z1.conj().T, -0.5)
    B = _herm_power(np.eye(q) - Z1.conj().T @ Z1, 0.5)
    phi = A @ (Z2 - Z1) @ np.linalg.inv(np.eye(q) - Z1.conj().T @ Z2) @ B
    return float(np.arctanh(min(np.linalg.norm(phi, 2), 1 - 1e-16)))


# ---------------------------------------------------------------- standard


@dataclass
class StandardVerdict:
    standard: bool
    reason: str
    hull_V1: ss.Subspace
    hull_V2: ss.Subspace
    hull_rank: int
    affine_residual: float

    def to_json(self):
        return {
            "standard": self.standard,
            "reason": self.reason,
            "hull_dims": [self.hull_V1.dim, self.hull_V2.dim],
            "hull_rank": self.hull_rank,
            "affine_residual": self.affine_residual,
        }


def _hull_rank(target, V1, V2):
    a = V1.dim
    if target.kind == "I":
        return min(target.q - a, V2.dim - target.q)
    if target.kind == "III":
        return target.n - a
    return (target.n - a) // 2


def _graph_chart(E0, C0, F):
    """Chart matrix of F over E0 with values in C0 (all inside E0 + C0)."""
    basis = np.hstack([E0.ortho, C0.ortho])
    coords, *_ = np.linalg.lstsq(basis, F.ortho, rcond=None)
    k = E0.dim
    alpha, beta = coords[:k], coords[k:]
    s = np.linalg.svd(alpha, compute_uv=False)
    if s.size and s[-1] < 1e-8:
        raise ChartFailure("image plane leaves the chart of the characteristic hull")
    return beta @ np.linalg.inv(alpha)


def detect_standard(f, rng, samples=None):
    """Is f a standard embedding (affine into a characteristic hull of equal rank)?"""
    src, tgt = f.source, f.target
    n = samples or 2 * src.nvars + 12
    Zs = [random_interior(src, rng) for _ in range(n)]
    planes = [embed_point(tgt, f(Z)) for Z in Zs]
    N = tgt.ambient
    V1 = _psd_intersection(planes, N)
    V2 = _psd_sum(planes, N) if tgt.kind == "I" else ss.perp(V1, tgt.bilinear)
    rank = _hull_rank(tgt, V1, V2)

    def verdict(ok, why, resid=float("nan")):
        return StandardVerdict(ok, why, V1, V2, rank, resid)

    if rank != src.rank:
        return verdict(False, f"characteristic hull has rank {rank}, source has rank {src.rank}")
    H = tgt.hermitian
    U = ss.intersect(V2, ss.perp(V1, H)) if V1.dim else V2
    if ss.intersect(U, V1).dim:
        raise ChartFailure("characteristic hull has a degenerate first leg")
    E0 = ss.intersect(embed_point(tgt, f(np.zeros(src.shape))), U)
    C0 = ss.intersect(U, ss.perp(E0, H))
    Ys = []
    for E in planes:
        Ys.append(_graph_chart(E0, C0, ss.intersect(E, U)))
    hull = DomainSpec.typeI(max(C0.dim, E0.dim), min(C0.dim, E0.dim)) if E0.dim and C0.dim else None
    if hull is None:
        return verdict(True, "hull is a single point", 0.0)
    xs = [src.coords(Z) for Z in Zs]
    Yarr = np.array(Ys)
    if Yarr.shape[1:] != hull.shape:
        Yarr = Yarr.transpose(0, 2, 1)
    _, resid = fit_polynomial(src, hull, xs, Yarr, degree=1)
    scale = max(1.0, float(np.abs(Yarr).max()))
    if resid > 1e-7 * scale:
        return verdict(False, "map is not affine in the chart of its characteristic hull", resid)
    # an affine map into the hull must also send boundary to boundary
    for r in range(src.rank):
        for _ in range(3):
            Zb = random_boundary(src, rng, r)
            if contains(tgt, f(Zb)) != BOUNDARY:
                return verdict(False, "boundary points are not mapped to the boundary", resid)
    return verdict(True, "affine in the chart of a characteristic hull of equal rank", resid)


# ---------------------------------------------------------------- decompose


@dataclass
class DecompositionResult:
    F1: PolyMatrixMap
    F2: PolyMatrixMap | None
    model: TrivialEmbeddingModel
    embedding: dict
    residuals: dict
    regime: str
    index_sequence: list
    post_transpose: bool = False
    notes: list = field(default_factory=list)

    def reassemble(self, Z):
        return _reassemble(self, Z)

    def to_json(self):
        return {
            "F1": self.F1.to_json(),
            "F2": self.F2.to_json() if self.F2 is not None else None,
            "model": self.model.to_json(),
            "embedding": {k: (v.to_json() if isinstance(v, ss.Subspace) else v) for k, v in self.embedding.items()
                          if not isinstance(v, np.ndarray)},
            "residuals": self.residuals,
            "regime": self.regime,
            "index_sequence": self.index_sequence,
            "post_transpose": self.post_transpose,
            "notes": self.notes,
        }


def transpose_target(f):
    """Compose f with the transpose of a square type I target."""
    tgt = f.target
    if tgt.kind != "I" or tgt.p != tgt.q:
        raise InputError("target transpose needs a square type I target")
    return PolyMatrixMap(f.source, tgt, f.exps, f.coef.transpose(0, 2, 1), f.name + " (transposed)")


def _regime(src, tgt, seq):
    q, qp = src.rank, tgt.rank
    if seq.unit_steps(tgt.kind):
        return "unit-step"
    if qp == 2 * q - 1:
        return "whitney-boundary"
    return "no-unit-step"


def _top_level_model(f, rng):
    src = f.source
    top = Fraction(src.rank - 1)
    d = src.ambient
    pairs = []
    for _ in range(d * (d + 1) + 4):
        sigma, _, res = generic_sharp(f, top, rng)
        pairs.append((sigma.V1, res.flag.V1))
    return detect_trivial(pairs)


def decompose(f, rng, npoints=200, strict=False):
    """f = iota o (F1 x F2) with F1 standard, from the trivial model of f-flat_{q-1}.

    With ``strict`` a map without a unit step in its index sequence is
    refused outright.  Otherwise the decomposition is attempted whenever
    the top-level map fits a trivial embedding, and the regime is reported.
    """
    src, tgt = f.source, f.target
    if src.rank < 2:
        raise RegimeViolation("decomposition needs source rank >= 2")
    seq = index_sequence(f, rng)
    regime = _regime(src, tgt, seq)
    if strict and regime != "unit-step":
        raise RegimeViolation(f"index sequence {seq.as_dict()} has no unit step ({regime})")
    g, post_t = f, False
    model = _top_level_model(f, rng)
    if isinstance(model, Reject) and tgt.kind == "I" and tgt.p == tgt.q:
        gt = transpose_target(f)
        alt = _top_level_model(gt, rng)
        if not isinstance(alt, Reject):
            g, post_t, model = gt, True, alt
    if isinstance(model, Reject):
        raise RegimeViolation(f"top-level moduli map is not a trivial embedding ({model.reason}, "
                              f"residual {model.residual:.2e})")
    H = tgt.hermitian
    Nt = tgt.ambient
    S1 = ss.Subspace.from_orthonormal(ss.orthonormal_basis(model.iota))
    T = ss.subspace_sum(model.W0, S1)
    M = ss.perp(T, H)
    if ss.intersect(T, M).dim:
        raise OrthogonalityResidual("standard part is degenerate for the Hermitian form")
    if M.dim and tgt.kind != "I":
        raise ChartFailure("splitting off a residual factor is implemented for type I targets only")
    Gm = M.ortho.conj().T @ H.matrix @ M.ortho
    w, v = np.linalg.eigh((Gm + Gm.conj().T) / 2)
    Mp = M.ortho @ v[:, w > 0] / np.sqrt(w[w > 0])
    Mm = M.ortho @ v[:, w < 0] / np.sqrt(-w[w < 0])
    k2, m2 = Mp.shape[1], Mm.shape[1]
    embedding = {"W0": model.W0, "standard_space": T, "residual_space": M,
                 "residual_signature": [k2, m2], "Mplus": Mp, "Mminus": Mm}

    Zs = [random_interior(src, rng) for _ in range(npoints)]
    xs, Gs, Ys = [], [], []
    orth, gres = 0.0, 0.0
    for Z in Zs:
        E = embed_point(tgt, g(Z))
        F1p = ss.intersect(E, T)
        F2p = ss.intersect(E, M) if M.dim else ss.zero(Nt)
        if F1p.dim + F2p.dim != E.dim:
            raise OrthogonalityResidual(f"image plane does not split: dims {F1p.dim} + {F2p.dim} != {E.dim}")
        orth = max(orth, E.distance(ss.subspace_sum(F1p, F2p)))
        gres = max(gres, F1p.distance(model(embed_point(src, Z))))
        G = ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack([F1p.ortho, Mp])))
        xs.append(src.coords(Z))
        Gs.append(chart_of(tgt, G))
        if k2:
            coords = np.linalg.lstsq(np.hstack([Mp, Mm]), F2p.ortho, rcond=None)[0]
            Ys.append(coords[k2:] @ np.linalg.inv(coords[:k2]))
    if orth > FIT_TOL:
        raise OrthogonalityResidual(f"image planes are not orthogonal sums (residual {orth:.2e})")
    if gres > FIT_TOL:
        raise OrthogonalityResidual(f"standard part differs from the model map (residual {gres:.2e})")
    F1, r1 = fit_polynomial(src, tgt, xs, Gs, degree=1, name="F1")
    if r1 > FIT_TOL:
        raise ChartFailure(f"standard factor is not affine in the target chart (residual {r1:.2e})")
    F2, r2 = None, 0.0
    if k2:
        if k2 > m2:
            raise ChartFailure("residual factor has more positive than negative directions")
        F2, r2 = fit_polynomial(src, DomainSpec.typeI(m2, k2), xs, Ys, degree=max(f.degree, 1), name="F2")
    if post_t:
        F1 = transpose_target(F1)
    std = detect_standard(F1, rng)
    if not std.standard:
        raise RegimeViolation(f"top-level trivial model gives a non-standard factor: {std.reason}")
    result = DecompositionResult(F1, F2, model, embedding, {}, regime, seq.values, post_t)
    result.notes.append(f"F1 standard: {std.reason}")
    reass = max(float(np.abs(result.reassemble(Z) - f(Z)).max()) for Z in Zs)
    result.residuals = {"orthogonality": orth, "standard_vs_model": gres, "F1_fit": r1,
                        "F2_fit": r2, "reassembly": reass, "points": npoints}
    if regime != "unit-step":
        result.notes.append(f"index sequence {seq.values} has no unit step ({regime}); "
                            "decomposed from the trivial top-level model")
    return result


def _reassemble(res, Z):
    src_F1 = res.F1
    tgt = src_F1.target
    W1 = src_F1(Z)
    if res.post_transpose:
        W1 = W1.T
    G = embed_point(tgt, W1)
    part1 = ss.intersect(G, res.embedding["standard_space"])
    mats = [part1.ortho]
    if res.F2 is not None:
        Y = res.F2(Z)
        mats.append(res.embedding["Mplus"] + res.embedding["Mminus"] @ Y)
    E = ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack(mats)))
    W = chart_of(tgt, E)
    return W.T if res.post_transpose else W


def kobayashi_check(res, rng, pairs=50):
    """Largest gap between source distances and distances through F1."""
    src = res.F1.source
    if src.kind != "I" or res.F1.target.kind != "I":
        raise InputError("the distance formula is implemented for type I only")
    worst = 0.0
    for _ in range(pairs):
        Z1, Z2 = random_interior(src, rng), random_interior(src, rng)
        d0 = kobayashi_distance(Z1, Z2)
        d1 = kobayashi_distance(res.F1(Z1), res.F1(Z2))
        worst = max(worst, abs(d0 - d1))
    return worst


# ---------------------------------------------------------------- rank gap

COVERED = {("I", "I"), ("II", "II"), ("III", "III"), ("III", "I")}


def slot_count(src_kind, q):
    return 2 * q - 3 if src_kind == "II" else q - 1


def index_range(tgt_kind, qp):
    """Admissible values of the indices for a target of rank qp."""
    if tgt_kind == "II":
        return 2, 2 * qp - 2
    return 1, qp - 1


def first_unit(tgt_kind):
    return 2 if tgt_kind == "II" else 1


def admissible_sequences(src_kind, q, tgt_kind, qp):
    """Every strictly increasing sequence of indices within the bounds."""
    from itertools import combinations

    lo, hi = index_range(tgt_kind, qp)
    yield from combinations(range(lo, hi + 1), slot_count(src_kind, q))


def has_unit_step(seq, tgt_kind):
    prev = 0
    for j, v in enumerate(seq):
        if v - prev == (first_unit(tgt_kind) if j == 0 else 1):
            return True
        prev = v
    return False


@lru_cache(maxsize=None)
def _count_no_unit(L, lo, hi, first_forbidden):
    """Strictly increasing sequences of length L in [lo, hi] whose first
    entry is not ``first_forbidden`` and whose steps are all >= 2."""
    if L == 0:
        return 1
    # ways[v] = number of valid prefixes ending at v
    ways = {v: 1 for v in range(lo, hi + 1) if v != first_forbidden}
    for _ in range(L - 1):
        acc, new = 0, {}
        for v in range(lo, hi + 1):
            acc += ways.get(v - 2, 0)
            new[v] = acc
        ways = new
    return sum(ways.values())


def _example_no_unit(L, lo, hi, first_forbidden):
    start = lo if lo != first_forbidden else lo + 1
    seq = [start + 2 * j for j in range(L)]
    return seq if L and seq[-1] <= hi else None


def rank_gap_analysis(src_kind, q, tgt_kind, qp):
    """Integer bookkeeping over admissible index sequences."""
    if q < 2:
        raise InputError("rank_gap_analysis needs q >= 2")
    if src_kind not in ("I", "II", "III") or tgt_kind not in ("I", "II", "III"):
        raise InputError("kinds must be I, II or III")
    if qp < 1:
        raise InputError("target rank must be positive")
    L = slot_count(src_kind, q)
    lo, hi = index_range(tgt_kind, qp)
    width = max(0, hi - lo + 1)
    total = comb(width, L)
    fu = first_unit(tgt_kind)
    no_unit = _count_no_unit(L, lo, hi, fu) if width else 0
    # sequences avoiding i_1 = 1 (strictly increasing, no further constraint)
    avoid_i1 = total - (comb(max(0, hi - 1), L - 1) if lo <= 1 <= hi else 0)
    covered = (src_kind, tgt_kind) in COVERED
    if 2 <= qp < 2 * q - 1:
        regime = "forced-unit-step"
    elif qp == 2 * q - 1:
        regime = "whitney-boundary"
    elif qp < 2:
        regime = "below"
    else:
        regime = "above"
    forced = no_unit == 0
    verdict, reason = "not predicted", ""
    if total == 0:
        verdict, reason = "nonexistent", "no admissible index sequence"
    elif (src_kind, tgt_kind) == ("I", "III") and forced:
        verdict, reason = "nonexistent", "every sequence has a unit step, forcing a standard factor"
    elif src_kind == "II" and tgt_kind in ("I", "III") and avoid_i1 == 0:
        verdict, reason = "nonexistent", "every sequence starts with i_1 = 1, forcing a standard factor"
    elif covered and forced:
        verdict, reason = "decomposes", "every sequence has a unit step"
    return {
        "source": {"kind": src_kind, "rank": q},
        "target": {"kind": tgt_kind, "rank": qp},
        "slots": L,
        "bounds": [lo, hi],
        "sequences": total,
        "without_unit_step": no_unit,
        "without_i1_equal_1": avoid_i1,
        "forced_unit_step": forced,
        "regime": regime,
        "covered_pair": covered,
        "whitney_escape": regime == "whitney-boundary" and no_unit > 0,
        "escape_example": _example_no_unit(L, lo, hi, fu) if no_unit else None,
        "verdict": verdict,
        "reason": reason,
    }


def rank_gap_table(max_q=6, extra=2):
    """rank_gap_analysis over all kind pairs, 2 <= q <= max_q, 1 <= q' <= 2q + extra."""
    rows = []
    for sk in ("I", "II", "III"):
        for tk in ("I", "II", "III"):
            for q in range(2, max_q + 1):
                for qp in range(1, 2 * q + extra + 1):
                    rows.append(rank_gap_analysis(sk, q, tk, qp))
    return rows
