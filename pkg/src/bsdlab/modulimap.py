"""Induced maps on the moduli of characteristic subspaces.

For a polynomial map f between domains and a flag sigma of the source, the
characteristic subspace X_sigma meets the chart in an affine subspace of the
source coordinates.  Restricting f to it and expanding at a point P gives
exact Taylor coefficients; their span N^k lives in Hom(E, V'/E) with
E = f(P).  In the chart centred at E with complement span(e_{k'+1}, ...)
a tangent matrix A acts as u -> A u, so

    R = span of all column spaces      (the image side)
    K = common kernel                  (the kernel side)

and the smallest characteristic subspace through f(P) whose tangent space
contains every jet is {W : K < W < E + R}.  Its flag is the value of the
induced map f#_r at sigma.  The same flag is obtained, independently, by
intersecting and summing the image planes of many sample points of the
slice; that is the oracle route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import itertools

import numpy as np
from scipy.optimize import minimize

from . import subspaces as ss
from .config import GENERIC_POINTS, GENERIC_RETRIES
from .domains import embed_point, random_interior, singular_values
from .errors import (
    ChartFailure,
    DegenerateJet,
    InconsistentDependence,
    InvalidFlag,
    LevelOrderViolation,
    MonotonicityViolation,
    PointNotOnSlice,
    PropertyViolation,
)
from .moduli import (
    FlagPair,
    boundary_flag,
    as_level,
    level_of_dim,
    make_flag,
    q_mu_contains,
    random_flag,
    random_subspace_of,
    random_superspace_of,
    v1_dim,
    v2_dim,
    z_tau_contains,
)

HOLOMORPHIC = "Holomorphic"
ANTIHOLOMORPHIC = "AntiHolomorphic"


# ---------------------------------------------------------------- slices


class SliceChart:
    """Affine parametrisation x = x0 + N t of X_sigma in source coordinates.

    With ``boundary`` the planes are also required to lie in the Hermitian
    annihilator of V1; for a flag over an isotropic V1 this cuts out the
    part of the slice that meets the closed domain.
    """

    def __init__(self, spec, sigma, boundary=False):
        self.spec = spec
        self.sigma = sigma
        self.boundary = boundary
        A, c = self._system()
        self.A, self.c = A, c
        x0, *_ = np.linalg.lstsq(A, c, rcond=None)
        scale = max(1.0, float(np.abs(c).max(initial=0)))
        if np.abs(A @ x0 - c).max(initial=0) > 1e-8 * scale:
            raise InvalidFlag("characteristic subspace misses the Harish-Chandra chart")
        self.x0 = x0
        self.N = ss.nullspace(A, tol=1e-10) if A.shape[0] else np.eye(spec.nvars, dtype=complex)

    def _system(self):
        spec, sigma = self.spec, self.sigma
        k = spec.plane_dim
        basis = spec.chart_basis()
        V = sigma.V1.ortho
        a, b = V[:k], V[k:]
        blocks, rhs = [], []
        if V.shape[1]:
            blocks.append(np.stack([(B @ a).ravel() for B in basis], axis=1))
            rhs.append(b.ravel())
        if spec.kind == "I":
            comp = sigma.V2.complement().ortho.conj().T
            if comp.shape[0]:
                L1, L2 = comp[:, :k], comp[:, k:]
                blocks.append(np.stack([(L2 @ B).ravel() for B in basis], axis=1))
                rhs.append(-L1.ravel())
        if self.boundary and V.shape[1]:
            # a^H - b^H Z = 0
            blocks.append(np.stack([(b.conj().T @ B).ravel() for B in basis], axis=1))
            rhs.append(a.conj().T.ravel())
        if not blocks:
            return np.zeros((0, spec.nvars), dtype=complex), np.zeros(0, dtype=complex)
        return np.vstack(blocks), np.concatenate(rhs)

    @property
    def dim(self):
        return self.N.shape[1]

    def point(self, x):
        return self.spec.assemble(x)

    def on_slice(self, Z, tol=1e-8):
        x = self.spec.coords(Z)
        scale = max(1.0, float(np.abs(self.c).max(initial=0)), float(np.abs(x).max(initial=0)))
        return float(np.abs(self.A @ x - self.c).max(initial=0)) <= tol * scale

    def base_point(self, through=None):
        """Coordinates of a point of the slice inside the (closed) domain."""
        if through is not None:
            if not self.on_slice(through):
                raise PointNotOnSlice("base point does not lie on the characteristic subspace")
            return self.spec.coords(through)
        if self.boundary:
            return self.x0
        if self._norm(self.x0) < 1 - 1e-3 or self.dim == 0:
            if self._norm(self.x0) >= 1 - 1e-3:
                raise InvalidFlag("characteristic subspace misses the domain")
            return self.x0
        d = self.dim

        def obj(v):
            return self._norm(self.x0 + self.N @ (v[:d] + 1j * v[d:]))

        res = minimize(obj, np.zeros(2 * d), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000 * d})
        if res.fun >= 1 - 1e-3:
            raise InvalidFlag("characteristic subspace misses the domain")
        v = res.x
        return self.x0 + self.N @ (v[:d] + 1j * v[d:])

    def _norm(self, x):
        s = singular_values(self.spec.assemble(x))
        return float(s.max()) if s.size else 0.0

    def _admissible(self, x, base_norm):
        s = singular_values(self.spec.assemble(x))
        if not self.boundary:
            return s.max(initial=0) < max(0.95, (1 + base_norm) / 2)
        units = self.sigma.V1.dim
        if s.max(initial=0) > 1 + 1e-9:
            return False
        return int(np.count_nonzero(s > 1 - 1e-3)) == units

    def sample(self, rng, count, base):
        """``count`` random points of the slice inside the (closed) domain."""
        out = []
        if self.dim == 0:
            return [self.point(base) for _ in range(count)]
        base_norm = self._norm(base)
        for _ in range(count):
            t = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            u = self.N @ (t / np.linalg.norm(t))
            lo, hi = 0.0, 1.0
            while self._admissible(base + hi * u, base_norm) and hi < 1e6:
                lo, hi = hi, 2 * hi
            for _ in range(40):
                mid = (lo + hi) / 2
                if self._admissible(base + mid * u, base_norm):
                    lo = mid
                else:
                    hi = mid
            out.append(self.point(base + rng.uniform(0.1, 0.9) * lo * u))
        return out


# ---------------------------------------------------------------- jets


def _target_chart_point(f, Z):
    W = f(Z)
    if not np.all(np.isfinite(W)):
        raise ChartFailure("image leaves the big Schubert cell of the target chart")
    return W


def _stack_span(vectors, N):
    if not vectors:
        return np.zeros((N, 0), dtype=complex)
    return ss.orthonormal_basis(np.column_stack(vectors), tol=1e-10)


@dataclass
class JetSpan:
    sigma: object
    P: np.ndarray
    k: int
    span: ss.Subspace
    k0: int
    dims: list
    image: np.ndarray  # f(P) in target chart
    target: object

    def matrices(self):
        shape = self.target.shape
        return [self.span.ortho[:, j].reshape(shape) for j in range(self.span.dim)]

    def image_space(self):
        """R: span of the column spaces, as a subspace of C^{rows}."""
        rows = self.target.shape[0]
        mats = self.matrices()
        if not mats:
            return ss.zero(rows)
        return ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack(mats), tol=1e-9))

    def kernel(self):
        """K: common kernel, as a subspace of C^{cols}."""
        cols = self.target.shape[1]
        mats = self.matrices()
        if not mats:
            return ss.full(cols)
        return ss.Subspace.from_orthonormal(ss.nullspace(np.vstack(mats), tol=1e-9))

    def gr_dim(self):
        """Dimension of Gr_(P,sigma) = {A : Im A < R, Ker A > K}."""
        m = self.target.shape[1] - self.kernel().dim
        if self.target.kind == "I":
            return self.image_space().dim * m
        if self.target.kind == "III":
            return m * (m + 1) // 2
        return m * (m - 1) // 2


def jet_span(f, sigma, P, k=None, chart=None):
    """Span of the derivatives of f restricted to X_sigma at P, orders 1..k.

    With k=None the order is raised until two consecutive spans agree
    (k0 is the first order at which the span stops growing).
    """
    chart = chart or SliceChart(f.source, sigma)
    if not chart.on_slice(P):
        raise PointNotOnSlice("P does not lie on X_sigma")
    x0 = f.source.coords(P)
    W = _target_chart_point(f, P)
    out_dim = int(np.prod(f.target.shape))
    cap = out_dim if k is None else k
    tensors = f.derivative_tensors(x0, f.degree) if f.degree else []
    N = chart.N
    d = N.shape[1]
    vectors, dims = [], [0]
    order = 0
    while True:
        order += 1
        if order <= len(tensors):
            T = tensors[order - 1].reshape((f.source.nvars,) * order + (out_dim,))
            for _ in range(order):
                T = np.tensordot(T, N, axes=([0], [0]))
            # axes are now (out, t_1, ..., t_order)
            for combo in itertools.combinations_with_replacement(range(d), order):
                vectors.append(T[(slice(None),) + combo])
        basis = _stack_span(vectors, out_dim)
        dims.append(basis.shape[1])
        if k is None and (dims[-1] == dims[-2] or order >= cap):
            break
        if k is not None and order >= k:
            break
    k0 = next(j for j in range(len(dims)) if dims[j] == dims[-1])
    span = ss.Subspace.from_orthonormal(basis)
    return JetSpan(sigma, np.asarray(P), order, span, k0, dims[1:], W, f.target)


def index_of(target, a):
    """Index i of a target flag whose first leg has dimension a."""
    if target.kind == "II":
        return 2 * (target.n // 2) - a
    return target.plane_dim - a


def hull_flag(target, W, K, R=None):
    """Flag of {planes between K and E + R} at the chart point W."""
    k = target.plane_dim
    lift = np.vstack([np.eye(k), W])
    V1 = ss.Subspace.from_orthonormal(ss.orthonormal_basis(lift @ K.ortho))
    level = level_of_dim(target, V1.dim)
    if target.kind == "I":
        rows = target.shape[0]
        extra = np.vstack([np.zeros((k, R.dim), dtype=complex), R.ortho]) if R.dim else np.zeros((k + rows, 0))
        V2 = ss.Subspace.from_orthonormal(ss.orthonormal_basis(np.hstack([lift, extra])))
        return FlagPair(target, level, V1, V2)
    return FlagPair(target, level, V1)


def _regular(flag):
    spec = flag.spec
    if spec.kind != "I":
        return True
    return flag.V2.dim == v2_dim(spec, flag.level)


@dataclass
class SharpResult:
    flag: FlagPair
    index: int
    a: int
    k0: int
    gr_dims: list
    spread: float  # largest disagreement between the flags at the sampled P
    regular: bool
    points: list = field(default_factory=list)


def f_sharp(f, r, sigma, rng, base=None, boundary=False, npoints=GENERIC_POINTS):
    """Jet route for f#_r(sigma) with the genericity protocol.

    ``base`` is a chart point on X_sigma (interior, or on the boundary
    component when ``boundary``); it is searched for when omitted.
    """
    r = as_level(r)
    if sigma.level != r:
        raise InvalidFlag(f"flag has level {sigma.level}, expected {r}")
    chart = SliceChart(f.source, sigma, boundary=boundary)
    x_base = chart.base_point(base)
    pts = chart.sample(rng, npoints, x_base)
    flags, gdims, k0s = [], [], []
    for P in pts:
        J = jet_span(f, sigma, P, chart=chart)
        K, R = J.kernel(), J.image_space()
        gdims.append((J.span.dim, K.dim, R.dim))
        k0s.append(J.k0)
        flags.append(hull_flag(f.target, J.image, K, R))
    if len(set(gdims)) > 1:
        raise DegenerateJet(f"jet dimensions vary across sampled points: {sorted(set(gdims))}")
    spread = max((flags[0].distance(g) for g in flags[1:]), default=0.0)
    a = flags[0].V1.dim
    return SharpResult(flags[0], index_of(f.target, a), a, max(k0s), [g[0] for g in gdims],
                       spread, _regular(flags[0]), pts)


def sharp_oracle(f, sigma, rng, base=None, nsamples=None, boundary=False):
    """Direct route: intersect and sum the image planes of sampled points."""
    chart = SliceChart(f.source, sigma, boundary=boundary)
    x_base = chart.base_point(base)
    n = nsamples or max(12, 3 * chart.dim + 8)
    pts = chart.sample(rng, n, x_base)
    target = f.target
    Nt = target.ambient
    S_out = np.zeros((Nt, Nt), dtype=complex)
    S_in = np.zeros((Nt, Nt), dtype=complex)
    for P in pts:
        E = embed_point(target, _target_chart_point(f, P))
        Pr = E.projector()
        S_in += Pr
        S_out += np.eye(Nt) - Pr
    w1, v1 = np.linalg.eigh(S_out)
    V1 = ss.Subspace.from_orthonormal(v1[:, w1 < 1e-9 * n])
    level = level_of_dim(target, V1.dim)
    if target.kind == "I":
        w2, v2 = np.linalg.eigh(S_in)
        V2 = ss.Subspace.from_orthonormal(v2[:, w2 > 1e-9 * n])
        return FlagPair(target, level, V1, V2)
    return FlagPair(target, level, V1)


def generic_flag(spec, level, rng):
    """Random flag at ``level`` together with an interior point of its slice."""
    Z0 = random_interior(spec, rng, radius=0.7)
    return random_flag(spec, level, rng, through=Z0), Z0


def generic_sharp(f, r, rng, retries=GENERIC_RETRIES):
    """f#_r at a freshly drawn generic flag; resamples on DegenerateJet."""
    last = None
    for _ in range(retries + 1):
        sigma, Z0 = generic_flag(f.source, r, rng)
        try:
            return sigma, Z0, f_sharp(f, r, sigma, rng, base=Z0)
        except DegenerateJet as exc:
            last = exc
    raise DegenerateJet(f"no generic flag found in {retries} retries: {last}")


# ---------------------------------------------------------------- indices


def index_slots(spec):
    """Source levels entering the index sequence, in order.

    Integer levels 1..q-1; for type II sources the half levels r + 1/2
    with 1 <= r <= q-2 sit between consecutive integer levels.
    """
    q = spec.rank
    out = []
    for r in range(1, q):
        if spec.kind == "II" and r >= 2:
            out.append(Fraction(r - 1) + Fraction(1, 2))
        out.append(Fraction(r))
    return out


def index_bound(target):
    if target.kind == "II":
        return 2 * (target.n // 2) - 2
    return target.plane_dim - 1


@dataclass
class IndexSequence:
    levels: list
    values: list
    k0: dict = field(default_factory=dict)

    def as_dict(self):
        return {str(lv): i for lv, i in zip(self.levels, self.values)}

    def strictly_increasing(self):
        seq = [0] + list(self.values)
        return all(b > a for a, b in zip(seq, seq[1:]))

    def unit_steps(self, target_kind="I"):
        """Positions where consecutive slots (with i_0 = 0) differ by the unit."""
        seq = [0] + list(self.values)
        out = []
        for j, (a, b) in enumerate(zip(seq, seq[1:])):
            unit = 2 if (target_kind == "II" and j == 0) else 1
            if b - a == unit:
                out.append(self.levels[j])
        return out

    def to_json(self):
        return {"levels": [str(x) for x in self.levels], "values": list(self.values),
                "k0": {str(k): v for k, v in self.k0.items()}}


def index_sequence(f, rng, samples=3, check=True):
    """i_r read off f#_r at generic flags for every slot level."""
    levels = index_slots(f.source)
    values, k0 = [], {}
    for lv in levels:
        seen = set()
        for _ in range(samples):
            _, _, res = generic_sharp(f, lv, rng)
            seen.add(res.index)
            k0[lv] = max(k0.get(lv, 0), res.k0)
        if len(seen) > 1:
            raise DegenerateJet(f"index at level {lv} is not constant on generic flags: {sorted(seen)}")
        values.append(seen.pop())
    seq = IndexSequence(levels, values, k0)
    if check:
        if values and values[-1] <= 0:
            raise DegenerateJet("generic slices have constant image (degenerate map)")
        if not seq.strictly_increasing():
            raise MonotonicityViolation(f"index sequence {seq.as_dict()} is not strictly increasing")
        bound = index_bound(f.target)
        if values and max(values) > bound:
            raise MonotonicityViolation(f"index {max(values)} exceeds the bound {bound}")
    return seq


# ---------------------------------------------------------------- holomorphy


def _leg_variants(spec, sigma, Z0, rng):
    """Flags (C, B) and (A, D) that change one leg of sigma = (A, B) by one dimension."""
    A, B = sigma.V1, sigma.V2
    E0 = embed_point(spec, Z0)
    N = spec.ambient
    # D = (B cap H) + <w>, with H a hyperplane through E0
    lB = random_subspace_of(E0.complement(), 1, rng).ortho[:, 0]
    H = ss.Subspace.from_orthonormal(ss.nullspace(lB.conj()[None, :]))
    w = random_subspace_of(B.complement(), 1, rng)
    D = ss.subspace_sum(ss.intersect(B, H), w)
    # C = (A cap H') + <u>, u in E0
    lA = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    Hp = ss.Subspace.from_orthonormal(ss.nullspace(lA.conj()[None, :]))
    u = random_subspace_of(E0, 1, rng)
    C = ss.subspace_sum(ss.intersect(A, Hp), u)
    return make_flag(spec, sigma.level, C, B), make_flag(spec, sigma.level, A, D)


@dataclass
class Classification:
    kind: str
    votes: dict
    pairs: int
    level: Fraction
    flat: object = None  # V1 -> V1' on Sigma_r samples

    def to_json(self):
        return {"kind": self.kind, "votes": self.votes, "pairs": self.pairs, "level": str(self.level)}


def f_flat_classify(f, r, rng, pairs=50, tol=1e-7):
    """Leg-dependence test: does pr' f#_r(A, B) depend on A only or on B only?"""
    r = as_level(r)
    spec = f.source

    def flat(V1):
        from .moduli import sigma_point

        sigma = sigma_point(spec, r, V1)
        return f_sharp(f, r, sigma, rng, boundary=True).flag.V1

    if spec.kind != "I":
        return Classification(HOLOMORPHIC, {HOLOMORPHIC: 0}, 0, r, flat)
    votes = {HOLOMORPHIC: 0, ANTIHOLOMORPHIC: 0, "both": 0, "neither": 0}
    for _ in range(pairs):
        for _attempt in range(GENERIC_RETRIES):
            sigma, Z0 = generic_flag(spec, r, rng)
            try:
                alt_A, alt_B = _leg_variants(spec, sigma, Z0, rng)
                F0 = f_sharp(f, r, sigma, rng, base=Z0).flag.V1
                FA = f_sharp(f, r, alt_A, rng, base=Z0).flag.V1
                FB = f_sharp(f, r, alt_B, rng, base=Z0).flag.V1
                break
            except DegenerateJet:
                continue
        else:
            raise DegenerateJet("could not find generic flag pairs")
        dep_A = F0.distance(FA) > tol
        dep_B = F0.distance(FB) > tol
        if dep_A and not dep_B:
            votes[HOLOMORPHIC] += 1
        elif dep_B and not dep_A:
            votes[ANTIHOLOMORPHIC] += 1
        elif dep_A and dep_B:
            votes["both"] += 1
        else:
            votes["neither"] += 1
    if votes["both"]:
        raise InconsistentDependence(f"F depends on both legs in {votes['both']} of {pairs} pairs")
    kinds = [k for k in (HOLOMORPHIC, ANTIHOLOMORPHIC) if votes[k]]
    if len(kinds) != 1 or votes["neither"]:
        raise InconsistentDependence(f"leg-dependence votes disagree: {votes}")
    return Classification(kinds[0], votes, pairs, r, flat)


# ---------------------------------------------------------------- respects


def _sample_z_tau(spec, s, r, rng):
    """tau at level s and sigma in Z_tau at level r (X_tau inside X_sigma)."""
    tau, Z0 = generic_flag(spec, s, rng)
    V1 = random_subspace_of(tau.V1, v1_dim(spec, r), rng)
    V2 = random_superspace_of(tau.V2, v2_dim(spec, r), rng) if spec.kind == "I" else None
    return tau, make_flag(spec, r, V1, V2), Z0


def _sample_q_mu(spec, s, r, rng):
    """mu at level s > r and sigma with X_sigma inside X_mu."""
    mu, Z0 = generic_flag(spec, s, rng)
    E0 = embed_point(spec, Z0)
    extra = v1_dim(spec, r) - mu.V1.dim
    rest = ss.intersect(E0, mu.V1.complement())
    V1 = ss.subspace_sum(mu.V1, random_subspace_of(rest, extra, rng)) if extra else mu.V1
    V2 = None
    if spec.kind == "I":
        more = v2_dim(spec, r) - E0.dim
        room = ss.intersect(mu.V2, E0.complement())
        V2 = ss.subspace_sum(E0, random_subspace_of(room, more, rng)) if more else E0
    return mu, make_flag(spec, r, V1, V2), Z0


def _boundary_stratum_of(target, V1p, a):
    """Classify the image of a boundary flag: (ok, nullity, signature).

    The first leg must have the generic dimension, be positive
    semidefinite and carry at least one null direction.
    """
    sig = ss.restrict_signature(V1p, target.hermitian, tol=1e-8)
    ok = V1p.dim == a and a > 0 and sig[1] == 0 and sig[2] >= 1
    return ok, sig[2], sig


def _line_image(f, spec, r, tau, Z0, rng, ts=(-0.6, -0.2, 0.3, 0.8)):
    """Push a pencil of first legs inside Z_tau through f-flat_r.

    The pencil is A + <u + t v>; its images lie on a line of the target
    Grassmannian exactly when they share a hyperplane and span one more
    dimension.  Returns (ok, info) for ``record``.
    """
    k = v1_dim(spec, r)
    B = random_subspace_of(tau.V1, k + 1, rng).ortho
    A, u, v = B[:, : k - 1], B[:, k - 1], B[:, k]
    V2 = random_superspace_of(tau.V2, v2_dim(spec, r), rng) if spec.kind == "I" else None
    images = []
    try:
        for t in ts:
            V1 = ss.span(*A.T, u + t * v)
            images.append(f_sharp(f, r, make_flag(spec, r, V1, V2), rng, base=Z0).flag.V1)
    except PropertyViolation as exc:
        return False, {"error": str(exc)}
    a = images[0].dim
    meet = ss.intersect_all(images).dim
    join = ss.sum_all(images).dim
    constant = join == a
    ok = constant or (meet == a - 1 and join == a + 1)
    return ok, {"dim": a, "meet": meet, "join": join, "constant": constant}


def respects_check(f, r, samples, rng):
    """Sampled checks that f-flat_r respects the subgrassmannian structure.

    Returns a plain dict: per-sample pass/fail lists for the Z_tau and Q_mu
    inclusions, the Sigma inclusion on boundary flags, and trivial-embedding
    fits of the restrictions to Z_tau (the fit itself lives in rigidity).
    """
    from .rigidity import Reject, detect_trivial

    r = as_level(r)
    spec = f.source
    report = {"level": str(r), "z_tau": [], "q_mu": [], "sigma": [], "trivial_fits": [], "lines": []}
    _, _, gen = generic_sharp(f, r, rng)
    i_r, a_r = gen.index, gen.a
    report["index"] = i_r
    lower = [Fraction(s) for s in range(0, int(np.ceil(r)))]
    upper = [Fraction(s) for s in range(int(np.floor(r)) + 1, spec.rank + 1)]

    def record(key, ok, **info):
        report[key].append(dict(ok=bool(ok), **info))

    for j in range(samples):
        for s in lower:
            try:
                tau, sigma, Z0 = _sample_z_tau(spec, s, r, rng)
                img_t = f_sharp(f, s, tau, rng, base=Z0).flag
                img_s = f_sharp(f, r, sigma, rng, base=Z0).flag
                ok = z_tau_contains(img_t, img_s.level, img_s.V1) and img_s.V1.dim == a_r
            except (PropertyViolation, LevelOrderViolation, InvalidFlag) as exc:
                ok = False
                record("z_tau", ok, s=str(s), error=str(exc))
                continue
            record("z_tau", ok, s=str(s))
        for s in upper:
            try:
                mu, sigma, Z0 = _sample_q_mu(spec, s, r, rng)
                img_m = f_sharp(f, s, mu, rng, base=Z0).flag
                img_s = f_sharp(f, r, sigma, rng, base=Z0).flag
                ok = q_mu_contains(img_m, img_s.level, img_s.V1) and img_s.V1.dim == a_r
            except (PropertyViolation, LevelOrderViolation, InvalidFlag) as exc:
                record("q_mu", False, s=str(s), error=str(exc))
                continue
            record("q_mu", ok, s=str(s))
        if r.denominator == 1:
            try:
                sigma, Zb = boundary_flag(spec, r, rng)
                img = f_sharp(f, r, sigma, rng, base=Zb, boundary=True).flag
                ok, m, sig = _boundary_stratum_of(f.target, img.V1, a_r)
                record("sigma", ok, dim=img.V1.dim, nullity=m, signature=list(sig))
            except (PropertyViolation, InvalidFlag) as exc:
                record("sigma", False, error=str(exc))

    # restrictions of f-flat_r to Z_tau for one tau per lower level; an
    # anti-holomorphic f-flat is first turned around by the target transpose
    g = f
    if spec.kind == "I" and r.denominator == 1:
        try:
            kind = f_flat_classify(f, r, rng, pairs=5).kind
        except InconsistentDependence:
            kind = "undetermined"
        report["holomorphy"] = kind
        if kind == ANTIHOLOMORPHIC:
            if f.target.kind == "I" and f.target.p == f.target.q:
                from .rigidity import transpose_target

                g = transpose_target(f)
                report["trivial_fit_note"] = "fitted after composing with the target transpose"
            else:
                report["trivial_fit_note"] = "anti-holomorphic and the target is not square; fit skipped"
                lower = []
    for s in lower:
        tau, _, Z0 = _sample_z_tau(spec, s, r, rng)
        pairs = []
        span_dim = tau.V1.dim
        need = span_dim * (span_dim + 1) + 4
        for _ in range(need):
            V1 = random_subspace_of(tau.V1, v1_dim(spec, r), rng)
            V2 = random_superspace_of(tau.V2, v2_dim(spec, r), rng) if spec.kind == "I" else None
            sigma = make_flag(spec, r, V1, V2)
            try:
                pairs.append((V1, f_sharp(g, r, sigma, rng, base=Z0).flag.V1))
            except PropertyViolation:
                continue
        ok, info = _line_image(g, spec, r, tau, Z0, rng)
        record("lines", ok, s=str(s), **info)
        try:
            model = detect_trivial(pairs)
        except PropertyViolation as exc:
            report["trivial_fits"].append({"s": str(s), "ok": False, "error": str(exc)})
            continue
        if isinstance(model, Reject):
            report["trivial_fits"].append({"s": str(s), "ok": False, "residual": model.residual})
        else:
            report["trivial_fits"].append({"s": str(s), "ok": True, "residual": model.residual,
                                           "W0_dim": model.W0.dim})

    keys = ("z_tau", "q_mu", "sigma", "trivial_fits", "lines")
    report["passed"] = {k: all(x["ok"] for x in report[k]) for k in keys}
    strata = sorted({x["nullity"] for x in report["sigma"] if "nullity" in x})
    report["boundary_strata"] = strata
    report["passed"]["sigma"] = report["passed"]["sigma"] and len(strata) <= 1
    report["all_passed"] = all(report["passed"].values())
    return report
