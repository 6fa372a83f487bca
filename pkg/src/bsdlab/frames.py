"""Adapted frames (Z, X, Y) and their Maurer-Cartan forms.

A frame is an invertible (p+q) x (p+q) matrix F whose *rows* are the frame
vectors Z_1..Z_l, X_1..X_{p+q-2l}, Y_1..Y_l.  The Hermitian form
<u, v> = sum_i eps_i u_i conj(v_i), eps = (+1)^q (-1)^p, has Gram matrix

    H0 = [[0, 0, 0, I], [0, I_{q-l}, 0, 0], [0, 0, -I_{p-l}, 0], [I, 0, 0, 0]]

in the frame.  Frames for the symplectic and orthogonal groups (p = q = n)
additionally have a fixed bilinear Gram matrix K0 = F B F^T, inherited from
the reference frame; they form a torsor under the corresponding group, so
along any curve of frames the Maurer-Cartan form pi = dF F^{-1} lies in the
Lie algebra of (H0, K0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, sqrtm

from . import subspaces as ss
from .errors import Degenerate, FrameDriftTooLarge, InputError, InvalidParams

GROUPS = ("su", "sp", "so")


def _eps(p, q):
    return np.diag(np.r_[np.ones(q), -np.ones(p)]).astype(complex)


def _bilinear(group, n):
    if group == "sp":
        return ss.symplectic(n).matrix
    if group == "so":
        return ss.orthogonal(n).matrix
    return None


def gram_h0(p, q, ell):
    m = p + q
    H = np.zeros((m, m), dtype=complex)
    x = m - 2 * ell
    H[:ell, m - ell :] = np.eye(ell)
    H[m - ell :, :ell] = np.eye(ell)
    H[ell : ell + x, ell : ell + x] = np.diag(np.r_[np.ones(q - ell), -np.ones(p - ell)])
    return H


def _check_group(group, p, q, ell):
    if group not in GROUPS:
        raise InputError(f"group must be one of {GROUPS}")
    if not 1 <= q <= p:
        raise InputError("need 1 <= q <= p")
    if group != "su" and p != q:
        raise InputError("symplectic and orthogonal frames need p = q")
    if not 0 < ell <= q:
        raise InputError("need 0 < ell <= q")
    if group == "so" and ell % 2:
        raise InputError("orthogonal frames need an even isotropic block")


@lru_cache(maxsize=None)
def reference_frame(group, p, q, ell):
    """The reference frame built from null vectors e_a +/- U e_a."""
    _check_group(group, p, q, ell)
    m = p + q
    E = np.eye(m, dtype=complex)
    partner = {}
    signs = {}
    for a in range(ell):
        if group == "so":
            b = a + 1 if a % 2 == 0 else a - 1
            partner[a] = q + b
            signs[a] = -1.0 if a % 2 == 0 else 1.0
        else:
            partner[a] = q + a
            signs[a] = 1.0
    Z = [(E[a] + signs[a] * E[partner[a]]) / np.sqrt(2) for a in range(ell)]
    Y = [(E[a] - signs[a] * E[partner[a]]) / np.sqrt(2) for a in range(ell)]
    used = set(partner.values())
    Xpos = [E[i] for i in range(ell, q)]
    Xneg = [E[i] for i in range(q, m) if i not in used]
    F = np.array(Z + Xpos + Xneg + Y)
    det = np.linalg.det(F)
    phase = np.exp(-1j * np.angle(det) / (2 * ell))
    F[:ell] *= phase
    F[m - ell :] *= phase
    F.flags.writeable = False
    return F


@dataclass(frozen=True)
class SigmaFrame:
    matrix: np.ndarray
    group: str
    p: int
    q: int
    ell: int

    @property
    def size(self):
        return self.p + self.q

    @property
    def blocks(self):
        m, l = self.size, self.ell
        return slice(0, l), slice(l, m - l), slice(m - l, m)

    @property
    def Z(self):
        return self.matrix[self.blocks[0]]

    @property
    def X(self):
        return self.matrix[self.blocks[1]]

    @property
    def Y(self):
        return self.matrix[self.blocks[2]]

    def residuals(self):
        return frame_residuals(self.matrix, self.group, self.p, self.q, self.ell)

    def residual(self):
        return max(self.residuals().values())


def target_grams(group, p, q, ell):
    F = reference_frame(group, p, q, ell)
    H0 = gram_h0(p, q, ell)
    B = _bilinear(group, p)
    K0 = None if B is None else F @ B @ F.T
    return H0, K0


def frame_residuals(F, group, p, q, ell):
    H0, K0 = target_grams(group, p, q, ell)
    out = {
        "hermitian pairing": float(np.abs(F @ _eps(p, q) @ F.conj().T - H0).max()),
        "det": float(abs(np.linalg.det(F) - 1)),
    }
    if K0 is not None:
        out["bilinear pairing"] = float(np.abs(F @ _bilinear(group, p) @ F.T - K0).max())
    return out


def _polar_unitary_factor(C, adjoint):
    S2 = adjoint(C) @ C
    ev = np.linalg.eigvals(S2)
    if np.any((np.abs(ev.imag) < 1e-12) & (ev.real <= 0)):
        raise Degenerate("polar factor does not exist for this guess")
    S = sqrtm(S2)
    return C @ np.linalg.inv(S)


def make_frame(group, p, q, ell, guess):
    """Correct a guessed frame (rows) to one satisfying every relation."""
    _check_group(group, p, q, ell)
    G = np.asarray(guess, dtype=complex)
    m = p + q
    if G.shape != (m, m):
        raise InputError(f"guess must be {m}x{m}")
    if ss.numerical_rank(G) < m:
        raise Degenerate("guess is not of full rank")
    Bm = _bilinear(group, p)
    if Bm is not None:
        Zb = G[:ell]
        defect = np.abs(Zb @ Bm @ Zb.T).max() / max(np.linalg.norm(Zb, 2) ** 2, 1e-300)
        if defect > 0.25:
            raise Degenerate(f"isotropic block is far from isotropic (defect {defect:.3g})")
    F0 = reference_frame(group, p, q, ell)
    B = np.linalg.solve(F0, G)  # G = F0 B
    eps = _eps(p, q)
    if Bm is not None:
        Binv = np.linalg.inv(Bm)
        C = _polar_unitary_factor(B.T, lambda M: Binv @ M.T @ Bm)
        B = C.T
    D = _polar_unitary_factor(B.conj().T, lambda M: eps @ M.conj().T @ eps)
    B = D.conj().T
    if group == "su":
        det = np.linalg.det(B)
        B = B * np.exp(-1j * np.angle(det) / m)
    F = F0 @ B
    frame = SigmaFrame(F, group, p, q, ell)
    if frame.residual() > 1e-9:
        raise Degenerate(f"correction failed, residuals {frame.residuals()}")
    return frame


# ---------------------------------------------------------------- Lie algebras


def _real_nullspace(columns):
    M = np.column_stack(columns)
    Mr = np.vstack([M.real, M.imag])
    _, s, vh = np.linalg.svd(Mr)
    rank = int(np.count_nonzero(s > 1e-10 * max(1.0, s[0])))
    return vh[rank:].T


@lru_cache(maxsize=None)
def lie_algebra_basis(group, p, q, ell=None, pattern=None):
    """Real basis of the Lie algebra acting on vector coordinates
    (ell=None) or on frame coordinates (ell given, optionally restricted
    to a block pattern of allowed (row block, column block) pairs)."""
    m = p + q
    if ell is None:
        H, K = _eps(p, q), _bilinear(group, p)
    else:
        H, K = target_grams(group, p, q, ell)
    gens = []
    for i in range(m):
        for j in range(m):
            for val in (1.0, 1j):
                A = np.zeros((m, m), dtype=complex)
                A[i, j] = val
                gens.append(A)
    if pattern is not None:
        bl = [slice(0, ell), slice(ell, m - ell), slice(m - ell, m)]
        mask = np.zeros((m, m), dtype=bool)
        for a, b in pattern:
            mask[bl[a], bl[b]] = True
        gens = [A for A in gens if np.any(mask & (A != 0))]
    if not gens:
        return ()

    def constraint(A):
        parts = [(A @ H + H @ A.conj().T).ravel()]
        if K is not None:
            parts.append((A @ K + K @ A.T).ravel())
        parts.append(np.array([np.trace(A)]))
        return np.concatenate(parts)

    N = _real_nullspace([constraint(A) for A in gens])
    basis = []
    for col in N.T:
        A = sum(c * g for c, g in zip(col, gens))
        basis.append(A / np.linalg.norm(A))
    return tuple(basis)


def random_algebra_element(group, p, q, rng, ell=None, pattern=None, norm=None):
    basis = lie_algebra_basis(group, p, q, ell, pattern)
    if not basis:
        return np.zeros((p + q, p + q), dtype=complex)
    c = rng.standard_normal(len(basis))
    A = sum(ci * b for ci, b in zip(c, basis))
    if norm is not None:
        A = A * (norm / max(np.linalg.norm(A, 2), 1e-300))
    return A


def random_frame(group, p, q, ell, rng, scale=0.7):
    A = random_algebra_element(group, p, q, rng)
    A = A * (scale / max(np.linalg.norm(A, 2), 1e-300))
    F = reference_frame(group, p, q, ell) @ expm(A)
    return SigmaFrame(F, group, p, q, ell)


# ---------------------------------------------------------------- Maurer-Cartan


class FramePath:
    """A curve of frames.  ``velocity`` is optional; without it the
    derivative is taken by a fourth-order central difference."""

    def __init__(self, frame_fn, velocity_fn=None, h=1e-3):
        self.frame_fn = frame_fn
        self.velocity_fn = velocity_fn
        self.h = h

    def __call__(self, t):
        return np.asarray(self.frame_fn(t), dtype=complex)

    def velocity(self, t):
        if self.velocity_fn is not None:
            return np.asarray(self.velocity_fn(t), dtype=complex)
        h = self.h
        f = self.frame_fn
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    @classmethod
    def one_parameter(cls, F0, A):
        """t -> F0 exp(tA), with its exact velocity."""
        F0 = np.asarray(F0, dtype=complex)
        return cls(lambda t: F0 @ expm(t * A), lambda t: F0 @ expm(t * A) @ A)


BLOCK_NAMES = (
    ("psi", "theta", "phi"),
    ("sigma", "omega", "theta_x"),
    ("xi", "sigma_y", "psi_tilde"),
)


@dataclass(frozen=True)
class MaurerCartanSlice:
    pi: np.ndarray
    group: str
    p: int
    q: int
    ell: int

    def block(self, name):
        m, l = self.p + self.q, self.ell
        sl = [slice(0, l), slice(l, m - l), slice(m - l, m)]
        for a, row in enumerate(BLOCK_NAMES):
            if name in row:
                return self.pi[sl[a], sl[row.index(name)]]
        raise KeyError(name)

    @property
    def theta(self):
        return self.block("theta")

    @property
    def phi(self):
        return self.block("phi")

    def symmetry_residuals(self):
        H0, K0 = target_grams(self.group, self.p, self.q, self.ell)
        pi = self.pi
        out = {"hermitian": float(np.abs(pi @ H0 + H0 @ pi.conj().T).max())}
        if K0 is not None:
            out["bilinear"] = float(np.abs(pi @ K0 + K0 @ pi.T).max())
            # phi read against the bilinear dual of the Z block
            m, l = self.p + self.q, self.ell
            M = K0[:l, m - l :]
            P = self.phi @ M.T
            if self.group == "sp":
                out["phi symmetric"] = float(np.abs(P - P.T).max())
            else:
                out["phi antisymmetric"] = float(np.abs(P + P.T).max())
        return out

    def symmetry_residual(self):
        return max(self.symmetry_residuals().values())


def maurer_cartan(path, t, group, p, q, ell, drift_tol=1e-6):
    F = path(t)
    res = frame_residuals(F, group, p, q, ell)
    if max(res.values()) > drift_tol:
        raise FrameDriftTooLarge(f"path leaves the frame bundle: {res}")
    pi = path.velocity(t) @ np.linalg.inv(F)
    return MaurerCartanSlice(pi, group, p, q, ell)


class FrameFamily:
    """A two-parameter family of frames F(s, t) with optional exact
    partial derivatives ``partials(s, t) -> (dF/ds, dF/dt)``."""

    def __init__(self, frame_fn, partials=None, h=1e-3):
        self.frame_fn = frame_fn
        self.partials = partials
        self.h = h

    def __call__(self, s, t):
        return np.asarray(self.frame_fn(s, t), dtype=complex)

    def forms(self, s, t):
        """(pi_s, pi_t) at (s, t)."""
        F = self(s, t)
        if self.partials is not None:
            Fs, Ft = self.partials(s, t)
        else:
            Fs = FramePath(lambda u: self.frame_fn(u, t), h=self.h).velocity(s)
            Ft = FramePath(lambda u: self.frame_fn(s, u), h=self.h).velocity(t)
        Finv = np.linalg.inv(F)
        return Fs @ Finv, Ft @ Finv

    @classmethod
    def exponential(cls, F0, A, B):
        """(s, t) -> F0 exp(sA) exp(tB), which has exact partials."""
        F0 = np.asarray(F0, dtype=complex)

        def frame(s, t):
            return F0 @ expm(s * A) @ expm(t * B)

        def partials(s, t):
            ea, eb = expm(s * A), expm(t * B)
            return F0 @ A @ ea @ eb, F0 @ ea @ eb @ B

        return cls(frame, partials)


def structure_residual(family, s, t, h=1e-4):
    """max |d pi - pi ^ pi| at (s, t), the exterior derivative taken by
    central differences with step h."""
    if not isinstance(family, FrameFamily):
        family = FrameFamily(family)
    d_s_pit = (family.forms(s + h, t)[1] - family.forms(s - h, t)[1]) / (2 * h)
    d_t_pis = (family.forms(s, t + h)[0] - family.forms(s, t - h)[0]) / (2 * h)
    a, b = family.forms(s, t)
    return float(np.abs(d_s_pit - d_t_pis - (a @ b - b @ a)).max())


# ---------------------------------------------------------------- frame changes

CHANGE_KINDS = ("Position", "RealVectors", "Dilation", "Rotation", "Final")


def change_matrix(frame, kind, params):
    """The matrix U with new frame = U . old frame, after checking the
    defining constraint of the change."""
    m, l = frame.size, frame.ell
    x = m - 2 * l
    p, q = frame.p, frame.q
    U = np.eye(m, dtype=complex)
    Zs, Xs, Ys = frame.blocks
    dtil = np.diag(np.r_[np.ones(q - l), -np.ones(p - l)])
    tol = 1e-10
    if kind == "Position":
        W = np.asarray(params["W"], dtype=complex)
        V = np.asarray(params["V"], dtype=complex)
        if np.abs(V.conj().T @ W - np.eye(l)).max(initial=0) > tol:
            raise InvalidParams("conj(V)^T W = I")
        U[Zs, Zs] = W
        U[Ys, Ys] = V
    elif kind == "RealVectors":
        H = np.asarray(params["H"], dtype=complex)
        if np.abs(H - H.conj().T).max(initial=0) > tol:
            raise InvalidParams("H Hermitian")
        # the null pair (Z, Y) stays null only for an imaginary shift
        U[Ys, Zs] = 1j * H
    elif kind == "Dilation":
        lam = np.asarray(params["lambda"], dtype=float)
        if lam.shape != (l,) or np.any(lam <= 0):
            raise InvalidParams("lambda > 0")
        U[Zs, Zs] = np.diag(1 / lam)
        U[Ys, Ys] = np.diag(lam)
    elif kind == "Rotation":
        R = np.asarray(params["U"], dtype=complex)
        if R.shape != (x, x) or np.abs(R @ dtil @ R.conj().T - dtil).max(initial=0) > tol:
            raise InvalidParams("U in SU(q-l, p-l)")
        if abs(np.linalg.det(R) - 1) > tol:
            raise InvalidParams("det U = 1")
        # the X block moves by U^{-1} so that theta picks up a right factor U
        U[Xs, Xs] = np.linalg.inv(R)
    elif kind == "Final":
        A = np.asarray(params["A"], dtype=complex)
        B = np.asarray(params["B"], dtype=complex)
        C = np.asarray(params["C"], dtype=complex)
        Bdag = dtil @ B.conj().T  # B_j^alpha
        if np.abs(C + Bdag).max(initial=0) > tol:
            raise InvalidParams("C + B^dagger = 0")
        if np.abs(A + A.conj().T + B @ Bdag).max(initial=0) > tol:
            raise InvalidParams("A + A^* + B B^dagger = 0")
        U[Xs, Zs] = C
        U[Ys, Zs] = A
        U[Ys, Xs] = B
    else:
        raise InvalidParams("kind", f"unknown change {kind!r}")
    return U


def frame_change(frame, kind, params):
    U = change_matrix(frame, kind, params)
    F = U @ frame.matrix
    out = SigmaFrame(F, frame.group, frame.p, frame.q, frame.ell)
    res = out.residuals()
    bad = [k for k, v in res.items() if v > 1e-9]
    if bad:
        raise InvalidParams(f"{kind} parameters break the {bad[0]}", f"residual {res[bad[0]]:.3g}")
    return out


_PATTERNS = {
    "Position": ((0, 0), (2, 2)),
    "RealVectors": ((2, 0),),
    "Rotation": ((1, 1),),
    "Final": ((1, 0), (2, 0), (2, 1)),
}


def random_change_params(frame, kind, rng, scale=0.5):
    """Admissible parameters for a change, drawn from the Lie algebra of the
    frame's group restricted to the block pattern of the change."""
    l = frame.ell
    Zs, Xs, Ys = frame.blocks
    if kind == "Dilation":
        if frame.group == "so":
            # the bilinear pairing couples Z_{2k-1} with Y_{2k}
            return {"lambda": np.repeat(rng.uniform(0.5, 2.0, l // 2), 2)}
        return {"lambda": rng.uniform(0.5, 2.0, l)}
    N = random_algebra_element(frame.group, frame.p, frame.q, rng, ell=l, pattern=_PATTERNS[kind])
    N = N * (scale / max(np.linalg.norm(N, 2), 1e-300))
    U = expm(N)
    if kind == "Position":
        return {"W": U[Zs, Zs], "V": U[Ys, Ys]}
    if kind == "RealVectors":
        return {"H": -1j * U[Ys, Zs]}
    if kind == "Rotation":
        R = U[Xs, Xs]
        if R.size == 0:
            return {"U": R}
        return {"U": np.linalg.inv(R / np.linalg.det(R) ** (1 / R.shape[0]))}
    return {"A": U[Ys, Zs], "B": U[Ys, Xs], "C": U[Xs, Zs]}


def predicted_forms(kind, params, theta, phi, dtil=None):
    """Closed-form theta~ and phi~ after a constant change."""
    if kind == "Position":
        W = params["W"]
        return W @ theta, W @ phi @ W.conj().T
    if kind == "Dilation":
        lam = np.asarray(params["lambda"])
        return theta / lam[:, None], phi / np.outer(lam, lam)
    if kind == "Rotation":
        return theta @ params["U"], phi
    if kind == "Final":
        return theta - phi @ params["B"], phi
    raise InputError(f"no closed form recorded for {kind}")
