"""Approximate maximization of a quadratic on a Euclidean ball via block Lanczos.

The quadratic Psi(y) = y'Hy/2 + g'y is accessed only through the matrix-vector
product y -> Hy.  A joint Krylov subspace spanned by {H^j g, H^j xi} for a
random unit vector xi is built block-wise (blocks of size 2, full
re-orthogonalization), the operator is reduced to a small block-tridiagonal
matrix, and the reduced ball-constrained problem is solved by interior-case
elimination plus safeguarded Newton root-finding on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .geometry import _as_vector


class KrylovNumericalError(RuntimeError):
    pass


@dataclass
class QuadraticForm:
    """Linear term and Hessian-vector oracle of Psi(y) = y'Hy/2 + g'y.

    ``hvp_count`` tallies single-vector products (a d x 2 block counts as 2).
    """

    g: np.ndarray
    hvp: Callable
    dense: Optional[np.ndarray] = None
    hvp_count: int = field(default=0)

    def __post_init__(self):
        self.g = _as_vector(self.g)

    @property
    def dim(self) -> int:
        return self.g.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        self.hvp_count += 1
        return np.asarray(self.hvp(v), dtype=float)

    def apply_block(self, block: np.ndarray) -> np.ndarray:
        return np.column_stack([self.apply(block[:, j]) for j in range(block.shape[1])])

    def value(self, y: np.ndarray) -> float:
        y = _as_vector(y)
        return 0.5 * float(y @ self.apply(y)) + float(self.g @ y)

    @classmethod
    def from_dense(cls, H: np.ndarray, g) -> "QuadraticForm":
        H = np.asarray(H, dtype=float)
        return cls(g=g, hvp=lambda v: H @ v, dense=H)


@dataclass
class KrylovResult:
    y: np.ndarray
    value: float
    branch: str  # "interior" or "boundary"
    m_used: int
    predicted_gap: float
    breakdown: bool = False


def block_lanczos(q: QuadraticForm, xi, m: int, breakdown_tol: float = 1e-12):
    """Block-tridiagonalize H on the joint Krylov subspace K_2m(H, {g, xi}).

    Returns (Q, Htilde, info): Q has orthonormal columns spanning the subspace,
    Htilde is the block-tridiagonal (pentadiagonal) reduction assembled from
    the 2x2 alpha/beta blocks.  A Gram-Schmidt residual below ``breakdown_tol``
    (relative) means the subspace is invariant: the iteration stops early with
    ``info['breakdown'] = True`` and the blocks built so far.  Every new block
    is re-orthogonalized against all previous columns to keep Q'Q = I at
    working precision.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    d = q.dim
    g = q.g
    scale = max(np.linalg.norm(g), 1.0)

    ng = np.linalg.norm(g)
    if ng < breakdown_tol * scale:
        raise ValueError("block_lanczos needs g != 0 (degenerate linear term)")
    u = g / ng
    xi = _as_vector(xi)
    w = xi - (xi @ u) * u
    nw = np.linalg.norm(w)
    if nw < breakdown_tol:
        raise ValueError("block_lanczos needs {g, xi} linearly independent")
    q1 = np.column_stack([u, w / nw])

    blocks_q = [q1]
    Hq = q.apply_block(q1)
    alphas = [q1.T @ Hq]
    betas = []
    breakdown = False

    for _ in range(1, m):
        Qfull = np.column_stack(blocks_q)
        prev, alpha = blocks_q[-1], alphas[-1]
        w2 = Hq - prev @ alpha
        if len(blocks_q) > 1:
            w2 = w2 - blocks_q[-2] @ betas[-1].T
        # full re-orthogonalization (twice) against everything built so far
        for _ in range(2):
            w2 = w2 - Qfull @ (Qfull.T @ w2)
        up, vp = w2[:, 0], w2[:, 1]
        nu = np.linalg.norm(up)
        if nu < breakdown_tol * scale:
            breakdown = True
            break
        u2 = up / nu
        r12 = vp @ u2
        wv = vp - r12 * u2
        nv = np.linalg.norm(wv)
        if nv < breakdown_tol * scale:
            breakdown = True
            break
        v2 = wv / nv
        qn = np.column_stack([u2, v2])
        beta = np.array([[nu, r12], [0.0, nv]])  # qn * beta = w2 (QR of the block)
        Hq = q.apply_block(qn)
        blocks_q.append(qn)
        betas.append(beta)
        alphas.append(qn.T @ Hq)

    t = len(blocks_q)
    Q = np.column_stack(blocks_q)
    Ht = np.zeros((2 * t, 2 * t))
    for i, a in enumerate(alphas):
        Ht[2 * i:2 * i + 2, 2 * i:2 * i + 2] = 0.5 * (a + a.T)
    for i, b in enumerate(betas):
        Ht[2 * (i + 1):2 * (i + 1) + 2, 2 * i:2 * i + 2] = b
        Ht[2 * i:2 * i + 2, 2 * (i + 1):2 * (i + 1) + 2] = b.T
    return Q, Ht, {"breakdown": breakdown, "m_used": t}


def _lanczos_single(q: QuadraticForm, start: np.ndarray, m: int,
                    breakdown_tol: float = 1e-12):
    """Plain Lanczos on K_m(H, start); fallback when g = 0."""
    v = start / np.linalg.norm(start)
    cols, alphas, betas = [v], [], []
    Hv = q.apply(v)
    for _ in range(m):
        a = float(cols[-1] @ Hv)
        alphas.append(a)
        w = Hv - a * cols[-1] - (betas[-1] * cols[-2] if len(cols) > 1 else 0.0)
        Qf = np.column_stack(cols)
        for _ in range(2):
            w = w - Qf @ (Qf.T @ w)
        nw = np.linalg.norm(w)
        if nw < breakdown_tol:
            break
        cols.append(w / nw)
        betas.append(nw)
        Hv = q.apply(cols[-1])
    Q = np.column_stack(cols[: len(alphas)])
    Ht = np.diag(alphas) + np.diag(betas[: len(alphas) - 1], 1) + np.diag(
        betas[: len(alphas) - 1], -1)
    return Q, Ht


def solve_reduced(Ht: np.ndarray, gt: np.ndarray, R: float,
                  zero_band_scale: float = 1e-10, range_tol: float = 1e-8,
                  max_iter: int = 200):
    """Maximize z'Hz/2 + g'z over |z| <= R for a small symmetric H.

    Interior case: H negative (semi-)definite with the (least-norm) solution of
    Hz + g = 0 inside the ball.  Otherwise the maximizer lies on the boundary:
    the unique omega > max(omega_0, 0) with |(H - omega I)^{-1} g| = R is found
    by safeguarded Newton on psi(omega) = 1/|z_omega| - 1/R; when g has no
    component on the top eigenspace (hard case) a top-eigenvector correction
    reaches the boundary at omega = omega_0.
    """
    Ht = np.asarray(Ht, dtype=float)
    gt = _as_vector(gt)
    evals, evecs = scipy.linalg.eigh(Ht)
    omega0 = float(evals[-1])
    band = zero_band_scale * (1.0 + float(np.max(np.abs(Ht))) if Ht.size else 1.0)

    c = evecs.T @ gt
    if omega0 < -band:
        z0 = evecs @ (c / (-evals))
        if np.linalg.norm(z0) <= R:
            return z0, "interior"
    elif abs(omega0) <= band:
        null = np.abs(evals) <= band
        # range test: g must have no component on the null space
        if np.linalg.norm(c[null]) <= range_tol * max(np.linalg.norm(gt), 1e-300):
            z0 = evecs @ np.where(null, 0.0, c / np.where(null, 1.0, -evals))
            if np.linalg.norm(z0) <= R:
                return z0, "interior"

    # boundary: the multiplier lives in (max(omega0, 0), infinity)
    lo_base = max(omega0, 0.0)
    top = np.abs(evals - omega0) <= band

    def znorm2(om):
        return float(np.sum((c / (evals - om)) ** 2))

    eps0 = 1e-14 * (1.0 + abs(lo_base))
    if np.linalg.norm(c[top]) <= range_tol * max(np.linalg.norm(gt), 1e-300) \
            and omega0 >= -band:
        # hard case: pad the pseudo-inverse solution with a top eigenvector
        denom = np.where(top, np.inf, omega0 - evals)
        z = evecs @ (c / denom)
        gap2 = R * R - float(z @ z)
        if gap2 >= -1e-12 * R * R:
            vtop = evecs[:, -1]
            if vtop[np.argmax(np.abs(vtop))] < 0:
                vtop = -vtop  # deterministic sign
            return z + np.sqrt(max(gap2, 0.0)) * vtop, "boundary"

    lo = lo_base + eps0
    hi = lo_base + np.linalg.norm(gt) / R + eps0
    while znorm2(hi) > R * R:
        hi = lo_base + 2.0 * (hi - lo_base)
    om = 0.5 * (lo + hi)
    for it in range(max_iter):
        n2 = znorm2(om)
        nz = np.sqrt(n2)
        if abs(nz - R) <= 1e-10 * R:
            break
        if nz > R:
            lo = om
        else:
            hi = om
        # Newton step on psi(om) = 1/|z| - 1/R; fall back to bisection outside the bracket
        dn2 = 2.0 * float(np.sum(c**2 / (evals - om) ** 3))
        psi = 1.0 / nz - 1.0 / R
        dpsi = -0.5 * dn2 / (n2 * nz)
        om_new = om - psi / dpsi if dpsi != 0 else 0.5 * (lo + hi)
        om = om_new if lo < om_new < hi else 0.5 * (lo + hi)
    else:
        raise KrylovNumericalError(
            f"boundary root finder failed after {max_iter} iterations")
    z = evecs @ (c / (om - evals))
    return z, "boundary"


def krylov_dimension(R: float, delta: float, rho1: float, q_fail: float, d: int) -> int:
    """Number of Lanczos steps m guaranteeing delta-suboptimality w.p. >= 1 - q_fail."""
    L = 2.0 + np.log(2.0 * np.sqrt(d) / q_fail) ** 2
    m = min(2.0 * R * np.sqrt(rho1 / delta * L), d / 2.0)
    return max(int(np.ceil(m)), 1)


def approx_max(q: QuadraticForm, R: float, delta: float, rho1: float,
               q_fail: float, rng) -> KrylovResult:
    """delta-approximate maximizer of Psi over the ball |y| <= R, w.p. >= 1 - q_fail.

    ``rho1`` must upper-bound the operator norm of H (the caller's declared
    Lipschitz constant of the y-gradient); it sizes the subspace.  ``rng`` is a
    numpy Generator or a seed.  Early Lanczos breakdown is a success: the
    subspace is then invariant and contains the exact restricted maximizer.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    rng = np.random.default_rng(rng)
    d = q.dim
    m = krylov_dimension(R, delta, rho1, q_fail, d)
    L = 2.0 + np.log(2.0 * np.sqrt(d) / q_fail) ** 2
    gap = 4.0 * rho1 * (2.0 * R) ** 2 / m**2 * L

    if R == 0.0:
        return KrylovResult(np.zeros(d), 0.0, "interior", 0, gap)

    xi = rng.standard_normal(d)
    xi /= np.linalg.norm(xi)
    if np.linalg.norm(q.g) < 1e-14 * max(1.0, rho1 * R):
        Q, Ht = _lanczos_single(q, xi, 2 * m)
        info = {"breakdown": Q.shape[1] < 2 * m, "m_used": Q.shape[1] // 2}
    else:
        Q, Ht, info = block_lanczos(q, xi, m)
    gt = Q.T @ q.g
    z, branch = solve_reduced(Ht, gt, R)
    y = Q @ z
    nrm = np.linalg.norm(y)
    if nrm > R:
        y *= R / nrm
    return KrylovResult(y=y, value=q.value(y), branch=branch,
                        m_used=info["m_used"], predicted_gap=gap,
                        breakdown=info["breakdown"])
