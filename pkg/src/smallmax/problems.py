"""Oracle bundles for min-max objectives, smoothness profiles, and built-in problems.

A :class:`ProblemInstance` collects the value/derivative oracles of an objective
f(x, y) together with the domains of both players and the declared smoothness
constants.  Instances are immutable after construction and their oracles must be
deterministic, so concurrent evaluation is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .geometry import Ball, Box, Domain, Interval, WholeSpace, _as_vector


class MissingOracleError(ValueError):
    """An operation needs a derivative oracle the instance does not provide."""


@dataclass(frozen=True)
class SmoothnessProfile:
    """Declared regularity constants of an objective.

    ``lam``/``mu`` bound the x-gradient increments by lam*|dx| + mu*|dy|;
    ``rho_k``/``sigma_k`` bound the k-th y-derivative tensor increments by
    rho_k*|dy| + sigma_k*|dx|, and ``tau_k`` bounds the x-Lipschitz modulus of
    the mixed (1,k) tensor.  ``sigma_0`` is the x-Lipschitz constant of f itself
    and ``rho_1`` the y-Lipschitz constant of the y-gradient (used to size the
    Krylov subspace); both are optional.
    """

    lam: float
    mu: float
    k: int
    rho_k: float
    sigma_k: float = 0.0
    tau_k: float = 0.0
    sigma_0: Optional[float] = None
    rho_1: Optional[float] = None
    bilinear: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        for name in ("mu", "rho_k", "sigma_k", "tau_k"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        for name in ("sigma_0", "rho_1"):
            v = getattr(self, name)
            if v is not None and (v < 0 or not np.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0 when declared")
        if self.bilinear and self.k >= 1:
            # bilinearly-coupled objectives: no x-dependence above the cross term
            expected_sigma = self.mu if self.k == 1 else 0.0
            if self.tau_k != 0.0 or self.sigma_k != expected_sigma:
                raise ValueError(
                    "bilinear profile with k>=1 requires tau_k=0 and "
                    "sigma_k = mu*1{k=1}"
                )

    def lambda_bar(self, diameter: float) -> float:
        """Weak-convexity modulus of the order-k surrogate primal function."""
        if self.k == 0:
            return self.lam
        return self.lam + 2.0 * self.tau_k * diameter**self.k / _factorial(self.k)


def _factorial(n: int) -> float:
    out = 1.0
    for i in range(2, n + 1):
        out *= i
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """Objective oracles, domains and declared smoothness constants.

    The derivative oracles follow the conventions:

    - ``grad_x(x, y)`` / ``grad_y(x, y)``: partial gradients,
    - ``hess_yy_vec(x, y, v)``: product of the partial y-Hessian with v,
    - ``cross_jvp(x, y, v)``: product of the mixed (x,y) second derivative
      with a y-direction v (returns an x-space vector),
    - ``cross3_jvp(x, y, v)``: the x-space vector obtained by plugging (v, v)
      into the y-slots of the third derivative tensor (optional; only needed
      for the exact gradient of the quadratic surrogate).
    """

    value: Callable
    grad_x: Callable
    grad_y: Callable
    domain_x: Domain
    domain_y: Domain
    profile: SmoothnessProfile
    hess_yy_vec: Optional[Callable] = None
    cross_jvp: Optional[Callable] = None
    cross3_jvp: Optional[Callable] = None
    name: str = "problem"
    x_probe: Optional[Domain] = None
    # closed-form primal value, when the instance knows how to maximize itself
    phi_exact: Optional[Callable] = None
    # Taylor data of f(x, .) for 1-d y: (coeffs, dcoeffs_dx) up to a given order
    y_expansion: Optional[Callable] = None
    vectorized: bool = False

    @property
    def dim_x(self) -> int:
        return self.domain_x.dim

    @property
    def dim_y(self) -> int:
        return self.domain_y.dim

    def probe_domain_x(self) -> Domain:
        """Compact region of X used for sampling; X itself when already compact."""
        if self.x_probe is not None:
            return self.x_probe
        if isinstance(self.domain_x, WholeSpace):
            raise ValueError(f"{self.name}: unbounded X needs an explicit x_probe box")
        return self.domain_x

    def require(self, *names: str) -> None:
        for n in names:
            if getattr(self, n) is None:
                raise MissingOracleError(f"{self.name}: oracle '{n}' is not available")

    def with_domains(self, domain_x=None, domain_y=None, x_probe=None) -> "ProblemInstance":
        kw = {}
        if domain_x is not None:
            kw["domain_x"] = domain_x
        if domain_y is not None:
            kw["domain_y"] = domain_y
        if x_probe is not None:
            kw["x_probe"] = x_probe
        return replace(self, **kw)


class CountingOracle:
    """Wraps a ProblemInstance and counts oracle calls (per oracle kind)."""

    _KINDS = ("value", "grad_x", "grad_y", "hess_yy_vec", "cross_jvp", "cross3_jvp")

    def __init__(self, base: ProblemInstance):
        self.base = base
        self.counts = {k: 0 for k in self._KINDS}

    def __getattr__(self, name):
        if name in self._KINDS:
            fn = getattr(self.base, name)
            if fn is None:
                raise MissingOracleError(f"{self.base.name}: oracle '{name}' is not available")

            def counted(*args, **kwargs):
                self.counts[name] += 1
                return fn(*args, **kwargs)

            return counted
        return getattr(self.base, name)

    def total(self) -> int:
        return sum(self.counts.values())


# ----------------------------------------------------------------------------
# finite differences (central, step scaled by the point's magnitude)


def fd_step(point) -> float:
    return 1e-5 * max(1.0, float(np.linalg.norm(point)))


def fd_grad(fn: Callable, point) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    p = _as_vector(point)
    h = fd_step(p)
    g = np.zeros_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        g[i] = (fn(p + e) - fn(p - e)) / (2.0 * h)
    return g


def fd_jvp(fn_vec: Callable, point, v) -> np.ndarray:
    """Central finite-difference directional derivative of a vector function."""
    p = _as_vector(point)
    v = _as_vector(v)
    nv = np.linalg.norm(v)
    if nv == 0:
        return np.zeros_like(np.atleast_1d(np.asarray(fn_vec(p), dtype=float)))
    u = v / nv
    h = fd_step(p)
    out = (np.asarray(fn_vec(p + h * u)) - np.asarray(fn_vec(p - h * u))) / (2.0 * h)
    return nv * np.atleast_1d(out)


# ----------------------------------------------------------------------------
# sampling validation of declared constants


@dataclass
class ProfileReport:
    ok: bool
    max_ratio_a1: float
    max_ratio_a2: float
    max_ratio_a3: float
    violated: list
    witness: Optional[tuple] = None

    def __str__(self):
        status = "ok" if self.ok else "VIOLATED: " + ", ".join(self.violated)
        return (
            f"profile check [{status}] ratios: A1={self.max_ratio_a1:.6f} "
            f"A2={self.max_ratio_a2:.6f} A3={self.max_ratio_a3:.6f}"
        )


def _dense_hess_yy(p: ProblemInstance, x, y) -> np.ndarray:
    d = p.dim_y
    H = np.zeros((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        H[:, i] = np.atleast_1d(p.hess_yy_vec(x, y, e))
    return 0.5 * (H + H.T)


def _dense_cross(p: ProblemInstance, x, y) -> np.ndarray:
    dx, dy = p.dim_x, p.dim_y
    C = np.zeros((dx, dy))
    for j in range(dy):
        e = np.zeros(dy)
        e[j] = 1.0
        C[:, j] = np.atleast_1d(p.cross_jvp(x, y, e))
    return C


def check_profile_by_sampling(p: ProblemInstance, n_samples: int = 200,
                              seed: int = 0, slack: float = 1e-9) -> ProfileReport:
    """Validate the declared A1/A2/A3 constants on random point pairs.

    Draws pairs (x, y), (x', y') from the (probe) domains and checks that the
    observed difference quotients never exceed the declared constants.  The
    report records the largest observed ratio per assumption; a ratio above
    1 + slack flags the assumption together with a witnessing pair.
    """
    rng = np.random.default_rng(seed)
    prof = p.profile
    dom_x = p.probe_domain_x()
    xs = dom_x.sample(rng, 2 * n_samples)
    ys = p.domain_y.sample(rng, 2 * n_samples)

    max_a1 = max_a2 = max_a3 = 0.0
    violated = []
    witness = None

    def _update(tag, lhs, rhs, cur, pair):
        nonlocal witness
        ratio = lhs / rhs if rhs > 0 else (np.inf if lhs > slack else 0.0)
        if lhs > rhs + slack and tag not in violated:
            violated.append(tag)
            witness = pair
        return max(cur, ratio)

    for i in range(n_samples):
        x, x2 = xs[2 * i], xs[2 * i + 1]
        y, y2 = ys[2 * i], ys[2 * i + 1]
        ndx, ndy = np.linalg.norm(x2 - x), np.linalg.norm(y2 - y)

        lhs = np.linalg.norm(np.atleast_1d(p.grad_x(x2, y2)) - np.atleast_1d(p.grad_x(x, y)))
        max_a1 = _update("A1", lhs, prof.lam * ndx + prof.mu * ndy, max_a1, (x, y, x2, y2))

        if prof.k == 0:
            lhs = abs(float(p.value(x2, y2)) - float(p.value(x, y)))
            sig0 = prof.sigma_0 if prof.sigma_0 is not None else np.inf
            rhs = prof.rho_k * ndy + min(sig0, np.inf) * ndx
        elif prof.k == 1:
            lhs = np.linalg.norm(np.atleast_1d(p.grad_y(x2, y2)) - np.atleast_1d(p.grad_y(x, y)))
            rhs = prof.rho_k * ndy + prof.sigma_k * ndx
        elif prof.k == 2 and p.hess_yy_vec is not None:
            dH = _dense_hess_yy(p, x2, y2) - _dense_hess_yy(p, x, y)
            lhs = np.linalg.norm(dH, 2)
            rhs = prof.rho_k * ndy + prof.sigma_k * ndx
        else:
            lhs, rhs = 0.0, 1.0
        max_a2 = _update("A2", lhs, rhs, max_a2, (x, y, x2, y2))

        # A3: x-Lipschitzness of the mixed (1,k) tensor, probed on the
        # available contractions (exact for k<=1, diagonal probe for k=2).
        if prof.k <= 1 and p.cross_jvp is not None:
            if prof.k == 0:
                lhs = np.linalg.norm(
                    np.atleast_1d(p.grad_x(x2, y)) - np.atleast_1d(p.grad_x(x, y)))
                rhs = prof.lam * ndx if prof.k == 0 else 0.0
                tau = prof.lam  # A3 with k=0 follows from A1
            else:
                lhs = np.linalg.norm(_dense_cross(p, x2, y) - _dense_cross(p, x, y), 2)
                tau = prof.tau_k
            max_a3 = _update("A3", lhs, tau * ndx, max_a3, (x, y, x2, y2))
        elif prof.k == 2 and p.cross3_jvp is not None:
            v = ys[2 * i + 1] - ys[2 * i]
            lhs = np.linalg.norm(
                np.atleast_1d(p.cross3_jvp(x2, y, v)) - np.atleast_1d(p.cross3_jvp(x, y, v)))
            max_a3 = _update("A3", lhs, prof.tau_k * ndx * np.dot(v, v), max_a3, (x, y, x2, y2))

    return ProfileReport(not violated, max_a1, max_a2, max_a3, violated, witness)


def check_oracles_by_fd(p: ProblemInstance, n_points: int = 100, seed: int = 0,
                        rtol: float = 1e-5) -> None:
    """Assert every declared derivative oracle agrees with central differences.

    Raises AssertionError naming the first inconsistent oracle.
    """
    rng = np.random.default_rng(seed)
    xs = p.probe_domain_x().sample(rng, n_points)
    ys = p.domain_y.sample(rng, n_points)
    for x, y in zip(xs, ys):
        scale = max(1.0, abs(float(p.value(x, y))))
        gx = np.atleast_1d(p.grad_x(x, y))
        gx_fd = fd_grad(lambda u: float(p.value(u, y)), x)
        assert np.allclose(gx, gx_fd, rtol=rtol, atol=rtol * scale), \
            f"{p.name}: grad_x mismatch at x={x}, y={y}: {gx} vs {gx_fd}"
        gy = np.atleast_1d(p.grad_y(x, y))
        gy_fd = fd_grad(lambda v: float(p.value(x, v)), y)
        assert np.allclose(gy, gy_fd, rtol=rtol, atol=rtol * scale), \
            f"{p.name}: grad_y mismatch at x={x}, y={y}: {gy} vs {gy_fd}"
        v = rng.standard_normal(p.dim_y)
        if p.hess_yy_vec is not None:
            hv = np.atleast_1d(p.hess_yy_vec(x, y, v))
            hv_fd = fd_jvp(lambda u: p.grad_y(x, u), y, v)
            assert np.allclose(hv, hv_fd, rtol=rtol, atol=rtol * max(1.0, np.linalg.norm(hv))), \
                f"{p.name}: hess_yy_vec mismatch at x={x}, y={y}"
        if p.cross_jvp is not None:
            cv = np.atleast_1d(p.cross_jvp(x, y, v))
            cv_fd = fd_jvp(lambda u: p.grad_x(x, u), y, v)
            assert np.allclose(cv, cv_fd, rtol=rtol, atol=rtol * max(1.0, np.linalg.norm(cv))), \
                f"{p.name}: cross_jvp mismatch at x={x}, y={y}"


# ----------------------------------------------------------------------------
# built-in instances


def make_intro_example(x_interval: Optional[tuple] = None) -> ProblemInstance:
    """The cubic toy problem f(x, y) = x*y - y^3/3 on Y = [-2, 2].

    Its primal function has the unique global minimizer x* = 1 (attained by
    y* = -2), while the unique first-order Nash equilibrium sits at (0, 0).
    """
    dom_x = WholeSpace(1) if x_interval is None else Interval(*x_interval)

    def value(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = x * y - y**3 / 3.0
        return float(out.reshape(-1)[0]) if out.size == 1 else out

    def phi_exact(x):
        x = float(np.atleast_1d(x)[0])
        cands = [-2.0, 2.0]
        if x >= 0:
            cands += [np.sqrt(x)] if x <= 4 else []
            cands += [-np.sqrt(x)] if x <= 4 else []
        return max(x * y - y**3 / 3.0 for y in cands)

    profile = SmoothnessProfile(
        lam=1.0, mu=1.0, k=2, rho_k=2.0, sigma_k=0.0, tau_k=0.0,
        sigma_0=2.0, rho_1=4.0, bilinear=False)
    return ProblemInstance(
        value=value,
        grad_x=lambda x, y: np.atleast_1d(np.asarray(y, float)).copy(),
        grad_y=lambda x, y: np.atleast_1d(np.asarray(x, float) - np.asarray(y, float) ** 2),
        hess_yy_vec=lambda x, y, v: -2.0 * np.asarray(y, float) * np.asarray(v, float),
        cross_jvp=lambda x, y, v: np.atleast_1d(np.asarray(v, float)).copy(),
        cross3_jvp=lambda x, y, v: np.zeros(1),
        domain_x=dom_x,
        domain_y=Interval(-2.0, 2.0),
        profile=profile,
        name="intro",
        x_probe=Interval(0.0, 4.0) if x_interval is None else None,
        phi_exact=phi_exact,
        vectorized=True,
    )


def make_ball_cubic(dim_y: int = 8, lam: float = 1.0, mu: float = 0.01,
                    rho: float = 0.05, radius: float = 0.25,
                    x_interval: tuple = (-0.5, 0.5), seed: int = 7,
                    quad_scale: float = 0.3) -> ProblemInstance:
    """Bilinearly-coupled objective with an indefinite quadratic + radial cubic in y.

        f(x, y) = -lam*x^2/2 + mu*x*<a, y> + y'By/2 - rho*|y|^3/6

    on X = x_interval, Y = ball(0, radius).  B is a random symmetric matrix with
    ||B|| <= quad_scale.  The radial cubic keeps the exact primal function
    computable (sphere maximization of a quadratic, swept over the radius), so
    the quadratic-surrogate solver can be certified against the true problem in
    dimension dim_y > 2.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(dim_y)
    a /= np.linalg.norm(a)
    M = rng.standard_normal((dim_y, dim_y))
    B = 0.5 * (M + M.T)
    B *= quad_scale / np.linalg.norm(B, 2)

    xmax = max(abs(x_interval[0]), abs(x_interval[1]))
    # third derivative of |y|^3/6 has operator norm exactly 1
    profile = SmoothnessProfile(
        lam=lam, mu=mu, k=2, rho_k=rho, sigma_k=0.0, tau_k=0.0,
        sigma_0=lam * xmax + mu * radius,
        rho_1=float(np.linalg.norm(B, 2)) + rho * radius,
        bilinear=True)

    def value(x, y):
        x = float(np.atleast_1d(x)[0])
        y = _as_vector(y)
        return (-0.5 * lam * x**2 + mu * x * float(a @ y)
                + 0.5 * float(y @ B @ y) - rho * np.linalg.norm(y) ** 3 / 6.0)

    def grad_x(x, y):
        x = float(np.atleast_1d(x)[0])
        return np.array([-lam * x + mu * float(a @ _as_vector(y))])

    def grad_y(x, y):
        x = float(np.atleast_1d(x)[0])
        y = _as_vector(y)
        return mu * x * a + B @ y - 0.5 * rho * np.linalg.norm(y) * y

    def hess_yy_vec(x, y, v):
        y, v = _as_vector(y), _as_vector(v)
        ny = np.linalg.norm(y)
        if ny == 0:
            return B @ v
        return B @ v - 0.5 * rho * (ny * v + (y @ v) / ny * y)

    evals, evecs = np.linalg.eigh(B)
    c_dir = evecs.T @ a
    top = float(evals[-1])

    def _inner_ball_max(scale):
        # max of <c, z> + sum(lam_i z_i^2)/2 - rho*|z|^3/6 over |z| <= R in the
        # eigenbasis of B, with c = scale * c_dir.  Every sphere-restricted
        # maximizer solves (om*I - Lam) z = c for a multiplier om > lam_max, so
        # sweeping om traces all candidates; a top-eigenvector pad covers the
        # hard case and the pure-quadratic branch handles c = 0.
        R = radius
        best = 0.0  # z = 0
        if R == 0.0:
            return best
        c = scale * c_dir
        nc = float(np.linalg.norm(c))

        def _pad_branch(val0, t0):
            # grow along the top eigenvector: val(t) = val0 + top*(t^2-t0^2)/2 - rho t^3/6
            cands = [t0, R]
            if rho > 0 and t0 <= 2.0 * top / rho <= R:
                cands.append(2.0 * top / rho)
            return max(val0 + 0.5 * top * (t * t - t0 * t0) - rho * t**3 / 6.0
                       for t in cands)

        if nc < 1e-300:
            return _pad_branch(0.0, 0.0) if top > 0 else 0.0

        def _curve(om):
            z = c / (om - evals)
            t2 = float(z @ z)
            return t2, float(c @ z + 0.5 * evals @ z**2)

        # smallest admissible shift above lam_max: either the om with |z| = R,
        # or (hard case) the limit where the top components of c vanish
        hard = abs(c[-1]) <= 1e-13 * nc
        if hard:
            zlim = np.where(np.abs(evals - top) <= 1e-13 * (1 + abs(top)),
                            0.0, c / np.where(np.abs(evals - top) < 1e-300, 1.0,
                                              top - evals))
            tlim2 = float(zlim @ zlim)
            if tlim2 < R * R:
                vlim = float(c @ zlim + 0.5 * evals @ zlim**2)
                best = max(best, _pad_branch(vlim, np.sqrt(tlim2)))
                s_min = 1e-9 * (1.0 + abs(top))
            else:
                hard = False
        if not hard:
            lo, hi = 1e-14 * (1.0 + abs(top)), nc / R + 1e-14
            for _ in range(90):
                mid = 0.5 * (lo + hi)
                if _curve(top + mid)[0] > R * R:
                    lo = mid
                else:
                    hi = mid
            s_min = hi
            t2, v = _curve(top + s_min)
            best = max(best, v - rho * t2**1.5 / 6.0)

        s_max = max(nc / (1e-3 * R), 2.0 * s_min)
        ss = np.geomspace(s_min, s_max, 400)
        Z = c[None, :] / (ss[:, None] + top - evals[None, :])
        t2 = np.einsum("ij,ij->i", Z, Z)
        vals = Z @ c + 0.5 * np.einsum("ij,ij->i", Z**2, np.broadcast_to(evals, Z.shape))
        obj = np.where(t2 <= R * R * (1 + 1e-12), vals - rho * t2**1.5 / 6.0, -np.inf)
        j = int(np.argmax(obj))
        best = max(best, float(obj[j]))
        lo = ss[max(j - 1, 0)]
        hi = ss[min(j + 1, ss.size - 1)]
        for _ in range(70):  # local refinement along the multiplier curve
            m1, m2 = lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0
            o = []
            for mm in (m1, m2):
                t2m, vm = _curve(top + mm)
                o.append(vm - rho * t2m**1.5 / 6.0 if t2m <= R * R * (1 + 1e-12)
                         else -np.inf)
            if o[0] < o[1]:
                lo = m1
            else:
                hi = m2
        t2m, vm = _curve(top + 0.5 * (lo + hi))
        if t2m <= R * R * (1 + 1e-12):
            best = max(best, vm - rho * t2m**1.5 / 6.0)
        return best

    def phi_exact(x):
        x = float(np.atleast_1d(x)[0])
        return -0.5 * lam * x**2 + _inner_ball_max(mu * x)

    return ProblemInstance(
        value=value, grad_x=grad_x, grad_y=grad_y,
        hess_yy_vec=hess_yy_vec,
        cross_jvp=lambda x, y, v: np.array([mu * float(a @ _as_vector(v))]),
        cross3_jvp=lambda x, y, v: np.zeros(1),
        domain_x=Interval(*x_interval), domain_y=Ball(np.zeros(dim_y), radius),
        profile=profile, name="ball_cubic", phi_exact=phi_exact)


BUILTIN_FACTORIES = {
    "intro": make_intro_example,
    "ball_cubic": make_ball_cubic,
}
