"""Moreau envelope machinery: proximal points, stationarity residuals, FOSP checks.

The envelope of a weakly convex primal function phi at modulus 2*lambda_bar is
min_u phi(u) + lambda_bar*|u - x|^2; its gradient equals
2*lambda_bar*(x - prox(x)), which is the accuracy measure used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Domain, WholeSpace, _as_vector, project
from .gridsearch import grid_max
from .problems import ProblemInstance
from .surrogate import SurrogateModel, surrogate_grad_x, surrogate_value


class ProxNonConvergedError(RuntimeError):
    """Inner prox solve exhausted its budget; carries the best iterate found."""

    def __init__(self, message, best_point, residual):
        super().__init__(message)
        self.best_point = best_point
        self.residual = residual


def s_x(x, xi, lam: float, dom: Domain) -> float:
    """Projected stationarity residual S(x, xi, lam) over the domain.

    S^2 = 2*lam * max_u { -<xi, u - x> - lam/2 |u - x|^2 }; the inner maximizer
    is the projection of x - xi/lam onto the domain, so the value is closed form.
    Equals |xi| on the whole space and 0 at constrained-stationary points.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    x, xi = _as_vector(x), _as_vector(xi)
    u = dom.project(x - xi / lam)
    inner = -float(xi @ (u - x)) - 0.5 * lam * float((u - x) @ (u - x))
    val = max(2.0 * lam * inner, 0.0)
    return float(np.sqrt(val)) if val > 0 else 0.0


@dataclass
class PrimalOracle:
    """Evaluation access to a weakly convex primal function phi on a domain.

    ``subgrad`` returns one element of the (weak) subdifferential; for 1-d
    domains the optional ``subgrad_interval`` returns the extreme active
    gradients, which lets residual checks minimize over the subdifferential at
    kinks.  ``prox_closed_form(x, lambda_bar)``, when present, short-circuits
    the numeric inner solve.
    """

    phi: Callable
    subgrad: Callable
    weak_convexity: float
    domain: Domain
    mode: str = "grid"  # one of: closed_form, grid, krylov
    prox_closed_form: Optional[Callable] = None
    subgrad_interval: Optional[Callable] = None

    def __post_init__(self):
        if self.weak_convexity <= 0:
            raise ValueError("weak_convexity must be > 0")
        if self.mode not in ("closed_form", "grid", "krylov"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class StationarityReport:
    moreau_grad_norm: float
    prox_point: np.ndarray
    s_x_residual: float
    epsilon: float
    lambda_bar: float
    certified: bool


def _prox_objective(p: PrimalOracle, x, lambda_bar):
    def F(u):
        du = u - x
        return float(p.phi(u)) + lambda_bar * float(du @ du)
    return F


def _inner_residual(p: PrimalOracle, u, x, lambda_bar) -> float:
    """Stationarity of the inner problem at u, minimized over the known
    subdifferential slice when one is available."""
    shift = 2.0 * lambda_bar * (u - x)
    if p.subgrad_interval is not None and u.size == 1:
        lo, hi = p.subgrad_interval(u)
        # 1-d subdifferential is an interval: take the element closest to the
        # stationarity condition
        xi = np.clip(-shift[0], lo, hi)
        return s_x(u, np.array([xi]) + shift, 2.0 * lambda_bar, p.domain)
    return s_x(u, np.atleast_1d(p.subgrad(u)) + shift, 2.0 * lambda_bar, p.domain)


def _prox_grid(p: PrimalOracle, x, lambda_bar, tol, max_levels=18):
    """Multi-resolution grid minimization of the strongly convex inner problem.

    Each level lays 201 points per axis on the current bracket and shrinks the
    bracket to +-2 cells around the argmin; convexity keeps the true minimizer
    inside.  Stops once the subdifferential residual or the bracket certificate
    2*lambda_bar*cell reaches the tolerance.
    """
    F = _prox_objective(p, x, lambda_bar)
    m = 2.0 * lambda_bar - p.weak_convexity
    radius = 1.25 * float(np.linalg.norm(np.atleast_1d(p.subgrad(project(p.domain, x))))) / m
    radius = max(radius, 1e-3)
    center = project(p.domain, x)
    npts = 201
    dim = center.size
    best = center
    for _ in range(max_levels):
        axes = [np.linspace(c - radius, c + radius, npts) for c in center]
        if dim == 1:
            pts = axes[0][:, None]
        else:
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
        pts = np.unique(np.array([project(p.domain, q) for q in pts]), axis=0)
        vals = np.array([F(q) for q in pts])
        best = pts[int(np.argmin(vals))]
        cell = 2.0 * radius / (npts - 1)
        res = _inner_residual(p, best, x, lambda_bar)
        if res <= tol or 2.0 * lambda_bar * cell * np.sqrt(dim) <= tol:
            return best, min(res, 2.0 * lambda_bar * cell * np.sqrt(dim))
        center, radius = best, 2.0 * cell
    return best, _inner_residual(p, best, x, lambda_bar)


def _prox_subgradient(p: PrimalOracle, x, lambda_bar, budget, tol):
    """Projected subgradient descent on the strongly convex inner problem.

    Convergence is certified either by the subdifferential residual or by the
    standard best-iterate rate |u - u*| <= 2G/(m sqrt(T+2)) for m-strongly
    convex objectives with subgradients bounded by G (estimated on the fly);
    the latter covers minimizers at kinks where a single subgradient cannot
    witness stationarity.
    """
    m = 2.0 * lambda_bar - p.weak_convexity
    F = _prox_objective(p, x, lambda_bar)
    u = project(p.domain, x)
    best, best_val = u, F(u)
    G = 0.0
    for t in range(budget):
        g = np.atleast_1d(p.subgrad(u)) + 2.0 * lambda_bar * (u - x)
        G = max(G, float(np.linalg.norm(g)))
        u = project(p.domain, u - (2.0 / (m * (t + 2))) * g)
        val = F(u)
        if val < best_val:
            best, best_val = u, val
    rate_cert = 2.0 * lambda_bar * 2.0 * G / (m * np.sqrt(budget + 2.0))
    return best, min(_inner_residual(p, best, x, lambda_bar), rate_cert)


def prox(p: PrimalOracle, x, lambda_bar: float, inner_budget: int = 20000,
         tol: float = 1e-7) -> np.ndarray:
    """Proximal point argmin_u phi(u) + lambda_bar*|u - x|^2 over the domain.

    Requires 2*lambda_bar above the weak-convexity modulus so the inner
    problem is strongly convex.  Grid search is used for dim <= 2, projected
    subgradient descent above; a residual beyond ``tol`` raises
    ProxNonConvergedError carrying the best iterate.
    """
    x = _as_vector(x)
    if not 2.0 * lambda_bar > p.weak_convexity:
        raise ValueError(
            f"prox needs 2*lambda_bar > weak_convexity ({2 * lambda_bar} vs "
            f"{p.weak_convexity}): the inner problem must be strongly convex")
    if p.prox_closed_form is not None:
        return _as_vector(p.prox_closed_form(x, lambda_bar))
    if x.size <= 2:
        u, res = _prox_grid(p, x, lambda_bar, tol)
    else:
        u, res = _prox_subgradient(p, x, lambda_bar, inner_budget, tol)
    if res > tol:
        raise ProxNonConvergedError(
            f"prox residual {res:.3e} above tolerance {tol:.1e}", u, res)
    return u


def moreau_grad(p: PrimalOracle, x, lambda_bar: float, **kw) -> np.ndarray:
    """Gradient 2*lambda_bar*(x - prox(x)) of the 2*lambda_bar Moreau envelope."""
    x = _as_vector(x)
    return 2.0 * lambda_bar * (x - prox(p, x, lambda_bar, **kw))


def verify_fosp(p: PrimalOracle, x, epsilon: float, lambda_bar: float,
                **kw) -> StationarityReport:
    """Check |grad of the 2*lambda_bar envelope at x| <= epsilon.

    Also reports the projected residual at the prox point for one
    subgradient, which cannot exceed the Moreau gradient norm (up to solver
    tolerance) when the certificate holds.
    """
    x = _as_vector(x)
    xp = prox(p, x, lambda_bar, **kw)
    mg = 2.0 * lambda_bar * (x - xp)
    nrm = float(np.linalg.norm(mg))
    res = _inner_residual(p, xp, xp, lambda_bar)  # S(x+, xi, 2*lambda_bar), xi in the subdifferential
    return StationarityReport(
        moreau_grad_norm=nrm, prox_point=xp, s_x_residual=res,
        epsilon=epsilon, lambda_bar=lambda_bar, certified=bool(nrm <= epsilon))


# ----------------------------------------------------------------------------
# primal oracle builders


def primal_from_callables(phi, subgrad, weak_convexity, domain,
                          prox_closed_form=None, subgrad_interval=None,
                          mode="closed_form") -> PrimalOracle:
    return PrimalOracle(phi=phi, subgrad=subgrad, weak_convexity=weak_convexity,
                        domain=domain, mode=mode, prox_closed_form=prox_closed_form,
                        subgrad_interval=subgrad_interval)


def primal_from_grid(problem: ProblemInstance, resolution: int = 2001,
                     weak_convexity: Optional[float] = None) -> PrimalOracle:
    """Brute-force primal oracle: phi(x) by dense maximization over Y (dim <= 2)."""
    if problem.dim_y > 2:
        raise ValueError("grid-mode primal oracle supports dim(Y) <= 2")
    wc = problem.profile.lam if weak_convexity is None else weak_convexity

    def _max_at(x):
        if problem.vectorized and problem.dim_y == 1:
            return grid_max(lambda yv: problem.value(float(np.atleast_1d(x)[0]), yv),
                            problem.domain_y, resolution, vectorized=True)
        return grid_max(lambda y: problem.value(x, y), problem.domain_y, resolution)

    def phi(x):
        if problem.phi_exact is not None:
            return float(problem.phi_exact(x))
        return _max_at(x)[1]

    def subgrad(x):
        ystar, _ = _max_at(x)
        return np.atleast_1d(problem.grad_x(x, ystar))

    def subgrad_interval(x):
        # extreme active x-gradients: Danskin subdifferential endpoints (1-d x)
        from .gridsearch import candidate_grid
        pts = candidate_grid(problem.domain_y, resolution)
        if problem.vectorized and problem.dim_y == 1:
            vals = np.asarray(problem.value(float(np.atleast_1d(x)[0]), pts[:, 0]), float)
        else:
            vals = np.array([float(problem.value(x, q)) for q in pts])
        vmax = float(np.max(vals))
        tol = 1e-7 * max(1.0, abs(vmax)) + 1e2 * np.finfo(float).eps
        active = pts[vals >= vmax - tol]
        grads = [float(np.atleast_1d(problem.grad_x(x, y))[0]) for y in active]
        return (min(grads), max(grads))

    return PrimalOracle(phi=phi, subgrad=subgrad, weak_convexity=wc,
                        domain=problem.domain_x, mode="grid",
                        subgrad_interval=subgrad_interval if problem.dim_x == 1 else None)


def primal_from_surrogate_grid(s: SurrogateModel, resolution: int = 2001,
                               weak_convexity: Optional[float] = None) -> PrimalOracle:
    """Brute-force primal oracle of the surrogate problem (dim(Y) <= 2)."""
    if s.base.dim_y > 2:
        raise ValueError("grid-mode primal oracle supports dim(Y) <= 2")
    wc = s.lambda_bar if weak_convexity is None else weak_convexity

    def _max_at(x):
        return grid_max(lambda y: surrogate_value(s, x, y), s.base.domain_y, resolution)

    def phi(x):
        return _max_at(x)[1]

    def subgrad(x):
        ystar, _ = _max_at(x)
        return surrogate_grad_x(s, x, ystar)

    def subgrad_interval(x):
        from .gridsearch import candidate_grid
        pts = candidate_grid(s.base.domain_y, resolution)
        vals = np.array([surrogate_value(s, x, q) for q in pts])
        vmax = float(np.max(vals))
        tol = 1e-7 * max(1.0, abs(vmax)) + 1e2 * np.finfo(float).eps
        active = pts[vals >= vmax - tol]
        grads = [float(surrogate_grad_x(s, x, y)[0]) for y in active]
        return (min(grads), max(grads))

    return PrimalOracle(phi=phi, subgrad=subgrad, weak_convexity=wc,
                        domain=s.base.domain_x, mode="grid",
                        subgrad_interval=subgrad_interval if s.base.dim_x == 1 else None)


def primal_from_surrogate_krylov(s: SurrogateModel, delta_scale: float = 1e-10,
                                 q_fail: float = 1e-6, seed: int = 0) -> PrimalOracle:
    """Primal oracle of the k=2 surrogate on a ball Y via the Krylov maximizer."""
    from .geometry import Ball
    from .krylov import QuadraticForm, approx_max

    if s.k != 2 or not isinstance(s.base.domain_y, Ball):
        raise ValueError("krylov-mode primal oracle needs a k=2 surrogate on a ball")
    ball: Ball = s.base.domain_y
    rho1 = s.base.profile.rho_1
    if rho1 is None:
        raise ValueError("krylov-mode primal oracle needs a declared rho_1")
    rng = np.random.default_rng(seed)

    def _max_at(x):
        g0, hvp = s.quadratic_at(x)
        # shift to the ball center: y = center + u, |u| <= radius
        g = g0 + hvp(ball.center - s.center)
        qf = QuadraticForm(g=g, hvp=hvp)
        scale = max(1.0, float(np.linalg.norm(g)), rho1 * ball.radius**2)
        res = approx_max(qf, ball.radius, delta_scale * scale, rho1, q_fail, rng)
        y = ball.center + res.y
        return y, surrogate_value(s, x, y)

    def phi(x):
        return _max_at(x)[1]

    def subgrad(x):
        y, _ = _max_at(x)
        return surrogate_grad_x(s, x, y)

    return PrimalOracle(phi=phi, subgrad=subgrad, weak_convexity=s.lambda_bar,
                        domain=s.base.domain_x, mode="krylov")
