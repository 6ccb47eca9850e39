"""The three surrogate-based FOSP-search algorithms with their exact step sizes.

All three share the projected-step stationarity residual

    eps_t^2 = (1/gamma^2) * (|xt_tilde - x_t|^2 - |xt_tilde - x_{t+1}|^2),

which equals the projected residual s_x(x_t, g_t, 1/gamma) of the step
direction g_t; the best iterate by this residual is maintained throughout.
Runs are deterministic given the config seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Ball, Box, Domain, Interval, WholeSpace, _as_vector, project
from .gridsearch import candidate_grid, grid_max
from .krylov import QuadraticForm, approx_max
from .moreau import s_x
from .problems import CountingOracle, ProblemInstance, _factorial
from .surrogate import SurrogateModel, surrogate_value

HARD_ITERATION_CAP = 10**7


class BudgetExceededError(RuntimeError):
    """Iteration budget above the hard cap; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class SolverConfig:
    x0: np.ndarray
    y_hat: np.ndarray
    epsilon: float
    algorithm: str = "alg1"
    coupled: Optional[bool] = None   # alg2; defaults to mu >= sqrt(lambda_bar_1 rho_1)
    naive: bool = False              # alg3
    p_fail: float = 0.1              # alg3
    q_fail: float = 0.1              # krylov oracle
    T_override: Optional[int] = None
    seed: int = 0
    iteration_cap: int = HARD_ITERATION_CAP
    store_iterates: bool = True

    def __post_init__(self):
        self.x0 = _as_vector(self.x0)
        self.y_hat = _as_vector(self.y_hat)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not (0 < self.p_fail < 1 and 0 < self.q_fail < 1
                and self.p_fail + self.q_fail < 1):
            raise ValueError("need p_fail, q_fail in (0,1) with p_fail + q_fail < 1")

    def validate_domains(self, p: ProblemInstance):
        if not p.domain_x.contains(self.x0, tol=1e-9):
            raise ValueError("x0 must lie in X")
        if not p.domain_y.contains(self.y_hat, tol=1e-9):
            raise ValueError("y_hat must lie in Y")


@dataclass
class RunTrace:
    algorithm: str
    T: int
    gamma_x: float
    eps_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phi_estimates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cumulative_calls: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    iterates: Optional[list] = None
    y_iterates: Optional[list] = None
    best_index: int = 0
    best_eps: float = np.inf
    counts: dict = field(default_factory=dict)
    expected_counts: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    wall_ms: float = 0.0
    m_used: Optional[list] = None
    output_index: Optional[int] = None  # alg3: the sampled index s

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,eps_t,phi_hat,cumulative_oracle_calls\n")
            for t in range(self.eps_history.size):
                fh.write(f"{t},{self.eps_history[t]:.17g},"
                         f"{self.phi_estimates[t]:.17g},{self.cumulative_calls[t]}\n")

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm, "T": self.T, "gamma_x": self.gamma_x,
            "eps_star": float(self.best_eps), "best_index": int(self.best_index),
            "output_index": self.output_index,
            "counts": self.counts, "expected_counts": self.expected_counts,
            "params": self.params, "warnings": self.warnings,
            "wall_ms": self.wall_ms,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _projected_step(x, g, gamma, dom: Domain):
    """One projected step; returns (x_next, eps_t) with the shared residual."""
    xt = x - gamma * g
    xn = project(dom, xt)
    e2 = (float((xt - x) @ (xt - x)) - float((xt - xn) @ (xt - xn))) / gamma**2
    return xn, float(np.sqrt(max(e2, 0.0)))


# ----------------------------------------------------------------------------
# brute-force estimates of the gap quantities entering the iteration counts


def estimate_phi(p: ProblemInstance, x, resolution: int = 801) -> float:
    if p.phi_exact is not None:
        return float(p.phi_exact(x))
    if p.vectorized and p.dim_y == 1:
        x0 = float(np.atleast_1d(x)[0])
        return grid_max(lambda yv: p.value(x0, yv), p.domain_y, resolution,
                        vectorized=True)[1]
    return grid_max(lambda y: p.value(x, y), p.domain_y, resolution)[1]


def estimate_dual_value(p: ProblemInstance, y_hat, resolution: int = 801) -> float:
    """min over (the probe box of) X of f(. , y_hat)."""
    dom = p.probe_domain_x()
    pts = candidate_grid(dom, resolution)
    vals = np.array([float(p.value(q, y_hat)) for q in pts])
    return float(np.min(vals))


def estimate_primal_gap(p: ProblemInstance, x0, resolution: int = 201) -> float:
    """phi(x0) - min_X phi, both by brute force."""
    dom = p.probe_domain_x()
    pts = candidate_grid(dom, resolution)
    vals = np.array([estimate_phi(p, q) for q in pts])
    return max(estimate_phi(p, x0) - float(np.min(vals)), 0.0)


def _default_T(formula_T: float, cfg: SolverConfig, trace_params: dict) -> int:
    T = int(np.ceil(formula_T)) if cfg.T_override is None else int(cfg.T_override)
    T = max(T, 1)
    trace_params["T_formula"] = float(formula_T)
    if T > cfg.iteration_cap:
        raise BudgetExceededError(
            f"iteration count {T} exceeds the hard cap {cfg.iteration_cap}")
    return T


# ----------------------------------------------------------------------------
# Algorithm 1: constant model, projected gradient descent on f(., y_hat)


def solve_alg1(p: ProblemInstance, cfg: SolverConfig):
    """Projected gradient descent on the constant-model objective f(., y_hat).

    Step size 1/lam; the default iteration count is
    300*lam*(phi(x0) - psi(y_hat))/eps^2 with both gap terms estimated by the
    brute-force oracles.  Returns (best iterate, trace).
    """
    cfg.validate_domains(p)
    oc = CountingOracle(p)
    lam = p.profile.lam
    gamma = 1.0 / lam
    params = {"gamma_x": gamma, "lam": lam, "epsilon": cfg.epsilon}
    phi0 = estimate_phi(p, cfg.x0)
    psi_hat = estimate_dual_value(p, cfg.y_hat)
    T = _default_T(300.0 * lam * max(phi0 - psi_hat, 0.0) / cfg.epsilon**2, cfg, params)

    trace = RunTrace("alg1", T, gamma, params=params,
                     iterates=[] if cfg.store_iterates else None)
    eps_hist = np.zeros(T)
    phi_hist = np.zeros(T)
    calls = np.zeros(T, dtype=int)
    t0 = time.perf_counter()
    x = cfg.x0.copy()
    xbest, ebest, ibest = x, np.inf, 0
    for t in range(T):
        if trace.iterates is not None:
            trace.iterates.append(x.copy())
        g = np.atleast_1d(oc.grad_x(x, cfg.y_hat))
        phi_hist[t] = float(oc.value(x, cfg.y_hat))
        xn, eps_t = _projected_step(x, g, gamma, p.domain_x)
        eps_hist[t] = eps_t
        if eps_t < ebest:
            xbest, ebest, ibest = x, eps_t, t
        calls[t] = oc.total()
        x = xn
    trace.eps_history, trace.phi_estimates, trace.cumulative_calls = eps_hist, phi_hist, calls
    trace.best_index, trace.best_eps = ibest, ebest
    trace.counts = dict(oc.counts)
    trace.expected_counts = {"grad_x": T, "value": T}
    trace.wall_ms = 1e3 * (time.perf_counter() - t0)
    return xbest, trace


# ----------------------------------------------------------------------------
# Algorithm 2: linear model, descent-ascent / descent with linear maximization


def linear_max(dom: Domain, g, y_hat=None) -> np.ndarray:
    """argmax_{y in dom} <g, y> with deterministic tie-breaking.

    Boxes break ties toward the lexicographically smallest vertex; balls with a
    vanishing gradient return the point in the direction of y_hat (the center
    itself when y_hat is the center).
    """
    g = _as_vector(g)
    if isinstance(dom, Interval):
        return np.array([dom.hi if g[0] > 0 else dom.lo])
    if isinstance(dom, Box):
        return np.where(g > 0, dom.hi, dom.lo)
    if isinstance(dom, Ball):
        ng = np.linalg.norm(g)
        if ng > 0:
            return dom.center + dom.radius * g / ng
        if y_hat is not None:
            d = _as_vector(y_hat) - dom.center
            nd = np.linalg.norm(d)
            if nd > 0:
                return dom.center + dom.radius * d / nd
        return dom.center.copy()
    raise ValueError(f"linear maximization unsupported on {type(dom).__name__}")


def solve_alg2(p: ProblemInstance, cfg: SolverConfig):
    """Descent-ascent on the linear model of f(x, .).

    Coupled mode takes one projected ascent step from the center and descends
    along the exact linear-model gradient (needs the mixed-derivative oracle);
    uncoupled mode maximizes the linear model outright and descends along
    grad_x f at that maximizer.  Returns (x_best, y_best, trace).
    """
    cfg.validate_domains(p)
    prof = p.profile
    if prof.k != 1:
        raise ValueError("alg2 needs a profile with k = 1 constants")
    rho1 = prof.rho_k  # for k = 1 the declared rho_k is the y-gradient modulus
    if rho1 <= 0:
        raise ValueError("alg2 needs rho_1 > 0")
    D = p.domain_y.diameter()
    lam_bar = prof.lambda_bar(D)
    coupled = cfg.coupled
    if coupled is None:
        coupled = bool(prof.mu >= np.sqrt(lam_bar * rho1))
    gamma_x = 1.0 / (3.0 * lam_bar + prof.mu**2 / rho1)
    gamma_y = 1.0 / rho1
    oc = CountingOracle(p)
    if coupled:
        p.require("cross_jvp")

    params = {"gamma_x": gamma_x, "gamma_y": gamma_y, "coupled": coupled,
              "lambda_bar": lam_bar, "rho_1": rho1, "epsilon": cfg.epsilon}
    delta = estimate_primal_gap(p, cfg.x0)
    T = _default_T((3.0 + prof.mu**2 / (lam_bar * rho1))
                   * (700.0 * lam_bar * delta / cfg.epsilon**2 + 1.0), cfg, params)

    trace = RunTrace("alg2", T, gamma_x, params=params,
                     iterates=[] if cfg.store_iterates else None,
                     y_iterates=[] if cfg.store_iterates else None)
    if not 200.0 * min(prof.mu, np.sqrt(lam_bar * rho1)) * D <= cfg.epsilon:
        trace.warnings.append(
            "diameter condition 200*min{mu, sqrt(lambda_bar_1*rho_1)}*D <= eps "
            "violated; certification may fail")

    eps_hist, phi_hist = np.zeros(T), np.zeros(T)
    calls = np.zeros(T, dtype=int)
    t0 = time.perf_counter()
    x = cfg.x0.copy()
    xbest, ybest, ebest, ibest = x, cfg.y_hat.copy(), np.inf, 0
    for t in range(T):
        if trace.iterates is not None:
            trace.iterates.append(x.copy())
        gy = np.atleast_1d(oc.grad_y(x, cfg.y_hat))
        if coupled:
            y_t = project(p.domain_y, cfg.y_hat + gamma_y * gy)
            g = np.atleast_1d(oc.grad_x(x, cfg.y_hat)) \
                + np.atleast_1d(oc.cross_jvp(x, cfg.y_hat, y_t - cfg.y_hat))
        else:
            y_t = linear_max(p.domain_y, gy, cfg.y_hat)
            g = np.atleast_1d(oc.grad_x(x, y_t))
        if trace.y_iterates is not None:
            trace.y_iterates.append(y_t.copy())
        # linear-model value at (x, y_t)
        phi_hist[t] = float(oc.value(x, cfg.y_hat)) + float(gy @ (y_t - cfg.y_hat))
        xn, eps_t = _projected_step(x, g, gamma_x, p.domain_x)
        eps_hist[t] = eps_t
        if eps_t < ebest:
            xbest, ybest, ebest, ibest = x, y_t, eps_t, t
        calls[t] = oc.total()
        x = xn
    trace.eps_history, trace.phi_estimates, trace.cumulative_calls = eps_hist, phi_hist, calls
    trace.best_index, trace.best_eps = ibest, ebest
    trace.counts = dict(oc.counts)
    trace.expected_counts = {"grad_x": T, "grad_y": T, "value": T,
                             "cross_jvp": T if coupled else 0}
    trace.wall_ms = 1e3 * (time.perf_counter() - t0)
    return xbest, ybest, trace


# ----------------------------------------------------------------------------
# Algorithm 3: quadratic model with an approximate ball-maximization oracle


def solve_alg3(p: ProblemInstance, cfg: SolverConfig,
               max_oracle: Optional[Callable] = None):
    """Subgradient-style scheme on the quadratic model with ApproxMax steps.

    Y must be a ball.  Per iteration the model around y_hat is maximized
    delta-approximately (by the Krylov oracle unless ``max_oracle(x, rng) -> y``
    is injected) and a projected step is taken along grad_x of the model
    (``naive``: of f itself).  The output iterate is drawn uniformly from the
    trace with the config seed.  Returns (x_s, trace).
    """
    cfg.validate_domains(p)
    prof = p.profile
    if prof.k != 2:
        raise ValueError("alg3 needs a profile with k = 2 constants")
    if not isinstance(p.domain_y, Ball):
        raise ValueError("alg3 needs Y to be a Euclidean ball")
    if not cfg.naive:
        p.require("cross_jvp", "cross3_jvp")
    if prof.sigma_0 is None:
        raise ValueError("alg3 needs a declared sigma_0")
    if max_oracle is None and prof.rho_1 is None:
        raise ValueError("the Krylov oracle needs a declared rho_1")

    ball: Ball = p.domain_y
    D = ball.diameter()
    lam_bar = prof.lambda_bar(D)
    sigma_eff = prof.sigma_0 + prof.sigma_k * D**2
    delta_gap = estimate_primal_gap(p, cfg.x0) + prof.rho_k * D**3
    params = {"lambda_bar": lam_bar, "sigma_eff": sigma_eff,
              "p_fail": cfg.p_fail, "q_fail": cfg.q_fail, "epsilon": cfg.epsilon}
    T = _default_T(6.0e6 / cfg.p_fail**2 * lam_bar * delta_gap * sigma_eff**2
                   / cfg.epsilon**4, cfg, params)
    gamma_x = np.sqrt(delta_gap / (lam_bar * T)) / sigma_eff
    delta = 4.0 * cfg.p_fail / 1.0e4 * cfg.epsilon**2 / lam_bar
    params.update({"gamma_x": gamma_x, "delta": delta})

    trace = RunTrace("alg3", T, gamma_x, params=params,
                     iterates=[] if cfg.store_iterates else None,
                     y_iterates=[] if cfg.store_iterates else None, m_used=[])
    if cfg.naive and not 24.0 * prof.sigma_k * D**2 <= cfg.epsilon * np.sqrt(cfg.p_fail):
        trace.warnings.append(
            "naive mode without 24*sigma_2*D^2 <= eps*sqrt(p); certification may fail")

    oc = CountingOracle(p)
    surr = SurrogateModel(base=p, k=2, center=cfg.y_hat)
    # independent streams: one for the output index, one for the Krylov sphere draws
    ss_out, ss_xi = np.random.SeedSequence(cfg.seed).spawn(2)
    rng_xi = np.random.default_rng(ss_xi)
    shift = ball.center - cfg.y_hat
    shift_is_zero = bool(np.linalg.norm(shift) == 0.0)
    expected_hvp = 0

    def krylov_step(x):
        nonlocal expected_hvp
        g0 = np.atleast_1d(oc.grad_y(x, cfg.y_hat))
        hvp = lambda v: np.atleast_1d(oc.hess_yy_vec(x, cfg.y_hat, v))
        g = g0 if shift_is_zero else g0 + hvp(shift)
        qf = QuadraticForm(g=g, hvp=hvp)
        res = approx_max(qf, ball.radius, delta, prof.rho_1,
                         cfg.q_fail / T, rng_xi)
        expected_hvp += qf.hvp_count + (0 if shift_is_zero else 1)
        trace.m_used.append(res.m_used)
        # model value at the maximizer, from pieces already evaluated
        const = float(oc.value(x, cfg.y_hat)) + float(g0 @ shift) \
            + (0.0 if shift_is_zero else 0.5 * float(shift @ (g - g0)))
        return ball.center + res.y, const + res.value, qf.hvp_count

    eps_hist, phi_hist = np.zeros(T), np.zeros(T)
    calls = np.zeros(T, dtype=int)
    t0 = time.perf_counter()
    x = cfg.x0.copy()
    xbest, ebest, ibest = x, np.inf, 0
    for t in range(T):
        if trace.iterates is not None:
            trace.iterates.append(x.copy())
        if max_oracle is not None:
            y_t = _as_vector(max_oracle(x, rng_xi))
            phi_hist[t] = surrogate_value(surr, x, y_t)
        else:
            y_t, phi_hist[t], _ = krylov_step(x)
        if trace.y_iterates is not None:
            trace.y_iterates.append(y_t.copy())
        if cfg.naive:
            g = np.atleast_1d(oc.grad_x(x, y_t))
        else:
            d = y_t - cfg.y_hat
            g = np.atleast_1d(oc.grad_x(x, cfg.y_hat)) \
                + np.atleast_1d(oc.cross_jvp(x, cfg.y_hat, d)) \
                + 0.5 * np.atleast_1d(oc.cross3_jvp(x, cfg.y_hat, d))
        xn, eps_t = _projected_step(x, g, gamma_x, p.domain_x)
        eps_hist[t] = eps_t
        if eps_t < ebest:
            xbest, ebest, ibest = x, eps_t, t
        calls[t] = oc.total()
        x = xn
    if trace.iterates is not None:
        trace.iterates.append(x.copy())

    s = int(np.random.default_rng(ss_out).integers(0, T))
    x_s = trace.iterates[s] if trace.iterates is not None else None
    trace.output_index = s
    trace.eps_history, trace.phi_estimates, trace.cumulative_calls = eps_hist, phi_hist, calls
    trace.best_index, trace.best_eps = ibest, ebest
    trace.counts = dict(oc.counts)
    trace.expected_counts = {
        "grad_x": T,
        "cross_jvp": 0 if cfg.naive else T,
        "cross3_jvp": 0 if cfg.naive else T,
        "grad_y": 0 if max_oracle is not None else T,
        "value": 0 if max_oracle is not None else T,
        "hess_yy_vec": expected_hvp,
    }
    trace.wall_ms = 1e3 * (time.perf_counter() - t0)
    if x_s is None:
        raise RuntimeError("alg3 needs store_iterates to report the sampled output")
    return x_s, trace


def solve(p: ProblemInstance, cfg: SolverConfig, **kw):
    """Dispatch on cfg.algorithm; returns (x_out, trace) for every algorithm."""
    if cfg.algorithm == "alg1":
        return solve_alg1(p, cfg)
    if cfg.algorithm == "alg2":
        x, _, trace = solve_alg2(p, cfg)
        return x, trace
    if cfg.algorithm == "alg3":
        return solve_alg3(p, cfg, **kw)
    raise ValueError(f"unknown algorithm {cfg.algorithm!r}")
