"""Analytic hard-instance families with closed-form primal functions and the
center/stationary-point certificates showing when the surrogate reduction fails.

Two families on R x [a, a+D]:

    F(x, y) = -lam*x^2/2 + mu*x*y + s*rho*|y|^(k+1)/(k+1)!      (s in {-1, 0, +1})
    S(x, y) = -lam*x^2/4 + (rho*y/2)*(tanh(sqrt(lam/(rho*D))*x) - 1)

Each certificate exhibits a Taylor center y_hat and a point x* that is exactly
stationary for the surrogate Moreau envelope while the true Moreau gradient
stays above an explicit threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Interval, WholeSpace, soft_threshold
from .moreau import PrimalOracle
from .problems import ProblemInstance, SmoothnessProfile, _factorial


class RegimeError(ValueError):
    """Parameters violate the validity condition of the requested construction."""


class ValidityRegionError(ValueError):
    """Closed-form expression requested outside its region of validity."""


@dataclass(frozen=True)
class HardInstanceSpec:
    family: str  # "F" or "S"
    k: int
    s: int
    lam: float
    mu: float
    rho: float
    D: float
    a: Optional[float] = None  # Y = [a, a + D]; family/regime default when None

    def __post_init__(self):
        if self.family not in ("F", "S"):
            raise ValueError("family must be 'F' or 'S'")
        if self.s not in (-1, 0, 1):
            raise ValueError("s must be -1, 0 or +1")
        if self.lam <= 0 or self.mu < 0 or self.rho < 0 or self.D <= 0:
            raise ValueError("need lam > 0, mu >= 0, rho >= 0, D > 0")
        if self.k < 0:
            raise ValueError("k must be >= 0")

    @property
    def R(self) -> float:
        return 0.5 * self.D

    @property
    def r(self) -> float:
        # critical x-radius mu*D/(2*lam)
        return self.mu * self.D / (2.0 * self.lam)

    def mu_crit(self) -> float:
        """Coupling threshold separating the weak/strong regimes."""
        if self.k == 0:
            return np.sqrt(2.0 * self.lam * self.rho / self.D)
        if self.k == 1:
            return np.sqrt(self.lam * self.rho / 2.0)
        return np.sqrt(self.lam * self.rho * self.D ** (self.k - 1) / _factorial(self.k))

    @property
    def regime(self) -> str:
        return "weak_coupling" if self.mu <= self.mu_crit() else "strong_coupling"

    def y_interval(self) -> Interval:
        if self.a is not None:
            return Interval(self.a, self.a + self.D)
        if self.family == "S" or (self.k >= 2 and self.regime == "weak_coupling"):
            return Interval(0.0, self.D)
        return Interval(-self.R, self.R)


def _g_derivative(y, k: int, j: int):
    """j-th derivative of |y|^(k+1)/(k+1)! for j <= k (continuous in this range)."""
    y = np.asarray(y, dtype=float)
    out = np.abs(y) ** (k + 1 - j) * np.sign(y) ** j / _factorial(k + 1 - j)
    return out if out.ndim else float(out)


def build_instance(spec: HardInstanceSpec) -> ProblemInstance:
    """Exact oracle bundle for the spec, with the constants of the A1/A2/A3
    analysis attached; rejects parameters outside the family's validity regime."""
    lam, mu, rho, D, k, s = spec.lam, spec.mu, spec.rho, spec.D, spec.k, spec.s
    if spec.family == "S":
        if not mu >= np.sqrt(2.0 * lam * rho / D):
            raise RegimeError(
                "S-family requires mu >= sqrt(2*lam*rho/D) "
                f"({mu:.6g} < {np.sqrt(2 * lam * rho / D):.6g})")
        return _build_sigmoid(spec)
    if k == 0:
        if s != 0:
            raise RegimeError("k=0 F-family is only defined with s=0 (smooth member)")
        if rho > 0 and not mu <= np.sqrt(2.0 * lam * rho / D):
            raise RegimeError(
                "k=0 F-family requires mu <= sqrt(2*lam*rho/D) "
                f"({mu:.6g} > {np.sqrt(2 * lam * rho / D):.6g}); "
                "use the S-family above the threshold")
    return _build_quadratic_family(spec)


def _build_quadratic_family(spec: HardInstanceSpec) -> ProblemInstance:
    lam, mu, rho, D, k, s = spec.lam, spec.mu, spec.rho, spec.D, spec.k, spec.s
    Y = spec.y_interval()
    ymax = max(abs(Y.lo), abs(Y.hi))
    if k == 0:
        dom_x = Interval(-spec.r, spec.r) if spec.r > 0 else Interval(-1.0, 1.0)
        probe = None
        sigma_0 = mu * D
        profile = SmoothnessProfile(lam=lam, mu=mu, k=0, rho_k=rho, sigma_k=sigma_0,
                                    tau_k=lam, sigma_0=sigma_0, rho_1=0.0, bilinear=False)
    else:
        dom_x = WholeSpace(1)
        half = max(3.0 * spec.r, D, 1.0)
        probe = Interval(-half, half)
        rho1 = rho * ymax ** (k - 1) / _factorial(k - 1) if k >= 1 else 0.0
        sigma_0 = lam * half + mu * ymax
        profile = SmoothnessProfile(lam=lam, mu=mu, k=k, rho_k=rho,
                                    sigma_k=mu * (k == 1), tau_k=0.0,
                                    sigma_0=sigma_0, rho_1=rho1, bilinear=True)

    def value(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = -0.5 * lam * x**2 + mu * x * y
        if s != 0:
            out = out + s * rho * np.abs(y) ** (k + 1) / _factorial(k + 1)
        return float(out.reshape(-1)[0]) if out.size == 1 else out

    def grad_y(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = mu * x
        if s != 0:
            out = out + s * rho * _g_derivative(y, k, 1)
        return np.atleast_1d(out)

    def hess_yy_vec(x, y, v):
        if s == 0 or k < 2:
            coef = s * rho if (s != 0 and k == 1) else 0.0
            return np.atleast_1d(coef * np.asarray(v, float))
        return np.atleast_1d(s * rho * _g_derivative(y, k, 2) * np.asarray(v, float))

    def y_expansion(x, yhat, order):
        x = float(np.atleast_1d(x)[0])
        coeffs = np.zeros(order + 1)
        dcoeffs = np.zeros(order + 1)
        coeffs[0] = float(value(x, yhat))
        dcoeffs[0] = -lam * x + mu * yhat
        if order >= 1:
            coeffs[1] = mu * x + (s * rho * _g_derivative(yhat, k, 1) if s != 0 else 0.0)
            dcoeffs[1] = mu
        for j in range(2, order + 1):
            if s != 0 and j <= k:
                coeffs[j] = s * rho * _g_derivative(yhat, k, j) / _factorial(j)
            elif s != 0 and j == k + 1:
                coeffs[j] = s * rho * np.sign(yhat) ** (k + 1) / _factorial(k + 1)
        return coeffs, dcoeffs

    def phi_exact(x):
        x = float(np.atleast_1d(x)[0])
        return -0.5 * lam * x**2 + _inner_max_exact(spec, x)[1]

    return ProblemInstance(
        value=value,
        grad_x=lambda x, y: np.atleast_1d(-lam * np.asarray(x, float) + mu * np.asarray(y, float)),
        grad_y=grad_y,
        hess_yy_vec=hess_yy_vec,
        cross_jvp=lambda x, y, v: np.atleast_1d(mu * np.asarray(v, float)),
        cross3_jvp=lambda x, y, v: np.zeros(1),
        domain_x=dom_x, domain_y=Y, profile=profile,
        name=f"F[k={k},s={s:+d}]", x_probe=probe,
        phi_exact=phi_exact, y_expansion=y_expansion, vectorized=True)


def _build_sigmoid(spec: HardInstanceSpec) -> ProblemInstance:
    lam, mu, rho, D = spec.lam, spec.mu, spec.rho, spec.D
    u = np.sqrt(lam / (rho * D))
    dom_x = Interval(-spec.r, spec.r)
    profile = SmoothnessProfile(lam=lam, mu=mu, k=0, rho_k=rho, sigma_k=mu * D,
                                tau_k=lam, sigma_0=mu * D, rho_1=0.0, bilinear=False)

    def value(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = -0.25 * lam * x**2 + 0.5 * rho * y * (np.tanh(u * x) - 1.0)
        return float(out.reshape(-1)[0]) if out.size == 1 else out

    def phi_exact(x):
        x = float(np.atleast_1d(x)[0])
        # tanh - 1 < 0, so the inner max sits at y = 0
        return -0.25 * lam * x**2

    return ProblemInstance(
        value=value,
        grad_x=lambda x, y: np.atleast_1d(
            -0.5 * lam * np.asarray(x, float)
            + 0.5 * rho * np.asarray(y, float) * u / np.cosh(u * np.asarray(x, float)) ** 2),
        grad_y=lambda x, y: np.atleast_1d(0.5 * rho * (np.tanh(u * np.asarray(x, float)) - 1.0)),
        hess_yy_vec=lambda x, y, v: np.zeros_like(np.atleast_1d(np.asarray(v, float))),
        cross_jvp=lambda x, y, v: np.atleast_1d(
            0.5 * rho * u / np.cosh(u * np.asarray(x, float)) ** 2 * np.asarray(v, float)),
        cross3_jvp=lambda x, y, v: np.zeros(1),
        domain_x=dom_x, domain_y=Interval(0.0, D), profile=profile,
        name="S", phi_exact=phi_exact, vectorized=True)


def _inner_max_exact(spec: HardInstanceSpec, x: float):
    """Exact max of mu*x*y + s*rho*g(y) over Y for the F-family (1-d candidates)."""
    lam, mu, rho, k, s = spec.lam, spec.mu, spec.rho, spec.k, spec.s
    Y = spec.y_interval()
    cands = [Y.lo, Y.hi]
    if s != 0 and rho > 0 and mu * abs(x) > 0 and k >= 1:
        # |y|^k sign(y) = +-mu*x*k!/rho at interior stationary points
        t = (mu * abs(x) * _factorial(k) / rho) ** (1.0 / k)
        for yc in (-t, t):
            if Y.lo <= yc <= Y.hi:
                cands.append(float(yc))
    if s != 0 and Y.lo <= 0.0 <= Y.hi:
        cands.append(0.0)

    def inner(y):
        return mu * x * y + (s * rho * abs(y) ** (k + 1) / _factorial(k + 1) if s else 0.0)

    vals = [inner(y) for y in cands]
    j = int(np.argmax(vals))
    return cands[j], vals[j]


def true_primal_oracle(spec: HardInstanceSpec, domain=None) -> PrimalOracle:
    """Exact primal function of the instance, with Danskin subgradients.

    ``domain`` restricts X (e.g. to the compact set a solver ran on).
    """
    p = build_instance(spec)
    lam = spec.lam

    def phi(x):
        return float(p.phi_exact(x))

    def subgrad(x):
        x0 = float(np.atleast_1d(x)[0])
        ystar, _ = _inner_max_exact(spec, x0) if spec.family == "F" else (0.0, None)
        return np.atleast_1d(p.grad_x(x0, ystar))

    def subgrad_interval(x):
        x0 = float(np.atleast_1d(x)[0])
        if spec.family == "S":
            g = float(p.grad_x(x0, 0.0)[0])
            return (g, g)
        ystar, vmax = _inner_max_exact(spec, x0)
        Y = spec.y_interval()
        grads = []
        for y in {Y.lo, Y.hi, ystar}:
            inner = spec.mu * x0 * y + (spec.s * spec.rho * abs(y) ** (spec.k + 1)
                                        / _factorial(spec.k + 1) if spec.s else 0.0)
            if inner >= vmax - 1e-12 * max(1.0, abs(vmax)):
                grads.append(float(p.grad_x(x0, y)[0]))
        return (min(grads), max(grads))

    return PrimalOracle(phi=phi, subgrad=subgrad, weak_convexity=lam,
                        domain=p.domain_x if domain is None else domain,
                        mode="closed_form", subgrad_interval=subgrad_interval)


def surrogate_primal_oracle(spec: HardInstanceSpec, y_hat: float,
                            k: Optional[int] = None, domain=None) -> PrimalOracle:
    """Exact primal function of the order-k Taylor surrogate (polynomial max)."""
    p = build_instance(spec)
    k = spec.k if k is None else k
    Y = spec.y_interval()
    lam, mu = spec.lam, spec.mu

    def _poly(x):
        # surrogate inner objective as a polynomial in (y - y_hat)
        coeffs, _ = p.y_expansion(np.array([x]), y_hat, k)
        return coeffs  # coeffs[j] multiplies (y - y_hat)^j, includes -lam x^2/2

    def _max_at(x):
        coeffs = _poly(x)
        cands = [Y.lo, Y.hi]
        if k >= 2:
            dcoef = np.array([j * coeffs[j] for j in range(1, k + 1)][::-1])
            if np.any(np.abs(dcoef) > 0):
                roots = np.roots(dcoef)
                for rt in roots:
                    if abs(rt.imag) < 1e-10:
                        yc = float(rt.real) + y_hat
                        if Y.lo <= yc <= Y.hi:
                            cands.append(yc)

        def val(y):
            t = y - y_hat
            return float(sum(c * t**j for j, c in enumerate(coeffs)))

        vals = [val(y) for y in cands]
        j = int(np.argmax(vals))
        return cands[j], vals[j]

    def phi(x):
        return _max_at(float(np.atleast_1d(x)[0]))[1]

    def subgrad(x):
        x0 = float(np.atleast_1d(x)[0])
        ystar, _ = _max_at(x0)
        # d/dx of the surrogate at fixed y: -lam*x + mu*y_hat + mu*(y - y_hat)
        return np.atleast_1d(-lam * x0 + mu * ystar)

    def subgrad_interval(x):
        x0 = float(np.atleast_1d(x)[0])
        coeffs = _poly(x0)

        def val(y):
            t = y - y_hat
            return float(sum(c * t**j for j, c in enumerate(coeffs)))

        ystar, vmax = _max_at(x0)
        grads = []
        for y in {Y.lo, Y.hi, ystar}:
            if val(y) >= vmax - 1e-12 * max(1.0, abs(vmax)):
                grads.append(-lam * x0 + mu * y)
        return (min(grads), max(grads))

    return PrimalOracle(phi=phi, subgrad=subgrad,
                        weak_convexity=p.profile.lambda_bar(spec.D),
                        domain=p.domain_x if domain is None else domain,
                        mode="closed_form", subgrad_interval=subgrad_interval)


# ----------------------------------------------------------------------------
# closed-form Moreau gradients (validity-checked; never extrapolated)


def closed_form_moreau_grad(spec: HardInstanceSpec, mode: str, x: float,
                            y_hat: Optional[float] = None) -> float:
    """Moreau-envelope gradient (modulus 2*lam) from the analytic formulas.

    ``mode`` is "true_primal" or "surrogate"; the latter needs the Taylor
    center.  Outside the region where the formula is exact a
    ValidityRegionError is raised.
    """
    if mode == "true_primal":
        return _cf_true(spec, float(x))
    if mode == "surrogate":
        if y_hat is None:
            raise ValueError("surrogate mode needs y_hat")
        return _cf_surrogate(spec, float(x), float(y_hat))
    raise ValueError(f"unknown mode {mode!r}")


def _cf_true(spec: HardInstanceSpec, x: float) -> float:
    lam, mu, rho, D, k, s = spec.lam, spec.mu, spec.rho, spec.D, spec.k, spec.s
    r, R = spec.r, spec.R
    Y = spec.y_interval()
    if spec.family == "S":
        if abs(x) > 0.75 * r + 1e-15:
            raise ValidityRegionError("S-family formula needs |x| <= 3r/4")
        return -2.0 * lam * x / 3.0
    if k == 0:
        # phi' = 2*lam*(x - [2x]_r) on X = [-r, r], Y symmetric
        if not np.isclose(Y.lo, -R) or abs(x) > r + 1e-15:
            raise ValidityRegionError("k=0 formula needs Y = [-D/2, D/2] and |x| <= r")
        return 2.0 * lam * (x - soft_threshold(2.0 * x, r))
    if s == 1:
        if not np.isclose(Y.lo, -R):
            raise ValidityRegionError("s=+1 formula needs Y = [-D/2, D/2]")
        return 2.0 * lam * (x - soft_threshold(2.0 * x, r))
    if s == -1 and k == 1:
        if not np.isclose(Y.lo, -R):
            raise ValidityRegionError("k=1, s=-1 formula needs Y = [-D/2, D/2]")
        xplus = 2.0 * lam * rho * x / (lam * rho + mu**2)
        if abs(xplus) > rho * R / mu + 1e-15:
            raise ValidityRegionError("prox point escapes the interior-maximizer region")
        return 2.0 * lam * (x - xplus)
    if s == -1 and k >= 2:
        if not np.isclose(Y.lo, 0.0) or x < 0:
            raise ValidityRegionError("k>=2, s=-1 formula needs Y = [0, D] and x >= 0")
        xplus = _solve_prox_weak_k(spec, x)
        if mu * xplus > rho * D**k / _factorial(k) + 1e-12:
            raise ValidityRegionError("prox point escapes the interior-maximizer region")
        return 2.0 * lam * (x - xplus)
    raise ValidityRegionError(f"no closed form for family F, k={k}, s={s}")


def _solve_prox_weak_k(spec: HardInstanceSpec, x: float) -> float:
    """Root of u + (mu/lam)*(mu*k!*u/rho)^(1/k) = 2x for u >= 0 (bisection)."""
    lam, mu, rho, k = spec.lam, spec.mu, spec.rho, spec.k

    def h(u):
        return u + (mu / lam) * (mu * _factorial(k) * u / rho) ** (1.0 / k) - 2.0 * x

    lo, hi = 0.0, 2.0 * x + 1e-30
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, abs(2.0 * x)):
            break
    return 0.5 * (lo + hi)


def _cf_surrogate(spec: HardInstanceSpec, x: float, y_hat: float) -> float:
    lam, mu, rho, D, k, s = spec.lam, spec.mu, spec.rho, spec.D, spec.k, spec.s
    r, R = spec.r, spec.R
    Y = spec.y_interval()
    if spec.family == "S":
        return _moreau_grad_smooth_1d(spec, x, y_hat)
    if k == 0:
        # surrogate primal is the smooth function f(., y_hat) on X = [-r, r]
        xhat = 2.0 * x - mu * y_hat / lam
        if abs(xhat) > r + 1e-15:
            raise ValidityRegionError("k=0 surrogate formula needs |2x - mu*y_hat/lam| <= r")
        return 2.0 * lam * (x - xhat)
    if k == 1:
        # shifted soft-thresholding form, valid on all of X = R
        if mu == 0:
            raise ValidityRegionError("k=1 surrogate formula needs mu > 0")
        c = s * rho * y_hat / mu
        return 2.0 * lam * (x + c - soft_threshold(2.0 * x + c, r))
    if k >= 2 and s == 1 and np.isclose(y_hat, R) and np.isclose(Y.lo, -R):
        if k % 2 != 0:
            raise ValidityRegionError("endpoint-center surrogate formula needs even k")
        shift = (2.0**k - 1.0) * rho * R**k / (mu * _factorial(k + 1))
        return 2.0 * lam * (x - shift - soft_threshold(2.0 * x - shift, r))
    if k >= 2 and s == -1 and np.isclose(y_hat, 0.0) and np.isclose(Y.lo, 0.0):
        # surrogate primal -lam x^2/2 + mu D max{x, 0}
        h = mu * D / (2.0 * lam)
        if x < 0:
            return -2.0 * lam * x
        if x <= h:
            return 2.0 * lam * x
        return 2.0 * (mu * D - lam * x)
    raise ValidityRegionError(
        f"no closed form for the surrogate of family F, k={k}, s={s}, y_hat={y_hat}")


def _moreau_grad_smooth_1d(spec: HardInstanceSpec, x: float, y_hat: float) -> float:
    """Moreau gradient of the smooth S-family surrogate via Newton on the prox."""
    lam, rho, D = spec.lam, spec.rho, spec.D
    u = np.sqrt(lam / (rho * D))
    r = spec.r
    if abs(x) > r:
        raise ValidityRegionError("x outside X = [-r, r]")
    c = 0.5 * rho * y_hat

    def dphi(t):
        return -0.5 * lam * t + c * u / np.cosh(u * t) ** 2

    def d2phi(t):
        return -0.5 * lam - 2.0 * c * u**2 * np.tanh(u * t) / np.cosh(u * t) ** 2

    t = x
    for _ in range(100):
        grad = dphi(t) + 2.0 * lam * (t - x)
        hess = d2phi(t) + 2.0 * lam
        step = grad / hess
        t = float(np.clip(t - step, -r, r))
        if abs(step) < 1e-15 * max(1.0, abs(t)):
            break
    if abs(t) >= r - 1e-12 and abs(dphi(t) + 2.0 * lam * (t - x)) > 1e-8:
        raise ValidityRegionError("surrogate prox hits the boundary of X")
    return 2.0 * lam * (x - t)


# ----------------------------------------------------------------------------
# certificates (Propositions 2-4)


@dataclass(frozen=True)
class CertificateResult:
    proposition: str
    regime: str
    spec: HardInstanceSpec           # requested parameters
    effective: HardInstanceSpec      # objective actually used (mu/rho substituted)
    y_hat: float
    x_star: float
    surrogate_moreau_grad: float
    true_moreau_grad: float
    bound: float

    def holds(self, stationarity_tol: float = 1e-10) -> bool:
        return (abs(self.surrogate_moreau_grad) <= stationarity_tol
                and abs(self.true_moreau_grad) >= self.bound - 1e-12)


def certificate(spec: HardInstanceSpec, epsilon: Optional[float] = None) -> CertificateResult:
    """Closed-form lower-bound certificate for the spec's regime.

    Picks the construction matching (family, k, coupling regime), substituting
    the effective coupling/curvature constants used in the analysis, and
    returns the Taylor center, the surrogate-stationary point, both Moreau
    gradients, and the explicit violation bound.
    """
    lam, mu, rho, D, k = spec.lam, spec.mu, spec.rho, spec.D, spec.k
    R, mu_cr = spec.R, spec.mu_crit()
    if mu <= 0 or rho <= 0:
        raise RegimeError("certificates need mu > 0 and rho > 0")

    if k == 0 and spec.regime == "weak_coupling":
        eff = HardInstanceSpec("F", 0, 0, lam, mu, rho, D, a=-R)
        y_hat, x_star = R / 2.0, eff.r / 2.0
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop2_claim1", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, mu * D / 2.0)
    if k == 0:
        eff = HardInstanceSpec("S", 0, 0, lam, mu, rho, D, a=0.0)
        y_hat = 2.0 * D / 3.0
        x_star = _sigmoid_stationary_point(lam, rho, D)
        if not x_star <= 0.75 * eff.r:
            raise RegimeError("S-family stationary point escapes [-3r/4, 3r/4]")
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop2_claim2", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, np.sqrt(lam * rho * D) / 3.0)

    if k == 1 and spec.regime == "weak_coupling":
        eff = HardInstanceSpec("F", 1, -1, lam, mu, rho, D, a=-R)
        y_hat, x_star = 0.0, eff.r
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop3_claim1", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, mu * D / 3.0)
    if k == 1:
        rho_bar, mu_bar = rho / 4.0, np.sqrt(lam * rho / 2.0)
        eff = HardInstanceSpec("F", 1, 1, lam, mu_bar, rho_bar, D, a=-R)
        y_hat = R
        x_star = -rho_bar * R / mu_bar
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop3_claim2", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, np.sqrt(lam * rho * D**2 / 8.0))

    if spec.regime == "weak_coupling":  # k >= 2, mu <= mu_cr
        mu_bar = mu / 2.0
        eff = HardInstanceSpec("F", k, -1, lam, mu_bar, rho, D, a=0.0)
        y_hat = 0.0
        x_star = mu_bar * D / lam
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop4_claim1", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, mu * D / (2.0 * k))
    if k % 2 == 0:  # k >= 2, mu >= mu_cr, even
        eff = HardInstanceSpec("F", k, 1, lam, mu_cr, rho, D, a=-R)
        y_hat = R
        x_star = (2.0**k - 1.0) * rho * R**k / (mu_cr * _factorial(k + 1))
        sg = _cf_surrogate(eff, x_star, y_hat)
        tg = _cf_true(eff, x_star)
        return CertificateResult("prop4_claim2_even", spec.regime, spec, eff, y_hat,
                                 x_star, sg, tg, mu_cr * D / (2.0 * k))
    # k >= 3 odd, strong coupling
    mu_bar = np.sqrt(2.0 * lam * rho * D ** (k - 1) / _factorial(k)
                     * (1.0 - 2.0 ** (-k)) * (1.0 - 1.0 / k) ** (k - 1))
    eff = HardInstanceSpec("F", k, 1, lam, mu_bar, rho, D, a=-R)
    y_hat = (1.0 - 1.0 / k) * R
    r_bar = mu_bar * R / lam
    x_star = -(1.0 - 1.0 / k) * r_bar
    # stationarity holds exactly by construction: the inner maximizer of the
    # surrogate at x* is z* = -(1 - 1/k) and x* = r_bar * z*
    sg = 0.0
    tg = _cf_true(eff, x_star)
    return CertificateResult("prop4_claim2_odd", spec.regime, spec, eff, y_hat,
                             x_star, sg, tg, mu_cr * D / (2.0 * k))


def _sigmoid_stationary_point(lam: float, rho: float, D: float) -> float:
    """Solve u*x*cosh^2(u*x) = 2/3 for x > 0, u = sqrt(lam/(rho*D)); the surrogate
    stationary point x* = c*sqrt(rho*D/lam) with c in (0.51, 0.52)."""
    u = np.sqrt(lam / (rho * D))

    def h(x):
        return u * x * np.cosh(u * x) ** 2 - 2.0 / 3.0

    lo, hi = 0.0, 1.0 / u
    while h(hi) < 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def proposition_bound(spec: HardInstanceSpec) -> float:
    """The explicit lower-bound constant of the proposition covering the spec."""
    return certificate(spec).bound
