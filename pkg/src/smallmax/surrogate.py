"""Order-k Taylor models of f(x, .) around a center in Y, with error bounds.

The surrogate replaces the inner maximization objective by its Taylor expansion
in y of order k at a fixed center.  Orders 0-2 work for any instance exposing
the required derivative oracles; higher orders are available only when the
instance carries an analytic 1-d expansion of f(x, .).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import _as_vector
from .problems import MissingOracleError, ProblemInstance, _factorial


class UnsupportedOrderError(ValueError):
    """Requested expansion order is not available for this instance."""


@dataclass(frozen=True)
class SurrogateModel:
    """Taylor model of order k of ``base`` around ``center`` in Y."""

    base: ProblemInstance
    k: int
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center))
        if self.k < 0:
            raise UnsupportedOrderError("k must be >= 0")
        if self.k > 2 and self.base.y_expansion is None:
            raise UnsupportedOrderError(
                f"{self.base.name}: order {self.k} needs an analytic y-expansion; "
                "only k <= 2 is supported through derivative oracles")
        if self.k >= 1:
            self.base.require("grad_y")
        if self.k >= 2:
            self.base.require("hess_yy_vec")
        if not self.base.domain_y.contains(self.center, tol=1e-7):
            raise ValueError("surrogate center must lie in Y")

    @property
    def diameter(self) -> float:
        return self.base.domain_y.diameter()

    @property
    def lambda_bar(self) -> float:
        return self.base.profile.lambda_bar(self.diameter)

    def value(self, x, y) -> float:
        return surrogate_value(self, x, y)

    def grad_x(self, x, y) -> np.ndarray:
        return surrogate_grad_x(self, x, y)

    def grad_y(self, x, y) -> np.ndarray:
        return surrogate_grad_y(self, x, y)

    def quadratic_at(self, x):
        """(g, hvp) of the k=2 model in the shifted variable u = y - center.

        f2(x, center + u) = const + <g, u> + u'Hu/2 with H accessed through a
        matrix-vector product; used by the ball maximization oracle.
        """
        if self.k != 2:
            raise UnsupportedOrderError("quadratic_at needs k = 2")
        g = np.atleast_1d(self.base.grad_y(x, self.center))
        hvp = lambda v: np.atleast_1d(self.base.hess_yy_vec(x, self.center, v))
        return g, hvp


def surrogate_value(s: SurrogateModel, x, y) -> float:
    """Value of the order-k Taylor model at (x, y); y must lie in Y."""
    if not s.base.domain_y.contains(y, tol=1e-7):
        raise ValueError("surrogate evaluated outside Y")
    b, c = s.base, s.center
    if s.k <= 2:
        out = b.value(x, c)
        if s.k >= 1:
            d = _as_vector(y) - c
            out = out + float(np.atleast_1d(b.grad_y(x, c)) @ d)
        if s.k == 2:
            out = out + 0.5 * float(d @ np.atleast_1d(b.hess_yy_vec(x, c, d)))
        return float(out)
    coeffs, _ = b.y_expansion(x, float(c[0]), s.k)
    t = float(_as_vector(y)[0] - c[0])
    return float(sum(cj * t**j for j, cj in enumerate(coeffs)))


def surrogate_grad_x(s: SurrogateModel, x, y) -> np.ndarray:
    """Exact x-gradient of the order-k Taylor model at (x, y)."""
    b, c = s.base, s.center
    if s.k == 0:
        return np.atleast_1d(b.grad_x(x, c))
    if s.k <= 2:
        d = _as_vector(y) - c
        b.require("cross_jvp")
        g = np.atleast_1d(b.grad_x(x, c)) + np.atleast_1d(b.cross_jvp(x, c, d))
        if s.k == 2:
            if b.cross3_jvp is None:
                raise MissingOracleError(
                    f"{b.name}: k=2 surrogate gradient needs the cross3_jvp oracle")
            g = g + 0.5 * np.atleast_1d(b.cross3_jvp(x, c, d))
        return g
    _, dcoeffs = b.y_expansion(x, float(c[0]), s.k)
    t = float(_as_vector(y)[0] - c[0])
    return np.atleast_1d(sum(dj * t**j for j, dj in enumerate(dcoeffs)))


def surrogate_grad_y(s: SurrogateModel, x, y) -> np.ndarray:
    """y-gradient of the Taylor model (zero for k = 0)."""
    b, c = s.base, s.center
    if s.k == 0:
        return np.zeros(b.dim_y)
    if s.k == 1:
        return np.atleast_1d(b.grad_y(x, c))
    if s.k == 2:
        d = _as_vector(y) - c
        return np.atleast_1d(b.grad_y(x, c)) + np.atleast_1d(b.hess_yy_vec(x, c, d))
    coeffs, _ = b.y_expansion(x, float(c[0]), s.k)
    t = float(_as_vector(y)[0] - c[0])
    return np.atleast_1d(sum(j * cj * t ** (j - 1) for j, cj in enumerate(coeffs) if j >= 1))


def value_error_bound(s: SurrogateModel) -> float:
    """Uniform bound rho_k D^(k+1) / (k+1)! on |f - fhat_k| over X x Y."""
    prof = s.base.profile
    if prof.k != s.k:
        raise ValueError(f"profile declares constants for k={prof.k}, surrogate has k={s.k}")
    D = s.diameter
    return prof.rho_k * D ** (s.k + 1) / _factorial(s.k + 1)


def gradx_error_bound(s: SurrogateModel) -> float:
    """Uniform bound on the x-gradient error of the order-k model.

    min{mu*D, 2*sigma_0} for k = 0 and 2*sigma_k*D^k/k! for k >= 1.
    """
    prof = s.base.profile
    if prof.k != s.k:
        raise ValueError(f"profile declares constants for k={prof.k}, surrogate has k={s.k}")
    D = s.diameter
    if s.k == 0:
        terms = [prof.mu * D]
        if prof.sigma_0 is not None:
            terms.append(2.0 * prof.sigma_0)
        return min(terms)
    return 2.0 * prof.sigma_k * D**s.k / _factorial(s.k)


def envelope_gap_bound(s: SurrogateModel) -> float:
    """Bound sqrt(8 lambda_bar rho_k D^(k+1)/(k+1)!) on the Moreau-gradient gap
    between the surrogate and true primal functions (both at modulus
    2*lambda_bar)."""
    return float(np.sqrt(8.0 * s.lambda_bar * value_error_bound(s)))
