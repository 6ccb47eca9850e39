"""Admissible-diameter calculators: when does surrogate stationarity transfer?

The sufficient condition compares the smaller of a coupling term and a
homogeneous curvature term against eps/24:

    k = 0:   min{ mu*D, 2*sigma_0, sqrt(lam*rho_0*D/50) }            <= eps/24
    k >= 1:  min{ mu*D + 2*sigma_k*D^k/k!,
                  sqrt(lambda_bar_k*rho_k*D^(k+1)/(50*(k+1)!)) }     <= eps/24

with lambda_bar_k = lam + 2*tau_k*D^k/k!.  The constants 24 and 50 are taken
literally; leading-order simplifications carry a caller-supplied multiplier for
their hidden constants and are labelled accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problems import SmoothnessProfile, _factorial


@dataclass(frozen=True)
class DiameterVerdict:
    k: int
    epsilon: float
    D: float
    lam: float
    mu: float
    rho_k: float
    sigma_k: float
    tau_k: float
    sigma_0: Optional[float]
    lhs: float
    admissible: bool
    binding_term: str        # "coupling" or "homogeneous"
    leading_order_D: float   # leading-order admissible diameter (constant-free)
    high_accuracy: bool

    def to_dict(self):
        d = dict(self.__dict__)
        d["sigma_0"] = self.sigma_0 if self.sigma_0 is not None else float("nan")
        return d


def _condition_terms(profile: SmoothnessProfile, D: float, k: int):
    """(coupling term, homogeneous term) of the transfer condition at diameter D."""
    if k == 0:
        coupling = profile.mu * D
        if profile.sigma_0 is not None:
            coupling = min(coupling, 2.0 * profile.sigma_0)
        homogeneous = np.sqrt(profile.lam * profile.rho_k * D / 50.0)
    else:
        coupling = profile.mu * D + 2.0 * profile.sigma_k * D**k / _factorial(k)
        lam_bar = profile.lambda_bar(D)
        homogeneous = np.sqrt(lam_bar * profile.rho_k * D ** (k + 1)
                              / (50.0 * _factorial(k + 1)))
    return coupling, homogeneous


def check_theorem1(profile: SmoothnessProfile, D: float, epsilon: float,
                   k: Optional[int] = None, mult: float = 1.0) -> DiameterVerdict:
    """Evaluate the transfer condition at diameter D and accuracy epsilon."""
    k = profile.k if k is None else k
    if k != profile.k:
        raise ValueError(f"profile declares constants for k={profile.k}, asked k={k}")
    coupling, homogeneous = _condition_terms(profile, D, k)
    lhs = min(coupling, homogeneous)
    return DiameterVerdict(
        k=k, epsilon=epsilon, D=D, lam=profile.lam, mu=profile.mu,
        rho_k=profile.rho_k, sigma_k=profile.sigma_k, tau_k=profile.tau_k,
        sigma_0=profile.sigma_0, lhs=lhs,
        admissible=bool(lhs <= epsilon / 24.0),
        binding_term="coupling" if coupling <= homogeneous else "homogeneous",
        leading_order_D=leading_order_diameter(profile, epsilon, max(k, 1), mult)
        if (profile.mu > 0 or profile.rho_k > 0) else np.inf,
        high_accuracy=_high_accuracy(profile, epsilon, k, mult))


def _high_accuracy(profile: SmoothnessProfile, epsilon: float, k: int,
                   mult: float) -> bool:
    """Below this accuracy the critical diameter is coupling-independent (k > 1)."""
    if k <= 1:
        # no elbow for k = 1: the homogeneous term binds iff sqrt(lam*rho) <= mu
        return bool(profile.mu**2 >= profile.lam * profile.rho_k)
    if profile.mu == 0:
        return True
    thr = (profile.mu ** (k + 1) / (profile.lam * profile.rho_k)) ** (1.0 / (k - 1))
    return bool(epsilon <= mult * thr)


def leading_order_diameter(profile: SmoothnessProfile, epsilon: float,
                           k: Optional[int] = None, mult: float = 1.0) -> float:
    """Leading-order admissible diameter max{eps/mu, (eps^2 (k+1)!/(lam rho_k))^(1/(k+1))}.

    Constant-free: hidden k-dependent factors are exposed through ``mult``.
    With mu = 0 only the homogeneous term remains.
    """
    k = profile.k if k is None else k
    if k < 1:
        raise ValueError("leading-order diameter is defined for k >= 1")
    homogeneous = (epsilon**2 * _factorial(k + 1)
                   / (profile.lam * profile.rho_k)) ** (1.0 / (k + 1)) \
        if profile.rho_k > 0 else np.inf
    if profile.mu == 0:
        return mult * homogeneous
    return mult * max(epsilon / profile.mu, homogeneous)


def check_eps_threshold(profile: SmoothnessProfile, epsilon: float,
                        k: Optional[int] = None, mult: float = 1.0) -> bool:
    """True when eps is small enough for higher-order diameter terms to be dominated.

    Thresholds: (lam^3 rho_1 / tau_1^2)^(1/2) for k = 1 and
    min{(mu^k/sigma_k)^(1/(k-1)), (lam^(2k+1) rho_k^k / tau_k^(k+1))^(1/(2k))}
    for k > 1; vanishing tau_k/sigma_k push the threshold to infinity.
    """
    k = profile.k if k is None else k
    if k < 1:
        raise ValueError("threshold is defined for k >= 1")
    if k == 1:
        thr = np.inf if profile.tau_k == 0 else np.sqrt(
            profile.lam**3 * profile.rho_k / profile.tau_k**2)
    else:
        t1 = np.inf if profile.sigma_k == 0 else (
            profile.mu**k / profile.sigma_k) ** (1.0 / (k - 1))
        t2 = np.inf if profile.tau_k == 0 else (
            profile.lam ** (2 * k + 1) * profile.rho_k**k
            / profile.tau_k ** (k + 1)) ** (1.0 / (2 * k))
        thr = min(t1, t2)
    return bool(epsilon <= mult * thr)


def theorem1_max_diameter(profile: SmoothnessProfile, epsilon: float,
                          k: Optional[int] = None, D_hint: float = 1.0) -> float:
    """Largest D at which the transfer condition holds for the given accuracy.

    Both terms increase in D, so the condition holds iff D is below the larger
    of the two per-term thresholds; found by bisection (lambda_bar couples the
    homogeneous term to D through tau_k).
    """
    k = profile.k if k is None else k

    def ok(D):
        if D <= 0:
            return True
        c, h = _condition_terms(profile, D, k)
        return min(c, h) <= epsilon / 24.0

    hi = max(D_hint, 1e-12)
    while ok(hi) and hi < 1e18:
        hi *= 2.0
    if ok(hi):
        return np.inf
    lo = hi / 2.0
    while not ok(lo) and lo > 1e-300:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
