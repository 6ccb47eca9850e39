import numpy as np
import pytest

from smallmax.instances import HardInstanceSpec, build_instance, certificate
from smallmax.problems import SmoothnessProfile, _factorial
from smallmax.theory import (check_eps_threshold, check_theorem1,
                             leading_order_diameter, theorem1_max_diameter)


def _profile(lam=1.0, mu=1.0, k=1, rho=1.0, sigma=None, tau=0.0, sigma_0=None):
    if sigma is None:
        sigma = mu if k == 1 else 0.0
    return SmoothnessProfile(lam=lam, mu=mu, k=k, rho_k=rho, sigma_k=sigma,
                             tau_k=tau, sigma_0=sigma_0)


class TestCheckTheorem1:
    def test_stated_arithmetic_example(self):
        # k=0, mu=1, sigma0=10, lam=1, rho0=1, D=0.01, eps=1:
        # min{0.01, 20, sqrt(0.01/50)} = 0.01 <= 1/24 -> admissible
        prof = _profile(k=0, mu=1.0, rho=1.0, sigma=0.0, tau=1.0, sigma_0=10.0)
        v = check_theorem1(prof, 0.01, 1.0)
        assert v.admissible and np.isclose(v.lhs, 0.01)
        assert v.binding_term == "coupling"

    def test_k1_bc_reduction(self):
        # for BC instances the condition reduces to
        # min{2 mu D, sqrt(lam rho_1 D^2 / 100)} (tau=0, sigma_1=mu)
        rng = np.random.default_rng(0)
        for _ in range(100):
            lam, mu, rho, D = rng.uniform(0.2, 3.0, 4)
            prof = SmoothnessProfile(lam=lam, mu=mu, k=1, rho_k=rho, sigma_k=mu,
                                     tau_k=0.0, bilinear=True)
            v = check_theorem1(prof, D, 1.0)
            lhs = min(mu * D + 2 * mu * D, np.sqrt(lam * rho * D**2 / 100.0))
            assert np.isclose(v.lhs, lhs)

    def test_certificate_tuples_not_admissible(self):
        for spec in (HardInstanceSpec("F", 0, 0, 1.0, 1.0, 1.0, 2.0),
                     HardInstanceSpec("F", 1, -1, 1.0, 1.0, 8.0, 2.0),
                     HardInstanceSpec("F", 2, 1, 1.0, 2.0, 2.0, 1.0),
                     HardInstanceSpec("S", 0, 0, 1.0, 2.0, 1.0, 1.0)):
            cert = certificate(spec)
            prof = build_instance(cert.effective).profile
            v = check_theorem1(prof, cert.effective.D, cert.bound)
            assert not v.admissible

    def test_monotone_in_eps_and_diameter(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            prof = _profile(lam=rng.uniform(0.5, 2), mu=rng.uniform(0.1, 2),
                            k=1, rho=rng.uniform(0.5, 2))
            D = rng.uniform(0.01, 1.0)
            e1, e2 = sorted(rng.uniform(0.001, 1.0, 2))
            a1 = check_theorem1(prof, D, e1).admissible
            a2 = check_theorem1(prof, D, e2).admissible
            assert a2 or not a1  # larger eps never flips admissible -> not
            D1, D2 = sorted(rng.uniform(0.001, 1.0, 2))
            b1 = check_theorem1(prof, D1, e1).admissible
            b2 = check_theorem1(prof, D2, e1).admissible
            assert b1 or not b2  # larger D never flips inadmissible -> admissible


class TestLeadingOrderDiameter:
    def test_arithmetic_example(self):
        # k=1, lam=rho=1, mu=1, eps=0.1 -> max{0.1, sqrt(0.02)} ~ 0.1414
        prof = _profile(k=1)
        assert np.isclose(leading_order_diameter(prof, 0.1),
                          np.sqrt(0.02))

    def test_huge_coupling_leaves_homogeneous_term(self):
        prof = _profile(k=1, mu=1e12)
        assert np.isclose(leading_order_diameter(prof, 0.1), np.sqrt(0.02))

    def test_zero_coupling(self):
        prof = SmoothnessProfile(lam=1.0, mu=0.0, k=2, rho_k=1.0)
        d = leading_order_diameter(prof, 0.1)
        assert np.isclose(d, (0.01 * 6.0) ** (1.0 / 3.0))

    def test_high_accuracy_regime_homogeneous_binds(self):
        prof = _profile(k=2, lam=1.0, mu=1.0, rho=1.0, sigma=0.0)
        thr = (prof.mu**3 / (prof.lam * prof.rho_k))  # k=2: exponent 1/(k-1)=1
        for eps in (0.9 * thr, 0.5 * thr, 0.1 * thr):
            v = check_theorem1(prof, 0.01, eps)
            assert v.high_accuracy
            homog = (eps**2 * _factorial(3) / (prof.lam * prof.rho_k)) ** (1 / 3)
            assert leading_order_diameter(prof, eps) == max(eps / prof.mu, homog)
            assert homog >= eps / prof.mu  # homogeneous term binds


class TestEpsThreshold:
    def test_bc_infinite_threshold(self):
        prof = SmoothnessProfile(lam=1.0, mu=1.0, k=2, rho_k=1.0, sigma_k=0.0,
                                 tau_k=0.0, bilinear=True)
        assert check_eps_threshold(prof, 1e12)

    def test_k1_arithmetic(self):
        prof = _profile(k=1, tau=1.0)  # threshold sqrt(lam^3 rho / tau^2) = 1
        assert check_eps_threshold(prof, 0.5)
        assert not check_eps_threshold(prof, 2.0)

    def test_k2_min_dispatch(self):
        prof = SmoothnessProfile(lam=1.0, mu=2.0, k=2, rho_k=1.0, sigma_k=1.0,
                                 tau_k=1.0)
        # min{(mu^2/sigma)^(1/1), (lam^5 rho^2 / tau^3)^(1/4)} = min{4, 1} = 1
        assert check_eps_threshold(prof, 0.9)
        assert not check_eps_threshold(prof, 1.1)

    def test_threshold_validates_simplification(self):
        # when eps is below the threshold, the full condition and the
        # leading-order (BC-style) condition agree up to a constant factor
        rng = np.random.default_rng(2)
        for _ in range(100):
            lam, mu, rho = rng.uniform(0.5, 2.0, 3)
            tau = rng.uniform(0.0, 0.5)
            prof = SmoothnessProfile(lam=lam, mu=mu, k=1, rho_k=rho, sigma_k=mu,
                                     tau_k=tau)
            eps = rng.uniform(0.01, 0.2)
            if not check_eps_threshold(prof, eps):
                continue
            D = leading_order_diameter(prof, eps)
            c, h = (mu * D + 2 * mu * D,
                    np.sqrt(prof.lambda_bar(D) * rho * D**2 / 100.0))
            simplified = min(mu * D, np.sqrt(lam * rho * D**2))
            assert min(c, h) <= 3.1 * simplified + 1e-12
            assert simplified <= 10.1 * min(c, h) + 1e-12


class TestMaxDiameter:
    def test_bracketing_of_certificates(self):
        for spec in (HardInstanceSpec("F", 0, 0, 1.0, 1.0, 1.0, 2.0),
                     HardInstanceSpec("F", 1, -1, 1.0, 1.0, 8.0, 2.0),
                     HardInstanceSpec("F", 2, 1, 1.0, 2.0, 2.0, 1.0)):
            cert = certificate(spec)
            prof = build_instance(cert.effective).profile
            Dmax = theorem1_max_diameter(prof, cert.bound)
            assert Dmax < cert.effective.D  # certificate sits above the threshold
            assert check_theorem1(prof, 0.999 * Dmax, cert.bound).admissible
            assert not check_theorem1(prof, 1.001 * Dmax, cert.bound).admissible
