"""Shared brute-force oracles: direct quadrature of the defining
integrals, independent of the reduced-form paths under test."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from dpcrm import measures as M


def brute_psi(model, t):
    """Direct quadrature of eta * int (1 - e^{-t w}) rho(w) dw in log space."""
    def f(v):
        w = math.exp(v)
        return -math.expm1(-t * w) * float(M.levy_density(model, w)) * w
    hi = min(math.log(800.0 / t) + 40.0, 300.0)
    return quad(f, -280.0, hi, epsrel=1e-12, epsabs=1e-14, limit=400)[0]


def brute_kappa(model, m, t):
    """Direct quadrature of eta * int w^m e^{-t w} rho(w) dw in log space."""
    def f(v):
        w = math.exp(v)
        return w ** m * math.exp(-t * w) * float(M.levy_density(model, w)) * w
    hi = min(math.log(600.0 / t), 250.0 / (m + 2))
    return quad(f, -250.0 / (m + 2), hi, epsrel=1e-12, epsabs=1e-300, limit=400)[0]


def brute_trunc_mass(model, eps):
    """Direct quadrature of eta * int_0^eps w rho(w) dw."""
    return quad(lambda w: w * float(M.levy_density(model, w)), 0.0, eps,
                epsrel=1e-11, epsabs=1e-300, limit=400)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
