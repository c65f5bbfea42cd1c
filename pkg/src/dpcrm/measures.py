"""Levy densities, tail intensities and inverses, Laplace exponents psi,
moment kernels kappa, and regular-variation constants.

All quantities include the total-mass multiplier eta, i.e. they refer to
the mean measure eta * rho(dw).  Everything here is a pure function of
its inputs and vectorizes over the main argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc, betaln, digamma, gammaln, hyp2f1

from .errors import NumericError, ValidationError
from .models import (BETA_PRIME, GBFRY, GEN_PARETO, GGP, INV_GAMMA, MIXTURE,
                     PARETO, STABLE, ModelSpec)
from .special import lower_incomplete_gamma, upper_gamma_ext

__all__ = [
    "levy_density", "tail_intensity", "inverse_tail", "psi", "kappa",
    "rv_constants", "truncated_mean_mass", "lower_incomplete_gamma",
    "RVConstants",
]

_MAX_BISECT = 200


def _quad(f, a, b, rtol=1e-10, atol=1e-12, points=None):
    """scipy quad with failure promoted to NumericError."""
    result = quad(f, a, b, epsrel=rtol, epsabs=atol, limit=200,
                  points=points, full_output=1)
    if len(result) >= 4:
        val, err, info, msg = result[:4]
        raise NumericError(f"quadrature failed on [{a}, {b}]: {msg} (est. error {err:.3g})")
    val, err = result[:2]
    return val


def _quad_semiinf(f, upper: float, interior: float):
    """Integrate f over (-inf, upper], splitting at an interior transition
    point so the adaptive rule resolves both regimes."""
    if interior < upper - 1.0:
        return _quad(f, -np.inf, interior, rtol=1e-10) + _quad(f, interior, upper, rtol=1e-10)
    return _quad(f, -np.inf, upper, rtol=1e-10)


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be positive and finite")
    return arr


# ---------------------------------------------------------------------------
# mixture tail component
# ---------------------------------------------------------------------------

def _mix_pdf(tail, w):
    a, b = tail.params
    if tail.kind == PARETO:
        xm, shape = a, b
        return np.where(w >= xm,
                        shape * xm ** shape * np.maximum(w, xm) ** (-shape - 1.0), 0.0)
    if tail.kind == GEN_PARETO:
        scale, shape = a, b
        return (1.0 / scale) * (1.0 + shape * w / scale) ** (-1.0 / shape - 1.0)
    shape, rate = a, b
    return np.exp(shape * math.log(rate) - gammaln(shape)
                  - (shape + 1.0) * np.log(w) - rate / w)


def _mix_sf(tail, x):
    """Survival function of the mixture tail distribution."""
    a, b = tail.params
    if tail.kind == PARETO:
        xm, shape = a, b
        return np.where(x >= xm, (np.maximum(x, xm) / xm) ** (-shape), 1.0)
    if tail.kind == GEN_PARETO:
        scale, shape = a, b
        return (1.0 + shape * x / scale) ** (-1.0 / shape)
    shape, rate = a, b
    return np.asarray(lower_incomplete_gamma(shape, rate / np.asarray(x, dtype=float))
                      * np.exp(-gammaln(shape)))


def _mix_trunc_mean(tail, eps):
    """int_0^eps w f(w) dw for the mixture tail pdf."""
    a, b = tail.params
    if tail.kind == PARETO:
        xm, shape = a, b
        if eps <= xm:
            return 0.0
        if abs(shape - 1.0) < 1e-12:
            return xm * math.log(eps / xm)
        return shape * xm ** shape * (eps ** (1.0 - shape) - xm ** (1.0 - shape)) / (1.0 - shape)
    if tail.kind == GEN_PARETO:
        scale, shape = a, b
        z = 1.0 + shape * eps / scale
        if abs(shape - 1.0) < 1e-12:
            return -eps / z + scale * math.log(z)
        return -eps * z ** (-1.0 / shape) + scale * (z ** ((shape - 1.0) / shape) - 1.0) / (shape - 1.0)
    shape, rate = a, b
    return rate * upper_gamma_ext(shape - 1.0, rate / eps) * math.exp(-gammaln(shape))


# ---------------------------------------------------------------------------
# Levy density
# ---------------------------------------------------------------------------

def levy_density(model: ModelSpec, w):
    """Density of the mean measure eta * rho(w) at jump size w > 0."""
    w_arr = np.atleast_1d(_check_positive("w", w))
    fam = model.family
    sigma, eta = model.sigma, model.eta
    if fam in (GGP, STABLE, MIXTURE):
        out = eta * np.exp(-gammaln(1.0 - sigma)
                           - (1.0 + sigma) * np.log(w_arr) - model.zeta * w_arr)
        if fam == MIXTURE:
            out = out + eta * model.mixture_beta * _mix_pdf(model.mixture_tail, w_arr)
    elif fam == GBFRY:
        tau, c = model.tau, model.c
        s = tau - sigma
        z = c * w_arr
        out = np.empty_like(w_arr)
        tiny = z < 1e-20
        if tiny.any():
            # gamma(s, z) ~ z^s / s for small z; avoids underflow in the product
            out[tiny] = (c ** s / s) * w_arr[tiny] ** (-1.0 - sigma)
        big = ~tiny
        if big.any():
            out[big] = w_arr[big] ** (-1.0 - tau) * lower_incomplete_gamma(s, z[big])
        out *= eta * math.exp(-gammaln(1.0 - sigma))
    elif fam == BETA_PRIME:
        tau, c = model.tau, model.c
        out = eta * np.exp(gammaln(tau - sigma) - gammaln(1.0 - sigma)
                           - (1.0 + sigma) * np.log(w_arr)
                           + (sigma - tau) * np.log(c + w_arr))
    else:
        raise ValidationError(f"levy_density is not defined for family {fam!r}")
    if np.isscalar(w):
        return float(out[0])
    return out.reshape(np.shape(w))


# ---------------------------------------------------------------------------
# tail intensity and its inverse
# ---------------------------------------------------------------------------

def _tail_ggp(sigma, zeta, eta, x):
    if zeta == 0.0:
        return eta * x ** (-sigma) * math.exp(-gammaln(1.0 - sigma)) / sigma
    return eta * zeta ** sigma * math.exp(-gammaln(1.0 - sigma)) * upper_gamma_ext(-sigma, zeta * x)


def _tail_gbfry(sigma, tau, c, eta, x):
    s = tau - sigma
    z = c * x
    term1 = np.empty_like(x)
    tiny = z < 1e-8
    if tiny.any():
        zt = z[tiny]
        # x^-tau gamma(s, c x) expanded to avoid overflow/underflow at tiny x
        series = 1.0 / s - zt / (s + 1.0) + zt * zt / (2.0 * (s + 2.0))
        term1[tiny] = c ** s * x[tiny] ** (-sigma) * series
    big = ~tiny
    if big.any():
        term1[big] = x[big] ** (-tau) * lower_incomplete_gamma(s, z[big])
    term2 = c ** tau * upper_gamma_ext(-sigma, z)
    return eta * math.exp(-gammaln(1.0 - sigma)) / tau * (term1 + term2)


def _tail_bp(sigma, tau, c, eta, x):
    u = x / (c + x)
    one_minus_u = c / (c + x)
    if sigma > 0:
        ib = betainc(tau, 1.0 - sigma, one_minus_u)
        j = (u ** (-sigma) * one_minus_u ** tau
             - (tau - sigma) * math.exp(betaln(1.0 - sigma, tau)) * ib) / sigma
    elif sigma < 0:
        j = math.exp(betaln(-sigma, tau)) * betainc(tau, -sigma, one_minus_u)
    else:
        # int_u^1 v^-1 (1-v)^(tau-1) dv; hyp2f1 is unreliable near its
        # logarithmic singularity, so expand around u = 0 there instead
        j = np.empty_like(u)
        big = u >= 0.1
        if big.any():
            j[big] = one_minus_u[big] ** tau / tau \
                * hyp2f1(tau, 1.0, tau + 1.0, one_minus_u[big])
        small = ~big
        if small.any():
            us = u[small]
            corr = np.zeros_like(us)
            binom = tau - 1.0
            upow = np.ones_like(us)
            for jj in range(1, 40):
                upow *= us
                term = ((-1.0) ** (jj + 1)) * binom * upow / jj
                corr += term
                binom *= (tau - 1.0 - jj) / (jj + 1.0)
                if np.all(np.abs(term) < 1e-17 * np.maximum(np.abs(corr), 1e-300)):
                    break
            j[small] = -np.log(us) - (digamma(tau) + float(np.euler_gamma)) + corr
    pref = eta * math.exp(gammaln(tau - sigma) - gammaln(1.0 - sigma)) * c ** (-tau)
    return pref * j


def tail_intensity(model: ModelSpec, x, method: str = "closed"):
    """eta * integral of rho over (x, infinity); nonincreasing in x."""
    x_arr = np.atleast_1d(_check_positive("x", x))
    if method == "quad":
        def log_integrand(v):
            if v > 690.0:
                return 0.0
            w = math.exp(v)
            return float(levy_density(model, w)) * w
        out = np.array([_quad(log_integrand, math.log(xi), np.inf, rtol=1e-10, atol=1e-300)
                        for xi in np.atleast_1d(x_arr)])
        out = out.reshape(np.shape(x_arr))
    else:
        fam = model.family
        if fam == STABLE:
            out = _tail_ggp(model.sigma, 0.0, model.eta, x_arr)
        elif fam == GGP:
            out = _tail_ggp(model.sigma, model.zeta, model.eta, x_arr)
        elif fam == GBFRY:
            out = _tail_gbfry(model.sigma, model.tau, model.c, model.eta, x_arr)
        elif fam == BETA_PRIME:
            out = _tail_bp(model.sigma, model.tau, model.c, model.eta, x_arr)
        elif fam == MIXTURE:
            out = (_tail_ggp(model.sigma, model.zeta, model.eta, x_arr)
                   + model.eta * model.mixture_beta * _mix_sf(model.mixture_tail, x_arr))
        else:
            raise ValidationError(f"tail_intensity is not defined for family {fam!r}")
    if np.isscalar(x):
        return float(out[0])
    return out.reshape(np.shape(x))


def tail_at_zero(model: ModelSpec) -> float:
    """Total mass eta * rho-bar(0+); finite only for sigma < 0 families."""
    sigma, eta = model.sigma, model.eta
    if sigma >= 0:
        return math.inf
    fam = model.family
    if fam == GGP:
        return eta * model.zeta ** sigma * math.exp(gammaln(-sigma) - gammaln(1.0 - sigma))
    if fam == GBFRY:
        return (eta * model.c ** model.tau / model.tau
                * math.exp(gammaln(-sigma) - gammaln(1.0 - sigma)))
    if fam == BETA_PRIME:
        return (eta * model.c ** (-model.tau)
                * math.exp(gammaln(model.tau - sigma) - gammaln(1.0 - sigma)
                           + betaln(-sigma, model.tau)))
    if fam == MIXTURE:
        ggp_mass = eta * model.zeta ** sigma * math.exp(gammaln(-sigma) - gammaln(1.0 - sigma))
        return ggp_mass + eta * model.mixture_beta
    raise ValidationError(f"tail_at_zero is not defined for family {fam!r}")


def inverse_tail(model: ModelSpec, y, rtol: float = 1e-12):
    """Generalized inverse of the tail intensity.

    Returns x with |tail_intensity(x) - y| <= rtol * y, via a log-spaced
    bracketing grid plus Illinois false-position iterations in log-log
    space (the tail is near power-law, so this converges in a handful of
    steps).  For finite-activity models (sigma < 0) returns 0 where
    y >= tail_at_zero(model).
    """
    y_arr = np.atleast_1d(_check_positive("y", y)).astype(float)
    if model.family == STABLE:
        pref = model.eta * math.exp(-gammaln(1.0 - model.sigma)) / model.sigma
        out = (y_arr / pref) ** (-1.0 / model.sigma)
        return float(out[0]) if np.isscalar(y) else out.reshape(np.shape(y))

    out = np.zeros_like(y_arr)
    solve = np.ones(y_arr.shape, dtype=bool)
    if model.sigma < 0:
        solve = y_arr < tail_at_zero(model)

    if solve.any():
        target = y_arr[solve]
        log_target = np.log(target)
        y_top = float(target.max())    # maps to the smallest x
        y_bot = float(target.min())    # maps to the largest x
        step = math.log(2.0)
        lx_lo = 0.0
        for _ in range(1100):
            if float(tail_intensity(model, math.exp(lx_lo))) > y_top:
                break
            lx_lo -= step
        else:
            raise NumericError("inverse_tail lower bracket expansion failed")
        lx_hi = step
        for _ in range(1100):
            if float(tail_intensity(model, math.exp(lx_hi))) <= y_bot:
                break
            lx_hi += step
        else:
            raise NumericError("inverse_tail upper bracket expansion failed")

        width = lx_hi - lx_lo
        npts = int(min(max(width / 0.05, 8), 4096)) + 1
        grid = np.linspace(lx_lo, lx_hi, npts)
        log_tg = np.log(tail_intensity(model, np.exp(grid)))
        # log_tg is nonincreasing; locate the bracketing cell per target
        pos = np.searchsorted(-log_tg, -log_target, side="left")
        pos = np.clip(pos, 1, npts - 1)
        lo = grid[pos - 1]
        hi = grid[pos]
        flo = log_tg[pos - 1] - log_target    # >= 0
        fhi = log_tg[pos] - log_target        # <= 0
        root = 0.5 * (lo + hi)
        active = np.ones(target.shape, dtype=bool)
        for _ in range(_MAX_BISECT):
            denom = flo[active] - fhi[active]
            frac = np.where(denom > 0, flo[active] / np.where(denom > 0, denom, 1.0), 0.5)
            cand = lo[active] + frac * (hi[active] - lo[active])
            root[active] = cand
            f = np.log(tail_intensity(model, np.exp(cand))) - log_target[active]
            idx = np.flatnonzero(active)
            ok = np.abs(f) <= rtol
            high = f > 0
            # Illinois: halve the retained endpoint's residual to stay superlinear
            flo[idx[~high]] *= 0.5
            fhi[idx[high]] *= 0.5
            lo[idx[high]] = cand[high]
            flo[idx[high]] = f[high]
            hi[idx[~high]] = cand[~high]
            fhi[idx[~high]] = f[~high]
            active[idx[ok]] = False
            if not active.any():
                break
        else:
            raise NumericError("inverse_tail did not converge")
        out[solve] = np.exp(root)

    if np.isscalar(y):
        return float(out[0])
    return out.reshape(np.shape(y))


# ---------------------------------------------------------------------------
# Laplace exponent and moment kernel
# ---------------------------------------------------------------------------

def _phi_ratio(t, y, sigma):
    """((y + t)^sigma - y^sigma) / sigma, stable as sigma -> 0."""
    r = np.log1p(t / y)
    if abs(sigma) < 1e-9:
        return r
    return np.expm1(sigma * r) * y ** sigma / sigma


def _phi_scaled(t, y, sigma):
    """((1 + t/y)^sigma - 1) / sigma = _phi_ratio / y^sigma; bounded as y -> 0
    for sigma < 0 and ~ (t/y)^sigma / sigma for sigma > 0."""
    r = np.log1p(t / y)
    if abs(sigma) < 1e-9:
        return r
    return np.expm1(sigma * r) / sigma


def _psi_unit_ggp(t, sigma, zeta):
    if t == 0.0:
        return 0.0
    if zeta == 0.0:
        return t ** sigma / sigma
    return float(_phi_ratio(t, zeta, sigma))


def psi_unit(family: str, t: float, sigma: float, tau: float, c: float) -> float:
    """Laplace exponent per unit eta for the gbfry/betaprime reduced integrals
    and the ggp/stable closed form."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    if family in (GGP, STABLE):
        return _psi_unit_ggp(t, sigma, c)
    delta = tau - sigma
    if family == GBFRY:
        def g_log(v):
            if v < -680.0:
                return 0.0
            y = math.exp(v)
            return y ** tau * _phi_scaled(t, y, sigma)
        return _quad_semiinf(g_log, math.log(c), math.log(t))
    if family == BETA_PRIME:
        def g_log(v):
            if v < -680.0:
                return 0.0
            y = math.exp(v)
            return y ** tau * _phi_scaled(t, y, sigma) * math.exp(-c * y)
        head = _quad_semiinf(g_log, 0.0, math.log(t))

        def g_inv(s):
            y = 1.0 / s
            return y ** (tau + 1.0) * _phi_scaled(t, y, sigma) * math.exp(-c * y)
        pts = [min(1.0, 1.0 / t)] if t > 1.0 else None
        tail = _quad(g_inv, 0.0, 1.0, rtol=1e-10, points=pts)
        return head + tail
    raise ValidationError(f"psi is not defined for family {family!r}")


def psi(model: ModelSpec, t: float) -> float:
    """Laplace exponent eta * int (1 - e^{-t w}) rho(w) dw."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    fam = model.family
    if fam in (GGP, STABLE):
        zeta = model.zeta if fam == GGP else 0.0
        return model.eta * psi_unit(fam, t, model.sigma, math.nan, zeta)
    if fam in (GBFRY, BETA_PRIME):
        return model.eta * psi_unit(fam, t, model.sigma, model.tau, model.c)
    if fam == MIXTURE:
        base = model.eta * psi_unit(GGP, t, model.sigma, math.nan, model.zeta)
        tail = model.mixture_tail
        lo = tail.params[0] if tail.kind == PARETO else 0.0
        extra = _quad(lambda w: -math.expm1(-t * w) * float(_mix_pdf(tail, w)),
                      lo, np.inf, rtol=1e-10)
        return base + model.eta * model.mixture_beta * extra
    raise ValidationError(f"psi is not defined for family {fam!r}")


def kappa(model: ModelSpec, m: int, t: float) -> float:
    """Moment kernel eta * int w^m e^{-t w} rho(w) dw for integer m >= 1."""
    if m < 1 or int(m) != m:
        raise ValidationError("m must be a positive integer")
    if t <= 0:
        raise ValidationError("t must be positive")
    fam = model.family
    sigma, eta = model.sigma, model.eta
    if fam in (GGP, STABLE):
        zeta = model.zeta if fam == GGP else 0.0
        return eta * math.exp(gammaln(m - sigma) - gammaln(1.0 - sigma)
                              + (sigma - m) * math.log(t + zeta))
    if fam in (GBFRY, BETA_PRIME):
        tau, c = model.tau, model.c
        delta = tau - sigma
        pref = eta * math.exp(gammaln(m - sigma) - gammaln(1.0 - sigma))
        if fam == GBFRY:
            def g_log(v):
                return math.exp(delta * v) / (math.exp(v) + t) ** (m - sigma)
            return pref * _quad_semiinf(g_log, math.log(c), math.log(t))

        def g_log(v):
            return math.exp(delta * v - c * math.exp(v)) / (math.exp(v) + t) ** (m - sigma)
        head = _quad_semiinf(g_log, 0.0, math.log(t))

        def g_inv(s):
            y = 1.0 / s
            return y ** (delta + 1.0) * math.exp(-c * y) / (y + t) ** (m - sigma)
        pts = [min(1.0, 1.0 / t)] if t > 1.0 else None
        tail = _quad(g_inv, 0.0, 1.0, rtol=1e-10, points=pts)
        return pref * (head + tail)
    if fam == MIXTURE:
        base = kappa(ModelSpec.ggp(sigma, model.zeta, eta), m, t)
        tail_spec = model.mixture_tail
        lo = tail_spec.params[0] if tail_spec.kind == PARETO else 0.0
        extra = _quad(lambda w: w ** m * math.exp(-t * w) * float(_mix_pdf(tail_spec, w)),
                      lo, np.inf, rtol=1e-10)
        return base + eta * model.mixture_beta * extra
    raise ValidationError(f"kappa is not defined for family {fam!r}")


# ---------------------------------------------------------------------------
# regular-variation constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RVConstants:
    """Power-law exponents and constants of the tail intensity per unit eta.

    ``c0`` is the constant in rho-bar(x) ~ c0 x^-alpha as x -> 0 (nan and
    ``slowly_varying_at_zero`` set when sigma <= 0); ``cinf`` the constant
    in rho-bar(x) ~ cinf x^-tau at infinity (nan when the family is not
    regularly varying there, e.g. ggp).
    """

    alpha: float
    c0: float
    tau: float
    cinf: float
    slowly_varying_at_zero: bool
    regularly_varying_at_inf: bool


def rv_constants(model: ModelSpec) -> RVConstants:
    fam = model.family
    sigma = model.sigma
    if fam not in (GBFRY, BETA_PRIME, STABLE, GGP):
        raise ValidationError(f"rv_constants is not defined for family {fam!r}")
    alpha = max(sigma, 0.0)
    slowly = sigma <= 0
    if slowly:
        c0 = math.nan
    elif fam == GBFRY:
        c0 = model.c ** (model.tau - sigma) / (sigma * (model.tau - sigma)) \
            * math.exp(-gammaln(1.0 - sigma))
    elif fam == BETA_PRIME:
        c0 = model.c ** (sigma - model.tau) \
            * math.exp(gammaln(model.tau - sigma) - gammaln(1.0 - sigma)) / sigma
    else:
        c0 = math.exp(-gammaln(1.0 - sigma)) / sigma
    if fam in (GBFRY, BETA_PRIME):
        tau = model.tau
        cinf = math.exp(gammaln(tau - sigma) - gammaln(1.0 - sigma)) / tau
        rv_inf = True
    elif fam == STABLE:
        tau = sigma
        cinf = c0
        rv_inf = True
    else:
        tau = math.nan
        cinf = math.nan
        rv_inf = False
    return RVConstants(alpha, c0, tau, cinf, slowly, rv_inf)


# ---------------------------------------------------------------------------
# truncated mean mass
# ---------------------------------------------------------------------------

def truncated_mean_mass(model: ModelSpec, eps: float) -> float:
    """Expected mass below the truncation level: eta * int_0^eps w rho(w) dw."""
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    if eps == 0.0:
        return 0.0
    fam = model.family
    sigma, eta = model.sigma, model.eta
    if fam == STABLE or (fam in (GGP, MIXTURE) and model.zeta == 0.0):
        base = eta * eps ** (1.0 - sigma) / (1.0 - sigma) * math.exp(-gammaln(1.0 - sigma))
    elif fam in (GGP, MIXTURE):
        zeta = model.zeta
        base = eta * math.exp(-gammaln(1.0 - sigma)) * zeta ** (sigma - 1.0) \
            * lower_incomplete_gamma(1.0 - sigma, zeta * eps)
    elif fam == GBFRY:
        tau, c = model.tau, model.c
        s = tau - sigma
        z = c * eps
        if z < 0.05:
            total = 0.0
            term = 1.0
            for k in range(0, 30):
                contrib = term / ((s + k) * (1.0 - sigma + k))
                total += contrib
                if abs(contrib) < 1e-16 * abs(total):
                    break
                term *= -z / (k + 1.0)
            integral = c ** s * eps ** (1.0 - sigma) * total
        elif abs(tau - 1.0) < 1e-8:
            # int_0^eps w^-tau gamma(s, c w) dw with w = e^v; no closed form at tau = 1
            integral = _quad(lambda v: math.exp((1.0 - tau) * v)
                             * float(lower_incomplete_gamma(s, c * math.exp(v))),
                             -np.inf, math.log(eps), rtol=1e-10)
        else:
            integral = (eps ** (1.0 - tau) * lower_incomplete_gamma(s, z)
                        - c ** (tau - 1.0) * lower_incomplete_gamma(1.0 - sigma, z)) / (1.0 - tau)
        base = eta * math.exp(-gammaln(1.0 - sigma)) * integral
    elif fam == BETA_PRIME:
        tau, c = model.tau, model.c
        u = eps / (c + eps)
        a = 1.0 - sigma
        incomplete = u ** a / a * hyp2f1(a, 2.0 - tau, a + 1.0, u)
        base = eta * math.exp(gammaln(tau - sigma) - gammaln(1.0 - sigma)) \
            * c ** (1.0 - tau) * incomplete
    else:
        raise ValidationError(f"truncated_mean_mass is not defined for family {fam!r}")
    if fam == MIXTURE:
        base += eta * model.mixture_beta * _mix_trunc_mean(model.mixture_tail, eps)
    return float(base)
