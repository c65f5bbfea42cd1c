"""Augmented MCMC posterior sampling for ranked count data.

The gbfry and betaprime chains target the latent-variable augmentation
of the partition posterior: scalar blocks (u, eta, sigma, delta) move by
random-walk Metropolis-Hastings in transformed coordinates and the
per-cluster latents y move by Hamiltonian Monte Carlo.  The scale c is
fixed to 1 throughout inference; tau = sigma + delta.  The normalized
GGP (zeta fixed to 1) and Pitman-Yor baselines ride the same machinery
with their own targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, gammaln

from .errors import ValidationError
from .measures import psi_unit
from .models import BETA_PRIME, GBFRY, GGP, PY_BASELINE
from .sampling import PartitionCounts

__all__ = [
    "PriorSpec", "ChainState", "PosteriorSamples",
    "log_joint", "grad_y", "leapfrog", "hmc_update_y", "mh_update_scalar",
    "run_chain", "baseline_loglik", "initial_state",
]

_LOG_2PI = math.log(2.0 * math.pi)

AUGMENTED_FAMILIES = (GBFRY, BETA_PRIME)
CHAIN_FAMILIES = (GBFRY, BETA_PRIME, GGP, PY_BASELINE)

PROPOSAL_SCALE = 0.05
HMC_EPSILON = 0.05
HMC_LEAPFROG_STEPS = 30


@dataclass(frozen=True)
class PriorSpec:
    """Normal priors on the transformed parameters (location, scale)."""

    log_eta: tuple[float, float] = (0.0, 1.0)
    logit_sigma: tuple[float, float] = (0.0, 1.0)
    log_delta: tuple[float, float] = (0.0, 1.0)
    log_theta: tuple[float, float] = (0.0, 1.0)
    logit_alpha: tuple[float, float] = (0.0, 1.0)


DEFAULT_PRIORS = PriorSpec()


def _normal_logpdf(x: float, loc_scale: tuple[float, float]) -> float:
    loc, scale = loc_scale
    z = (x - loc) / scale
    return -0.5 * z * z - math.log(scale) - 0.5 * _LOG_2PI


@dataclass(frozen=True)
class ChainState:
    """Augmented chain state in transformed coordinates.

    y_tilde holds logit(y_j) for gbfry (y_j in (0,1)) and log(y_j) for
    betaprime (y_j > 0).
    """

    log_u: float
    log_eta: float
    logit_sigma: float
    log_delta: float
    y_tilde: np.ndarray

    @property
    def u(self) -> float:
        return math.exp(self.log_u)

    @property
    def eta(self) -> float:
        return math.exp(self.log_eta)

    @property
    def sigma(self) -> float:
        return float(expit(self.logit_sigma))

    @property
    def delta(self) -> float:
        return math.exp(self.log_delta)

    @property
    def tau(self) -> float:
        return self.sigma + self.delta

    def y(self, family: str) -> np.ndarray:
        if family == GBFRY:
            return expit(self.y_tilde)
        if family == BETA_PRIME:
            return np.exp(self.y_tilde)
        raise ValidationError(f"no latent y for family {family!r}")


@dataclass(frozen=True)
class PosteriorSamples:
    """Thinned post-burn-in draws plus acceptance-rate bookkeeping."""

    family: str
    draws: dict[str, np.ndarray]
    log_joint: np.ndarray
    iters: int
    burnin: int
    thin: int
    seed: int | None
    acceptance: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.log_joint.size


class _Target:
    """Cached evaluator of the augmented log joint for one dataset."""

    def __init__(self, counts: PartitionCounts, family: str,
                 priors: PriorSpec = DEFAULT_PRIORS):
        if family not in AUGMENTED_FAMILIES:
            raise ValidationError(f"augmented target needs gbfry or betaprime, got {family!r}")
        self.family = family
        self.priors = priors
        self.m = counts.counts.astype(float)
        self.n = counts.n
        self.k = counts.num_clusters
        self.sizes, self.size_mult = np.unique(self.m, return_counts=True)
        self._psi_cache: dict[tuple[float, float, float], float] = {}

    def psi0(self, u: float, sigma: float, delta: float) -> float:
        key = (u, sigma, delta)
        val = self._psi_cache.get(key)
        if val is None:
            val = psi_unit(self.family, u, sigma, sigma + delta, 1.0)
            if len(self._psi_cache) > 64:
                self._psi_cache.clear()
            self._psi_cache[key] = val
        return val

    def _y_logs(self, y_tilde: np.ndarray):
        if self.family == GBFRY:
            log_y = -np.logaddexp(0.0, -y_tilde)
            log_1my = -np.logaddexp(0.0, y_tilde)
            y = expit(y_tilde)
            return y, log_y, log_1my
        log_y = y_tilde
        y = np.exp(y_tilde)
        return y, log_y, None

    def y_part(self, y_tilde: np.ndarray, sigma: float, delta: float, u: float) -> float:
        """Terms of the log joint that involve the latents y."""
        y, log_y, log_1my = self._y_logs(y_tilde)
        s = delta * log_y.sum() - np.dot(self.m - sigma, np.log(y + u))
        if self.family == GBFRY:
            s += log_1my.sum()
        else:
            s -= y.sum()
        return float(s)

    def grad_y_tilde(self, y_tilde: np.ndarray, sigma: float, delta: float,
                     u: float) -> np.ndarray:
        y = expit(y_tilde) if self.family == GBFRY else np.exp(y_tilde)
        if self.family == GBFRY:
            one_my = expit(-y_tilde)
            return delta * one_my - y - (self.m - sigma) * y * one_my / (y + u)
        return delta - y - (self.m - sigma) * y / (y + u)

    def log_joint(self, state: ChainState) -> float:
        sigma, delta = state.sigma, state.delta
        u, eta = state.u, state.eta
        pr = (_normal_logpdf(state.log_eta, self.priors.log_eta)
              + _normal_logpdf(state.logit_sigma, self.priors.logit_sigma)
              + _normal_logpdf(state.log_delta, self.priors.log_delta))
        lp = (pr
              + self.n * state.log_u
              - eta * self.psi0(u, sigma, delta)
              + self.k * (state.log_eta - gammaln(1.0 - sigma))
              + float(np.dot(self.size_mult, gammaln(self.sizes - sigma)))
              + self.y_part(state.y_tilde, sigma, delta, u))
        return float(lp)


# ---------------------------------------------------------------------------
# public spec operations (thin wrappers over the cached evaluator)
# ---------------------------------------------------------------------------

def log_joint(counts: PartitionCounts, state: ChainState, family: str,
              priors: PriorSpec = DEFAULT_PRIORS) -> float:
    """Log of the augmented unnormalized posterior density in transformed
    coordinates, including transform Jacobians and priors."""
    return _Target(counts, family, priors).log_joint(state)


def grad_y(counts: PartitionCounts, state: ChainState, family: str) -> np.ndarray:
    """Gradient of log_joint with respect to the transformed latents y_tilde."""
    t = _Target(counts, family)
    return t.grad_y_tilde(state.y_tilde, state.sigma, state.delta, state.u)


def leapfrog(q: np.ndarray, p: np.ndarray, epsilon: float, n_steps: int, grad_logpdf):
    """Standard leapfrog with unit mass matrix; returns (q, p) after n_steps."""
    q = q.copy()
    p = p + 0.5 * epsilon * grad_logpdf(q)
    for step in range(n_steps):
        q += epsilon * p
        g = grad_logpdf(q)
        p += epsilon * g if step < n_steps - 1 else 0.5 * epsilon * g
    return q, p


def _hmc_step(target: _Target, state: ChainState, rng: np.random.Generator,
              epsilon: float, n_steps: int):
    sigma, delta, u = state.sigma, state.delta, state.u

    def grad(q):
        return target.grad_y_tilde(q, sigma, delta, u)

    q0 = state.y_tilde
    p0 = rng.standard_normal(q0.size)
    logp0 = target.y_part(q0, sigma, delta, u)
    h0 = -logp0 + 0.5 * float(np.dot(p0, p0))
    q1, p1 = leapfrog(q0, p0, epsilon, n_steps, grad)
    if not np.all(np.isfinite(q1)):
        return state, False, 0.0
    logp1 = target.y_part(q1, sigma, delta, u)
    h1 = -logp1 + 0.5 * float(np.dot(p1, p1))
    if not math.isfinite(h1):
        return state, False, 0.0
    if math.log(rng.random()) < h0 - h1:
        return replace(state, y_tilde=q1), True, logp1 - logp0
    return state, False, 0.0


def hmc_update_y(counts: PartitionCounts, state: ChainState, family: str,
                 rng: np.random.Generator, epsilon: float = HMC_EPSILON,
                 n_leapfrog: int = HMC_LEAPFROG_STEPS,
                 priors: PriorSpec = DEFAULT_PRIORS):
    """One HMC proposal on the y block; returns (state, accepted)."""
    state, accepted, _ = _hmc_step(_Target(counts, family, priors), state, rng,
                                   epsilon, n_leapfrog)
    return state, accepted


_SCALAR_FIELDS = {"u": "log_u", "eta": "log_eta", "sigma": "logit_sigma",
                  "delta": "log_delta"}


def _mh_step(target: _Target, state: ChainState, which: str,
             rng: np.random.Generator, scale: float, current_lp: float | None = None,
             log_joint_fn=None):
    field_name = _SCALAR_FIELDS[which]
    lj = log_joint_fn if log_joint_fn is not None else target.log_joint
    if current_lp is None:
        current_lp = lj(state)
    proposal = replace(state, **{field_name: getattr(state, field_name)
                                 + scale * rng.standard_normal()})
    new_lp = lj(proposal)
    if math.isfinite(new_lp) and math.log(rng.random()) < new_lp - current_lp:
        return proposal, True, new_lp
    return state, False, current_lp


def mh_update_scalar(which: str, counts: PartitionCounts, state: ChainState,
                     family: str, rng: np.random.Generator,
                     scale: float = PROPOSAL_SCALE,
                     priors: PriorSpec = DEFAULT_PRIORS, target=None):
    """Random-walk MH step in the transformed coordinate of one scalar block.

    The proposal is symmetric in the transformed space, so the ratio is a
    plain density ratio.  ``target`` substitutes the log density (used by
    unit tests); it receives the candidate ChainState.
    """
    if which not in _SCALAR_FIELDS:
        raise ValidationError(f"unknown scalar block {which!r}")
    t = _Target(counts, family, priors)
    state, accepted, _ = _mh_step(t, state, which, rng, scale, log_joint_fn=target)
    return state, accepted


# ---------------------------------------------------------------------------
# chain drivers
# ---------------------------------------------------------------------------

def initial_state(counts: PartitionCounts, family: str) -> ChainState:
    """Inside-domain, scale-aware start: sigma=0.5, delta=1, eta=K_n,
    u = n / sum(m) = 1, y at the domain midpoint."""
    k = counts.num_clusters
    return ChainState(log_u=0.0, log_eta=math.log(k), logit_sigma=0.0,
                      log_delta=0.0, y_tilde=np.zeros(k))


def _sweep_augmented(target: _Target, state: ChainState, rng: np.random.Generator,
                     accepts: dict[str, int], current_lp: float | None,
                     scale: float = PROPOSAL_SCALE, epsilon: float = HMC_EPSILON,
                     n_leapfrog: int = HMC_LEAPFROG_STEPS):
    for which in ("u", "eta", "sigma", "delta"):
        state, acc, current_lp = _mh_step(target, state, which, rng, scale, current_lp)
        accepts[which] += acc
    state, acc, dy = _hmc_step(target, state, rng, epsilon, n_leapfrog)
    accepts["y"] += acc
    return state, current_lp + dy


def _run_chain_augmented(counts, family, iters, burnin, thin, rng, init, priors):
    target = _Target(counts, family, priors)
    state = init if init is not None else initial_state(counts, family)
    accepts = {k: 0 for k in ("u", "eta", "sigma", "delta", "y")}
    kept = []
    lp = target.log_joint(state)
    for it in range(iters):
        state, lp = _sweep_augmented(target, state, rng, accepts, lp)
        if it >= burnin and (it - burnin) % thin == 0:
            kept.append((state.eta, state.sigma, state.tau, state.u, lp))
    arr = np.array(kept)
    draws = {"eta": arr[:, 0], "sigma": arr[:, 1], "tau": arr[:, 2], "u": arr[:, 3]}
    acceptance = {k: v / iters for k, v in accepts.items()}
    return draws, arr[:, 4], acceptance


def _py_log_eppf(counts: PartitionCounts, alpha: float, theta: float) -> float:
    """Exact log EPPF of the two-parameter family at the ranked counts."""
    if not (0.0 <= alpha < 1.0) or theta <= -alpha:
        raise ValidationError("invalid Pitman-Yor parameters")
    m = counts.counts.astype(float)
    k = counts.num_clusters
    n = counts.n
    i = np.arange(1, k, dtype=float)
    head = float(np.log(theta + i * alpha).sum()) if k > 1 else 0.0
    blocks = float(gammaln(m - alpha).sum()) - k * float(gammaln(1.0 - alpha))
    denom = float(gammaln(theta + n) - gammaln(theta + 1.0))
    return head + blocks - denom


def _ggp_log_joint(counts: PartitionCounts, log_u: float, log_eta: float,
                   logit_sigma: float, priors: PriorSpec, zeta: float = 1.0) -> float:
    """u-augmented log density of the normalized GGP baseline (analytic
    psi and kappa, no latent y), with transform Jacobians and priors."""
    sigma = float(expit(logit_sigma))
    eta = math.exp(log_eta)
    u = math.exp(log_u)
    m = counts.counts.astype(float)
    k = counts.num_clusters
    r = math.log1p(u / zeta)
    psi = eta * math.expm1(sigma * r) * zeta ** sigma / sigma
    lp = (_normal_logpdf(log_eta, priors.log_eta)
          + _normal_logpdf(logit_sigma, priors.logit_sigma)
          + counts.n * log_u - psi
          + k * (log_eta - gammaln(1.0 - sigma))
          + float(gammaln(m - sigma).sum())
          + (sigma * k - float(m.sum())) * math.log(u + zeta))
    return float(lp)


def _run_chain_ggp(counts, iters, burnin, thin, rng, priors):
    vec = np.array([0.0, math.log(counts.num_clusters), 0.0])  # log_u, log_eta, logit_sigma

    def lj(v):
        return _ggp_log_joint(counts, v[0], v[1], v[2], priors)

    accepts = {k: 0 for k in ("u", "eta", "sigma")}
    lp = lj(vec)
    kept = []
    for it in range(iters):
        for idx, name in ((0, "u"), (1, "eta"), (2, "sigma")):
            cand = vec.copy()
            cand[idx] += PROPOSAL_SCALE * rng.standard_normal()
            new_lp = lj(cand)
            if math.isfinite(new_lp) and math.log(rng.random()) < new_lp - lp:
                vec, lp = cand, new_lp
                accepts[name] += 1
        if it >= burnin and (it - burnin) % thin == 0:
            kept.append((math.exp(vec[1]), float(expit(vec[2])), math.exp(vec[0]), lp))
    arr = np.array(kept)
    draws = {"eta": arr[:, 0], "sigma": arr[:, 1],
             "tau": np.full(arr.shape[0], math.nan), "u": arr[:, 2]}
    return draws, arr[:, 3], {k: v / iters for k, v in accepts.items()}


def _run_chain_py(counts, iters, burnin, thin, rng, priors):
    vec = np.array([0.0, 0.0])  # log_theta, logit_alpha

    def lj(v):
        return (_normal_logpdf(v[0], priors.log_theta)
                + _normal_logpdf(v[1], priors.logit_alpha)
                + _py_log_eppf(counts, float(expit(v[1])), math.exp(v[0])))

    accepts = {k: 0 for k in ("theta", "alpha")}
    lp = lj(vec)
    kept = []
    for it in range(iters):
        for idx, name in ((0, "theta"), (1, "alpha")):
            cand = vec.copy()
            cand[idx] += PROPOSAL_SCALE * rng.standard_normal()
            new_lp = lj(cand)
            if math.isfinite(new_lp) and math.log(rng.random()) < new_lp - lp:
                vec, lp = cand, new_lp
                accepts[name] += 1
        if it >= burnin and (it - burnin) % thin == 0:
            kept.append((math.exp(vec[0]), float(expit(vec[1])), lp))
    arr = np.array(kept)
    draws = {"theta": arr[:, 0], "alpha": arr[:, 1]}
    return draws, arr[:, 2], {k: v / iters for k, v in accepts.items()}


def run_chain(counts: PartitionCounts, family: str, iters: int, burnin: int = 0,
              thin: int = 1, seed: int | None = None,
              init: ChainState | None = None,
              priors: PriorSpec = DEFAULT_PRIORS) -> PosteriorSamples:
    """One MCMC chain; sweeps the blocks in the fixed order
    [u, eta, sigma, delta, y] for the augmented families."""
    if family not in CHAIN_FAMILIES:
        raise ValidationError(f"cannot fit family {family!r}")
    if iters <= burnin or burnin < 0 or thin < 1:
        raise ValidationError("need iters > burnin >= 0 and thin >= 1")
    rng = np.random.default_rng(seed)
    if family in AUGMENTED_FAMILIES:
        draws, lps, acceptance = _run_chain_augmented(
            counts, family, iters, burnin, thin, rng, init, priors)
    elif family == GGP:
        draws, lps, acceptance = _run_chain_ggp(counts, iters, burnin, thin, rng, priors)
    else:
        draws, lps, acceptance = _run_chain_py(counts, iters, burnin, thin, rng, priors)
    return PosteriorSamples(family=family, draws=draws, log_joint=lps, iters=iters,
                            burnin=burnin, thin=thin, seed=seed, acceptance=acceptance)


def baseline_loglik(counts: PartitionCounts, family: str, params: dict) -> float:
    """Exact log partition likelihood of a baseline.

    Pitman-Yor: the normalized EPPF at params {alpha, theta}.  GGP: the
    u-augmented unnormalized density at params {eta, sigma, u[, zeta]}
    with analytic psi and kappa (no latent y, no priors, no Jacobians).
    """
    if family == PY_BASELINE:
        return _py_log_eppf(counts, params["alpha"], params["theta"])
    if family == GGP:
        eta, sigma, u = params["eta"], params["sigma"], params["u"]
        zeta = params.get("zeta", 1.0)
        if not (eta > 0 and u > 0 and sigma < 1):
            raise ValidationError("invalid GGP baseline parameters")
        m = counts.counts.astype(float)
        k = counts.num_clusters
        r = math.log1p(u / zeta)
        psi = eta * math.expm1(sigma * r) * zeta ** sigma / sigma if sigma != 0 \
            else eta * r
        return float((counts.n - 1) * math.log(u) - psi
                     + k * (math.log(eta) - gammaln(1.0 - sigma))
                     + float(gammaln(m - sigma).sum())
                     + (sigma * k - float(m.sum())) * math.log(u + zeta))
    raise ValidationError(f"no baseline likelihood for family {family!r}")
