"""Samplers for CRM weights, partitions and related statistics.

All samplers take an explicit ``numpy.random.Generator``; parallel
replicates should use disjoint streams from ``spawn_rngs``.  Atom
locations are never materialized: exchangeable labels are enough for
partition laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ResourceError, ValidationError
from .models import BETA_PRIME, GBFRY, PY_BASELINE, ModelSpec
from .measures import inverse_tail, tail_at_zero, tail_intensity, truncated_mean_mass

__all__ = [
    "WeightSeq", "PartitionCounts", "OccupancySpectrum", "SimulationDetail",
    "sample_weights_inverse_levy", "sample_weights_scaled", "sample_top_weights",
    "sample_partition", "simulate_partition", "sample_gbfry_variable",
    "partition_stats", "esf_proportions", "spawn_rngs",
]

_BLOCK_START = 2048
_BLOCK_MAX = 1 << 20


def spawn_rngs(seed: int, k: int) -> list[np.random.Generator]:
    """k independent generators deterministically derived from a root seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSeq:
    """Decreasing CRM jump sizes with truncation metadata."""

    weights: np.ndarray
    truncation_level: float
    expected_truncated_mass: float
    total_mass: float = field(default=math.nan)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("weights must be a nonempty 1-d array")
        if np.any(w <= 0):
            raise ValidationError("weights must be positive")
        if np.any(np.diff(w) > 0):
            w = np.sort(w)[::-1]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total_mass", float(w.sum()))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class PartitionCounts:
    """Ranked multiplicities m_(1) >= ... >= m_(K) with total n."""

    counts: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size == 0:
            raise ValidationError("counts must be a nonempty 1-d array")
        if np.any(c <= 0):
            raise ValidationError("counts must be positive integers")
        c = np.sort(c)[::-1]
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "n", int(c.sum()))

    @property
    def num_clusters(self) -> int:
        return self.counts.size

    @property
    def frequencies(self) -> np.ndarray:
        """Ranked frequencies f_(k) = m_(k) / n."""
        return self.counts / self.n


@dataclass(frozen=True)
class OccupancySpectrum:
    """Cluster counts by size: sizes j, K_{n,j}, and proportions p_{n,j}."""

    sizes: np.ndarray
    counts_by_size: np.ndarray
    proportions: np.ndarray
    n: int


@dataclass(frozen=True)
class SimulationDetail:
    """Latent bookkeeping from simulate_partition (cluster atoms, dust)."""

    cluster_weights: np.ndarray     # aligned with the sorted counts; 0 marks dust
    total_mass: float               # kept atoms plus expected dust mass
    dust_mass: float
    truncation_level: float


# ---------------------------------------------------------------------------
# weight samplers
# ---------------------------------------------------------------------------

def _estimate_jumps_needed(model: ModelSpec, rel_mass_tol: float, accumulated: float) -> int:
    """Solve the stopping rule for eps and return ~eta * rho-bar(eps)."""
    eps = 1.0
    target = rel_mass_tol * accumulated
    for _ in range(400):
        if truncated_mean_mass(model, eps) > target:
            eps /= 8.0
        else:
            break
    for _ in range(400):
        if truncated_mean_mass(model, eps * 2.0) <= target:
            eps *= 2.0
        else:
            break
    return int(tail_intensity(model, eps))


def sample_weights_inverse_levy(model: ModelSpec, rng: np.random.Generator,
                                rel_mass_tol: float = 1e-6,
                                max_jumps: int = 20_000_000) -> WeightSeq:
    """Ranked jumps via the inverse of the tail intensity at unit-rate
    Poisson arrival times, truncated once the expected remaining mass
    drops below rel_mass_tol times the accumulated mass."""
    if not 0.0 < rel_mass_tol < 1.0:
        raise ValidationError("rel_mass_tol must lie in (0, 1)")
    finite_mass = tail_at_zero(model) if model.sigma < 0 else math.inf
    blocks: list[np.ndarray] = []
    gamma_last = 0.0
    total = 0.0
    count = 0
    block = _BLOCK_START
    while True:
        arrivals = gamma_last + np.cumsum(rng.exponential(size=block))
        gamma_last = float(arrivals[-1])
        exhausted = False
        if np.isfinite(finite_mass):
            keep = arrivals < finite_mass
            exhausted = not keep.all()
            arrivals = arrivals[keep]
        if arrivals.size:
            w = inverse_tail(model, arrivals)
            blocks.append(w)
            total += float(w.sum())
            count += w.size
        if exhausted:
            eps = 0.0
            expected_trunc = 0.0
            break
        eps = float(blocks[-1][-1])
        expected_trunc = truncated_mean_mass(model, eps)
        if expected_trunc <= rel_mass_tol * total:
            break
        if count >= max_jumps:
            needed = _estimate_jumps_needed(model, rel_mass_tol, total)
            raise ResourceError(
                f"rel_mass_tol={rel_mass_tol:g} needs about {needed} jumps "
                f"(budget {max_jumps})", jumps_needed=needed)
        block = min(block * 2, _BLOCK_MAX)
    weights = np.concatenate(blocks)
    return WeightSeq(weights, truncation_level=eps, expected_truncated_mass=expected_trunc)


def sample_top_weights(model: ModelSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly the k largest jumps (the first k Poisson arrivals)."""
    if k < 1:
        raise ValidationError("k must be positive")
    arrivals = np.cumsum(rng.exponential(size=k))
    if model.sigma < 0:
        arrivals = arrivals[arrivals < tail_at_zero(model)]
        if arrivals.size == 0:
            raise ValidationError("finite-activity model produced no jumps")
    return inverse_tail(model, arrivals)


def scaled_base_model(model: ModelSpec) -> ModelSpec:
    """GGP base mean measure of the scaled construction."""
    if model.family == GBFRY:
        mult = model.c ** (model.tau - model.sigma) / model.tau
        return ModelSpec.ggp(model.sigma, zeta=model.c, eta=model.eta * mult)
    if model.family == BETA_PRIME:
        mult = model.c ** (-model.tau) * math.exp(gammaln(model.tau))
        return ModelSpec.ggp(model.sigma, zeta=1.0, eta=model.eta * mult)
    raise ValidationError(f"no scaled construction for family {model.family!r}")


def sample_weights_scaled(model: ModelSpec, rng: np.random.Generator,
                          rel_mass_tol: float = 1e-6,
                          max_jumps: int = 20_000_000) -> WeightSeq:
    """Weights via the scaled-GGP construction: base GGP jumps divided by
    iid Beta(tau, 1) (gbfry) or Gamma(tau, rate c) (betaprime) variates.

    Distributionally equivalent to sample_weights_inverse_levy on the same
    model.  The mass-based stopping rule is applied to the base process;
    expected_truncated_mass is scaled by E[1/z] (infinite for tau <= 1).
    """
    base = scaled_base_model(model)
    base_seq = sample_weights_inverse_levy(base, rng, rel_mass_tol, max_jumps)
    k = len(base_seq)
    tau = model.tau
    if model.family == GBFRY:
        z = rng.beta(tau, 1.0, size=k)
        inv_mean = tau / (tau - 1.0) if tau > 1.0 else math.inf
    else:
        z = rng.gamma(tau, 1.0 / model.c, size=k)
        inv_mean = model.c / (tau - 1.0) if tau > 1.0 else math.inf
    w = np.sort(base_seq.weights / z)[::-1]
    return WeightSeq(w, truncation_level=float(w[-1]),
                     expected_truncated_mass=base_seq.expected_truncated_mass * inv_mean)


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def sample_partition(weights: WeightSeq, n: int, rng: np.random.Generator,
                     return_assignments: bool = False):
    """n iid categorical draws with probabilities w_(k) / total mass.

    Clusters with zero draws are dropped; counts are returned ranked.
    With return_assignments the per-cluster atom indices (into
    weights.weights, aligned with the ranked counts) come along.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    w = weights.weights
    cdf = np.cumsum(w)
    u = rng.random(n) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    raw = np.bincount(idx, minlength=w.size)
    occupied = np.flatnonzero(raw)
    counts = raw[occupied]
    order = np.argsort(-counts, kind="stable")
    ranked = counts[order]
    pc = PartitionCounts(ranked)
    if not return_assignments:
        return pc
    return pc, occupied[order]


def _stick_breaking_counts(model: ModelSpec, n: int, rng: np.random.Generator,
                           max_sticks: int, return_detail: bool):
    """Pitman-Yor partition via stick breaking with a singleton dust tail."""
    alpha, theta = model.sigma, model.theta
    sticks: list[np.ndarray] = []
    remaining = 1.0
    j0 = 0
    block = 4096
    while n * remaining > 0.5:
        js = np.arange(j0 + 1, j0 + block + 1, dtype=float)
        v = rng.beta(1.0 - alpha, theta + js * alpha)
        log_keep = np.cumsum(np.log1p(-v))
        w = v * np.exp(np.concatenate(([0.0], log_keep[:-1]))) * remaining
        sticks.append(w)
        remaining *= float(np.exp(log_keep[-1]))
        j0 += block
        if j0 > max_sticks:
            raise ResourceError(f"stick breaking exceeded {max_sticks} sticks",
                                jumps_needed=j0)
        block = min(block * 2, _BLOCK_MAX)
    w = np.concatenate(sticks) if sticks else np.array([1.0])
    return _partition_with_dust(w, remaining if sticks else 0.0, n, rng, return_detail,
                                truncation_level=float(w.min()))


def _partition_with_dust(w: np.ndarray, dust: float, n: int, rng: np.random.Generator,
                         return_detail: bool, truncation_level: float):
    cdf = np.cumsum(w)
    total = cdf[-1] + dust
    u = rng.random(n) * total
    idx = np.searchsorted(cdf, u, side="right")
    n_dust = int(np.count_nonzero(idx == w.size))
    raw = np.bincount(idx[idx < w.size], minlength=w.size)
    occupied = np.flatnonzero(raw)
    counts = raw[occupied]
    order = np.argsort(-counts, kind="stable")
    ranked = counts[order]
    atom_w = w[occupied][order]
    if n_dust:
        ranked = np.concatenate([ranked, np.ones(n_dust, dtype=ranked.dtype)])
        atom_w = np.concatenate([atom_w, np.zeros(n_dust)])
    # re-rank after appending dust singletons (stable for determinism)
    order2 = np.argsort(-ranked, kind="stable")
    pc = PartitionCounts(ranked[order2])
    if not return_detail:
        return pc
    detail = SimulationDetail(cluster_weights=atom_w[order2], total_mass=float(total),
                              dust_mass=float(dust), truncation_level=truncation_level)
    return pc, detail


def simulate_partition(model: ModelSpec, n: int, rng: np.random.Generator,
                       collision_tol: float = 2e-3,
                       max_jumps: int = 50_000_000,
                       return_detail: bool = False):
    """Partition of n samples from the normalized CRM (or the Pitman-Yor
    baseline).

    Jumps are generated down to a level where any single truncated atom
    has expected hit count below collision_tol; the remaining dust mass
    then produces singleton clusters, which keeps the cost proportional
    to n rather than to the truncated-mass budget.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    if model.family == PY_BASELINE:
        return _stick_breaking_counts(model, n, rng, max_jumps, return_detail)

    finite_mass = tail_at_zero(model) if model.sigma < 0 else math.inf
    blocks: list[np.ndarray] = []
    gamma_last = 0.0
    total = 0.0
    count = 0
    block = _BLOCK_START
    eps = math.inf
    while True:
        arrivals = gamma_last + np.cumsum(rng.exponential(size=block))
        gamma_last = float(arrivals[-1])
        exhausted = False
        if np.isfinite(finite_mass):
            keep = arrivals < finite_mass
            exhausted = not keep.all()
            arrivals = arrivals[keep]
        if arrivals.size:
            w = inverse_tail(model, arrivals)
            blocks.append(w)
            total += float(w.sum())
            count += w.size
            eps = float(w[-1])
        if exhausted:
            eps = 0.0
            break
        if eps * n <= collision_tol * total:
            break
        if count >= max_jumps:
            raise ResourceError(
                f"simulate_partition exceeded the jump budget {max_jumps} "
                f"(n={n}, collision_tol={collision_tol})", jumps_needed=count)
        block = min(block * 2, _BLOCK_MAX)
    w = np.concatenate(blocks)
    dust = truncated_mean_mass(model, eps) if eps > 0.0 else 0.0
    return _partition_with_dust(w, dust, n, rng, return_detail, truncation_level=eps)


# ---------------------------------------------------------------------------
# scalar sampler and statistics
# ---------------------------------------------------------------------------

def sample_gbfry_variable(kappa_shape: float, alpha: float, rng: np.random.Generator,
                          size: int | None = None):
    """Draws of X / Y with X ~ Gamma(kappa_shape, 1) and Y ~ Beta(alpha, 1).

    The m-th moment is alpha Gamma(m + kappa) / ((alpha - m) Gamma(kappa))
    for m < alpha and infinite otherwise.
    """
    if kappa_shape <= 0 or alpha <= 0:
        raise ValidationError("kappa_shape and alpha must be positive")
    x = rng.gamma(kappa_shape, 1.0, size=size)
    y = rng.beta(alpha, 1.0, size=size)
    return x / y


def gbfry_variable_moment(kappa_shape: float, alpha: float, m: int) -> float:
    """Exact m-th moment of the ratio variable; inf for m >= alpha."""
    if m >= alpha:
        return math.inf
    return alpha * math.exp(gammaln(m + kappa_shape) - gammaln(kappa_shape)) / (alpha - m)


def partition_stats(counts: PartitionCounts) -> OccupancySpectrum:
    """Occupancy spectrum K_{n,j} and proportions p_{n,j} = K_{n,j}/K_n."""
    sizes, ks = np.unique(counts.counts, return_counts=True)
    return OccupancySpectrum(sizes=sizes, counts_by_size=ks,
                             proportions=ks / counts.num_clusters, n=counts.n)


def esf_proportions(alpha: float, j_max: int) -> np.ndarray:
    """Limiting cluster-size proportions p_j = alpha Gamma(j - alpha) /
    (j! Gamma(1 - alpha)) for j = 1..j_max."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    j = np.arange(1, j_max + 1, dtype=float)
    return np.exp(math.log(alpha) + gammaln(j - alpha) - gammaln(j + 1.0)
                  - gammaln(1.0 - alpha))
