"""Posterior predictive simulation, reweighted KS divergence, credible
intervals, and predictive bands for the spectrum and rank plots."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .inference import PosteriorSamples
from .models import BETA_PRIME, GBFRY, GGP, PY_BASELINE, ModelSpec
from .sampling import PartitionCounts, simulate_partition

__all__ = [
    "PredictiveBands", "posterior_predictive", "ks_reweighted", "plain_ks",
    "credible_interval", "predictive_bands", "model_from_draw",
]


@dataclass(frozen=True)
class PredictiveBands:
    """Pointwise 2.5/50/97.5% quantiles across predictive replicates."""

    axis: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray
    mode: str

    def __post_init__(self):
        if not (np.all(self.lower <= self.median) and np.all(self.median <= self.upper)):
            raise ValidationError("band quantiles must be ordered")


def model_from_draw(family: str, draws: dict, index: int) -> ModelSpec:
    """ModelSpec for one retained posterior draw (c = 1, zeta = 1)."""
    if family in (GBFRY, BETA_PRIME):
        return ModelSpec(family, sigma=float(draws["sigma"][index]),
                         tau=float(draws["tau"][index]), c=1.0,
                         eta=float(draws["eta"][index]))
    if family == GGP:
        return ModelSpec.ggp(float(draws["sigma"][index]), zeta=1.0,
                             eta=float(draws["eta"][index]))
    if family == PY_BASELINE:
        return ModelSpec.pitman_yor(float(draws["alpha"][index]),
                                    float(draws["theta"][index]))
    raise ValidationError(f"no predictive model for family {family!r}")


def posterior_predictive(samples: PosteriorSamples, n: int, replicates: int,
                         rng: np.random.Generator) -> list[PartitionCounts]:
    """Partition replicates of size n at parameters drawn uniformly from
    the retained posterior draws."""
    if replicates < 0:
        raise ValidationError("replicates must be nonnegative")
    if replicates == 0:
        return []
    if len(samples) == 0:
        raise ValidationError("posterior sample set is empty")
    out = []
    for _ in range(replicates):
        idx = int(rng.integers(0, len(samples)))
        model = model_from_draw(samples.family, samples.draws, idx)
        out.append(simulate_partition(model, n, rng))
    return out


def _size_survival(counts: PartitionCounts, grid: np.ndarray) -> np.ndarray:
    """Empirical survival function of the cluster-size distribution,
    S(x) = fraction of clusters of size > x, on the given grid."""
    sizes = np.sort(counts.counts)
    return 1.0 - np.searchsorted(sizes, grid, side="right") / sizes.size


def ks_reweighted(data: PartitionCounts, predictive: PartitionCounts) -> float:
    """max over the observed sizes x of |S_data(x) - S_pred(x)| /
    sqrt(S_pred(x) (1 - S_pred(x))), restricted to S_pred in (0, 1)."""
    grid = np.unique(data.counts)
    s_d = _size_survival(data, grid)
    s_p = _size_survival(predictive, grid)
    ok = (s_p > 0.0) & (s_p < 1.0)
    if not ok.any():
        warnings.warn("degenerate predictive size support; plain max-difference")
        return float(np.abs(s_d - s_p).max())
    return float((np.abs(s_d - s_p)[ok] / np.sqrt(s_p[ok] * (1.0 - s_p[ok]))).max())


def plain_ks(data: PartitionCounts, predictive: PartitionCounts) -> float:
    """Unweighted sup-distance between the size survival functions."""
    grid = np.unique(np.concatenate([data.counts, predictive.counts]))
    return float(np.abs(_size_survival(data, grid) - _size_survival(predictive, grid)).max())


def credible_interval(trace, level: float) -> tuple[float, float]:
    """Equal-tailed interval with linear (type-7) quantile interpolation."""
    arr = np.asarray(trace, dtype=float)
    if arr.size == 0:
        raise ValidationError("empty trace")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    half = (1.0 - level) / 2.0
    lo, hi = np.quantile(arr, [half, 1.0 - half])
    return float(lo), float(hi)


def predictive_bands(replicates: list[PartitionCounts], mode: str = "spectrum",
                     quantiles=(0.025, 0.5, 0.975)) -> PredictiveBands:
    """Pointwise bands of the occupancy proportions p_{n,j} (spectrum mode,
    sizes absent from a replicate contribute 0) or of the ranked counts
    m_(k) (rank mode, ranks beyond a replicate's K padded with 0)."""
    if len(replicates) < 2:
        raise ValidationError("need at least 2 replicates")
    if mode == "spectrum":
        axis = np.unique(np.concatenate([r.counts for r in replicates]))
        table = np.zeros((len(replicates), axis.size))
        for i, r in enumerate(replicates):
            sizes, ks = np.unique(r.counts, return_counts=True)
            table[i, np.searchsorted(axis, sizes)] = ks / r.num_clusters
    elif mode == "rank":
        kmax = max(r.num_clusters for r in replicates)
        axis = np.arange(1, kmax + 1)
        table = np.zeros((len(replicates), kmax))
        for i, r in enumerate(replicates):
            table[i, :r.num_clusters] = r.counts
    else:
        raise ValidationError(f"unknown band mode {mode!r}")
    lo, med, hi = np.quantile(table, quantiles, axis=0)
    return PredictiveBands(axis=axis, lower=lo, median=med, upper=hi, mode=mode)
