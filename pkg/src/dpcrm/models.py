"""Model specifications for the supported Levy-measure families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ValidationError

GGP = "ggp"
STABLE = "stable"
GBFRY = "gbfry"
BETA_PRIME = "betaprime"
MIXTURE = "mixture"
PY_BASELINE = "py"

FAMILIES = (GGP, STABLE, GBFRY, BETA_PRIME, MIXTURE, PY_BASELINE)

PARETO = "pareto"
GEN_PARETO = "genpareto"
INV_GAMMA = "invgamma"

MIXTURE_TAILS = (PARETO, GEN_PARETO, INV_GAMMA)


@dataclass(frozen=True)
class MixtureTail:
    """Heavy-tailed density added to a GGP base in the discrete-mixture family.

    ``params`` are (x_min, shape) for pareto, (scale, shape) for genpareto
    (location fixed at 0, shape > 0), and (shape, rate) for invgamma.
    """

    kind: str
    params: tuple[float, float]

    def __post_init__(self):
        if self.kind not in MIXTURE_TAILS:
            raise ValidationError(f"unknown mixture tail {self.kind!r}")
        a, b = self.params
        if not (a > 0 and b > 0):
            raise ValidationError(f"mixture tail parameters must be positive, got {self.params}")

    @property
    def tail_exponent(self) -> float:
        """Power-law exponent of the survival function at infinity."""
        if self.kind == PARETO:
            return self.params[1]
        if self.kind == GEN_PARETO:
            return 1.0 / self.params[1]
        return self.params[0]


@dataclass(frozen=True)
class ModelSpec:
    """One Levy family plus its parameter vector.

    ``sigma`` is the small-weight index, ``tau`` the large-weight index
    (unused for ggp/stable/py), ``c`` the scale (fixed to 1 for inference),
    ``zeta`` the GGP exponential tilt, ``eta`` the total-mass multiplier of
    the mean measure.  For the ``py`` baseline the discount parameter is
    stored in ``sigma`` and the strength in ``theta``.
    """

    family: str
    sigma: float
    tau: float = math.nan
    c: float = 1.0
    zeta: float = 0.0
    eta: float = 1.0
    theta: float = math.nan
    mixture_beta: float = math.nan
    mixture_tail: MixtureTail | None = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        if self.family != PY_BASELINE and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if self.family in (GBFRY, BETA_PRIME):
            if not self.sigma < 1:
                raise ValidationError(f"sigma must be < 1, got {self.sigma}")
            if not self.tau > max(0.0, self.sigma):
                raise ValidationError(
                    f"tau must exceed max(0, sigma): tau={self.tau}, sigma={self.sigma}")
            if not self.c > 0:
                raise ValidationError(f"c must be positive, got {self.c}")
        elif self.family == STABLE:
            if not 0 < self.sigma < 1:
                raise ValidationError(f"stable requires sigma in (0,1), got {self.sigma}")
        elif self.family in (GGP, MIXTURE):
            ok = (0 < self.sigma < 1 and self.zeta >= 0) or (self.sigma <= 0 and self.zeta > 0)
            if not ok:
                raise ValidationError(
                    f"ggp requires sigma in (0,1), zeta >= 0 or sigma <= 0, zeta > 0; "
                    f"got sigma={self.sigma}, zeta={self.zeta}")
            if self.family == MIXTURE:
                if not self.mixture_beta > 0:
                    raise ValidationError(f"mixture_beta must be positive, got {self.mixture_beta}")
                if self.mixture_tail is None:
                    raise ValidationError("mixture requires a mixture_tail")
        elif self.family == PY_BASELINE:
            if not 0 <= self.sigma < 1:
                raise ValidationError(f"py requires 0 <= alpha < 1, got {self.sigma}")
            if not self.theta > -self.sigma:
                raise ValidationError(f"py requires theta > -alpha, got theta={self.theta}")

    # -- convenience constructors ------------------------------------------

    @classmethod
    def ggp(cls, sigma: float, zeta: float, eta: float = 1.0) -> "ModelSpec":
        return cls(GGP, sigma=sigma, zeta=zeta, eta=eta)

    @classmethod
    def stable(cls, sigma: float, eta: float = 1.0) -> "ModelSpec":
        return cls(STABLE, sigma=sigma, zeta=0.0, eta=eta)

    @classmethod
    def gbfry(cls, sigma: float, tau: float, c: float = 1.0, eta: float = 1.0) -> "ModelSpec":
        return cls(GBFRY, sigma=sigma, tau=tau, c=c, eta=eta)

    @classmethod
    def beta_prime(cls, sigma: float, tau: float, c: float = 1.0, eta: float = 1.0) -> "ModelSpec":
        return cls(BETA_PRIME, sigma=sigma, tau=tau, c=c, eta=eta)

    @classmethod
    def mixture(cls, sigma: float, zeta: float, eta: float, beta: float,
                tail: MixtureTail) -> "ModelSpec":
        return cls(MIXTURE, sigma=sigma, zeta=zeta, eta=eta,
                   mixture_beta=beta, mixture_tail=tail)

    @classmethod
    def pitman_yor(cls, alpha: float, theta: float) -> "ModelSpec":
        return cls(PY_BASELINE, sigma=alpha, theta=theta)

    @property
    def alpha(self) -> float:
        """Discount parameter of the Pitman-Yor baseline (alias of sigma)."""
        return self.sigma

    def rescaled(self, xi: float) -> "ModelSpec":
        """Model with Levy density w -> xi * rho(xi * w).

        The normalized CRM is invariant under this map; the rescaled
        density stays within the family with remapped (c | zeta, eta).
        """
        if xi <= 0:
            raise ValidationError(f"xi must be positive, got {xi}")
        if self.family == GBFRY:
            # xi * (xi w)^{-1-tau} gamma(tau-sigma, c xi w) = xi^{-tau} w^{-1-tau} gamma(.., (c xi) w)
            return replace(self, c=self.c * xi, eta=self.eta * xi ** (-self.tau))
        if self.family == BETA_PRIME:
            # xi * (xi w)^{-1-sigma} (c + xi w)^{sigma-tau}
            #   = xi^{-sigma} w^{-1-sigma} xi^{sigma-tau} (c/xi + w)^{sigma-tau}
            return replace(self, c=self.c / xi, eta=self.eta * xi ** (-self.tau))
        if self.family in (GGP, STABLE):
            # xi * (xi w)^{-1-sigma} e^{-zeta xi w} = xi^{-sigma} w^{-1-sigma} e^{-(zeta xi) w}
            return replace(self, zeta=self.zeta * xi, eta=self.eta * xi ** (-self.sigma))
        raise ValidationError(f"rescaling is not defined for family {self.family!r}")
