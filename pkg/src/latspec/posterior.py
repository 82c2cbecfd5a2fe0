"""Prior model, log-posterior, and closed-form hyperparameter conditionals.

The hierarchy, per element m:

    alpha_m | s2          ~ half-normal on (0, inf) with scale s2
    sigma2_m | nu0, s02   ~ InvGamma(nu0/2, nu0*s02/2)
    s2                    ~ InvGamma(2, 2)
    s02                   ~ InvGamma(2, 2)
    p(nu0)  proportional to exp(-nu0) on integers 1..nu0_max
    p(rho)  flat over positive-definite correlation matrices

All three hyperparameters have conjugate or semi-conjugate full
conditionals (inverse-gamma, finite discrete, generalised inverse
Gaussian); this module returns them as small distribution objects with
``sample``/``logpdf`` so the sampler and the distribution-match tests share
one definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .spectrum import CoherenceMatrix, QuasiMaternParams
from .whittle import WhittleContext, whittle_loglik_mvt

__all__ = [
    "ModelParams",
    "PriorConfig",
    "InverseGammaSpec",
    "DiscreteSpec",
    "GIGSpec",
    "log_prior",
    "log_posterior",
    "s2_full_conditional",
    "nu0_full_conditional",
    "sigma02_full_conditional",
]


@dataclass
class PriorConfig:
    """Hyperprior settings; defaults match the reference hierarchy."""

    s2_shape: float = 2.0
    s2_rate: float = 2.0
    sigma02_shape: float = 2.0
    sigma02_rate: float = 2.0
    nu0_rate: float = 1.0
    nu0_max: int = 100

    def __post_init__(self):
        if self.nu0_max < 1:
            raise ValueError("nu0_max must be >= 1")
        for name in ("s2_shape", "s2_rate", "sigma02_shape", "sigma02_rate", "nu0_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ModelParams:
    """One full parameter state: per-element spectra, coherence, hypers."""

    alphas: np.ndarray
    sigma2s: np.ndarray
    rho: CoherenceMatrix
    s2: float = 1.0
    nu0: int = 2
    sigma02: float = 1.0

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.sigma2s = np.asarray(self.sigma2s, dtype=float)
        if self.alphas.shape != self.sigma2s.shape or self.alphas.ndim != 1:
            raise ValueError("alphas and sigma2s must be 1-D arrays of equal length")
        if len(self.alphas) != self.rho.m:
            raise ValueError(f"{len(self.alphas)} elements for {self.rho.m} x {self.rho.m} rho")

    @property
    def m(self) -> int:
        return len(self.alphas)

    def qm(self, delta: float = 1.0) -> tuple[QuasiMaternParams, ...]:
        """Per-element marginal spectral parameters at grid spacing delta."""
        return tuple(
            QuasiMaternParams(sigma2=float(s), alpha=float(a), delta=delta)
            for s, a in zip(self.sigma2s, self.alphas)
        )

    def clone(self) -> "ModelParams":
        return ModelParams(
            alphas=self.alphas.copy(),
            sigma2s=self.sigma2s.copy(),
            rho=CoherenceMatrix(self.rho.rho.copy()),
            s2=self.s2,
            nu0=self.nu0,
            sigma02=self.sigma02,
        )


def _invgamma_logpdf(x: float, shape: float, rate: float) -> float:
    return shape * math.log(rate) - math.lgamma(shape) - (shape + 1) * math.log(x) - rate / x


def _halfnormal_logpdf(x: float, scale2: float) -> float:
    # truncation of N(0, scale2) to (0, inf) doubles the density
    return math.log(2.0) - 0.5 * math.log(2 * math.pi * scale2) - x * x / (2 * scale2)


def log_prior(p: ModelParams, cfg: PriorConfig) -> float:
    """Joint log-prior; -inf for any constraint violation.

    The nu0 factor is the unnormalised exp(-rate*nu0); positive-definiteness
    of rho carries the flat prior's support indicator.
    """
    if (
        np.any(p.alphas <= 0)
        or np.any(p.sigma2s <= 0)
        or p.s2 <= 0
        or p.sigma02 <= 0
        or not (1 <= p.nu0 <= cfg.nu0_max)
        or p.nu0 != int(p.nu0)
    ):
        return -math.inf
    if not p.rho.is_positive_definite():
        return -math.inf
    total = 0.0
    for a in p.alphas:
        total += _halfnormal_logpdf(float(a), p.s2)
    for s in p.sigma2s:
        total += _invgamma_logpdf(float(s), p.nu0 / 2, p.nu0 * p.sigma02 / 2)
    total += _invgamma_logpdf(p.s2, cfg.s2_shape, cfg.s2_rate)
    total += _invgamma_logpdf(p.sigma02, cfg.sigma02_shape, cfg.sigma02_rate)
    total += -cfg.nu0_rate * p.nu0
    return total


def log_posterior(p: ModelParams, ctx: WhittleContext, cfg: PriorConfig) -> float:
    """log-prior + Whittle log-likelihood; -inf outside the support."""
    lp = log_prior(p, cfg)
    if lp == -math.inf:
        return -math.inf
    try:
        ll = whittle_loglik_mvt(ctx, p.qm(ctx.grid.delta), p.rho)
    except ValueError:
        return -math.inf
    return lp + ll


@dataclass(frozen=True)
class InverseGammaSpec:
    """InvGamma(shape, rate) with density proportional to x^-(shape+1) exp(-rate/x)."""

    shape: float
    rate: float

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -math.inf
        return _invgamma_logpdf(x, self.shape, self.rate)

    def sample(self, rng: np.random.Generator, size=None):
        return self.rate / rng.gamma(self.shape, 1.0, size=size)

    @property
    def mode(self) -> float:
        return self.rate / (self.shape + 1)


@dataclass(frozen=True)
class DiscreteSpec:
    """Finite discrete distribution on given integer support."""

    support: np.ndarray
    probs: np.ndarray

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.support, p=self.probs, size=size)

    @property
    def mode(self) -> int:
        return int(self.support[int(np.argmax(self.probs))])


@dataclass(frozen=True)
class GIGSpec:
    """GIG(p, a, b) with density proportional to x^(p-1) exp(-(a*x + b/x)/2).

    ``a = 0`` (no data term) degenerates to InvGamma(-p, b/2) and requires
    p < 0.  Sampling delegates to scipy's exact generalised-inverse-Gaussian
    generator via the scale transformation x = sqrt(b/a) * y.
    """

    p: float
    a: float
    b: float

    def __post_init__(self):
        if self.b <= 0 or self.a < 0:
            raise ValueError(f"need b > 0 and a >= 0, got a={self.a}, b={self.b}")
        if self.a == 0 and self.p >= 0:
            raise ValueError("a = 0 requires p < 0")

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -math.inf
        if self.a == 0:
            return _invgamma_logpdf(x, -self.p, self.b / 2)
        z = math.sqrt(self.a * self.b)
        # log K_p(z) from the exponentially scaled Bessel function
        log_k = math.log(special.kve(self.p, z)) - z
        log_norm = 0.5 * self.p * math.log(self.a / self.b) - math.log(2.0) - log_k
        return log_norm + (self.p - 1) * math.log(x) - 0.5 * (self.a * x + self.b / x)

    def sample(self, rng: np.random.Generator, size=None):
        if self.a == 0:
            return InverseGammaSpec(-self.p, self.b / 2).sample(rng, size=size)
        return stats.geninvgauss.rvs(
            self.p,
            math.sqrt(self.a * self.b),
            scale=math.sqrt(self.b / self.a),
            size=size,
            random_state=rng,
        )


def s2_full_conditional(alphas: np.ndarray, cfg: PriorConfig) -> InverseGammaSpec:
    """s2 | alphas: InvGamma(shape + M/2, rate + sum(alpha^2)/2)."""
    alphas = np.asarray(alphas, dtype=float)
    return InverseGammaSpec(
        shape=cfg.s2_shape + len(alphas) / 2,
        rate=cfg.s2_rate + float(np.sum(alphas**2)) / 2,
    )


def nu0_full_conditional(
    sigma2s: np.ndarray, sigma02: float, cfg: PriorConfig
) -> DiscreteSpec:
    """nu0 | sigma2s, sigma02 on integers 1..nu0_max.

    The unnormalised log-mass at nu0 is -rate*nu0 plus, per element, the
    InvGamma(nu0/2, nu0*sigma02/2) log-density at sigma2_m.
    """
    sigma2s = np.asarray(sigma2s, dtype=float)
    nu = np.arange(1, cfg.nu0_max + 1, dtype=float)
    logmass = -cfg.nu0_rate * nu
    if sigma2s.size:
        half = nu / 2
        logmass = logmass + sigma2s.size * (
            half * np.log(half * sigma02) - special.gammaln(half)
        )
        logmass = logmass - (half + 1) * float(np.sum(np.log(sigma2s)))
        logmass = logmass - half * sigma02 * float(np.sum(1.0 / sigma2s))
    probs = np.exp(logmass - special.logsumexp(logmass))
    probs /= probs.sum()
    return DiscreteSpec(support=np.arange(1, cfg.nu0_max + 1), probs=probs)


def sigma02_full_conditional(
    sigma2s: np.ndarray, nu0: int, cfg: PriorConfig
) -> GIGSpec:
    """sigma02 | sigma2s, nu0: GIG(M*nu0/2 - shape, nu0*sum(1/sigma2), 2*rate)."""
    sigma2s = np.asarray(sigma2s, dtype=float)
    return GIGSpec(
        p=sigma2s.size * nu0 / 2 - cfg.sigma02_shape,
        a=nu0 * float(np.sum(1.0 / sigma2s)) if sigma2s.size else 0.0,
        b=2 * cfg.sigma02_rate,
    )
