"""MCMC kernels and the full posterior chain driver.

One sweep updates, in order: every alpha_m by random-walk Metropolis on the
positive half-line, every sigma2_m by independence Metropolis-Hastings with
its marginal-conjugate inverse-gamma proposal (exact full conditional when
M = 1, so that kernel always accepts), every coherence entry rho_ij in
lexicographic pair order by griddy Gibbs on its feasible interval, and
finally the hyperparameters (s2, nu0, sigma02) by closed-form Gibbs draws.

Random-walk proposal scales adapt multiplicatively during burn-in only,
targeting acceptance rates in [0.3, 0.5]; reported acceptance rates cover
post-burn-in iterations.  All randomness flows through one
``numpy.random.Generator`` per chain, so a fixed seed reproduces the chain
bit-for-bit.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gridio import MultiLattice
from .posterior import (
    ModelParams,
    PriorConfig,
    InverseGammaSpec,
    _halfnormal_logpdf,
    _invgamma_logpdf,
    nu0_full_conditional,
    s2_full_conditional,
    sigma02_full_conditional,
)
from .spectrum import CoherenceMatrix, QuasiMaternParams
from .whittle import (
    WhittleContext,
    loglik_from_terms,
    loglik_terms,
    prepare_context,
    whittle_loglik_mvt,
)

__all__ = [
    "GriddyGibbsConfig",
    "ChainConfig",
    "KernelState",
    "PosteriorChain",
    "initial_state",
    "update_alpha",
    "update_sigma2",
    "update_rho_entry",
    "update_hypers",
    "adapt_proposals",
    "run_chain",
    "fit_lattice",
    "write_chain_csv",
    "write_sidecar",
    "read_chain_csv",
]

logger = logging.getLogger(__name__)


@dataclass
class GriddyGibbsConfig:
    """Settings for the coherence-entry griddy Gibbs kernel.

    ``grid_size`` points are placed at the centers of equal cells strictly
    inside the feasible interval (piecewise-constant approximation of the
    conditional).  The interval endpoints are located by bisection on
    positive definiteness to ``bisect_tol``; intervals narrower than
    ``boundary_tol`` leave the entry unchanged.
    """

    grid_size: int = 41
    boundary_tol: float = 1e-8
    bisect_tol: float = 1e-10

    def __post_init__(self):
        if self.grid_size < 3 or self.grid_size % 2 == 0:
            raise ValueError(f"grid_size must be odd and >= 3, got {self.grid_size}")


@dataclass
class ChainConfig:
    """Run-length, tuning and model-prior settings for one chain."""

    iters: int = 10000
    burnin: int = 2000
    thin: int = 1
    seed: int = 0
    taper_r: float = 0.10
    adapt_window: int = 100
    init_proposal_sd: float = 0.25
    omit_zero: bool = False
    progress_every: int = 1000
    griddy: GriddyGibbsConfig = field(default_factory=GriddyGibbsConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        if self.iters < 1 or not 0 <= self.burnin < self.iters:
            raise ValueError(f"need 0 <= burnin < iters, got {self.burnin}, {self.iters}")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.init_proposal_sd <= 0:
            raise ValueError("init_proposal_sd must be positive")


@dataclass
class KernelState:
    """Mutable chain state: parameters, tuning scales, counters, RNG."""

    params: ModelParams
    proposal_sd: np.ndarray
    rng: np.random.Generator
    loglik: float
    alpha_accepts: np.ndarray = None
    alpha_proposals: np.ndarray = None
    alpha_accepts_win: np.ndarray = None
    alpha_proposals_win: np.ndarray = None
    sigma2_accepts: np.ndarray = None
    sigma2_proposals: np.ndarray = None
    rho_skips: int = 0

    def __post_init__(self):
        m = self.params.m
        for name in (
            "alpha_accepts",
            "alpha_proposals",
            "alpha_accepts_win",
            "alpha_proposals_win",
            "sigma2_accepts",
            "sigma2_proposals",
        ):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(m, dtype=int))

    def reset_counters(self, windowed_only: bool = False) -> None:
        self.alpha_accepts_win[:] = 0
        self.alpha_proposals_win[:] = 0
        if not windowed_only:
            self.alpha_accepts[:] = 0
            self.alpha_proposals[:] = 0
            self.sigma2_accepts[:] = 0
            self.sigma2_proposals[:] = 0


def _log_uniform(rng: np.random.Generator) -> float:
    return math.log(max(rng.uniform(), 1e-300))


def _sigma2_proposal(
    ctx: WhittleContext, m: int, alpha: float, nu0: int, sigma02: float
) -> InverseGammaSpec:
    """Marginal-conjugate IG proposal for sigma2_m.

    The data term is sum_j |F_m|^2 * (1 + (alpha/delta)^2 * S)^2, which is
    sigma2 times the likelihood quadratic form for that element.
    """
    s = ctx.grid.sin2sum
    w = (1 + (alpha / ctx.grid.delta) ** 2 * s) ** 2
    t = (np.abs(ctx.spectra.values[m]) ** 2 * w).ravel()
    if ctx.omit_zero:
        t = t[1:]
    q = float(np.sum(t))
    return InverseGammaSpec(
        shape=(nu0 + ctx.nfreq_used) / 2, rate=(nu0 * sigma02 + q) / 2
    )


def _profile_channel_fit(ctx: WhittleContext, k: int) -> tuple[float, float]:
    """Single-element fit: alpha on a coarse grid, sigma2 profiled out.

    For one element the likelihood at fixed alpha is maximized in closed
    form by sigma2 = q(alpha) / n with q the weighted periodogram sum, so
    only alpha needs a search.  The profiled objective per frequency is
    log(q/n) - mean(log w) with w the inverse shape of the spectrum.
    """
    s = ctx.grid.sin2sum.ravel()
    p2 = (np.abs(ctx.spectra.values[k]) ** 2).ravel()
    if ctx.omit_zero:
        s = s[1:]
        p2 = p2[1:]
    n = ctx.nfreq_used
    if not np.any(p2 > 0):
        # identically-zero channel: no information, start neutral
        return 1.0, 1.0
    best_alpha, best_sigma2, best_obj = 1.0, 1.0, math.inf
    for alpha in np.geomspace(0.05, 50.0, 61) * ctx.grid.delta:
        w = (1 + (alpha / ctx.grid.delta) ** 2 * s) ** 2
        q = float(np.sum(p2 * w))
        obj = math.log(q / n) - float(np.mean(np.log(w)))
        if obj < best_obj:
            best_alpha, best_sigma2, best_obj = float(alpha), q / n, obj
    return best_alpha, best_sigma2


def _coherence_init(ctx: WhittleContext) -> CoherenceMatrix:
    """Coherence start point from the integrated cross-periodogram.

    The normalized Gram matrix of the transformed fields is positive
    semidefinite with unit diagonal; a light shrink toward the identity
    guards against degeneracy when channels are nearly collinear.
    """
    f = ctx.spectra.values.reshape(ctx.m, -1)
    if ctx.omit_zero:
        f = f[:, 1:]
    gram = (f @ f.conj().T).real
    d = np.sqrt(np.diag(gram))
    r = gram / np.outer(d, d)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    for shrink in (0.95, 0.8, 0.5, 0.0):
        cand = shrink * r + (1 - shrink) * np.eye(ctx.m)
        try:
            out = CoherenceMatrix(cand)
            out.cholesky()
            return out
        except ValueError:
            continue
    return CoherenceMatrix(np.eye(ctx.m))


def initial_state(
    ctx: WhittleContext, cfg: ChainConfig, params: ModelParams | None = None
) -> KernelState:
    """Build a start state from per-element profile fits.

    Each element starts at its single-element profile optimum (coarse
    alpha grid, sigma2 in closed form) and the coherence starts at the
    integrated-periodogram estimate.  A mutually consistent start matters
    because the sigma2 kernel uses an independence proposal whose spread
    shrinks like 1/sqrt(n): from a badly misfit point the conditional
    target can sit many proposal widths away and the chain stalls.
    """
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        m = ctx.m
        alphas = np.empty(m)
        sigma2s = np.empty(m)
        for k in range(m):
            alphas[k], sigma2s[k] = _profile_channel_fit(ctx, k)
        params = ModelParams(
            alphas=alphas,
            sigma2s=sigma2s,
            rho=_coherence_init(ctx),
            s2=1.0,
            nu0=2,
            sigma02=1.0,
        )
    loglik = whittle_loglik_mvt(ctx, params.qm(ctx.grid.delta), params.rho)
    return KernelState(
        params=params,
        proposal_sd=np.full(params.m, cfg.init_proposal_sd),
        rng=rng,
        loglik=loglik,
    )


def update_alpha(state: KernelState, m: int, ctx: WhittleContext, cfg: ChainConfig) -> KernelState:
    """Random-walk Metropolis step for alpha_m; proposals <= 0 are rejected."""
    p = state.params
    cur = float(p.alphas[m])
    state.alpha_proposals[m] += 1
    state.alpha_proposals_win[m] += 1
    cand = cur + float(state.proposal_sd[m]) * float(state.rng.normal())
    if cand <= 0:
        return state
    trial = p.alphas.copy()
    trial[m] = cand
    ll_new = whittle_loglik_mvt(
        ctx,
        _qm_arrays(trial, p.sigma2s, ctx.grid.delta),
        p.rho,
    )
    logr = (ll_new - state.loglik) + (
        _halfnormal_logpdf(cand, p.s2) - _halfnormal_logpdf(cur, p.s2)
    )
    if _log_uniform(state.rng) < logr:
        p.alphas[m] = cand
        state.loglik = ll_new
        state.alpha_accepts[m] += 1
        state.alpha_accepts_win[m] += 1
    return state


def update_sigma2(state: KernelState, m: int, ctx: WhittleContext, cfg: ChainConfig) -> KernelState:
    """Independence MH step for sigma2_m with the conjugate IG proposal.

    For M = 1 the proposal is the exact full conditional and the acceptance
    ratio is identically 1.
    """
    p = state.params
    cur = float(p.sigma2s[m])
    prop = _sigma2_proposal(ctx, m, float(p.alphas[m]), p.nu0, p.sigma02)
    cand = float(prop.sample(state.rng))
    state.sigma2_proposals[m] += 1
    trial = p.sigma2s.copy()
    trial[m] = cand
    ll_new = whittle_loglik_mvt(ctx, _qm_arrays(p.alphas, trial, ctx.grid.delta), p.rho)
    prior_shape, prior_rate = p.nu0 / 2, p.nu0 * p.sigma02 / 2
    logr = (
        (ll_new - state.loglik)
        + (_invgamma_logpdf(cand, prior_shape, prior_rate) - _invgamma_logpdf(cur, prior_shape, prior_rate))
        - (prop.logpdf(cand) - prop.logpdf(cur))
    )
    if _log_uniform(state.rng) < logr:
        p.sigma2s[m] = cand
        state.loglik = ll_new
        state.sigma2_accepts[m] += 1
    return state


def _qm_arrays(alphas: np.ndarray, sigma2s: np.ndarray, delta: float):
    return tuple(
        QuasiMaternParams(sigma2=float(s), alpha=float(a), delta=delta)
        for s, a in zip(sigma2s, alphas)
    )


def _entry_is_pd(rho_mat: np.ndarray, i: int, j: int, t: float) -> bool:
    trial = rho_mat.copy()
    trial[i, j] = trial[j, i] = t
    try:
        np.linalg.cholesky(trial)
        return True
    except np.linalg.LinAlgError:
        return False


def _pd_edge(
    rho_mat: np.ndarray, i: int, j: int, t_in: float, t_out: float, tol: float
) -> float:
    """Bisect between a PD point and a non-PD bound; returns the PD side."""
    if _entry_is_pd(rho_mat, i, j, t_out):
        return t_out
    while abs(t_out - t_in) > tol:
        mid = 0.5 * (t_in + t_out)
        if _entry_is_pd(rho_mat, i, j, mid):
            t_in = mid
        else:
            t_out = mid
    return t_in


def feasible_interval(
    rho: CoherenceMatrix, i: int, j: int, tol: float = 1e-10
) -> tuple[float, float]:
    """PD-preserving range for entry (i, j), holding all other entries fixed.

    The PD region along one entry is an open interval containing the current
    value; |t| = 1 is always infeasible for a correlation matrix, so
    bisection between the current value and +-1 brackets each endpoint.
    """
    mat = rho.rho
    t0 = float(mat[i, j])
    if not _entry_is_pd(mat, i, j, t0):
        raise ValueError("current coherence matrix is not positive definite")
    lo = _pd_edge(mat, i, j, t0, -1.0, tol)
    hi = _pd_edge(mat, i, j, t0, 1.0, tol)
    return lo, hi


def _rho_entry_core(
    state: KernelState,
    i: int,
    j: int,
    ctx: WhittleContext,
    cfg: ChainConfig,
    terms: tuple[float, np.ndarray],
) -> KernelState:
    sum_log_f, cross = terms
    g = cfg.griddy.grid_size
    lo, hi = feasible_interval(state.params.rho, i, j, cfg.griddy.bisect_tol)
    if hi - lo < cfg.griddy.boundary_tol:
        logger.warning(
            "feasible interval for rho[%d,%d] narrower than %.1e; entry left unchanged",
            i, j, cfg.griddy.boundary_tol,
        )
        state.rho_skips += 1
        return state
    width = (hi - lo) / g
    centers = lo + (np.arange(g) + 0.5) * width
    base = state.params.rho.rho
    logvals = np.empty(g)
    for k, t in enumerate(centers):
        trial = base.copy()
        trial[i, j] = trial[j, i] = t
        try:
            logvals[k] = loglik_from_terms(ctx, sum_log_f, cross, CoherenceMatrix(trial))
        except ValueError:
            logvals[k] = -math.inf
    shifted = logvals - np.max(logvals)
    probs = np.exp(shifted)
    probs /= probs.sum()
    # piecewise-constant density: pick a cell, then a uniform point inside it
    k = int(state.rng.choice(g, p=probs))
    t = float(lo + (k + float(state.rng.uniform())) * width)
    new = base.copy()
    new[i, j] = new[j, i] = t
    try:
        ll = float(loglik_from_terms(ctx, sum_log_f, cross, CoherenceMatrix(new)))
    except ValueError:
        # draw numerically at the PD boundary: fall back to the cell center
        t = float(centers[k])
        new[i, j] = new[j, i] = t
        ll = float(logvals[k])
    state.params.rho = CoherenceMatrix(new)
    state.loglik = ll
    return state


def update_rho_entry(
    state: KernelState, i: int, j: int, ctx: WhittleContext, cfg: ChainConfig
) -> KernelState:
    """Griddy Gibbs draw for coherence entry (i, j) under the flat PD prior.

    The conditional is approximated by a piecewise-constant density over
    ``grid_size`` equal cells of the feasible interval, with cell masses
    proportional to the conditional posterior at cell centers; the new
    value is drawn uniformly within a mass-sampled cell.
    """
    if i == j:
        raise ValueError("diagonal coherence entries are fixed at 1")
    terms = loglik_terms(ctx, state.params.qm(ctx.grid.delta))
    return _rho_entry_core(state, i, j, ctx, cfg, terms)


def update_hypers(state: KernelState, ctx: WhittleContext, cfg: ChainConfig) -> KernelState:
    """Gibbs draws for s2, nu0, sigma02 (in that order); likelihood unchanged."""
    p = state.params
    p.s2 = float(s2_full_conditional(p.alphas, cfg.prior).sample(state.rng))
    p.nu0 = int(nu0_full_conditional(p.sigma2s, p.sigma02, cfg.prior).sample(state.rng))
    p.sigma02 = float(sigma02_full_conditional(p.sigma2s, p.nu0, cfg.prior).sample(state.rng))
    return state


def adapt_proposals(state: KernelState, cfg: ChainConfig) -> KernelState:
    """Rescale random-walk proposal SDs from windowed acceptance rates.

    Rates above 0.5 widen the proposal by 1.25, below 0.3 shrink it by 0.8;
    windowed counters are reset.  Called during burn-in only.
    """
    for m in range(state.params.m):
        n = state.alpha_proposals_win[m]
        if n == 0:
            continue
        rate = state.alpha_accepts_win[m] / n
        if rate > 0.5:
            state.proposal_sd[m] *= 1.25
        elif rate < 0.3:
            state.proposal_sd[m] *= 0.8
    state.reset_counters(windowed_only=True)
    return state


@dataclass
class PosteriorChain:
    """Stored posterior draws plus run metadata.

    Draw arrays have one row per stored draw; ``rho`` columns follow
    ``pairs`` (0-based lexicographic index pairs).  ``acceptance`` holds
    post-burn-in acceptance rates per kernel.
    """

    alpha: np.ndarray
    sigma2: np.ndarray
    rho: np.ndarray
    s2: np.ndarray
    nu0: np.ndarray
    sigma02: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    labels: tuple[str, ...] | None = None
    n1: int | None = None
    n2: int | None = None
    delta: float | None = None
    seed: int | None = None
    acceptance: dict | None = None
    config: dict | None = None
    runtime_seconds: float | None = None

    @property
    def ndraws(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]

    def rho_matrices(self) -> np.ndarray:
        """Reconstruct full coherence matrices, shape (ndraws, M, M)."""
        out = np.broadcast_to(np.eye(self.m), (self.ndraws, self.m, self.m)).copy()
        for k, (i, j) in enumerate(self.pairs):
            out[:, i, j] = out[:, j, i] = self.rho[:, k]
        return out


def run_chain(ctx: WhittleContext, cfg: ChainConfig) -> PosteriorChain:
    """Run one full MCMC chain on a prepared likelihood context."""
    t_start = time.perf_counter()
    state = initial_state(ctx, cfg)
    m = ctx.m
    pairs = tuple((i, j) for i in range(m) for j in range(i + 1, m))
    ndraws = (cfg.iters - cfg.burnin) // cfg.thin
    rec_alpha = np.empty((ndraws, m))
    rec_sigma2 = np.empty((ndraws, m))
    rec_rho = np.empty((ndraws, len(pairs)))
    rec_s2 = np.empty(ndraws)
    rec_nu0 = np.empty(ndraws, dtype=int)
    rec_sigma02 = np.empty(ndraws)
    stored = 0

    for t in range(1, cfg.iters + 1):
        for k in range(m):
            update_alpha(state, k, ctx, cfg)
        for k in range(m):
            update_sigma2(state, k, ctx, cfg)
        if pairs:
            terms = loglik_terms(ctx, state.params.qm(ctx.grid.delta))
            for i, j in pairs:
                _rho_entry_core(state, i, j, ctx, cfg, terms)
        update_hypers(state, ctx, cfg)

        if t <= cfg.burnin and cfg.adapt_window > 0 and t % cfg.adapt_window == 0:
            adapt_proposals(state, cfg)
        if t == cfg.burnin:
            state.reset_counters()
        if t > cfg.burnin and (t - cfg.burnin) % cfg.thin == 0:
            p = state.params
            p.rho.cholesky()  # stored draws must be PD
            rec_alpha[stored] = p.alphas
            rec_sigma2[stored] = p.sigma2s
            rec_rho[stored] = [p.rho.rho[i, j] for i, j in pairs]
            rec_s2[stored] = p.s2
            rec_nu0[stored] = p.nu0
            rec_sigma02[stored] = p.sigma02
            stored += 1
        if cfg.progress_every and t % cfg.progress_every == 0:
            logger.info("iteration %d/%d, loglik %.2f", t, cfg.iters, state.loglik)

    denom_a = np.maximum(state.alpha_proposals, 1)
    denom_s = np.maximum(state.sigma2_proposals, 1)
    acceptance = {
        "alpha": (state.alpha_accepts / denom_a).tolist(),
        "sigma2": (state.sigma2_accepts / denom_s).tolist(),
        "rho_narrow_interval_skips": state.rho_skips,
        "proposal_sd": state.proposal_sd.tolist(),
    }
    return PosteriorChain(
        alpha=rec_alpha[:stored],
        sigma2=rec_sigma2[:stored],
        rho=rec_rho[:stored],
        s2=rec_s2[:stored],
        nu0=rec_nu0[:stored],
        sigma02=rec_sigma02[:stored],
        pairs=pairs,
        labels=ctx.labels,
        n1=ctx.grid.n1,
        n2=ctx.grid.n2,
        delta=ctx.grid.delta,
        seed=cfg.seed,
        acceptance=acceptance,
        config=dataclasses.asdict(cfg),
        runtime_seconds=time.perf_counter() - t_start,
    )


def fit_lattice(data: MultiLattice, cfg: ChainConfig) -> PosteriorChain:
    """Taper, transform and run one chain on preprocessed lattice data."""
    ctx = prepare_context(data, taper_r=cfg.taper_r, omit_zero=cfg.omit_zero)
    return run_chain(ctx, cfg)


def _column_names(m: int, pairs) -> list[str]:
    names = [f"alpha_{k + 1}" for k in range(m)]
    names += [f"sigma2_{k + 1}" for k in range(m)]
    names += [f"rho_{i + 1}_{j + 1}" for i, j in pairs]
    names += ["s2", "nu0", "sigma02"]
    return names


def write_chain_csv(chain: PosteriorChain, path: str | Path) -> None:
    """Write draws as CSV with one named column per scalar parameter."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = np.column_stack(
        [
            chain.alpha,
            chain.sigma2,
            chain.rho if chain.rho.size else np.empty((chain.ndraws, 0)),
            chain.s2,
            chain.nu0.astype(float),
            chain.sigma02,
        ]
    )
    header = ",".join(_column_names(chain.m, chain.pairs))
    np.savetxt(path, cols, fmt="%.17g", delimiter=",", header=header, comments="")


def write_sidecar(chain: PosteriorChain, path: str | Path) -> None:
    """Write run metadata (seed, config echo, acceptance rates) as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "seed": chain.seed,
        "labels": list(chain.labels) if chain.labels else None,
        "n1": chain.n1,
        "n2": chain.n2,
        "delta": chain.delta,
        "ndraws": chain.ndraws,
        "acceptance": chain.acceptance,
        "config": chain.config,
        "runtime_seconds": chain.runtime_seconds,
    }
    path.write_text(json.dumps(meta, indent=2) + "\n")


def read_chain_csv(path: str | Path) -> PosteriorChain:
    """Read a chain CSV back; metadata lives in the sidecar, not here."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.asarray(rows)
    m = sum(1 for name in header if name.startswith("alpha_"))
    pairs = []
    for name in header:
        if name.startswith("rho_"):
            _, i, j = name.split("_")
            pairs.append((int(i) - 1, int(j) - 1))
    cols = {name: data[:, k] for k, name in enumerate(header)}
    return PosteriorChain(
        alpha=np.column_stack([cols[f"alpha_{k + 1}"] for k in range(m)]),
        sigma2=np.column_stack([cols[f"sigma2_{k + 1}"] for k in range(m)]),
        rho=(
            np.column_stack([cols[f"rho_{i + 1}_{j + 1}"] for i, j in pairs])
            if pairs
            else np.empty((data.shape[0], 0))
        ),
        s2=cols["s2"],
        nu0=cols["nu0"].astype(int),
        sigma02=cols["sigma02"],
        pairs=tuple(pairs),
    )
