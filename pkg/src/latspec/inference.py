"""Posterior summaries: covariance curves, conditional coefficients, graphs.

Each coherence draw rho implies, for every element j, the coefficients of
the best linear predictor of element j's transformed field from the others,

    beta_j = rho_[j, -j] @ inverse(rho_[-j, -j]),

equal to the negated j-th row of the precision matrix rescaled by its
diagonal.  A coefficient is exactly zero iff the corresponding precision
entry is zero, so posterior intervals for these coefficients support a
conditional-dependence graph: an edge is drawn when the credible intervals
in both directions exclude zero, signed by the posterior means.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sampler import PosteriorChain
from .spectrum import FourierGrid

__all__ = [
    "CovCurveSummary",
    "CondCoefSummary",
    "DependenceGraph",
    "ChainSummary",
    "cond_coefficients",
    "summarize_chain",
    "build_graph",
    "export_graph",
    "write_curves_csv",
    "write_coefficients_csv",
    "read_coefficients_csv",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CovCurveSummary:
    """Pointwise posterior summary of one covariance curve along axis-1 lags.

    ``distance`` is the physical lag (grid steps times delta); ``lo``/``hi``
    bound the central ``level`` posterior interval at each lag.
    """

    pair: tuple[str, str]
    lags: np.ndarray
    distance: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float

    @property
    def is_marginal(self) -> bool:
        return self.pair[0] == self.pair[1]


@dataclass(frozen=True)
class CondCoefSummary:
    """Posterior summary of one directed conditional coefficient."""

    target: str
    regressor: str
    mean: float
    lo: float
    hi: float
    level: float

    @property
    def excludes_zero(self) -> bool:
        return self.lo > 0 or self.hi < 0


@dataclass(frozen=True)
class DependenceGraph:
    """Undirected signed conditional-dependence graph.

    ``edges`` holds (i, j, sign) with i < j indexing ``labels`` and sign
    '+' or '-'; nodes without edges stay isolated.
    """

    labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...]
    level: float


@dataclass(frozen=True)
class ChainSummary:
    curves: tuple[CovCurveSummary, ...]
    coefficients: tuple[CondCoefSummary, ...]
    level: float


def cond_coefficients(rho_mat: np.ndarray, j: int) -> np.ndarray:
    """Conditional (partial regression) coefficients of element j on the rest.

    Supports a single M x M matrix or a batch (..., M, M); returns the
    coefficients in ascending element order with j skipped.  Equal to
    -P[j, -j] / P[j, j] for the precision matrix P = inverse(rho).
    """
    rho_mat = np.asarray(rho_mat, dtype=float)
    m = rho_mat.shape[-1]
    others = [k for k in range(m) if k != j]
    minor = rho_mat[..., others, :][..., :, others]
    rhs = rho_mat[..., j, others]
    return np.linalg.solve(minor, rhs[..., None])[..., 0]


def _density_batch(sigma2: np.ndarray, alpha: np.ndarray, grid: FourierGrid) -> np.ndarray:
    s = grid.sin2sum[None, :, :]
    return sigma2[:, None, None] / (1 + (alpha[:, None, None] / grid.delta) ** 2 * s) ** 2


def _curve_draws(
    chain: PosteriorChain,
    grid: FourierGrid,
    a: int,
    b: int,
    rho_col: np.ndarray,
    nlags: int,
    chunk: int = 512,
) -> np.ndarray:
    """Per-draw covariance values at lags (0,0)..(nlags-1,0), shape (D, nlags)."""
    d = chain.ndraws
    out = np.empty((d, nlags))
    n = grid.nfreq
    for start in range(0, d, chunk):
        sl = slice(start, min(start + chunk, d))
        dens_a = _density_batch(chain.sigma2[sl, a], chain.alpha[sl, a], grid)
        if b == a:
            cross = dens_a
        else:
            dens_b = _density_batch(chain.sigma2[sl, b], chain.alpha[sl, b], grid)
            cross = np.sqrt(dens_a * dens_b)
        cross = cross * rho_col[sl, None, None]
        c = np.fft.ifft2(cross, axes=(1, 2)).real * n
        out[sl] = c[:, :nlags, 0]
    return out


def summarize_chain(
    chain: PosteriorChain,
    grid: FourierGrid,
    lag_max: int | None = None,
    level: float = 0.95,
    labels: tuple[str, ...] | None = None,
) -> ChainSummary:
    """Posterior covariance curves and conditional coefficients from a chain.

    Curves are evaluated along axis-aligned lags (0,0), (1,0), ..,
    (lag_max,0); ``lag_max`` defaults to min(n1, n2) // 2.  Marginal curves
    come first (element order), then cross pairs in lexicographic order,
    each with pointwise central intervals at ``level``.
    """
    if chain.ndraws == 0:
        raise ValueError("chain has no stored draws")
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    m = chain.m
    labels = tuple(labels or chain.labels or tuple(f"el{i + 1}" for i in range(m)))
    if len(labels) != m:
        raise ValueError(f"{len(labels)} labels for {m} elements")
    if lag_max is None:
        lag_max = min(grid.n1, grid.n2) // 2
    if not 0 <= lag_max < grid.n1:
        raise ValueError(f"lag_max must be in [0, n1), got {lag_max}")
    nlags = lag_max + 1
    lags = np.arange(nlags)
    q_lo, q_hi = (1 - level) / 2, (1 + level) / 2

    ones = np.ones(chain.ndraws)
    targets = [(a, a, ones) for a in range(m)]
    pair_index = {p: k for k, p in enumerate(chain.pairs)}
    for i, j in chain.pairs:
        targets.append((i, j, chain.rho[:, pair_index[(i, j)]]))

    curves = []
    for a, b, rho_col in targets:
        draws = _curve_draws(chain, grid, a, b, rho_col, nlags)
        curves.append(
            CovCurveSummary(
                pair=(labels[a], labels[b]),
                lags=lags.copy(),
                distance=lags * grid.delta,
                mean=draws.mean(axis=0),
                lo=np.quantile(draws, q_lo, axis=0),
                hi=np.quantile(draws, q_hi, axis=0),
                level=level,
            )
        )

    rhos = chain.rho_matrices()
    coefs = []
    for j in range(m):
        beta = cond_coefficients(rhos, j)  # (D, M-1)
        others = [k for k in range(m) if k != j]
        for col, k in enumerate(others):
            vals = beta[:, col]
            coefs.append(
                CondCoefSummary(
                    target=labels[j],
                    regressor=labels[k],
                    mean=float(vals.mean()),
                    lo=float(np.quantile(vals, q_lo)),
                    hi=float(np.quantile(vals, q_hi)),
                    level=level,
                )
            )
    return ChainSummary(curves=tuple(curves), coefficients=tuple(coefs), level=level)


def build_graph(
    coefficients: list[CondCoefSummary] | tuple[CondCoefSummary, ...],
    labels: tuple[str, ...],
    level: float = 0.95,
) -> DependenceGraph:
    """Edge between i and j iff both directed intervals exclude zero.

    The edge sign is the shared sign of the two posterior means; if the
    directions disagree in sign (possible only through Monte Carlo noise,
    since each draw's two coefficients share a sign) the edge is dropped
    with a warning.
    """
    index = {lab: k for k, lab in enumerate(labels)}
    directed = {}
    for c in coefficients:
        if c.target not in index or c.regressor not in index:
            raise ValueError(f"coefficient {c.target}~{c.regressor} outside labels {labels}")
        directed[(index[c.target], index[c.regressor])] = c
    edges = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            fwd = directed.get((i, j))
            rev = directed.get((j, i))
            if fwd is None or rev is None:
                continue
            if not (fwd.excludes_zero and rev.excludes_zero):
                continue
            s_fwd = "+" if fwd.mean > 0 else "-"
            s_rev = "+" if rev.mean > 0 else "-"
            if s_fwd != s_rev:
                logger.warning(
                    "sign disagreement for %s--%s (%s vs %s); edge omitted",
                    labels[i], labels[j], s_fwd, s_rev,
                )
                continue
            edges.append((i, j, s_fwd))
    return DependenceGraph(labels=tuple(labels), edges=tuple(edges), level=level)


def export_graph(graph: DependenceGraph, path: str | Path | None = None) -> str:
    """Render the graph as deterministic DOT text; optionally write it."""
    lines = ["graph dependence {"]
    for lab in graph.labels:
        lines.append(f'  "{lab}";')
    for i, j, sign in sorted(graph.edges):
        lines.append(f'  "{graph.labels[i]}" -- "{graph.labels[j]}" [label="{sign}"];')
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def _pair_name(pair: tuple[str, str]) -> str:
    return pair[0] if pair[0] == pair[1] else f"{pair[0]}:{pair[1]}"


def write_curves_csv(curves, path: str | Path) -> None:
    """Write curve summaries as (pair, lag, mean, lo, hi) rows.

    The lag column is in physical distance units (grid steps times delta).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair", "lag", "mean", "lo", "hi"])
        for c in curves:
            name = _pair_name(c.pair)
            for k in range(len(c.lags)):
                w.writerow(
                    [name, repr(float(c.distance[k])), repr(float(c.mean[k])),
                     repr(float(c.lo[k])), repr(float(c.hi[k]))]
                )


def write_coefficients_csv(coefficients, path: str | Path) -> None:
    """Write coefficient summaries as (target, regressor, mean, lo, hi) rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "regressor", "mean", "lo", "hi"])
        for c in coefficients:
            w.writerow([c.target, c.regressor, repr(c.mean), repr(c.lo), repr(c.hi)])


def read_coefficients_csv(path: str | Path, level: float = 0.95):
    """Read a coefficient table back; labels in first-appearance order."""
    labels: list[str] = []
    coefs = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"target", "regressor", "mean", "lo", "hi"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            for lab in (row["target"], row["regressor"]):
                if lab not in labels:
                    labels.append(lab)
            coefs.append(
                CondCoefSummary(
                    target=row["target"],
                    regressor=row["regressor"],
                    mean=float(row["mean"]),
                    lo=float(row["lo"]),
                    hi=float(row["hi"]),
                    level=level,
                )
            )
    return coefs, tuple(labels)
