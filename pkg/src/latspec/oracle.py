"""Dense-covariance oracle for validating the spectral likelihood.

Builds the exact MN x MN covariance implied by the discrete spectral sums,
c_ab(h) = sum_j exp(i w_j . h) * f_ab(w_j) at periodic lags h, and evaluates
the classical Gaussian log-likelihood by Cholesky factorisation.  Cost is
cubic in M*N, so instances are guarded to n1*n2*M <= 4096; the point is
trustworthy small-scale truth, not speed.

Site ordering is element-major: all sites of element 1 (row-major), then
element 2, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridio import MultiLattice
from .spectrum import CoherenceMatrix, QuasiMaternParams, fourier_grid, marginal_spectrum
from .whittle import prepare_context, whittle_loglik_mvt

__all__ = [
    "DenseCov",
    "LikelihoodComparison",
    "dense_cov_matrix",
    "dense_loglik",
    "compare_likelihoods",
]

_SIZE_LIMIT = 4096


@dataclass(frozen=True)
class DenseCov:
    """Dense covariance with its lattice geometry.

    ``matrix`` is (M*N) x (M*N), element-major over sites in row-major
    order; symmetric positive definite by construction.
    """

    matrix: np.ndarray
    n1: int
    n2: int
    m: int


def dense_cov_matrix(
    params: list[QuasiMaternParams] | tuple[QuasiMaternParams, ...],
    rho: CoherenceMatrix,
    n1: int,
    n2: int,
    delta: float = 1.0,
) -> DenseCov:
    """Exact covariance of the block-circulant spectral model.

    Raises
    ------
    ValueError
        If n1*n2*M exceeds the size guard (4096) or rho is not positive
        definite.
    """
    m = len(params)
    n = n1 * n2
    if n * m > _SIZE_LIMIT:
        raise ValueError(f"dense oracle limited to n1*n2*M <= {_SIZE_LIMIT}, got {n * m}")
    if rho.m != m:
        raise ValueError(f"rho is {rho.m} x {rho.m} for {m} elements")
    rho.cholesky()

    grid = fourier_grid(n1, n2, delta)
    dens = np.stack([marginal_spectrum(p, grid) for p in params])

    # periodic lag tables: d1[s, t] = (s - t) mod n1, likewise d2
    i1 = np.arange(n1)
    i2 = np.arange(n2)
    d1 = (i1[:, None] - i1[None, :]) % n1
    d2 = (i2[:, None] - i2[None, :]) % n2

    out = np.empty((m * n, m * n))
    for a in range(m):
        for b in range(m):
            cross_dens = rho.rho[a, b] * np.sqrt(dens[a] * dens[b])
            c = np.fft.ifft2(cross_dens) * n
            if np.max(np.abs(c.imag)) > 1e-10 * (np.max(np.abs(c)) + 1e-300):
                raise AssertionError("covariance table has non-negligible imaginary part")
            c = c.real
            block = c[d1[:, None, :, None], d2[None, :, None, :]].reshape(n, n)
            out[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
    return DenseCov(matrix=out, n1=n1, n2=n2, m=m)


def dense_loglik(z: np.ndarray, cov: DenseCov) -> float:
    """Exact Gaussian log-likelihood -(log det S + z' S^-1 z)/2 - (MN/2) log 2*pi.

    ``z`` must be the element-major flattening of the field values.
    """
    z = np.asarray(z, dtype=float).ravel()
    mn = cov.matrix.shape[0]
    if z.size != mn:
        raise ValueError(f"z has {z.size} entries for a {mn} x {mn} covariance")
    chol = np.linalg.cholesky(cov.matrix)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    y = np.linalg.solve(chol, z)
    return -0.5 * (logdet + float(y @ y)) - 0.5 * mn * math.log(2 * math.pi)


@dataclass(frozen=True)
class LikelihoodComparison:
    """Whittle-vs-dense agreement report.

    ``constant`` is the additive shift (M*N/2)*log(2*pi*N) applied to the
    Whittle value before comparison.  ``exact`` is False when a taper was
    applied, in which case ``passed`` is None (comparison is approximate by
    construction).
    """

    whittle: float
    dense: float
    constant: float
    abs_discrepancy: float
    rel_discrepancy: float
    exact: bool
    passed: bool | None
    tol: float


def compare_likelihoods(
    data: MultiLattice,
    params: list[QuasiMaternParams] | tuple[QuasiMaternParams, ...],
    rho: CoherenceMatrix,
    taper_r: float = 0.0,
    tol: float = 1e-9,
    wrong_constant: bool = False,
) -> LikelihoodComparison:
    """Evaluate both likelihood routes on the same data and report agreement.

    With no taper, ``whittle + (M*N/2)*log(2*pi*N)`` must reproduce the dense
    value to ``tol`` relative error.  ``wrong_constant`` deliberately applies
    (M*N/2)*log(2*pi) instead, a debugging aid that shifts the report by
    (M*N/2)*log(N).
    """
    ctx = prepare_context(data, taper_r=taper_r)
    w = whittle_loglik_mvt(ctx, params, rho)
    cov = dense_cov_matrix(params, rho, data.n1, data.n2, data.delta)
    d = dense_loglik(data.values.reshape(data.m, -1).ravel(), cov)
    mn = data.m * data.nsites
    if wrong_constant:
        constant = 0.5 * mn * math.log(2 * math.pi)
    else:
        constant = 0.5 * mn * math.log(2 * math.pi * data.nsites)
    diff = float(abs(w + constant - d))
    rel = diff / max(1.0, abs(d))
    exact = taper_r == 0.0
    return LikelihoodComparison(
        whittle=float(w),
        dense=float(d),
        constant=constant,
        abs_discrepancy=diff,
        rel_discrepancy=rel,
        exact=exact,
        passed=bool(rel <= tol) if exact else None,
        tol=tol,
    )
