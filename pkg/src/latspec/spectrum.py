"""Spectral-domain model pieces for lattice Gaussian random fields.

The model is defined directly on the Fourier frequencies of an n1 x n2
lattice.  Each element m has a quasi-Matern marginal spectral density

    f_m(w) = sigma2_m / (1 + (alpha_m/delta)^2 *
             (sin^2(delta*w1/2) + sin^2(delta*w2/2)))^(nu+1),   nu = 1 fixed,

and elements are coupled by a frequency-constant coherence (correlation)
matrix rho, giving the cross-spectral matrix

    f(w) = diag(f_m(w)^(1/2)) @ rho @ diag(f_m(w)^(1/2)).

Covariances are the plain discrete spectral sums c(h) = sum_j e^{i w_j.h}
f(w_j), so sigma2 is a spectral scale: the implied marginal variance is the
sum of the density over all frequencies, not sigma2 itself.

The forward 2-D DFT used throughout carries a 1/N normalisation:
F_j = (1/N) * sum_s Z(s) exp(-i w_j . s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "FourierGrid",
    "QuasiMaternParams",
    "CoherenceMatrix",
    "SpectralField",
    "fourier_grid",
    "dft2",
    "quasi_matern_sd",
    "cross_sd",
    "spectral_matrix",
    "cov_curve",
]


@dataclass(frozen=True)
class FourierGrid:
    """The N = n1*n2 Fourier frequencies of a lattice with spacing delta.

    Frequencies are w_j = (2*pi*j1/n1, 2*pi*j2/n2)/delta for j1 = 0..n1-1,
    j2 = 0..n2-1, each component folded into the principal domain
    (-pi/delta, pi/delta].  Layout matches ``numpy.fft.fft2`` output, so
    ``omega1[j1, j2]`` pairs with the DFT coefficient at index (j1, j2).
    """

    n1: int
    n2: int
    delta: float = 1.0
    omega1: np.ndarray = field(repr=False, default=None)
    omega2: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError(f"need n1, n2 >= 2, got ({self.n1}, {self.n2})")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        w1 = _principal_frequencies(self.n1) / self.delta
        w2 = _principal_frequencies(self.n2) / self.delta
        object.__setattr__(self, "omega1", np.broadcast_to(w1[:, None], (self.n1, self.n2)))
        object.__setattr__(self, "omega2", np.broadcast_to(w2[None, :], (self.n1, self.n2)))

    @property
    def nfreq(self) -> int:
        return self.n1 * self.n2

    @cached_property
    def sin2sum(self) -> np.ndarray:
        """sin^2(delta*w1/2) + sin^2(delta*w2/2) on the full grid."""
        d = self.delta
        return np.sin(d * self.omega1 / 2) ** 2 + np.sin(d * self.omega2 / 2) ** 2

    @property
    def frequencies(self) -> np.ndarray:
        """All frequencies as an (N, 2) array, row-major in (j1, j2)."""
        return np.stack([self.omega1.ravel(), self.omega2.ravel()], axis=1)


def _principal_frequencies(n: int) -> np.ndarray:
    """2*pi*j/n folded into (-pi, pi]; the Nyquist value stays at +pi."""
    w = 2 * np.pi * np.arange(n) / n
    return np.where(w > np.pi, w - 2 * np.pi, w)


def fourier_grid(n1: int, n2: int, delta: float = 1.0) -> FourierGrid:
    """Build the Fourier frequency grid for an n1 x n2 lattice."""
    return FourierGrid(n1=n1, n2=n2, delta=delta)


def dft2(z: np.ndarray) -> np.ndarray:
    """Forward 2-D DFT with 1/N normalisation.

    Returns F with F_j = (1/N) * sum_s z(s) * exp(-i w_j . s); the (0, 0)
    coefficient is the sample mean of ``z``.
    """
    z = np.asarray(z)
    if z.ndim != 2:
        raise ValueError(f"dft2 expects a 2-D array, got shape {z.shape}")
    return np.fft.fft2(z) / z.size


@dataclass(frozen=True)
class QuasiMaternParams:
    """Marginal quasi-Matern spectral parameters for one element.

    ``sigma2`` is the spectral scale, ``alpha`` the inverse-range parameter
    (larger alpha concentrates the spectrum, longer correlation range),
    ``delta`` the grid spacing.  The smoothness ``nu`` is fixed at 1; other
    values are rejected.
    """

    sigma2: float
    alpha: float
    delta: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.nu != 1.0:
            raise ValueError(f"nu is fixed at 1, got {self.nu}")


def quasi_matern_sd(p: QuasiMaternParams, omega) -> np.ndarray | float:
    """Quasi-Matern spectral density at frequency pair(s) ``omega``.

    Parameters
    ----------
    p : QuasiMaternParams
    omega : pair of scalars or of broadcastable arrays
        Frequency components, each in the principal domain
        (-pi/delta, pi/delta].

    Returns
    -------
    Density values, strictly positive, bounded above by sigma2.
    """
    w1, w2 = np.asarray(omega[0], dtype=float), np.asarray(omega[1], dtype=float)
    lim = np.pi / p.delta * (1 + 1e-12)
    if np.any(np.abs(w1) > lim) or np.any(np.abs(w2) > lim):
        raise ValueError(
            f"frequency outside principal domain (-pi/delta, pi/delta] with delta={p.delta}"
        )
    s = np.sin(p.delta * w1 / 2) ** 2 + np.sin(p.delta * w2 / 2) ** 2
    out = p.sigma2 / (1 + (p.alpha / p.delta) ** 2 * s) ** (p.nu + 1)
    return float(out) if out.ndim == 0 else out


def cross_sd(pa: QuasiMaternParams, pb: QuasiMaternParams, rho_ab: float, omega):
    """Cross-spectral density rho_ab * sqrt(f_a(w) * f_b(w))."""
    return rho_ab * np.sqrt(quasi_matern_sd(pa, omega) * quasi_matern_sd(pb, omega))


@dataclass(frozen=True)
class CoherenceMatrix:
    """Frequency-constant coherence: an M x M correlation matrix.

    The constructor enforces symmetry, unit diagonal and off-diagonal
    entries in (-1, 1); positive definiteness is checked by
    :meth:`cholesky`, which raises ``ValueError`` for a non-PD matrix so
    callers can treat such states as zero posterior mass.
    """

    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"rho must be square, got shape {r.shape}")
        if not np.allclose(r, r.T, atol=1e-12):
            raise ValueError("rho must be symmetric")
        if not np.allclose(np.diag(r), 1.0, atol=1e-12):
            raise ValueError("rho must have unit diagonal")
        off = r[~np.eye(r.shape[0], dtype=bool)]
        if off.size and np.max(np.abs(off)) >= 1.0:
            raise ValueError("off-diagonal coherence entries must lie in (-1, 1)")
        object.__setattr__(self, "rho", r)

    @property
    def m(self) -> int:
        return self.rho.shape[0]

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises ValueError if rho is not PD."""
        try:
            return np.linalg.cholesky(self.rho)
        except np.linalg.LinAlgError:
            raise ValueError("coherence matrix is not positive definite") from None

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.rho)
            return True
        except np.linalg.LinAlgError:
            return False

    def logdet(self) -> float:
        L = self.cholesky()
        return float(2.0 * np.sum(np.log(np.diag(L))))


def spectral_matrix(params: list[QuasiMaternParams], rho: CoherenceMatrix, omega) -> np.ndarray:
    """Full M x M cross-spectral matrix diag(sqrt f) rho diag(sqrt f) at one frequency."""
    if len(params) != rho.m:
        raise ValueError(f"{len(params)} marginal params for {rho.m} x {rho.m} coherence")
    rho.cholesky()  # reject non-PD coherence up front
    root = np.array([np.sqrt(quasi_matern_sd(p, omega)) for p in params])
    return np.outer(root, root) * rho.rho


@dataclass(frozen=True)
class SpectralField:
    """Per-element DFT coefficients of a (tapered) dataset.

    ``values[m]`` holds the 1/N-normalised forward DFT of element m,
    multiplied by sqrt(N / adjustment) when ``adjustment_corrected`` is set,
    so squared moduli are already on the un-tapered periodogram scale.
    """

    values: np.ndarray
    adjustment_corrected: bool = True

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3:
            raise ValueError(f"values must be (M, n1, n2), got shape {v.shape}")
        object.__setattr__(self, "values", v.astype(complex))

    @property
    def m(self) -> int:
        return self.values.shape[0]


def marginal_spectrum(p: QuasiMaternParams, grid: FourierGrid) -> np.ndarray:
    """Quasi-Matern density evaluated on every grid frequency, shape (n1, n2)."""
    if p.delta != grid.delta:
        raise ValueError(f"params delta {p.delta} != grid delta {grid.delta}")
    return p.sigma2 / (1 + (p.alpha / p.delta) ** 2 * grid.sin2sum) ** (p.nu + 1)


def cov_curve(
    pa: QuasiMaternParams,
    pb: QuasiMaternParams,
    rho_ab: float,
    grid: FourierGrid,
    lags: list[tuple[int, int]],
) -> np.ndarray:
    """Covariance c(h) = sum_j exp(i w_j . h) f_ab(w_j) at integer lags.

    For a marginal curve pass ``pa == pb`` and ``rho_ab = 1``.  Lags are in
    grid steps; each component must satisfy |h| < n for its axis.  The full
    lag surface is obtained with a single inverse FFT of the cross-density
    grid and the requested lags are read off modulo the lattice period.
    """
    if not -1.0 <= rho_ab <= 1.0:
        raise ValueError(f"coherence entry must be in [-1, 1], got {rho_ab}")
    dens = rho_ab * np.sqrt(marginal_spectrum(pa, grid) * marginal_spectrum(pb, grid))
    c = np.fft.ifft2(dens) * grid.nfreq
    scale = np.max(np.abs(c)) + 1e-300
    if np.max(np.abs(c.imag)) > 1e-10 * scale:
        raise AssertionError("covariance surface has non-negligible imaginary part")
    c = c.real
    out = np.empty(len(lags))
    for k, (h1, h2) in enumerate(lags):
        if abs(h1) >= grid.n1 or abs(h2) >= grid.n2:
            raise ValueError(f"lag {(h1, h2)} exceeds lattice periods ({grid.n1}, {grid.n2})")
        out[k] = c[h1 % grid.n1, h2 % grid.n2]
    return out
