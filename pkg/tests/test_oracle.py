import cmath
import math

import numpy as np
import pytest

from latspec.gridio import MultiLattice
from latspec.oracle import (
    DenseCov,
    compare_likelihoods,
    dense_cov_matrix,
    dense_loglik,
)
from latspec.spectrum import (
    CoherenceMatrix,
    QuasiMaternParams,
    fourier_grid,
    marginal_spectrum,
)
from latspec.whittle import prepare_context, whittle_loglik_mvt
from tests.conftest import make_lattice, make_params, random_correlation


def dense_entry_reference(params, rho, n1, n2, a, s, b, t):
    """One covariance entry by direct frequency summation, no FFT.

    ``s`` and ``t`` are (row, col) site pairs; ``a`` and ``b`` element
    indices.
    """
    g = fourier_grid(n1, n2, params[0].delta)
    fa = marginal_spectrum(params[a], g)
    fb = marginal_spectrum(params[b], g)
    acc = 0j
    h1, h2 = s[0] - t[0], s[1] - t[1]
    for j1 in range(n1):
        for j2 in range(n2):
            dens = rho.rho[a, b] * math.sqrt(fa[j1, j2] * fb[j1, j2])
            phase = g.delta * (g.omega1[j1, j2] * h1 + g.omega2[j1, j2] * h2)
            acc += dens * cmath.exp(1j * phase)
    assert abs(acc.imag) < 1e-9 * (abs(acc) + 1.0)
    return acc.real


class TestDenseCovMatrix:
    def test_flat_spectrum_is_scaled_identity(self):
        p = QuasiMaternParams(sigma2=1.6, alpha=1e-9)
        cov = dense_cov_matrix([p], CoherenceMatrix(np.eye(1)), 2, 2)
        np.testing.assert_allclose(cov.matrix, 4 * 1.6 * np.eye(4), atol=1e-6)

    def test_zero_coherence_gives_block_diagonal(self):
        params = make_params([1.0, 2.0], [0.8, 1.5])
        rho = CoherenceMatrix(np.eye(2))
        cov = dense_cov_matrix(list(params), rho, 3, 3)
        off = cov.matrix[:9, 9:]
        np.testing.assert_array_equal(off, np.zeros((9, 9)))
        np.testing.assert_array_equal(cov.matrix[9:, :9], np.zeros((9, 9)))

    def test_entries_match_direct_sum(self):
        params = make_params([1.2, 0.7], [0.9, 2.1])
        rho = CoherenceMatrix(np.array([[1.0, -0.6], [-0.6, 1.0]]))
        n1, n2 = 3, 4
        cov = dense_cov_matrix(list(params), rho, n1, n2)
        n = n1 * n2

        def flat(elem, site):
            return elem * n + site[0] * n2 + site[1]

        cases = [
            (0, (0, 0), 0, (0, 0)),
            (0, (1, 2), 0, (0, 0)),
            (0, (2, 3), 1, (0, 1)),
            (1, (0, 0), 1, (2, 2)),
            (1, (1, 1), 0, (2, 3)),
        ]
        for a, s, b, t in cases:
            expect = dense_entry_reference(params, rho, n1, n2, a, s, b, t)
            got = cov.matrix[flat(a, s), flat(b, t)]
            assert got == pytest.approx(expect, abs=1e-10)

    def test_symmetric_and_pd_over_random_draws(self, rng):
        for _ in range(50):
            params = make_params(rng.uniform(0.2, 4.0, 3), rng.uniform(0.2, 4.0, 3))
            rho = CoherenceMatrix(random_correlation(rng, 3))
            cov = dense_cov_matrix(list(params), rho, 6, 6)
            np.testing.assert_allclose(cov.matrix, cov.matrix.T, atol=1e-9)
            np.linalg.cholesky(cov.matrix)  # raises LinAlgError if not PD

    def test_univariate_eigenvalues_are_scaled_densities(self):
        # the lattice DFT diagonalizes the covariance with eigenvalues N*f(w_j)
        p = QuasiMaternParams(sigma2=2.0, alpha=1.3)
        n1, n2 = 5, 4
        cov = dense_cov_matrix([p], CoherenceMatrix(np.eye(1)), n1, n2)
        got = np.sort(np.linalg.eigvalsh(cov.matrix))
        g = fourier_grid(n1, n2)
        expect = np.sort(g.nfreq * marginal_spectrum(p, g).ravel())
        np.testing.assert_allclose(got, expect, rtol=1e-9)

    def test_identity_coherence_stacks_univariate_blocks(self):
        params = make_params([1.0, 3.0], [0.5, 1.7])
        cov = dense_cov_matrix(list(params), CoherenceMatrix(np.eye(2)), 4, 3)
        for k, p in enumerate(params):
            solo = dense_cov_matrix([p], CoherenceMatrix(np.eye(1)), 4, 3)
            sl = slice(k * 12, (k + 1) * 12)
            np.testing.assert_allclose(cov.matrix[sl, sl], solo.matrix, rtol=1e-12)

    def test_size_guard(self):
        params = make_params([1.0] * 2, [1.0] * 2)
        with pytest.raises(ValueError, match="4096"):
            dense_cov_matrix(list(params), CoherenceMatrix(np.eye(2)), 64, 64)

    def test_rho_dimension_mismatch(self):
        params = make_params([1.0], [1.0])
        with pytest.raises(ValueError, match="1 elements"):
            dense_cov_matrix(list(params), CoherenceMatrix(np.eye(2)), 4, 4)


class TestDenseLoglik:
    def test_identity_covariance_zero_data(self):
        cov = DenseCov(matrix=np.eye(4), n1=2, n2=2, m=1)
        got = dense_loglik(np.zeros(4), cov)
        assert got == pytest.approx(-2 * math.log(2 * math.pi))

    def test_scaled_identity_zero_data(self):
        cov = DenseCov(matrix=4.0 * np.eye(4), n1=2, n2=2, m=1)
        got = dense_loglik(np.zeros(4), cov)
        assert got == pytest.approx(-0.5 * 4 * math.log(4.0) - 2 * math.log(2 * math.pi))

    def test_matches_scipy_reference(self, rng):
        from scipy.stats import multivariate_normal

        params = make_params([1.1, 0.6], [0.9, 1.8])
        rho = CoherenceMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
        cov = dense_cov_matrix(list(params), rho, 3, 3)
        z = rng.standard_normal(18)
        got = dense_loglik(z, cov)
        expect = multivariate_normal(mean=np.zeros(18), cov=cov.matrix).logpdf(z)
        assert got == pytest.approx(expect, rel=1e-10)

    def test_shape_mismatch(self):
        cov = DenseCov(matrix=np.eye(4), n1=2, n2=2, m=1)
        with pytest.raises(ValueError, match="entries"):
            dense_loglik(np.zeros(5), cov)


class TestCompareLikelihoods:
    def test_exact_agreement_over_25_random_trials(self, rng):
        for trial in range(25):
            m = int(rng.integers(1, 4))
            data = make_lattice(rng, m, 6, 6)
            params = make_params(rng.uniform(0.3, 3.0, m), rng.uniform(0.3, 3.0, m))
            rho = CoherenceMatrix(random_correlation(rng, m))
            rep = compare_likelihoods(data, params, rho)
            assert rep.exact and rep.passed
            assert rep.rel_discrepancy < 1e-10

    def test_constant_is_explicit(self, rng):
        data = make_lattice(rng, 2, 4, 4)
        params = make_params([1.0, 2.0], [1.0, 0.5])
        rep = compare_likelihoods(data, params, CoherenceMatrix(np.eye(2)))
        assert rep.constant == pytest.approx(0.5 * 32 * math.log(2 * math.pi * 16))
        assert rep.whittle + rep.constant == pytest.approx(rep.dense, rel=1e-10)

    def test_taper_flags_inexact_mode(self, rng):
        data = make_lattice(rng, 1, 6, 6)
        params = make_params([1.0], [1.0])
        rep = compare_likelihoods(data, params, CoherenceMatrix(np.eye(1)), taper_r=0.2)
        assert rep.exact is False
        assert rep.passed is None

    def test_single_and_identity_multivariate_paths_agree(self, rng):
        data = make_lattice(rng, 2, 5, 5)
        params = make_params([1.3, 0.8], [0.7, 1.9])
        joint = compare_likelihoods(data, params, CoherenceMatrix(np.eye(2)))
        parts = []
        for k in range(2):
            solo = MultiLattice(
                values=data.values[k : k + 1],
                labels=(data.labels[k],),
                delta=data.delta,
            )
            parts.append(compare_likelihoods(solo, (params[k],), CoherenceMatrix(np.eye(1))))
        assert joint.whittle == pytest.approx(sum(p.whittle for p in parts), rel=1e-12)
        assert joint.dense == pytest.approx(sum(p.dense for p in parts), rel=1e-12)

    def test_wrong_constant_shifts_by_half_mn_log_n(self, rng):
        data = make_lattice(rng, 1, 4, 4)
        params = make_params([1.0], [1.0])
        good = compare_likelihoods(data, params, CoherenceMatrix(np.eye(1)))
        bad = compare_likelihoods(
            data, params, CoherenceMatrix(np.eye(1)), wrong_constant=True
        )
        assert bad.passed is False
        shift = 0.5 * 16 * math.log(16)
        assert bad.abs_discrepancy == pytest.approx(shift, rel=1e-9)
        assert good.constant - bad.constant == pytest.approx(shift)

    def test_report_values_reproduce_components(self, rng):
        data = make_lattice(rng, 2, 4, 5)
        params = make_params([0.9, 1.4], [1.1, 0.6])
        rho = CoherenceMatrix(np.array([[1.0, -0.3], [-0.3, 1.0]]))
        rep = compare_likelihoods(data, params, rho)
        ctx = prepare_context(data, taper_r=0.0)
        assert rep.whittle == pytest.approx(whittle_loglik_mvt(ctx, params, rho), rel=1e-12)
        cov = dense_cov_matrix(list(params), rho, 4, 5)
        assert rep.dense == pytest.approx(
            dense_loglik(data.values.reshape(-1), cov), rel=1e-12
        )
