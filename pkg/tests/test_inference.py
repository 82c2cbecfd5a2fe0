import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latspec.inference import (
    CondCoefSummary,
    DependenceGraph,
    build_graph,
    cond_coefficients,
    export_graph,
    read_coefficients_csv,
    summarize_chain,
    write_coefficients_csv,
    write_curves_csv,
)
from latspec.sampler import PosteriorChain
from latspec.spectrum import QuasiMaternParams, cov_curve, fourier_grid
from tests.conftest import random_correlation


def cov2corr(mat):
    d = 1 / np.sqrt(np.diag(mat))
    return d[:, None] * mat * d[None, :]


def make_chain(alpha, sigma2, rho, pairs, labels=None, **extra):
    d = alpha.shape[0]
    return PosteriorChain(
        alpha=alpha,
        sigma2=sigma2,
        rho=rho,
        s2=np.ones(d),
        nu0=np.full(d, 2, dtype=int),
        sigma02=np.ones(d),
        pairs=pairs,
        labels=labels,
        **extra,
    )


def coef_summary(target, regressor, lo, hi, level=0.95):
    return CondCoefSummary(
        target=target,
        regressor=regressor,
        mean=(lo + hi) / 2,
        lo=lo,
        hi=hi,
        level=level,
    )


class TestCondCoefficients:
    def test_two_element_coefficient_is_rho(self):
        rho = np.array([[1.0, 0.35], [0.35, 1.0]])
        assert cond_coefficients(rho, 0)[0] == pytest.approx(0.35)
        assert cond_coefficients(rho, 1)[0] == pytest.approx(0.35)

    def test_identity_gives_zeros(self):
        np.testing.assert_array_equal(cond_coefficients(np.eye(4), 2), np.zeros(3))

    def test_identity_minor_passes_through(self):
        rho = np.array([[1.0, 0.5, 0.5], [0.5, 1.0, 0.0], [0.5, 0.0, 1.0]])
        np.testing.assert_allclose(cond_coefficients(rho, 0), [0.5, 0.5], rtol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 6))
    @settings(max_examples=40, deadline=None)
    def test_matches_negated_precision_row(self, seed, m):
        rho = random_correlation(np.random.default_rng(seed), m)
        prec = np.linalg.inv(rho)
        for j in range(m):
            others = [k for k in range(m) if k != j]
            expect = -prec[j, others] / prec[j, j]
            np.testing.assert_allclose(cond_coefficients(rho, j), expect, atol=1e-10)

    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 6))
    @settings(max_examples=40, deadline=None)
    def test_directed_pairs_share_sign(self, seed, m):
        rho = random_correlation(np.random.default_rng(seed), m)
        beta = {j: cond_coefficients(rho, j) for j in range(m)}
        for i in range(m):
            for j in range(i + 1, m):
                fwd = beta[i][j - 1]  # regressor j seen from target i
                rev = beta[j][i]  # regressor i seen from target j
                assert fwd * rev >= -1e-12

    def test_zero_iff_precision_zero(self):
        # correlation built from a sparse precision: the (0, 2) and (1, 3)
        # zeros must reappear exactly as zero coefficients
        prec = np.array(
            [
                [2.0, -0.7, 0.0, 0.5],
                [-0.7, 2.0, -0.6, 0.0],
                [0.0, -0.6, 2.0, -0.4],
                [0.5, 0.0, -0.4, 2.0],
            ]
        )
        np.linalg.cholesky(prec)
        rho = cov2corr(np.linalg.inv(prec))
        for j, k_col, other in [(0, 1, 2), (2, 0, 1), (1, 2, 0), (3, 1, 0)]:
            beta = cond_coefficients(rho, j)
            assert beta[k_col] == pytest.approx(0.0, abs=1e-12)
            assert abs(beta[other]) > 1e-3

    def test_batch_matches_loop(self, rng):
        batch = np.stack([random_correlation(rng, 3) for _ in range(6)])
        got = cond_coefficients(batch, 1)
        for d in range(6):
            np.testing.assert_allclose(got[d], cond_coefficients(batch[d], 1), rtol=1e-12)


class TestSummarizeChain:
    def test_single_repeated_draw_collapses_bands(self):
        d = 7
        chain = make_chain(
            alpha=np.full((d, 2), 1.3),
            sigma2=np.column_stack([np.full(d, 1.0), np.full(d, 2.0)]),
            rho=np.full((d, 1), 0.4),
            pairs=((0, 1),),
            labels=("A", "B"),
        )
        s = summarize_chain(chain, fourier_grid(8, 8))
        assert len(s.curves) == 3
        for c in s.curves:
            np.testing.assert_allclose(c.lo, c.mean, rtol=1e-12)
            np.testing.assert_allclose(c.hi, c.mean, rtol=1e-12)
        for c in s.coefficients:
            assert c.lo == pytest.approx(c.mean) and c.hi == pytest.approx(c.mean)

    def test_two_element_coefficients_are_rho_quantiles(self, rng):
        d = 400
        rho_draws = rng.uniform(0.2, 0.8, size=(d, 1))
        chain = make_chain(
            alpha=np.abs(rng.normal(1, 0.1, size=(d, 2))) + 0.1,
            sigma2=np.abs(rng.normal(1, 0.1, size=(d, 2))) + 0.1,
            rho=rho_draws,
            pairs=((0, 1),),
            labels=("A", "B"),
        )
        s = summarize_chain(chain, fourier_grid(8, 8))
        c = next(x for x in s.coefficients if x.target == "A")
        assert c.regressor == "B"
        assert c.mean == pytest.approx(rho_draws.mean(), rel=1e-12)
        assert c.lo == pytest.approx(np.quantile(rho_draws, 0.025), rel=1e-9)
        assert c.hi == pytest.approx(np.quantile(rho_draws, 0.975), rel=1e-9)

    def test_curves_match_per_draw_reference(self, rng):
        # spot-check the vectorized curve pipeline against one cov_curve
        # call per draw on both a marginal and a cross pair
        d = 24
        alpha = rng.uniform(0.5, 2.0, size=(d, 2))
        sigma2 = rng.uniform(0.5, 2.5, size=(d, 2))
        rho = rng.uniform(-0.6, 0.6, size=(d, 1))
        grid = fourier_grid(10, 12, delta=0.5)
        chain = make_chain(
            alpha=alpha, sigma2=sigma2, rho=rho, pairs=((0, 1),), labels=("A", "B")
        )
        s = summarize_chain(chain, grid, lag_max=4)
        lags = [(h, 0) for h in range(5)]

        def draws_for(a, b, rcol):
            out = np.empty((d, 5))
            for t in range(d):
                pa = QuasiMaternParams(sigma2=sigma2[t, a], alpha=alpha[t, a], delta=0.5)
                pb = QuasiMaternParams(sigma2=sigma2[t, b], alpha=alpha[t, b], delta=0.5)
                out[t] = cov_curve(pa, pb, rcol[t], grid, lags)
            return out

        marg = draws_for(0, 0, np.ones(d))
        curve_a = s.curves[0]
        assert curve_a.pair == ("A", "A") and curve_a.is_marginal
        np.testing.assert_allclose(curve_a.mean, marg.mean(axis=0), rtol=1e-10)
        np.testing.assert_allclose(curve_a.lo, np.quantile(marg, 0.025, axis=0), rtol=1e-10)

        cross = draws_for(0, 1, rho[:, 0])
        curve_ab = s.curves[2]
        assert curve_ab.pair == ("A", "B") and not curve_ab.is_marginal
        np.testing.assert_allclose(curve_ab.mean, cross.mean(axis=0), rtol=1e-10)
        np.testing.assert_allclose(curve_ab.hi, np.quantile(cross, 0.975, axis=0), rtol=1e-10)
        np.testing.assert_allclose(curve_ab.distance, 0.5 * np.arange(5))

    def test_default_lag_max_is_half_min_dimension(self, rng):
        chain = make_chain(
            alpha=np.full((3, 1), 1.0),
            sigma2=np.full((3, 1), 1.0),
            rho=np.empty((3, 0)),
            pairs=(),
        )
        s = summarize_chain(chain, fourier_grid(12, 9))
        assert len(s.curves) == 1
        np.testing.assert_array_equal(s.curves[0].lags, np.arange(5))

    def test_validation_errors(self, rng):
        chain = make_chain(
            alpha=np.full((3, 1), 1.0),
            sigma2=np.full((3, 1), 1.0),
            rho=np.empty((3, 0)),
            pairs=(),
        )
        grid = fourier_grid(8, 8)
        with pytest.raises(ValueError, match="level"):
            summarize_chain(chain, grid, level=1.0)
        with pytest.raises(ValueError, match="lag_max"):
            summarize_chain(chain, grid, lag_max=8)
        with pytest.raises(ValueError, match="labels"):
            summarize_chain(chain, grid, labels=("A", "B"))
        empty = make_chain(
            alpha=np.empty((0, 1)),
            sigma2=np.empty((0, 1)),
            rho=np.empty((0, 0)),
            pairs=(),
        )
        with pytest.raises(ValueError, match="no stored draws"):
            summarize_chain(empty, grid)


class TestBuildGraph:
    def test_all_intervals_spanning_zero_empty_graph(self):
        coefs = [
            coef_summary("A", "B", -0.2, 0.3),
            coef_summary("B", "A", -0.1, 0.4),
        ]
        g = build_graph(coefs, ("A", "B"))
        assert g.edges == ()

    def test_positive_pair_yields_plus_edge(self):
        coefs = [
            coef_summary("A", "B", 0.4, 0.6),
            coef_summary("B", "A", 0.3, 0.5),
        ]
        g = build_graph(coefs, ("A", "B"))
        assert g.edges == ((0, 1, "+"),)

    def test_negative_pair_yields_minus_edge(self):
        coefs = [
            coef_summary("A", "B", -0.6, -0.4),
            coef_summary("B", "A", -0.5, -0.3),
        ]
        g = build_graph(coefs, ("A", "B"))
        assert g.edges == ((0, 1, "-"),)

    def test_both_directions_required(self):
        coefs = [
            coef_summary("A", "B", 0.4, 0.6),
            coef_summary("B", "A", -0.1, 0.5),  # spans zero
        ]
        g = build_graph(coefs, ("A", "B"))
        assert g.edges == ()

    def test_missing_direction_means_no_edge(self):
        g = build_graph([coef_summary("A", "B", 0.4, 0.6)], ("A", "B"))
        assert g.edges == ()

    def test_sign_disagreement_warns_and_omits(self, caplog):
        coefs = [
            coef_summary("A", "B", 0.4, 0.6),
            coef_summary("B", "A", -0.6, -0.4),
        ]
        with caplog.at_level(logging.WARNING, logger="latspec.inference"):
            g = build_graph(coefs, ("A", "B"))
        assert g.edges == ()
        assert any("sign disagreement" in rec.message for rec in caplog.records)

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="outside labels"):
            build_graph([coef_summary("A", "Z", 0.4, 0.6)], ("A", "B"))

    def test_multi_element_mixed_edges(self):
        coefs = [
            coef_summary("A", "B", 0.2, 0.5),
            coef_summary("B", "A", 0.1, 0.4),
            coef_summary("A", "C", -0.5, -0.2),
            coef_summary("C", "A", -0.4, -0.1),
            coef_summary("B", "C", -0.2, 0.3),
            coef_summary("C", "B", -0.1, 0.2),
        ]
        g = build_graph(coefs, ("A", "B", "C"))
        assert g.edges == ((0, 1, "+"), (0, 2, "-"))


class TestExportGraph:
    def test_empty_graph_isolated_nodes(self):
        labels = ("As", "Cr", "Fe", "Ni", "Zn")
        text = export_graph(DependenceGraph(labels=labels, edges=(), level=0.95))
        lines = text.splitlines()
        assert lines[0] == "graph dependence {"
        assert lines[-1] == "}"
        for lab in labels:
            assert f'  "{lab}";' in lines
        assert not any("--" in ln for ln in lines)

    def test_single_edge_rendering(self):
        g = DependenceGraph(labels=("A", "B"), edges=((0, 1, "+"),), level=0.95)
        text = export_graph(g)
        edge_lines = [ln for ln in text.splitlines() if "--" in ln]
        assert edge_lines == ['  "A" -- "B" [label="+"];']

    def test_deterministic_output(self):
        g = DependenceGraph(
            labels=("A", "B", "C"),
            edges=((1, 2, "-"), (0, 1, "+")),
            level=0.95,
        )
        a = export_graph(g)
        b = export_graph(g)
        assert a == b
        # edges are emitted sorted regardless of construction order
        idx_ab = a.index('"A" -- "B"')
        idx_bc = a.index('"B" -- "C"')
        assert idx_ab < idx_bc

    def test_writes_file(self, tmp_path):
        g = DependenceGraph(labels=("A", "B"), edges=((0, 1, "-"),), level=0.95)
        out = tmp_path / "sub" / "graph.dot"
        text = export_graph(g, out)
        assert out.read_text() == text


class TestCsvIO:
    def _summary(self, rng):
        d = 50
        chain = make_chain(
            alpha=np.abs(rng.normal(1, 0.2, size=(d, 2))) + 0.2,
            sigma2=np.abs(rng.normal(1, 0.2, size=(d, 2))) + 0.2,
            rho=rng.uniform(0.3, 0.6, size=(d, 1)),
            pairs=((0, 1),),
            labels=("Fe", "Ni"),
        )
        return summarize_chain(chain, fourier_grid(8, 8, delta=2.0), lag_max=3)

    def test_curves_csv_layout(self, rng, tmp_path):
        s = self._summary(rng)
        path = tmp_path / "curves.csv"
        write_curves_csv(s.curves, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "pair,lag,mean,lo,hi"
        assert len(lines) == 1 + 3 * 4  # three pairs, four lags each
        first = lines[1].split(",")
        assert first[0] == "Fe"
        # lag column carries physical distance: delta = 2 per grid step
        assert [row.split(",")[1] for row in lines[1:5]] == ["0.0", "2.0", "4.0", "6.0"]
        cross = [ln for ln in lines[1:] if ln.startswith("Fe:Ni")]
        assert len(cross) == 4
        got = float(lines[1].split(",")[2])
        assert got == pytest.approx(s.curves[0].mean[0], rel=1e-15)

    def test_coefficients_round_trip(self, rng, tmp_path):
        s = self._summary(rng)
        path = tmp_path / "coefs.csv"
        write_coefficients_csv(s.coefficients, path)
        back, labels = read_coefficients_csv(path)
        assert labels == ("Fe", "Ni")
        assert len(back) == len(s.coefficients)
        for got, want in zip(back, s.coefficients):
            assert (got.target, got.regressor) == (want.target, want.regressor)
            assert got.mean == want.mean  # repr round-trip is exact
            assert got.lo == want.lo and got.hi == want.hi

    def test_read_rejects_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("target,regressor,mean\nA,B,0.5\n")
        with pytest.raises(ValueError, match="expected columns"):
            read_coefficients_csv(path)
