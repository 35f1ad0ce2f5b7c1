"""Ensemble sampling: determinism, Hermiticity, entry covariances, spectra."""

import numpy as np
import pytest

from bandmoment import charpoly as cp
from bandmoment import sampler as sm
from bandmoment.lattice import Lattice1D, covariance_profile
from bandmoment.saddle import semicircle_cdf


class TestRngStream:
    def test_pure_function_of_seed_and_index(self):
        a = sm.RngStream(123, 5).generator().standard_normal(4)
        b = sm.RngStream(123, 5).generator().standard_normal(4)
        c = sm.RngStream(123, 6).generator().standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_at_rekeys_index(self):
        s = sm.RngStream(9)
        assert s.at(3) == sm.RngStream(9, 3)

    def test_index_bounds(self):
        with pytest.raises(ValueError):
            sm.RngStream(1, -1)


class TestSampleRbm:
    def test_deterministic_and_hermitian(self):
        prof = covariance_profile(Lattice1D(11), 2.0)
        s = sm.RngStream(42, 7)
        H1 = sm.sample_rbm(prof, s)
        H2 = sm.sample_rbm(prof, s)
        assert np.array_equal(H1, H2)
        assert np.array_equal(H1, H1.conj().T)
        assert np.abs(H1.diagonal().imag).max() == 0.0

    def test_single_site_variance(self):
        prof = covariance_profile(Lattice1D(1), 1.0)
        vals = np.array([sm.sample_rbm(prof, sm.RngStream(5, i))[0, 0].real
                         for i in range(0, 100_000, 1)])
        assert 0.97 <= vals.var() <= 1.03

    def test_entry_covariances(self):
        # E|H_ij|^2 = J_ij and E[H_ij^2] = 0 within 4 standard errors
        prof = covariance_profile(Lattice1D(11), 2.0)
        n_samp = 100_000
        H = sm.sample_batch("band", 11, prof, sm.RngStream(8, 0), n_samp)
        abs2 = (np.abs(H) ** 2).mean(axis=0)
        sq = (H * H).mean(axis=0)
        for i in range(11):
            for j in range(11):
                x = np.abs(H[:, i, j]) ** 2
                se = x.std(ddof=1) / np.sqrt(n_samp)
                assert abs(abs2[i, j] - prof.J[i, j]) <= 4 * se
                if i != j:
                    se2 = (H[:, i, j] ** 2).real.std(ddof=1) / np.sqrt(n_samp)
                    assert abs(sq[i, j].real) <= 4 * se2
                    assert abs(sq[i, j].imag) <= 4 * se2


class TestSampleGue:
    def test_single_site_variance(self):
        vals = np.array([sm.sample_gue(1, sm.RngStream(3, i))[0, 0].real
                         for i in range(50_000)])
        assert abs(vals.var() - 1.0) <= 4 * np.sqrt(2.0 / 50_000)

    def test_trace_of_square(self):
        # E[Tr H^2] = sum of entry variances = n
        n, n_samp = 20, 10_000
        H = sm.sample_batch("gue", n, None, sm.RngStream(17, 0), n_samp)
        tr2 = np.einsum("bij,bji->b", H, H).real
        se = tr2.std(ddof=1) / np.sqrt(n_samp)
        assert abs(tr2.mean() - n) <= 4 * se

    def test_profile_rows_sum_to_one(self):
        prof = sm.gue_profile(5)
        assert np.allclose(prof.J.sum(axis=1), 1.0)


@pytest.mark.slow
def test_band_spectrum_matches_semicircle():
    # pooled counting measure vs semicircle CDF: Kolmogorov distance <= 0.02
    n_dim, W, n_samp = 1000, 100.0, 20
    prof = covariance_profile(Lattice1D(n_dim), W)
    grid = np.linspace(-3.0, 3.0, 1201)
    pooled = np.zeros(len(grid), dtype=np.int64)
    for i in range(n_samp):
        H = sm.sample_rbm(prof, sm.RngStream(2025, i))
        T = cp.tridiagonalize(H)
        pooled += cp.count_below_many(T.d[None, :], T.e[None, :] ** 2, grid)[0]
    emp = pooled / (n_samp * n_dim)
    ks = np.abs(emp - semicircle_cdf(grid)).max()
    assert ks <= 0.02
    # counting measure at the band center: half the spectrum lies below 0
    frac = emp[np.searchsorted(grid, 0.0)]
    assert abs(frac - 0.5) <= 0.01
