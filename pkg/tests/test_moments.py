"""Moment estimators: exact pairing oracle, Monte Carlo agreement, ratio machinery."""

import math

import numpy as np
import pytest

from bandmoment import moments as mo
from bandmoment.lattice import Lattice1D, covariance_profile
from bandmoment.sampler import gue_profile
from bandmoment.saddle import scaled_lambdas, sine_kernel


class TestWickExact:
    def test_single_site_closed_form(self):
        # E[(l1 - h)(l2 - h)] with Eh = 0, Eh^2 = 1
        prof = covariance_profile(Lattice1D(1), 1.0)
        for l1, l2 in ((0.3, -0.2), (1.1, 0.7), (0.0, 0.0)):
            assert mo.wick_exact_f2(1, l1, l2, prof) == pytest.approx(l1 * l2 + 1.0, abs=1e-14)

    def test_symmetry(self):
        prof = covariance_profile(Lattice1D(3), 2.0)
        rng = np.random.default_rng(2)
        for _ in range(5):
            l1, l2 = rng.uniform(-1.5, 1.5, 2)
            a = mo.wick_exact_f2(3, l1, l2, prof)
            b = mo.wick_exact_f2(3, l2, l1, prof)
            assert a == pytest.approx(b, rel=1e-12)

    def test_two_site_against_direct_isserlis(self):
        # independent oracle at n=2: det(l-H) = (l-a)(l-c) - |b|^2 with a, c
        # independent real Gaussians (different diagonal sites never pair) and
        # b an independent complex Gaussian with E|b|^2 = J01, E|b|^4 = 2 J01^2:
        #   E[det1 det2] = (l1 l2 + J00)(l1 l2 + J11)
        #                  - l1^2 J01 - l2^2 J01 + 2 J01^2
        prof = covariance_profile(Lattice1D(2), 1.0)
        j00, j11, j01 = prof.J[0, 0], prof.J[1, 1], prof.J[0, 1]
        l1, l2 = 0.5, -0.3
        expect = ((l1 * l2 + j00) * (l1 * l2 + j11)
                  - l1 * l1 * j01 - l2 * l2 * j01 + 2 * j01 ** 2)
        assert mo.wick_exact_f2(2, l1, l2, prof) == pytest.approx(expect, rel=1e-12)

    def test_guards(self):
        prof = covariance_profile(Lattice1D(1), 1.0)
        with pytest.raises(ValueError):
            mo.wick_exact_f2(4, 0.0, 0.0, prof)
        with pytest.raises(ValueError):
            mo.wick_exact_f2(2, 0.0, 0.0, prof)  # profile size mismatch


class TestMcF2:
    def test_single_site_band(self):
        est = mo.mc_f2("band", 1, 1.0, [0.3, -0.2], 200_000, 11)[(0, 1)]
        assert abs(est.value - 0.94) <= 4 * est.stderr
        assert est.rejected == 0
        assert est.in_log_domain

    def test_three_site_band_vs_oracle(self):
        prof = covariance_profile(Lattice1D(3), 2.0)
        exact = mo.wick_exact_f2(3, 0.4, -0.1, prof)
        est = mo.mc_f2("band", 3, 2.0, [0.4, -0.1], 200_000, 12)[(0, 1)]
        assert abs(est.value - exact) <= 4 * est.stderr

    def test_two_site_gue_profile_vs_oracle(self):
        # flat-variance profile: oracle from the pairing expansion, estimate
        # from the GUE sampler (E|H_ij|^2 = 1/n matches gue_profile)
        exact = mo.wick_exact_f2(2, 0.6, -0.4, gue_profile(2))
        est = mo.mc_f2("gue", 2, None, [0.6, -0.4], 2_000_000, 13)[(0, 1)]
        assert abs(est.value - exact) <= 4 * est.stderr
        assert est.stderr / abs(est.value) <= 0.02

    def test_diagonal_pairs_present(self):
        out = mo.mc_f2("band", 1, 1.0, [0.2, 0.7], 1000, 5)
        assert set(out) == {(0, 0), (0, 1), (1, 1)}
        assert out[(0, 0)].sign == 1 and out[(1, 1)].sign == 1

    def test_sample_guard(self):
        with pytest.raises(mo.EstimatorError):
            mo.mc_f2("band", 1, 1.0, [0.0], 1, 5)

    def test_thread_count_invariance(self):
        a = mo.mc_f2("band", 3, 2.0, [0.4, -0.1], 20_000, 77, threads=1)
        b = mo.mc_f2("band", 3, 2.0, [0.4, -0.1], 20_000, 77, threads=4)
        for key in a:
            assert a[key].value == b[key].value
            assert a[key].stderr == b[key].stderr


class TestD2:
    def test_coincident_pair_collapses(self):
        out = mo.mc_f2("band", 1, 1.0, [0.4, 0.4], 30_000, 21)
        dd = mo.d2(out[(0, 0)], out[(1, 1)])
        assert dd.value == pytest.approx(out[(0, 0)].value, rel=1e-12)

    def test_single_site_closed_form(self):
        # D2 = sqrt(1 + l1^2) sqrt(1 + l2^2) at one site
        l1, l2 = 0.8, -0.5
        out = mo.mc_f2("band", 1, 1.0, [l1, l2], 400_000, 22)
        dd = mo.d2(out[(0, 0)], out[(1, 1)])
        expect = math.sqrt(1 + l1 * l1) * math.sqrt(1 + l2 * l2)
        assert abs(dd.value - expect) <= 5 * dd.stderr
        assert dd.value > 0 and dd.stderr > 0

    def test_rejects_nonpositive(self):
        out = mo.mc_f2("band", 1, 1.0, [0.4, 0.4], 1000, 23)
        bad = mo.MomentEstimate(
            value=-1.0, stderr=0.1, samples=1000, in_log_domain=True, sign=-1,
            log_abs_value=0.0, log_abs_stderr=0.0)
        with pytest.raises(mo.EstimatorError):
            mo.d2(out[(0, 0)], bad)


class TestRatioVsSine:
    def test_coincident_xi_is_exactly_one(self):
        p = scaled_lambdas(0.0, 0.3, 0.3, 5)
        r = mo.ratio_vs_sine(p, "band", 2.0, 1000, 30)
        assert r.ratio == 1.0 and r.stderr == 0.0 and r.sine_ref == 1.0
        assert r.deviation == 0.0

    def test_exchange_symmetry_bitwise(self):
        pa = scaled_lambdas(0.0, 0.25, -0.25, 3)
        pb = scaled_lambdas(0.0, -0.25, 0.25, 3)
        ra = mo.ratio_vs_sine(pa, "band", 2.0, 20_000, 5)
        rb = mo.ratio_vs_sine(pb, "band", 2.0, 20_000, 5)
        assert ra.ratio == rb.ratio
        assert ra.stderr == rb.stderr
        assert ra.sine_ref == rb.sine_ref

    def test_estimator_is_real_valued(self):
        p = scaled_lambdas(0.5, 0.4, -0.2, 8)
        r = mo.ratio_vs_sine(p, "band", 3.0, 10_000, 31)
        assert isinstance(r.ratio, float) and math.isfinite(r.ratio)

    def test_single_site_ratio_matches_closed_form(self):
        # at one site everything is exact: F2/D2 = (l1 l2 + 1)/sqrt((1+l1^2)(1+l2^2))
        p = scaled_lambdas(0.0, 0.4, -0.3, 1)
        r = mo.ratio_vs_sine(p, "band", 1.0, 400_000, 33)
        expect = ((p.lambda1 * p.lambda2 + 1)
                  / math.sqrt((1 + p.lambda1**2) * (1 + p.lambda2**2)))
        assert abs(r.ratio - expect) <= 5 * r.stderr
        assert r.sine_ref == sine_kernel(p.xi1 - p.xi2)

    def test_moment_scan_matches_single_pairs(self):
        res = mo.moment_scan("band", 4, 2.0, 0.0, [(0.0, 0.0), (0.3, -0.3)], 5_000, 40)
        assert res[0].ratio == 1.0 and res[0].deviation == 0.0
        assert res[1].samples == 5_000
        assert math.isfinite(res[1].stderr) and res[1].stderr > 0
