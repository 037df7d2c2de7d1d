import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enlca.features import (
    ProjectionMatrix,
    kernel_estimate,
    kernel_estimates,
    kernel_exact,
    kernel_variance_empirical,
    kernel_variance_theory,
    phi,
    sample_projection,
)
from enlca.matrices import NumericError, RngSpec, ShapeError, gaussian_sample


def unit_vector(c, scale=1.0):
    u = np.zeros(c)
    u[0] = scale
    return u


class TestSampleProjection:
    def test_deterministic(self):
        spec = RngSpec(17, 3)
        a = sample_projection(spec, 6, 9, orthogonal=True)
        b = sample_projection(spec, 6, 9, orthogonal=True)
        assert np.array_equal(a.f, b.f)

    def test_iid_matches_plain_gaussian_stream(self):
        spec = RngSpec(21)
        assert np.array_equal(sample_projection(spec, 5, 4).f, gaussian_sample(spec, 5, 4))

    def test_orthogonal_rows_m_below_c(self):
        proj = sample_projection(RngSpec(1), 4, 8, orthogonal=True)
        gram = proj.f @ proj.f.T
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() < 1e-9

    def test_orthogonal_blocks_m_above_c(self):
        proj = sample_projection(RngSpec(2), 12, 4, orthogonal=True)
        for start in range(0, 12, 4):
            block = proj.f[start:start + 4]
            gram = block @ block.T
            off = gram - np.diag(np.diag(gram))
            assert np.abs(off).max() < 1e-9

    def test_row_norm_distribution(self):
        # E|g|^2 = c for a standard Gaussian c-vector; the orthogonal
        # construction must preserve that.
        c = 8
        total = 0.0
        for seed in range(10_000):
            f = sample_projection(RngSpec(40, seed), c, c, orthogonal=True).f
            total += (f * f).sum() / c
        mean_sq_norm = total / 10_000
        assert abs(mean_sq_norm - c) / c < 0.02

    def test_bad_shape(self):
        with pytest.raises(ShapeError):
            sample_projection(RngSpec(0), 0, 4)


class TestPhi:
    def test_zero_column_is_uniform(self):
        proj = sample_projection(RngSpec(3), 16, 5)
        out = phi(proj, np.zeros((5, 1)))
        assert np.array_equal(out.values, np.full((16, 1), 1.0 / 4.0))
        assert out.log_shift == 0.0

    def test_entries_strictly_positive(self):
        proj = sample_projection(RngSpec(4), 32, 6)
        u = gaussian_sample(RngSpec(5), 6, 10)
        assert (phi(proj, u).values > 0).all()

    def test_shift_is_max_projection(self):
        proj = sample_projection(RngSpec(6), 8, 3)
        u = gaussian_sample(RngSpec(7), 3, 4)
        assert phi(proj, u).log_shift == (proj.f @ u).max()

    def test_channel_mismatch(self):
        proj = sample_projection(RngSpec(0), 4, 3)
        with pytest.raises(ShapeError):
            phi(proj, np.zeros((5, 2)))

    def test_projection_overflow_names_column(self):
        # finite but absurd magnitudes overflow F @ u itself, which the
        # shared shift cannot repair
        proj = ProjectionMatrix(
            f=np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]),
            orthogonal=False,
            rng=RngSpec(0),
        )
        u = np.ones((3, 2))
        u[:, 1] = 1e308
        with pytest.raises(NumericError, match="column 1"):
            phi(proj, u)

    def test_monte_carlo_unbiasedness_at_e(self):
        # mean of phi(q) . phi(k) over independent projections approaches
        # exp(q . k) = e for aligned unit vectors.
        u = unit_vector(4)
        est = kernel_estimates(u, u, m=8, trials=100_000, rng=RngSpec(51))
        assert abs(est.mean() - math.e) / math.e < 0.01


class TestKernelExact:
    def test_zero(self):
        assert kernel_exact([0.0, 0.0], [0.0, 0.0]) == 1.0

    def test_unit_inner_product(self):
        assert abs(kernel_exact([1.0, 0.0], [1.0, 0.0]) - math.e) < 1e-12

    def test_amplified_alignment(self):
        u = unit_vector(3, math.sqrt(6.0))
        assert abs(kernel_exact(u, u) - math.exp(6.0)) < 1e-9
        assert round(kernel_exact(u, u), 4) == 403.4288

    def test_overflow_rejected(self):
        big = np.full(4, 500.0)
        with pytest.raises(NumericError):
            kernel_exact(big, big)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            kernel_exact([1.0], [1.0, 2.0])


class TestVarianceTheory:
    def test_origin_is_zero(self):
        z = np.zeros(5)
        for m in (1, 4, 128):
            assert kernel_variance_theory(z, z, m) == 0.0

    def test_inverse_m_scaling_is_exact(self):
        q = np.array([0.3, -0.1, 0.7])
        k = np.array([0.2, 0.4, -0.5])
        assert kernel_variance_theory(q, k, 256) == kernel_variance_theory(q, k, 128) / 2

    def test_closed_form_on_aligned_units(self):
        u = unit_vector(6)
        for m in (8, 32):
            expected = math.e**2 * (math.e**4 - 1) / m
            assert abs(kernel_variance_theory(u, u, m) - expected) < 1e-9

    def test_strictly_increasing_in_amplification(self):
        values = [
            kernel_variance_theory(unit_vector(8, math.sqrt(k)), unit_vector(8, math.sqrt(k)), 128)
            for k in (1, 2, 4, 6, 8)
        ]
        assert all(lo < hi for lo, hi in zip(values, values[1:]))


class TestKernelEstimates:
    def test_estimate_matches_phi_route(self):
        q = gaussian_sample(RngSpec(61), 5, 1)[:, 0]
        k = gaussian_sample(RngSpec(62), 5, 1)[:, 0]
        rng = RngSpec(63)
        fast = kernel_estimates(q, k, m=16, trials=1, rng=rng)[0]
        via_phi = kernel_estimate(sample_projection(rng.stream(1), 16, 5), q, k)
        assert abs(fast - via_phi) / via_phi < 1e-10

    def test_strict_positivity(self):
        q = gaussian_sample(RngSpec(64), 6, 1)[:, 0]
        k = -q  # estimates a kernel value below 1
        est = kernel_estimates(q, k, m=4, trials=500, rng=RngSpec(65))
        assert (est > 0).all()

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 16))
    def test_positivity_property(self, seed, m):
        q = gaussian_sample(RngSpec(seed), 4, 1)[:, 0]
        k = gaussian_sample(RngSpec(seed, 1), 4, 1)[:, 0]
        est = kernel_estimates(q, k, m=m, trials=3, rng=RngSpec(seed, 2))
        assert (est > 0).all()

    def test_unbiased_within_three_standard_errors(self):
        for pair_seed in (101, 102, 103):
            base = RngSpec(pair_seed)
            gen = base.generator()
            q = gen.standard_normal(6)
            q /= np.linalg.norm(q)
            k = gen.standard_normal(6)
            k /= np.linalg.norm(k)
            est = kernel_estimates(q, k, m=8, trials=20_000, rng=base)
            se = est.std(ddof=1) / math.sqrt(est.size)
            assert abs(est.mean() - kernel_exact(q, k)) <= 3 * se


class TestVarianceEmpirical:
    def test_deterministic_at_origin(self):
        z = np.zeros(4)
        report = kernel_variance_empirical(z, z, m=8, trials=50, rng=RngSpec(1))
        assert report.empirical == 0.0
        assert report.theoretical == 0.0

    def test_matches_theory_at_half_norm(self):
        u = unit_vector(8, 0.5)
        report = kernel_variance_empirical(u, u, m=32, trials=100_000, rng=RngSpec(123))
        assert report.rel_gap < 0.05

    def test_orthogonal_beats_iid_smoke(self):
        # Small paired smoke check; the 100-pair version runs in the
        # acceptance suite.
        u = unit_vector(64, 0.5)
        wins = 0
        trials = 1500
        for pair in range(10):
            base = RngSpec(77).stream(pair * (trials + 1))
            iid = kernel_variance_empirical(u, u, 16, trials, base, orthogonal=False)
            ortho = kernel_variance_empirical(u, u, 16, trials, base, orthogonal=True)
            wins += ortho.empirical <= iid.empirical
        assert wins >= 8

    def test_requires_two_trials(self):
        with pytest.raises(ValueError):
            kernel_variance_empirical(np.ones(3), np.ones(3), 4, 1, RngSpec(0))
