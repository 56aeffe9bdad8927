import math

import numpy as np
import pytest

from models.data_types import PartitionLevels, PiecewisePath, PiStatus, QuadratureSpec
from processes.coefficients import CoefficientModel, MemoryRegime, ShortGenerator
from processes.scaling import LambdaRV
from rates.conjugates import conjugate_rl, finite_dim_rate, lambda_rl_conjugate, marginal_rate
from rates.cumulants import GaussianCumulant, HugeCumulant, NoiseCumulant, scenario_limit
from rates.gaussian import (
    GaussianRateMode,
    gaussian_rate_alpha,
    gaussian_rl_value,
    riesz_apply,
    riesz_gram,
    unit_cell_averages,
)
from rates.kernel import (
    KernelQuadrature,
    block_profiles,
    gaussian_sigma2,
    h_kernel,
    lambda_rl,
    marginal_variance_constant,
    riesz_constant,
    sigma2_closed_form,
)
from rates.paths import gamma_alpha_star, partition_rate, path_rate
from rates.pi_sets import pi_membership
from shared.errors import DomainError, InvalidArgumentError
from tests.helpers import geometric, kappa_oracle, long_memory, scenario, sigma2_oracle

ALPHA = 0.75
THETA = 2.0 * ALPHA - 1.0


def one_block(level: float) -> PartitionLevels:
    return PartitionLevels(times=[1.0], levels=[[level]])


class TestConstants:
    def test_sigma2_against_beta_function(self):
        assert gaussian_sigma2(ALPHA, 1.0, 0.0) == pytest.approx(sigma2_oracle(ALPHA), rel=1e-6)

    @pytest.mark.parametrize("alpha, p", [(0.6, 0.3), (0.75, 0.5), (0.9, 0.8)])
    def test_quadrature_matches_closed_form(self, alpha, p):
        assert gaussian_sigma2(alpha, p, 1.0 - p) == pytest.approx(
            sigma2_closed_form(alpha, p, 1.0 - p), rel=1e-8
        )

    def test_marginal_variance_constant(self):
        assert riesz_constant(THETA) == pytest.approx(8.0 / 3.0)
        assert marginal_variance_constant(ALPHA, 1.0, 0.0) == pytest.approx(kappa_oracle(ALPHA), rel=1e-6)
        assert marginal_variance_constant(1.0, 1.0, 0.0) == 1.0

    def test_alpha_outside_range(self):
        with pytest.raises(DomainError):
            gaussian_sigma2(0.5, 1.0, 0.0)
        with pytest.raises(DomainError):
            h_kernel(1.0, 1.0, 0.0, one_block(1.0), np.zeros(1))


class TestKernel:
    def test_profile_at_origin(self):
        # (1−α)∫_0^1 y^{−α} dy = 1
        assert block_profiles(ALPHA, 1.0, 0.0, [0.0, 1.0], np.array([0.0]))[0, 0] == pytest.approx(1.0)

    def test_profile_far_tail_has_power_decay(self):
        x = np.array([1e6, 1e8])
        g = block_profiles(ALPHA, 1.0, 0.0, [0.0, 1.0], x)[:, 0]
        # (1−α) x^{−α} to leading order
        np.testing.assert_allclose(g, (1.0 - ALPHA) * x**-ALPHA, rtol=1e-5)

    def test_profiles_add_over_blocks(self):
        x = np.linspace(-3.0, 2.0, 41)
        split = block_profiles(ALPHA, 0.6, 0.4, [0.0, 0.3, 1.0], x).sum(axis=1)
        whole = block_profiles(ALPHA, 0.6, 0.4, [0.0, 1.0], x)[:, 0]
        np.testing.assert_allclose(split, whole, rtol=1e-12, atol=1e-14)


class TestLambdaRl:
    def test_gaussian_one_block(self, gaussian):
        result = lambda_rl(NoiseCumulant(gaussian), ALPHA, 1.0, 0.0, one_block(1.0))
        assert result.value == pytest.approx(0.5 * kappa_oracle(ALPHA), rel=1e-6)
        assert "tail_bound_exceeds_tolerance" not in result.flags

    def test_agrees_with_gaussian_quadratic_form(self, gaussian):
        pl = PartitionLevels(times=[0.25, 0.6, 1.0], levels=[[1.0], [-0.5], [2.0]])
        quad = lambda_rl(NoiseCumulant(gaussian), ALPHA, 0.7, 0.3, pl).value
        exact = gaussian_rl_value(np.eye(1), ALPHA, 0.7, 0.3, pl)
        assert quad == pytest.approx(exact, rel=1e-6)

    def test_zero_levels(self, laplace):
        assert lambda_rl(NoiseCumulant(laplace), ALPHA, 1.0, 0.0, one_block(0.0)).value == 0.0

    def test_alpha_one_is_short_memory_sum(self, laplace):
        pl = PartitionLevels(times=[0.5, 1.0], levels=[[0.5], [-0.2]])
        expected = 0.5 * -math.log(0.75) + 0.5 * -math.log(0.96)
        assert lambda_rl(NoiseCumulant(laplace), 1.0, 1.0, 0.0, pl).value == pytest.approx(expected)

    def test_outside_domain(self, laplace):
        result = lambda_rl(NoiseCumulant(laplace), ALPHA, 1.0, 0.0, one_block(2.0))
        assert result.value == math.inf
        assert "outside_domain" in result.flags

    def test_truncated_tail_flags_loose_bound(self, gaussian):
        spec = QuadratureSpec(x_max=2.0, tail="truncate")
        result = lambda_rl(NoiseCumulant(gaussian), ALPHA, 1.0, 0.0, one_block(1.0), spec)
        assert "tail_bound_exceeds_tolerance" in result.flags
        assert result.tail_bound > 0.0

    def test_midpoint_convexity(self, rademacher):
        rng = np.random.default_rng(23)
        limit = NoiseCumulant(rademacher)
        times = [0.4, 1.0]
        for _ in range(6):
            a, b = rng.uniform(-3.0, 3.0, (2, 2, 1))
            left, right, middle = (
                lambda_rl(limit, ALPHA, 0.7, 0.3, PartitionLevels(times=times, levels=levels)).value
                for levels in (a, b, 0.5 * (a + b))
            )
            assert middle <= 0.5 * (left + right) + 1e-7 * (1.0 + left + right)

    def test_fixed_rule_matches_adaptive(self, laplace):
        pl = PartitionLevels(times=[0.5, 1.0], levels=[[0.4], [0.3]])
        limit = NoiseCumulant(laplace)
        rule = KernelQuadrature.build(ALPHA, 0.8, 0.2, pl.edges)
        adaptive = lambda_rl(limit, ALPHA, 0.8, 0.2, pl).value
        assert rule.value(limit, pl.levels) == pytest.approx(adaptive, rel=1e-4)

    def test_rule_gradient(self, rademacher):
        edges = np.array([0.0, 0.5, 1.0])
        limit = NoiseCumulant(rademacher)
        rule = KernelQuadrature.build(ALPHA, 1.0, 0.0, edges)
        levels = np.array([[0.7], [-0.4]])
        grad = rule.gradient(limit, levels)
        step = 1e-6
        for i in range(2):
            up, down = levels.copy(), levels.copy()
            up[i, 0] += step
            down[i, 0] -= step
            numeric = (rule.value(limit, up) - rule.value(limit, down)) / (2 * step)
            assert grad[i, 0] == pytest.approx(numeric, rel=1e-5)


class TestRiesz:
    def test_gram_total_mass(self):
        assert riesz_gram(THETA, 7).sum() == pytest.approx(riesz_constant(THETA), rel=1e-10)

    def test_gram_is_positive_definite(self):
        assert np.linalg.eigvalsh(riesz_gram(THETA, 64)).min() > 0.0

    def test_apply_to_constant(self):
        t = np.linspace(0.05, 0.95, 7)
        expected = (t ** (1 - THETA) + (1 - t) ** (1 - THETA)) / (1 - THETA)
        np.testing.assert_allclose(riesz_apply(THETA, np.ones(16), t), expected, rtol=1e-12)

    def test_bad_theta(self):
        with pytest.raises(InvalidArgumentError):
            riesz_gram(1.0, 4)


class TestGaussianRate:
    def test_unit_kernel_variational(self):
        sigma2 = gaussian_sigma2(ALPHA, 1.0, 0.0)
        expected = (8.0 / 3.0) / (2.0 * sigma2)
        h, phi = unit_cell_averages(THETA, 512)
        result = gaussian_rate_alpha(np.eye(1), ALPHA, phi, GaussianRateMode.VARIATIONAL)
        assert result.value == pytest.approx(expected, rel=1e-2)

    def test_closed_form_agrees_with_variational(self):
        h, phi = unit_cell_averages(THETA, 32)
        closed = gaussian_rate_alpha(np.eye(1), ALPHA, phi, GaussianRateMode.CLOSED_FORM, h=h)
        variational = gaussian_rate_alpha(np.eye(1), ALPHA, phi)
        assert closed.value == pytest.approx(variational.value, rel=1e-9)

    def test_closed_form_rejects_wrong_h(self):
        h, phi = unit_cell_averages(THETA, 8)
        with pytest.raises(InvalidArgumentError):
            gaussian_rate_alpha(np.eye(1), ALPHA, phi, GaussianRateMode.CLOSED_FORM, h=2.0 * h)

    def test_refinement_is_monotone(self):
        f = PiecewisePath(knots=[0.0, 0.25, 0.5, 0.75, 1.0], values=[0.0, 0.1, 0.5, 0.6, 1.2])
        values = [
            gaussian_rate_alpha(np.eye(1), ALPHA, f.cell_averages(m)).value for m in (4, 8, 16, 32, 64)
        ]
        for coarse, fine in zip(values[:-1], values[1:]):
            assert fine >= coarse * (1.0 - 1e-9)

    def test_degenerate_covariance(self):
        sigma = np.diag([1.0, 0.0])
        phi = np.tile([0.0, 1.0], (16, 1))
        result = gaussian_rate_alpha(sigma, ALPHA, phi)
        assert result.value == math.inf

    def test_alpha_one(self):
        phi = np.full((4, 1), 1.5)
        assert gaussian_rate_alpha(np.eye(1), 1.0, phi).value == pytest.approx(1.125)


class TestConjugates:
    def test_short_memory_partition_sum(self, gaussian):
        value = finite_dim_rate(NoiseCumulant(gaussian), [0.5, 1.0], np.array([[1.0], [0.0]]))
        # 0.5 · Λ*(2) + 0.5 · Λ*(0)
        assert value == pytest.approx(1.0)

    def test_huge_limit_matches_gaussian(self):
        huge = HugeCumulant(LambdaRV.isotropic(2.0, 0.5), 1)
        assert huge.conjugate(np.array([1.3])) == pytest.approx(0.5 * 1.3**2, rel=1e-7)

    def test_long_memory_gaussian_marginal(self, gaussian):
        s = scenario("R1", gaussian, long_memory())
        result = marginal_rate(s, 1.0)
        assert result.value == pytest.approx(1.0 / (2.0 * kappa_oracle(ALPHA)), rel=1e-3)

    def test_moderate_long_memory_marginal(self, gaussian):
        s = scenario("R3", gaussian, long_memory(), a_exponent=1.0, a_psi_power=0.0)
        kappa = marginal_variance_constant(ALPHA, 1.0, 0.0)
        assert marginal_rate(s, 2.0).value == pytest.approx(4.0 / (2.0 * kappa), rel=1e-10)

    def test_short_memory_marginal(self, laplace):
        s = scenario("S1", laplace, geometric())
        assert marginal_rate(s, 0.0).value == 0.0

    def test_young_fenchel_for_long_memory(self, laplace):
        limit = NoiseCumulant(laplace)
        pl = PartitionLevels(times=[0.5, 1.0], levels=[[0.3], [-0.2]])
        w = np.array([[0.2], [0.1]])
        conj = conjugate_rl(limit, ALPHA, 1.0, 0.0, pl.times, w).value
        assert float(np.sum(pl.levels * w)) <= lambda_rl(limit, ALPHA, 1.0, 0.0, pl).value + conj + 1e-5

    def test_lambda_rl_conjugate_alias(self, gaussian):
        pl = PartitionLevels(times=[1.0], levels=[[1.0]])
        value = lambda_rl_conjugate(gaussian, ALPHA, 1.0, 0.0, pl).value
        assert value == pytest.approx(1.0 / (2.0 * kappa_oracle(ALPHA)), rel=1e-3)

    def test_scenario_limits(self, gaussian):
        assert isinstance(scenario_limit(scenario("S1", gaussian, geometric())), NoiseCumulant)
        s3 = scenario("S3", gaussian, geometric(), a_exponent=0.75)
        assert isinstance(scenario_limit(s3), GaussianCumulant)


class TestPathRates:
    def test_short_memory_linear_path(self, gaussian):
        s = scenario("S1", gaussian, geometric())
        assert path_rate(s, PiecewisePath.linear([1.5])).value == pytest.approx(1.125)

    def test_path_must_start_at_origin(self, gaussian):
        s = scenario("S1", gaussian, geometric())
        f = PiecewisePath(knots=[0.0, 1.0], values=[0.1, 1.0])
        assert path_rate(s, f).value == math.inf

    def test_kernel_rule_agrees_with_quadratic_program(self, gaussian):
        f = PiecewisePath(knots=[0.0, 0.5, 1.0], values=[0.0, 0.8, 0.6])
        phi = f.cell_averages(8)
        via_noise = gamma_alpha_star(NoiseCumulant(gaussian), ALPHA, 1.0, 0.0, phi).value
        via_quadratic = gamma_alpha_star(GaussianCumulant(np.eye(1)), ALPHA, 1.0, 0.0, phi).value
        assert via_noise == pytest.approx(via_quadratic, rel=1e-3)

    def test_partition_rate_bounds_path_rate_from_below(self, gaussian):
        s = scenario("R1", gaussian, long_memory())
        f = PiecewisePath(knots=[0.0, 0.5, 1.0], values=[0.0, 1.0, 0.5])
        full = path_rate(s, f, m=32)
        lower = partition_rate(s, f, [0.5, 1.0])
        assert lower.value <= full.value * (1.0 + 1e-4)
        assert [m for m, _ in full.refinement_trace] == [8, 16, 32]
        trace = [v for _, v in full.refinement_trace]
        assert trace[-1] >= trace[0] * (1.0 - 1e-6)


class TestPiSets:
    def test_boundary_is_a_domain_violation(self, laplace):
        coeffs = long_memory(radius=256, p=0.5)
        verdict = pi_membership(laplace, coeffs, one_block(2.0), n_max=8, j_max=16)
        assert verdict.status == PiStatus.DOMAIN_VIOLATION

    def test_full_domain(self, gaussian):
        verdict = pi_membership(gaussian, long_memory(radius=256), one_block(50.0), n_max=8, j_max=16)
        assert verdict.status == PiStatus.FEASIBLE

    def test_signed_short_filter_leaves_domain(self, laplace):
        coeffs = CoefficientModel(
            regime=MemoryRegime.SHORT, radius=4, generator=ShortGenerator.FINITE_SUPPORT,
            weights=[2.0, -1.0],
        )
        verdict = pi_membership(laplace, coeffs, one_block(0.6), n_max=4, j_max=8)
        assert verdict.status == PiStatus.INFEASIBLE
        assert (verdict.n, verdict.j) == (1, -1)

    def test_one_sided_long_memory_leaves_domain(self, laplace):
        verdict = pi_membership(laplace, long_memory(radius=256), one_block(5.0), n_max=4, j_max=8)
        assert verdict.status == PiStatus.INFEASIBLE
        assert (verdict.n, verdict.j) == (1, -1)

    def test_feasible_over_probed_range(self, laplace):
        verdict = pi_membership(laplace, long_memory(radius=256), one_block(0.5), n_max=16, j_max=64)
        assert verdict.status == PiStatus.FEASIBLE
        assert 0.0 < verdict.sup_value < math.inf
        assert (verdict.n_max, verdict.j_max) == (16, 64)

    def test_invalid_range(self, laplace):
        with pytest.raises(InvalidArgumentError):
            pi_membership(laplace, long_memory(radius=16), one_block(0.1), n_max=0, j_max=4)
