import math

import numpy as np
import pytest

from processes.noise import (
    DomainStatus,
    NoiseKind,
    NoiseModel,
    covariance,
    domain_is_full,
    domain_query,
    gradient,
    legendre,
    logmgf,
    sample,
    tilt,
)
from shared.errors import ConfigurationError, DomainError, InvalidArgumentError
from shared.streams import make_stream


class TestLogMgf:
    def test_gaussian(self, gaussian):
        assert logmgf(gaussian, 2.0) == pytest.approx(2.0)

    def test_full_covariance(self):
        model = NoiseModel(kind=NoiseKind.GAUSSIAN_FULL, dim=2, sigma=[[2.0, 0.5], [0.5, 1.0]])
        lam = np.array([1.0, -2.0])
        assert logmgf(model, lam) == pytest.approx(0.5 * lam @ model.sigma @ lam)

    def test_rademacher(self, rademacher):
        assert logmgf(rademacher, 0.7) == pytest.approx(math.log(math.cosh(0.7)))
        assert logmgf(rademacher, 800.0) == pytest.approx(800.0 - math.log(2.0))

    def test_laplace_inside_and_outside(self, laplace):
        assert logmgf(laplace, 0.5) == pytest.approx(-math.log(0.75))
        assert logmgf(laplace, 1.0) == math.inf
        assert logmgf(laplace, -3.0) == math.inf

    def test_uniform(self, uniform):
        assert logmgf(uniform, 0.7) == pytest.approx(math.log(math.sinh(1.4) / 1.4))
        assert logmgf(uniform, 1e-5) == pytest.approx((2e-5) ** 2 / 6.0, rel=1e-6)

    def test_vectorized(self, laplace):
        values = logmgf(laplace, np.array([[0.0], [0.5], [2.0]]))
        assert values.shape == (3,)
        assert values[0] == 0.0
        assert values[2] == math.inf

    @pytest.mark.parametrize(
        "model, direction",
        [
            (NoiseModel(kind=NoiseKind.RADEMACHER), [1.0]),
            (NoiseModel(kind=NoiseKind.LAPLACE, scale=0.5), [-1.0]),
            (NoiseModel(kind=NoiseKind.UNIFORM_SYMMETRIC, halfwidth=2.0), [1.0]),
            (NoiseModel(kind=NoiseKind.RADEMACHER, dim=2), [0.6, 0.8]),
        ],
    )
    def test_quadratic_at_origin(self, model, direction):
        u = np.asarray(direction)
        constant = 0.5 * float(u @ covariance(model) @ u)
        coarse = logmgf(model, 1e-2 * u) / 1e-4
        fine = logmgf(model, 1e-3 * u) / 1e-6
        assert fine == pytest.approx(constant, rel=1e-5)
        assert abs(fine - constant) < abs(coarse - constant)

    @pytest.mark.parametrize(
        "model, lam_range",
        [
            (NoiseModel(kind=NoiseKind.RADEMACHER), 30.0),
            (NoiseModel(kind=NoiseKind.LAPLACE), 0.999),
            (NoiseModel(kind=NoiseKind.UNIFORM_SYMMETRIC, halfwidth=2.0), 30.0),
        ],
    )
    def test_midpoint_convexity(self, model, lam_range):
        rng = np.random.default_rng(17)
        a, b = rng.uniform(-lam_range, lam_range, (2, 500))
        left = np.asarray(logmgf(model, a[:, None]))
        right = np.asarray(logmgf(model, b[:, None]))
        middle = np.asarray(logmgf(model, (0.5 * (a + b))[:, None]))
        slack = 1e-12 * (1.0 + np.abs(left) + np.abs(right))
        assert np.all(middle <= 0.5 * (left + right) + slack)

    def test_rejects_non_finite(self, gaussian):
        with pytest.raises(InvalidArgumentError):
            logmgf(gaussian, math.nan)

    def test_rejects_wrong_dimension(self):
        model = NoiseModel(kind=NoiseKind.GAUSSIAN_ISO, dim=2)
        with pytest.raises(InvalidArgumentError):
            logmgf(model, np.ones(3))


class TestLegendre:
    def test_gaussian_closed_form(self, gaussian):
        assert legendre(gaussian, 1.5) == pytest.approx(1.125)

    def test_rademacher_closed_form(self, rademacher):
        x = 0.5
        expected = 0.5 * ((1 + x) * math.log(1 + x) + (1 - x) * math.log(1 - x))
        assert legendre(rademacher, x) == pytest.approx(expected, abs=1e-8)

    def test_rademacher_support_edge(self, rademacher):
        assert legendre(rademacher, 1.0) == pytest.approx(math.log(2.0), abs=1e-6)
        assert legendre(rademacher, 1.5) == math.inf

    def test_laplace_closed_form(self, laplace):
        x = 1.0
        lam = (math.sqrt(1.0 + x * x) - 1.0) / x
        expected = lam * x + math.log(1.0 - lam * lam)
        assert legendre(laplace, x) == pytest.approx(expected, abs=1e-8)

    def test_singular_covariance_off_range(self):
        model = NoiseModel(kind=NoiseKind.GAUSSIAN_FULL, dim=2, sigma=np.diag([1.0, 0.0]))
        assert legendre(model, [0.0, 1.0]) == math.inf
        assert legendre(model, [2.0, 0.0]) == pytest.approx(2.0)

    @pytest.mark.parametrize("kind", list(NoiseKind))
    def test_zero_at_origin(self, kind):
        sigma = np.eye(2) if kind == NoiseKind.GAUSSIAN_FULL else None
        model = NoiseModel(kind=kind, dim=2, sigma=sigma)
        assert legendre(model, np.zeros(2)) == 0.0

    @pytest.mark.parametrize(
        "model, lam_range",
        [
            (NoiseModel(kind=NoiseKind.GAUSSIAN_ISO, variance=2.0), 5.0),
            (NoiseModel(kind=NoiseKind.RADEMACHER), 5.0),
            (NoiseModel(kind=NoiseKind.LAPLACE, scale=0.5), 1.9),
            (NoiseModel(kind=NoiseKind.UNIFORM_SYMMETRIC, halfwidth=1.5), 5.0),
        ],
    )
    def test_young_fenchel(self, model, lam_range):
        rng = np.random.default_rng(7)
        lams = rng.uniform(-lam_range, lam_range, 1000)
        points = rng.uniform(-1.4, 1.4, 1000)
        for lam, w in zip(lams, points):
            assert lam * w <= logmgf(model, lam) + legendre(model, w) + 1e-6

    def test_rejects_bad_tolerance(self, rademacher):
        with pytest.raises(InvalidArgumentError):
            legendre(rademacher, 0.3, tol=0.0)


class TestDomain:
    def test_laplace_statuses(self, laplace):
        assert domain_query(laplace, [0.5]).result == DomainStatus.INTERIOR
        assert domain_query(laplace, [1.0]).result == DomainStatus.BOUNDARY
        assert domain_query(laplace, [-2.0]).result == DomainStatus.EXTERIOR

    def test_full_domains(self, gaussian, rademacher, uniform, laplace):
        assert domain_is_full(gaussian)
        assert domain_is_full(rademacher)
        assert domain_is_full(uniform)
        assert not domain_is_full(laplace)


class TestCovarianceAndGradient:
    def test_covariances(self, laplace, uniform, rademacher):
        np.testing.assert_allclose(covariance(laplace), [[2.0]])
        np.testing.assert_allclose(covariance(uniform), [[4.0 / 3.0]])
        np.testing.assert_allclose(covariance(rademacher), [[1.0]])

    def test_gradient_matches_derivative(self, rademacher, laplace):
        assert gradient(rademacher, 0.4)[0] == pytest.approx(math.tanh(0.4), rel=1e-7)
        assert gradient(laplace, 0.3)[0] == pytest.approx(0.6 / 0.91, rel=1e-7)


class TestSampling:
    def test_moments(self, laplace):
        draws = sample(laplace, make_stream(11, 0), 200_000)
        assert draws.shape == (200_000, 1)
        assert abs(draws.mean()) < 0.02
        assert draws.var() == pytest.approx(2.0, rel=0.03)

    def test_streams_are_reproducible(self, uniform):
        a = sample(uniform, make_stream(3, 1, 4), 50)
        b = sample(uniform, make_stream(3, 1, 4), 50)
        c = sample(uniform, make_stream(3, 1, 5), 50)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("theta", [0.3, -0.6])
    def test_tilted_mean(self, laplace, uniform, rademacher, theta):
        for model in (laplace, uniform, rademacher):
            tilted = tilt(model, theta)
            draws = tilted.sample(make_stream(5, 2), 200_000)
            assert draws.mean() == pytest.approx(tilted.mean[0], abs=0.02)

    def test_tilt_outside_domain(self, laplace):
        with pytest.raises(DomainError):
            tilt(laplace, 1.0)

    def test_importance_weights_average_to_one(self, rademacher):
        tilted = tilt(rademacher, 0.8)
        draws = tilted.sample(make_stream(9, 0), 100_000)
        assert np.exp(tilted.log_weight(draws)).mean() == pytest.approx(1.0, abs=0.02)


class TestConfig:
    def test_aliases(self):
        model = NoiseModel.from_config({"kind": "Uniform", "params": {"halfwidth": 3.0}})
        assert model.kind == NoiseKind.UNIFORM_SYMMETRIC
        assert model.halfwidth == 3.0
        assert NoiseModel.from_config(model.to_config()) == model

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            NoiseModel.from_config({"kind": "cauchy"})

    def test_asymmetric_covariance(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(kind=NoiseKind.GAUSSIAN_FULL, dim=2, sigma=[[1.0, 0.2], [0.0, 1.0]])
