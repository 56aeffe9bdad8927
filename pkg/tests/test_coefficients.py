import math
from concurrent.futures import ThreadPoolExecutor

import mpmath
import numpy as np
import pandas as pd
import pytest

from processes.coefficients import (
    CoefficientModel,
    MemoryRegime,
    ShortGenerator,
    SlowlyVarying,
    dump_csv,
    phi,
    psi_partial,
    rv_diagnostic,
    square_window_sum,
    tail_bound,
    window_sum,
)
from shared.errors import ConfigurationError, OutOfRangeError, RegimeError
from tests.helpers import geometric, long_memory


class TestValues:
    def test_geometric_sums_to_one(self):
        model = geometric(radius=128)
        assert math.fsum(model.values) == pytest.approx(1.0, abs=1e-12)
        assert phi(model, 3) == phi(model, -3)

    def test_canonical_long_memory_family(self):
        model = long_memory(radius=100, alpha=0.8, p=0.7)
        assert phi(model, 0) == pytest.approx(0.7)
        assert phi(model, 5) == pytest.approx(0.7 * 5**-0.8)
        assert phi(model, -5) == pytest.approx(0.3 * 5**-0.8)

    def test_finite_support_is_normalized(self):
        model = CoefficientModel(
            regime=MemoryRegime.SHORT, radius=4, generator=ShortGenerator.FINITE_SUPPORT,
            weights=[1.0, 2.0, 1.0], offset=-1,
        )
        assert phi(model, -1) == pytest.approx(0.25)
        assert phi(model, 0) == pytest.approx(0.5)
        assert phi(model, 2) == 0.0

    def test_slowly_varying_factor(self):
        model = CoefficientModel(
            regime=MemoryRegime.LONG, radius=1000, alpha=0.75, slowly_varying=SlowlyVarying(power=2.0)
        )
        assert phi(model, 1) == pytest.approx(1.0)
        assert phi(model, 100) == pytest.approx(100**-0.75 * math.log(100) ** 2)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            phi(geometric(radius=8), 9)


class TestWindowSums:
    def test_matches_direct_sum(self):
        model = long_memory(radius=512, alpha=0.7, p=0.6)
        values = model.values
        for i, n in [(-40, 7), (0, 1), (-1, 30), (100, 200)]:
            direct = values[i + 1 + 512:i + n + 1 + 512].sum()
            assert window_sum(model.table, i, n) == pytest.approx(direct, rel=1e-12)

    def test_vectorized(self):
        model = geometric(radius=64)
        starts = np.arange(-20, 20)
        sums = model.table.window_sums(starts, 5)
        expected = [model.values[s + 1 + 64:s + 6 + 64].sum() for s in starts]
        np.testing.assert_allclose(sums, expected, rtol=1e-9)

    def test_window_leaving_range(self):
        model = geometric(radius=16)
        with pytest.raises(OutOfRangeError):
            window_sum(model.table, 10, 8)

    def test_square_window_sum(self):
        model = geometric(radius=64, rho=0.3)
        n, half = 4, 20
        direct = sum(window_sum(model.table, l, n) ** 2 for l in range(-half, half + 1))
        assert square_window_sum(model.table, n, half) == pytest.approx(direct, rel=1e-12)


class TestNormalizers:
    def test_psi_partial_against_mpmath(self):
        model = long_memory(radius=10, alpha=0.75)
        with mpmath.workdps(30):
            expected = float(mpmath.fsum(mpmath.mpf(i) ** mpmath.mpf(-0.75) for i in range(1, 2001)))
        assert psi_partial(model, 2000) == pytest.approx(expected, rel=1e-14)

    def test_psi_partial_from_worker_threads(self):
        model = CoefficientModel(
            regime=MemoryRegime.LONG, radius=10, alpha=0.8, slowly_varying=SlowlyVarying(power=0.5)
        )
        grid = [10, 500, 10, 2000, 500, 77] * 4
        with ThreadPoolExecutor(max_workers=4) as executor:
            pooled = list(executor.map(lambda n: psi_partial(model, n), grid))
        assert pooled == [psi_partial(model, n) for n in grid]

    def test_karamata_ratio(self):
        # n ψ(n) / Ψ_n → 1 − α; the ζ(α) offset in Ψ_n sets the pace
        model = long_memory(radius=10, alpha=0.55)
        errors = []
        for n in (10**2, 10**4, 10**6):
            ratio = n * float(model.psi(float(n))) / psi_partial(model, n)
            errors.append(abs(ratio / 0.45 - 1.0))
        assert errors[0] > errors[1] > errors[2]
        assert errors[1] < 0.02

    def test_short_memory_has_no_psi(self):
        with pytest.raises(RegimeError):
            psi_partial(geometric(), 10)

    def test_regular_variation_without_slowly_varying_part(self):
        report = rv_diagnostic(long_memory(radius=10**6), 2.0, 1000)
        assert report.expected == pytest.approx(2.0**-0.75)
        assert report.rel_error < 1e-12

    def test_regular_variation_with_log_factor_improves(self):
        model = CoefficientModel(
            regime=MemoryRegime.LONG, radius=10**7, alpha=0.75, slowly_varying=SlowlyVarying(power=1.0)
        )
        coarse = rv_diagnostic(model, 2.0, 10**3).rel_error
        fine = rv_diagnostic(model, 2.0, 10**6).rel_error
        assert fine < coarse

    def test_diagnostic_needs_radius(self):
        with pytest.raises(OutOfRangeError):
            rv_diagnostic(long_memory(radius=100), 2.0, 100)


class TestTailBound:
    @pytest.mark.parametrize("model", [geometric(radius=2**14, rho=0.9), long_memory(radius=2**16, p=0.6)])
    def test_bounds_the_dropped_squares(self, model):
        cutoff = 2**10
        values = model.values
        centre = model.radius
        outside = np.concatenate((values[:centre - cutoff], values[centre + cutoff + 1:]))
        assert float(np.sum(outside**2)) <= tail_bound(model, cutoff) * (1.0 + 1e-9)

    def test_bounds_a_log_weighted_tail(self):
        model = CoefficientModel(
            regime=MemoryRegime.LONG, radius=1000, alpha=0.75, slowly_varying=SlowlyVarying(power=2.0)
        )
        last = 10**6
        k = np.arange(1001, last + 1, dtype=float)
        head = math.fsum((k**-1.5 * np.log(k) ** 4).tolist())
        # terms past `last` are decreasing, so their integral from last + 1 is a lower bound
        with mpmath.workdps(30):
            rest = float(mpmath.gammainc(5, 0.5 * mpmath.log(last + 1)) / mpmath.mpf(0.5) ** 5)
        bound = tail_bound(model)
        assert head + rest <= bound
        assert bound == pytest.approx(head + rest, rel=1e-3)

    def test_log_weighted_tail_below_the_monotone_range(self):
        model = CoefficientModel(
            regime=MemoryRegime.LONG, radius=50, alpha=0.6, slowly_varying=SlowlyVarying(power=3.0)
        )
        k = np.arange(6, 2 * 10**6 + 1, dtype=float)
        head = math.fsum((k**-1.2 * np.log(np.maximum(k, math.e)) ** 6).tolist())
        assert head <= tail_bound(model, 5)

    def test_finite_support_has_no_tail(self):
        model = CoefficientModel(
            regime=MemoryRegime.SHORT, radius=4, generator=ShortGenerator.FINITE_SUPPORT, weights=[1.0]
        )
        assert tail_bound(model) == 0.0


class TestConfig:
    def test_round_trip(self):
        model = CoefficientModel.from_config(
            {"regime": "long_memory", "A": 256, "alpha": 0.8, "p": 0.25, "slowly_varying": {"c": 1.0}}
        )
        assert model.regime == MemoryRegime.LONG
        assert model.q == pytest.approx(0.75)
        again = CoefficientModel.from_config(model.to_config())
        np.testing.assert_array_equal(again.values, model.values)

    @pytest.mark.parametrize(
        "config",
        [
            {"regime": "long", "A": 10, "alpha": 0.4},
            {"regime": "long", "A": 10, "p": 1.5},
            {"regime": "short", "A": 10, "rho": 1.0},
            {"regime": "short", "A": 10, "generator": "finite_support"},
            {"regime": "short", "A": 0},
            {"regime": "short"},
        ],
    )
    def test_invalid(self, config):
        with pytest.raises(ConfigurationError):
            CoefficientModel.from_config(config)

    def test_dump_csv(self, tmp_path):
        model = geometric(radius=8)
        frame = pd.read_csv(dump_csv(model, tmp_path / "phi.csv"))
        assert list(frame.columns) == ["i", "phi"]
        assert len(frame) == 17
        np.testing.assert_allclose(frame["phi"], model.values)
