import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from binomcap import (
    ChannelSpec,
    binary_entropy,
    binomial_entropy_exact,
    binomial_entropy_lower,
    binomial_entropy_upper,
    log_pmf,
    pmf_row,
)
from binomcap.kernel import log_pmf_matrix


def direct_pmf(n, y, x):
    """Oracle: plain product form, no log-gamma."""
    return math.comb(n, y) * x**y * (1 - x) ** (n - y)


def entropy_highprec(n, x):
    """Oracle: binomial entropy at 50-digit precision via exact rationals."""
    getcontext().prec = 50
    fx = Fraction(x)
    h = Decimal(0)
    for y in range(n + 1):
        p = Fraction(math.comb(n, y)) * fx**y * (1 - fx) ** (n - y)
        if p > 0:
            d = Decimal(p.numerator) / Decimal(p.denominator)
            h -= d * d.ln()
    return float(h)


class TestChannelSpec:
    def test_rejects_bad_n(self):
        for bad in (0, -1, 1.5, True):
            with pytest.raises(ValueError):
                ChannelSpec(bad)

    def test_rejects_huge_n(self):
        with pytest.raises(ValueError):
            ChannelSpec(5000)


class TestLogPmf:
    def test_fair_coin(self):
        assert log_pmf(ChannelSpec(2), 1, 0.5) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_degenerate_endpoint(self):
        assert log_pmf(ChannelSpec(3), 0, 0.0) == 0.0
        assert log_pmf(ChannelSpec(3), 3, 1.0) == 0.0
        assert log_pmf(ChannelSpec(3), 1, 0.0) == -math.inf

    def test_matches_direct_product(self):
        got = math.exp(log_pmf(ChannelSpec(10), 3, 0.2))
        want = direct_pmf(10, 3, 0.2)
        assert got == pytest.approx(want, rel=1e-14)

    def test_domain_errors(self):
        spec = ChannelSpec(4)
        with pytest.raises(ValueError):
            log_pmf(spec, 5, 0.5)
        with pytest.raises(ValueError):
            log_pmf(spec, -1, 0.5)
        with pytest.raises(ValueError):
            log_pmf(spec, 2, 1.5)
        with pytest.raises(ValueError):
            log_pmf(spec, 1.0, 0.5)


class TestPmfRow:
    def test_fair_two_trials(self):
        np.testing.assert_allclose(pmf_row(ChannelSpec(2), 0.5), [0.25, 0.5, 0.25],
                                   rtol=0, atol=1e-15)

    def test_certain_success(self):
        np.testing.assert_array_equal(pmf_row(ChannelSpec(1), 1.0), [0.0, 1.0])

    def test_matches_brute_force_expansion(self):
        row = pmf_row(ChannelSpec(5), 0.3)
        want = [direct_pmf(5, y, 0.3) for y in range(6)]
        np.testing.assert_allclose(row, want, rtol=1e-13)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            pmf_row(ChannelSpec(2), -0.1)

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 31, 64, 128, 333, 1000])
    def test_rows_normalized_on_grid(self, n):
        xs = np.linspace(0.0, 1.0, 1001)
        rows = np.exp(log_pmf_matrix(ChannelSpec(n), xs))
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 4, 17, 60])
    def test_channel_symmetry(self, n):
        xs = np.linspace(0.0, 1.0, 101)
        logp = log_pmf_matrix(ChannelSpec(n), xs)
        mirrored = log_pmf_matrix(ChannelSpec(n), 1.0 - xs)[:, ::-1]
        finite = np.isfinite(logp) & np.isfinite(mirrored)
        assert np.all(np.abs(logp[finite] - mirrored[finite]) <= 1e-13)
        assert np.array_equal(np.isfinite(logp), np.isfinite(mirrored))


class TestBinaryEntropy:
    def test_half_gives_log2(self):
        assert binary_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)

    def test_endpoint(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_point_value(self):
        want = -0.1 * math.log(0.1) - 0.9 * math.log(0.9)
        assert binary_entropy(0.1) == pytest.approx(want, abs=1e-15)
        assert want == pytest.approx(0.325083, abs=1e-6)

    def test_symmetry(self):
        for x in np.linspace(0.0, 1.0, 41):
            assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-15)


class TestBinomialEntropy:
    def test_single_trial(self):
        assert binomial_entropy_exact(ChannelSpec(1), 0.5) == pytest.approx(math.log(2))
        assert binomial_entropy_exact(ChannelSpec(1), 0.0) == 0.0

    def test_matches_high_precision_sum(self):
        got = binomial_entropy_exact(ChannelSpec(20), 0.3)
        assert got == pytest.approx(entropy_highprec(20, 0.3), abs=1e-12)

    def test_upper_bound_values(self):
        v = binomial_entropy_upper(ChannelSpec(1), 0.5)
        assert v == pytest.approx(0.5 * math.log(2 * math.pi * math.e * (0.25 + 1 / 12)))
        assert v == pytest.approx(0.8696324, abs=1e-6)
        assert v >= math.log(2)
        v0 = binomial_entropy_upper(ChannelSpec(4), 0.0)
        assert v0 == pytest.approx(0.5 * math.log(2 * math.pi * math.e / 12))
        assert v0 == pytest.approx(0.1764852, abs=1e-6)
        assert v0 >= 0.0
        assert binomial_entropy_upper(ChannelSpec(100), 0.5) >= \
            binomial_entropy_exact(ChannelSpec(100), 0.5)

    def test_lower_bound_values(self):
        v = binomial_entropy_lower(ChannelSpec(1), 0.5)
        assert v == pytest.approx(0.5 * math.log(0.5) - 1.0, abs=1e-15)
        assert v == pytest.approx(-1.346574, abs=1e-6)
        assert v <= math.log(2)
        assert binomial_entropy_lower(ChannelSpec(100), 0.5) <= \
            binomial_entropy_exact(ChannelSpec(100), 0.5)
        assert binomial_entropy_lower(ChannelSpec(10), 0.99) <= \
            binomial_entropy_exact(ChannelSpec(10), 0.99)

    def test_lower_bound_endpoint_limit(self):
        assert binomial_entropy_lower(ChannelSpec(7), 0.0) == -1.0
        assert binomial_entropy_lower(ChannelSpec(7), 1.0) == -1.0

    @pytest.mark.parametrize("n", [1, 2, 5, 13, 40, 90, 200])
    def test_entropy_sandwich(self, n):
        spec = ChannelSpec(n)
        for x in np.linspace(0.0, 1.0, 201):
            exact = binomial_entropy_exact(spec, x)
            assert binomial_entropy_lower(spec, x) <= exact + 1e-12
            assert exact <= binomial_entropy_upper(spec, x) + 1e-12
