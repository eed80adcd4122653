import math

import numpy as np
import pytest

from lisbeam.channel import (
    ArrayGeometry,
    ChannelConfig,
    PathComponent,
    angles_from_uv,
    frequency_channel,
)
from lisbeam.codebook import ReflectionCodebook, codebook_spatial_frequencies, dft_codebook
from lisbeam.rate import LinkBudget, achievable_rate, exhaustive_search, rate_vector
from lisbeam.sampling import EffectiveChannel, effective_channel


def unit_budget(k):
    # P_T = K * noise_power makes the SNR exactly 1
    return LinkBudget(transmit_power=float(k), noise_power=1.0, num_subcarriers=k)


class TestAchievableRate:
    def test_basis_vector_channel_gives_one_bit(self):
        k, m = 4, 5
        entries = np.zeros((m, k), dtype=complex)
        entries[0, :] = 1.0
        eff = EffectiveChannel(entries)
        rate = achievable_rate(eff, np.ones(m, dtype=complex), unit_budget(k))
        assert rate == pytest.approx(1.0, rel=1e-12)

    def test_coherent_combining_single_path(self):
        geo = ArrayGeometry(4, 4)
        cfg = ChannelConfig(num_subcarriers=8, num_taps=2, sample_period=1e-8, path_loss=2.0)
        rng = np.random.default_rng(0)
        gain_t, gain_r = (complex(*rng.standard_normal(2)) for _ in range(2))
        az_t, el_t = angles_from_uv(0.5, 0.25)
        az_r, el_r = angles_from_uv(-0.25, 0.5)
        h_t = frequency_channel([PathComponent(gain_t, 0.0, az_t, el_t)], cfg, geo)
        h_r = frequency_channel([PathComponent(gain_r, 0.0, az_r, el_r)], cfg, geo)
        eff = effective_channel(h_t, h_r)
        psi = np.exp(-1j * np.angle(eff.entries[:, 0]))
        budget = LinkBudget(transmit_power=2.0, noise_power=0.5, num_subcarriers=8)
        m = geo.num_elements
        beta_sq = (m / cfg.path_loss) ** 2 * abs(gain_t) ** 2 * abs(gain_r) ** 2
        expected = math.log2(1.0 + budget.snr * m**2 * beta_sq)
        assert achievable_rate(eff, psi, budget) == pytest.approx(expected, rel=1e-12)

    def test_matches_diagonal_form_oracle(self):
        rng = np.random.default_rng(1)
        m, k = 12, 6
        h_t = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        h_r = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        phases = rng.uniform(0, 2 * np.pi, m)
        psi = np.exp(1j * phases)
        budget = LinkBudget(transmit_power=3.0, noise_power=0.2, num_subcarriers=k)
        eff = EffectiveChannel(h_t * h_r)
        expected = np.mean([
            math.log2(1.0 + budget.snr * abs(h_r[:, j] @ np.diag(psi) @ h_t[:, j]) ** 2)
            for j in range(k)
        ])
        assert achievable_rate(eff, psi, budget) == pytest.approx(expected, rel=1e-12)

    def test_rejects_non_unit_modulus_psi(self):
        eff = EffectiveChannel(np.ones((3, 2), dtype=complex))
        with pytest.raises(ValueError):
            achievable_rate(eff, np.array([1.0, 2.0, 1.0], dtype=complex), unit_budget(2))

    def test_rejects_dimension_mismatch(self):
        eff = EffectiveChannel(np.ones((3, 2), dtype=complex))
        with pytest.raises(ValueError):
            achievable_rate(eff, np.ones(4, dtype=complex), unit_budget(2))
        with pytest.raises(ValueError):
            achievable_rate(eff, np.ones(3, dtype=complex), unit_budget(5))


class TestRateVector:
    def test_single_codeword(self):
        rng = np.random.default_rng(2)
        eff = EffectiveChannel(rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        cb = ReflectionCodebook(columns=psi[:, None], geometry=ArrayGeometry(2, 2))
        rates = rate_vector(eff, cb, unit_budget(3))
        assert rates.shape == (1,)
        assert rates[0] == pytest.approx(achievable_rate(eff, psi, unit_budget(3)), rel=1e-12)

    def test_zero_channel_gives_zero_rates(self):
        eff = EffectiveChannel(np.zeros((4, 3), dtype=complex))
        rates = rate_vector(eff, dft_codebook(ArrayGeometry(2, 2)), unit_budget(3))
        np.testing.assert_array_equal(rates, np.zeros(4))

    def test_matches_per_codeword_calls(self):
        rng = np.random.default_rng(3)
        geo = ArrayGeometry(4, 4)
        eff = EffectiveChannel(rng.standard_normal((16, 5)) + 1j * rng.standard_normal((16, 5)))
        cb = dft_codebook(geo)
        budget = LinkBudget(transmit_power=1.0, noise_power=0.05, num_subcarriers=5)
        rates = rate_vector(eff, cb, budget)
        for n in range(cb.num_codewords):
            single = achievable_rate(eff, cb.columns[:, n], budget)
            assert rates[n] == pytest.approx(single, rel=1e-12)

    def test_entries_nonnegative_and_finite(self):
        rng = np.random.default_rng(4)
        eff = EffectiveChannel(rng.standard_normal((16, 5)) + 1j * rng.standard_normal((16, 5)))
        rates = rate_vector(eff, dft_codebook(ArrayGeometry(4, 4)), unit_budget(5))
        assert np.all(rates >= 0) and np.all(np.isfinite(rates))


class TestExhaustiveSearch:
    def test_single_codeword_returns_index_zero(self):
        rng = np.random.default_rng(5)
        eff = EffectiveChannel(rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
        cb = ReflectionCodebook(columns=np.ones((4, 1), dtype=complex), geometry=ArrayGeometry(2, 2))
        index, rate = exhaustive_search(eff, cb, unit_budget(3))
        assert index == 0
        assert rate == pytest.approx(achievable_rate(eff, np.ones(4, dtype=complex), unit_budget(3)))

    def test_on_grid_winner_matches_wrapped_sum_of_frequencies(self):
        # brute-force winner against the analytic beam index: the best DFT
        # column points opposite the combined spatial frequency of both links
        geo = ArrayGeometry(8, 8)
        cfg = ChannelConfig(num_subcarriers=4, num_taps=1, sample_period=1e-8)
        cb = dft_codebook(geo)
        grid = codebook_spatial_frequencies(geo)
        budget = LinkBudget(transmit_power=1.0, noise_power=0.01, num_subcarriers=4)
        rng = np.random.default_rng(6)
        wrap = lambda x: (x + 1.0) % 2.0 - 1.0
        checked = 0
        for _ in range(20):
            u_t, v_t = grid[rng.integers(64)]
            u_r, v_r = grid[rng.integers(64)]
            if u_t**2 + v_t**2 > 1 or u_r**2 + v_r**2 > 1:
                continue
            h_t = frequency_channel([PathComponent(1.0, 0.0, *angles_from_uv(u_t, v_t))], cfg, geo)
            h_r = frequency_channel([PathComponent(1.0, 0.0, *angles_from_uv(u_r, v_r))], cfg, geo)
            index, _ = exhaustive_search(effective_channel(h_t, h_r), cb, budget)
            expected = np.argmin(
                np.abs(wrap(grid[:, 0] + u_t + u_r)) + np.abs(wrap(grid[:, 1] + v_t + v_r))
            )
            assert index == expected
            checked += 1
        assert checked >= 10

    def test_tie_break_picks_lowest_index(self):
        rng = np.random.default_rng(7)
        geo = ArrayGeometry(2, 2)
        base = dft_codebook(geo).columns
        best = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        columns = np.column_stack([base[:, 0], base[:, 1], base[:, 2], best, base[:, 3],
                                   base[:, 0] * 1j, base[:, 1] * 1j, best])
        cb = ReflectionCodebook(columns=columns, geometry=geo)
        entries = np.outer(best.conj(), np.ones(3))  # coherent with the duplicated codeword
        eff = EffectiveChannel(entries)
        index, rate = exhaustive_search(eff, cb, unit_budget(3))
        assert index == 3  # duplicate also sits at index 7

    def test_best_rate_equals_max_of_rate_vector(self):
        rng = np.random.default_rng(8)
        eff = EffectiveChannel(rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4)))
        cb = dft_codebook(ArrayGeometry(4, 4))
        index, rate = exhaustive_search(eff, cb, unit_budget(4))
        rates = rate_vector(eff, cb, unit_budget(4))
        assert rate == rates.max()
        assert index == int(np.argmax(rates))


class TestRateProperties:
    def test_global_phase_invariance(self):
        rng = np.random.default_rng(9)
        eff = EffectiveChannel(rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4)))
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        budget = unit_budget(4)
        base = achievable_rate(eff, psi, budget)
        for theta in rng.uniform(0, 2 * np.pi, 5):
            rotated = achievable_rate(eff, np.exp(1j * theta) * psi, budget)
            assert rotated == pytest.approx(base, rel=1e-12)

    def test_rate_strictly_increasing_in_snr(self):
        rng = np.random.default_rng(10)
        eff = EffectiveChannel(rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4)))
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        rates = [
            achievable_rate(eff, psi, LinkBudget(transmit_power=p, noise_power=1.0, num_subcarriers=4))
            for p in (0.5, 1.0, 2.0, 8.0)
        ]
        assert all(b > a for a, b in zip(rates, rates[1:]))

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            LinkBudget(transmit_power=0.0, noise_power=1.0, num_subcarriers=4)
        with pytest.raises(ValueError):
            LinkBudget(transmit_power=1.0, noise_power=0.0, num_subcarriers=4)
        budget = LinkBudget(transmit_power=8.0, noise_power=0.5, num_subcarriers=4)
        assert budget.snr == pytest.approx(4.0)
