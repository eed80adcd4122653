import math

import numpy as np
import pytest

from lisbeam.channel import ArrayGeometry, ChannelConfig, FrequencyChannel, frequency_channel, synthesize_scenario
from lisbeam.sampling import (
    ActiveSet,
    effective_channel,
    sample_channel,
    sampled_descriptor,
    select_active,
)


def random_channel(rng, m, k):
    return FrequencyChannel(rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k)))


class TestActiveSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            ActiveSet(indices=np.array([3, 1]), total_elements=8)  # unsorted
        with pytest.raises(ValueError):
            ActiveSet(indices=np.array([1, 1]), total_elements=8)  # duplicate
        with pytest.raises(ValueError):
            ActiveSet(indices=np.array([8]), total_elements=8)  # out of range
        with pytest.raises(ValueError):
            ActiveSet(indices=np.array([], dtype=int), total_elements=8)

    def test_full_set_is_identity_selection(self):
        active = select_active(6, 6, np.random.default_rng(0))
        np.testing.assert_array_equal(active.indices, np.arange(6))

    def test_desk_scale_paper_operating_point(self):
        # 4 active sensors out of 4096
        active = select_active(4096, 4, np.random.default_rng(1))
        assert active.num_active == 4
        assert len(set(active.indices.tolist())) == 4
        assert active.indices.max() < 4096

    def test_rejects_bad_sizes(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            select_active(8, 0, rng)
        with pytest.raises(ValueError):
            select_active(8, 9, rng)

    def test_pair_frequencies_uniform(self):
        # every C(16, 2) pair should appear n/120 times within 3 sigma
        rng = np.random.default_rng(2024)
        n = 100_000
        counts = {}
        for _ in range(n):
            active = select_active(16, 2, rng)
            key = tuple(active.indices.tolist())
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 120
        p = 1.0 / 120.0
        sigma = math.sqrt(n * p * (1 - p))
        for count in counts.values():
            assert abs(count - n * p) <= 3 * sigma


class TestSampleChannel:
    def test_full_set_identity(self):
        rng = np.random.default_rng(3)
        channel = random_channel(rng, 8, 5)
        active = ActiveSet(indices=np.arange(8), total_elements=8)
        np.testing.assert_array_equal(sample_channel(channel, active), channel.entries)

    def test_single_sensor_is_first_row(self):
        rng = np.random.default_rng(4)
        channel = random_channel(rng, 8, 5)
        active = ActiveSet(indices=np.array([0]), total_elements=8)
        np.testing.assert_array_equal(sample_channel(channel, active), channel.entries[:1, :])

    def test_matches_naive_indexing_oracle(self):
        rng = np.random.default_rng(5)
        channel = random_channel(rng, 64, 7)
        active = select_active(64, 12, rng)
        sampled = sample_channel(channel, active)
        for j, row in enumerate(active.indices):
            for k in range(7):
                assert sampled[j, k] == channel.entries[row, k]

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        channel = random_channel(rng, 8, 5)
        active = ActiveSet(indices=np.array([0, 1]), total_elements=9)
        with pytest.raises(ValueError):
            sample_channel(channel, active)


class TestEffectiveChannel:
    def test_all_ones_receiver_is_identity(self):
        rng = np.random.default_rng(7)
        h_t = random_channel(rng, 6, 4)
        h_r = FrequencyChannel(np.ones((6, 4), dtype=complex))
        np.testing.assert_array_equal(effective_channel(h_t, h_r).entries, h_t.entries)

    def test_zero_row_stays_zero(self):
        rng = np.random.default_rng(8)
        entries = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        entries[2, :] = 0.0
        h_t = FrequencyChannel(entries)
        h_r = random_channel(rng, 6, 4)
        assert np.all(effective_channel(h_t, h_r).entries[2, :] == 0.0)

    def test_matches_diagonal_matrix_oracle(self):
        # h_r^T diag(psi) h_t == (h_t . h_r)^T psi per subcarrier
        rng = np.random.default_rng(9)
        h_t = random_channel(rng, 10, 6)
        h_r = random_channel(rng, 10, 6)
        psi = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        eff = effective_channel(h_t, h_r)
        for k in range(6):
            direct = h_r.entries[:, k] @ np.diag(psi) @ h_t.entries[:, k]
            hadamard = eff.entries[:, k] @ psi
            np.testing.assert_allclose(hadamard, direct, rtol=1e-12)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError):
            effective_channel(random_channel(rng, 6, 4), random_channel(rng, 6, 5))


class TestSampledDescriptor:
    def test_single_entry(self):
        t = np.array([[2.0 + 1.0j]])
        r = np.array([[1.0 - 1.0j]])
        descriptor = sampled_descriptor(t, r, 1)
        np.testing.assert_array_equal(descriptor, [(2 + 1j) * (1 - 1j)])

    def test_full_channel_with_ones_receiver_is_vec(self):
        rng = np.random.default_rng(11)
        t = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        descriptor = sampled_descriptor(t, np.ones((4, 3), dtype=complex), 3)
        np.testing.assert_array_equal(descriptor, t.flatten(order="F"))

    def test_column_major_stacking_order(self):
        t = np.arange(6, dtype=complex).reshape(2, 3)
        descriptor = sampled_descriptor(t, np.ones((2, 3), dtype=complex), 2)
        # subcarrier 0 entries first, then subcarrier 1
        np.testing.assert_array_equal(descriptor, [0, 3, 1, 4])

    def test_matches_entry_by_entry_oracle_at_paper_sizes(self):
        rng = np.random.default_rng(12)
        m_bar, k_dl, k = 8, 64, 64
        t = rng.standard_normal((m_bar, k)) + 1j * rng.standard_normal((m_bar, k))
        r = rng.standard_normal((m_bar, k)) + 1j * rng.standard_normal((m_bar, k))
        descriptor = sampled_descriptor(t, r, k_dl)
        assert descriptor.shape == (512,)
        expected = np.empty(512, dtype=complex)
        for k_i in range(k_dl):
            for m in range(m_bar):
                expected[k_i * m_bar + m] = t[m, k_i] * r[m, k_i]
        # vectorized and scalar complex products may differ in the last ulp
        np.testing.assert_allclose(descriptor, expected, rtol=1e-15)

    def test_rejects_too_many_subcarriers(self):
        t = np.ones((2, 3), dtype=complex)
        with pytest.raises(ValueError):
            sampled_descriptor(t, t, 4)


class TestProperties:
    def test_sampling_commutes_with_hadamard(self):
        rng = np.random.default_rng(13)
        h_t = random_channel(rng, 32, 6)
        h_r = random_channel(rng, 32, 6)
        for _ in range(5):
            active = select_active(32, 5, rng)
            left = sample_channel(effective_channel(h_t, h_r), active)
            right = sample_channel(h_t, active) * sample_channel(h_r, active)
            np.testing.assert_array_equal(left, right)

    def test_effective_channel_of_synthetic_links(self):
        geo = ArrayGeometry(4, 4)
        cfg = ChannelConfig(num_subcarriers=8, num_taps=2, sample_period=1e-8)
        rng = np.random.default_rng(14)
        h_t = frequency_channel(synthesize_scenario(rng, geo, cfg, 2), cfg, geo)
        h_r = frequency_channel(synthesize_scenario(rng, geo, cfg, 2), cfg, geo)
        eff = effective_channel(h_t, h_r)
        np.testing.assert_allclose(eff.entries, h_t.entries * h_r.entries, rtol=1e-15)
