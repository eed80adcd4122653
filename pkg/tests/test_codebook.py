import numpy as np
import pytest

from lisbeam.channel import ArrayGeometry, array_response_uv
from lisbeam.codebook import ReflectionCodebook, codebook_spatial_frequencies, dft_codebook


class TestDftCodebook:
    def test_one_by_one(self):
        cb = dft_codebook(ArrayGeometry(1, 1))
        np.testing.assert_array_equal(cb.columns, [[1.0 + 0.0j]])

    def test_two_point_dft(self):
        cb = dft_codebook(ArrayGeometry(2, 1))
        np.testing.assert_allclose(cb.columns[:, 0], [1.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(cb.columns[:, 1], [1.0, -1.0], atol=1e-15)

    def test_gram_is_m_times_identity(self):
        geo = ArrayGeometry(4, 4)
        cb = dft_codebook(geo)
        gram = cb.columns.conj().T @ cb.columns
        np.testing.assert_allclose(gram, 16 * np.eye(16), atol=1e-10)

    def test_unit_modulus_entries(self):
        cb = dft_codebook(ArrayGeometry(8, 4))
        np.testing.assert_allclose(np.abs(cb.columns), 1.0, atol=1e-12)

    def test_codebook_size_equals_element_count(self):
        geo = ArrayGeometry(8, 4)
        assert dft_codebook(geo).num_codewords == geo.num_elements

    def test_kronecker_index_mapping(self):
        # column m_h * M_V + m_v is the outer product of the 1-D DFT columns
        m_h, m_v = 4, 3
        geo = ArrayGeometry(m_h, m_v)
        cb = dft_codebook(geo)
        for i_h in range(m_h):
            for i_v in range(m_v):
                horizontal = np.exp(-2j * np.pi * np.arange(m_h) * i_h / m_h)
                vertical = np.exp(-2j * np.pi * np.arange(m_v) * i_v / m_v)
                expected = np.kron(horizontal, vertical)
                np.testing.assert_allclose(cb.columns[:, i_h * m_v + i_v], expected, rtol=1e-12)

    def test_columns_match_array_responses_at_grid_frequencies(self):
        # at half-wavelength spacing each codeword is the array response at
        # its (u, v) pointing coordinates
        geo = ArrayGeometry(4, 4, spacing=0.5)
        cb = dft_codebook(geo)
        grid = codebook_spatial_frequencies(geo)
        for n in range(cb.num_codewords):
            response = array_response_uv(geo, grid[n, 0], grid[n, 1])
            np.testing.assert_allclose(cb.columns[:, n], response, rtol=1e-10)

    def test_validation(self):
        with pytest.raises(ValueError):
            ReflectionCodebook(columns=np.ones((4, 0)), geometry=ArrayGeometry(2, 2))
