"""Quantized reflection-beamforming codebook for the planar surface.

The codebook is the Kronecker product of two 1-D DFT matrices (horizontal
times vertical), giving M unit-modulus candidate interaction vectors whose
phase patterns form a uniform grid in the (u, v) spatial-frequency plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry


@dataclass(frozen=True)
class ReflectionCodebook:
    """Candidate interaction vectors as columns of an M x N matrix."""

    columns: np.ndarray
    geometry: ArrayGeometry

    def __post_init__(self):
        columns = np.asarray(self.columns, dtype=np.complex128)
        if columns.ndim != 2 or columns.shape[1] < 1:
            raise ValueError("codebook must be an M x N matrix with N >= 1")
        object.__setattr__(self, "columns", columns)

    @property
    def num_codewords(self) -> int:
        return self.columns.shape[1]


def _dft_matrix(n: int) -> np.ndarray:
    """Unnormalized n x n DFT matrix; column c has entries exp(-2j*pi*m*c/n)."""
    indices = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(indices, indices) / n)


def dft_codebook(geometry: ArrayGeometry) -> ReflectionCodebook:
    """DFT_{M_H} (x) DFT_{M_V} codebook with N = M columns.

    Column ``n = m_h * m_vertical + m_v`` is the Kronecker product of column
    ``m_h`` of the horizontal DFT and column ``m_v`` of the vertical DFT.
    """
    columns = np.kron(_dft_matrix(geometry.m_horizontal), _dft_matrix(geometry.m_vertical))
    return ReflectionCodebook(columns=columns, geometry=geometry)


def codebook_spatial_frequencies(geometry: ArrayGeometry) -> np.ndarray:
    """(u, v) pointing coordinates of each DFT codeword, wrapped to [-1, 1).

    Valid for half-wavelength spacing, where codeword ``(m_h, m_v)`` matches
    the array response at ``u = -2*m_h/M_H``, ``v = -2*m_v/M_V`` (mod 2).
    """
    u = -2.0 * np.arange(geometry.m_horizontal) / geometry.m_horizontal
    v = -2.0 * np.arange(geometry.m_vertical) / geometry.m_vertical
    wrap = lambda x: (x + 1.0) % 2.0 - 1.0
    return np.column_stack(
        (np.repeat(wrap(u), geometry.m_vertical), np.tile(wrap(v), geometry.m_horizontal))
    )
