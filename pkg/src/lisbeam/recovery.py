"""Compressive-sensing beam design from sparsely sampled channels.

A dictionary of array responses on a uniform (u, v) grid turns channel
recovery into a sparse problem: the sampled channel at the active sensors is
``Phi @ x`` with ``Phi`` the active rows of the dictionary and ``x`` carrying
one nonzero per propagation path. Orthogonal matching pursuit recovers the
support and per-subcarrier coefficients, the full channels are rebuilt from
the dictionary, and the reflection vector is picked by an offline exhaustive
search over the codebook using the reconstructed channels.

The default OMP variant selects one shared support for all subcarriers
(selection score summed over subcarriers), since the path angles are common
across frequency; per-subcarrier independent recovery is available as a
fallback mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, FrequencyChannel, uv_grid
from .codebook import ReflectionCodebook
from .rate import LinkBudget, exhaustive_search
from .sampling import ActiveSet, EffectiveChannel, effective_channel


class DegenerateSupportError(RuntimeError):
    """Selected dictionary columns are rank deficient on the active rows."""


@dataclass(frozen=True)
class Dictionary:
    """Array-response atoms on a uniform spatial-frequency grid.

    ``atoms`` is M x (n_azimuth * n_elevation); ``grid[j]`` is the (u, v)
    pair of atom j, with atom index ``j = i_azimuth * n_elevation + i_elevation``.
    """

    atoms: np.ndarray
    grid: np.ndarray
    geometry: ArrayGeometry
    n_azimuth: int
    n_elevation: int

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[1]


def build_dictionary(geometry: ArrayGeometry, n_azimuth: int, n_elevation: int) -> Dictionary:
    """Kronecker dictionary of 1-D responses on [-1, 1) grids of u and v."""
    if n_azimuth < 1 or n_elevation < 1:
        raise ValueError("grid sizes must be >= 1")
    u = uv_grid(n_azimuth)
    v = uv_grid(n_elevation)
    phase = 1j * 2.0 * np.pi * geometry.spacing
    azimuth_block = np.exp(phase * np.outer(np.arange(geometry.m_horizontal), u))
    elevation_block = np.exp(phase * np.outer(np.arange(geometry.m_vertical), v))
    atoms = np.kron(azimuth_block, elevation_block)
    grid = np.column_stack((np.repeat(u, n_elevation), np.tile(v, n_azimuth)))
    return Dictionary(atoms=atoms, grid=grid, geometry=geometry, n_azimuth=n_azimuth, n_elevation=n_elevation)


def sensing_matrix(dictionary: Dictionary, active: ActiveSet) -> np.ndarray:
    """Active rows of the dictionary: the Mbar x N equivalent sensing matrix."""
    if active.total_elements != dictionary.atoms.shape[0]:
        raise ValueError(
            f"active set is over {active.total_elements} elements, dictionary has {dictionary.atoms.shape[0]}"
        )
    return dictionary.atoms[active.indices, :]


@dataclass(frozen=True)
class SparseSolution:
    """OMP output: shared support, per-subcarrier coefficients and residuals."""

    support: tuple[int, ...]
    coefficients: np.ndarray  # |support| x K
    residual_norms: np.ndarray  # K


def omp(
    phi: np.ndarray,
    measurements: np.ndarray,
    max_sparsity: int,
    residual_tol: float,
) -> SparseSolution:
    """Simultaneous orthogonal matching pursuit over all measurement columns.

    Each iteration adds the atom with the largest squared correlation summed
    over subcarriers, then re-solves least squares on the support for every
    subcarrier. Stops at ``max_sparsity`` atoms or when every subcarrier
    residual norm is <= ``residual_tol``.
    """
    phi = np.asarray(phi, dtype=np.complex128)
    measurements = np.asarray(measurements, dtype=np.complex128)
    if measurements.ndim == 1:
        measurements = measurements[:, None]
    if phi.ndim != 2 or measurements.shape[0] != phi.shape[0]:
        raise ValueError("measurements rows must match sensing-matrix rows")
    if residual_tol < 0:
        raise ValueError("residual_tol must be >= 0")
    num_rows, num_atoms = phi.shape
    if not 1 <= max_sparsity <= min(num_rows, num_atoms):
        raise ValueError(f"max_sparsity must be in [1, {min(num_rows, num_atoms)}], got {max_sparsity}")

    num_subcarriers = measurements.shape[1]
    support: list[int] = []
    coefficients = np.zeros((0, num_subcarriers), dtype=np.complex128)
    residual = measurements.copy()
    norms = np.linalg.norm(residual, axis=0)
    while len(support) < max_sparsity and np.any(norms > residual_tol):
        scores = np.sum(np.abs(phi.conj().T @ residual) ** 2, axis=1)
        scores[support] = -1.0  # selected atoms stay out
        support.append(int(np.argmax(scores)))
        selected = phi[:, support]
        coefficients, _, rank, _ = np.linalg.lstsq(selected, measurements, rcond=None)
        if rank < len(support):
            raise DegenerateSupportError(
                f"selected atoms {support} are rank deficient (rank {rank}) on the active rows"
            )
        residual = measurements - selected @ coefficients
        norms = np.linalg.norm(residual, axis=0)
    return SparseSolution(support=tuple(support), coefficients=coefficients, residual_norms=norms)


def omp_per_subcarrier(
    phi: np.ndarray,
    measurements: np.ndarray,
    max_sparsity: int,
    residual_tol: float,
) -> list[SparseSolution]:
    """Independent OMP per subcarrier (one single-column solution each)."""
    measurements = np.asarray(measurements, dtype=np.complex128)
    if measurements.ndim == 1:
        measurements = measurements[:, None]
    return [
        omp(phi, measurements[:, k], max_sparsity, residual_tol)
        for k in range(measurements.shape[1])
    ]


def reconstruct_channel(dictionary: Dictionary, solution: SparseSolution) -> FrequencyChannel:
    """Full channel from a sparse solution: column k = atoms[:, support] @ coeffs[:, k]."""
    num_subcarriers = solution.coefficients.shape[1]
    if not solution.support:
        return FrequencyChannel(np.zeros((dictionary.atoms.shape[0], num_subcarriers), dtype=np.complex128))
    support = np.asarray(solution.support)
    if support.min() < 0 or support.max() >= dictionary.num_atoms:
        raise ValueError("solution support is out of range for this dictionary")
    return FrequencyChannel(dictionary.atoms[:, support] @ solution.coefficients)


def reconstruct_channel_per_subcarrier(
    dictionary: Dictionary, solutions: list[SparseSolution]
) -> FrequencyChannel:
    """Stack per-subcarrier reconstructions into one full channel."""
    columns = [reconstruct_channel(dictionary, sol).entries[:, 0] for sol in solutions]
    return FrequencyChannel(np.column_stack(columns))


def default_residual_tolerance(num_active: int, noise_power: float) -> float:
    """Expected noise norm per subcarrier at the active sensors: sqrt(Mbar * sigma^2)."""
    return math.sqrt(num_active * noise_power)


@dataclass(frozen=True)
class CsBeamResult:
    """Outcome of a compressive-sensing beam design."""

    beam_index: int
    predicted_rate: float
    channel_transmitter: FrequencyChannel | None
    channel_receiver: FrequencyChannel | None
    status: str  # "ok" or "degenerate_support"


def cs_beam_design(
    sampled_transmitter: np.ndarray,
    sampled_receiver: np.ndarray,
    active: ActiveSet,
    dictionary: Dictionary,
    codebook: ReflectionCodebook,
    budget: LinkBudget,
    max_sparsity: int,
    residual_tol: float,
    mode: str = "joint",
) -> CsBeamResult:
    """Recover both link channels from noisy samples and pick the best codeword.

    The returned index is the exhaustive-search winner over the reconstructed
    channels; callers score it against the true channels. A rank-deficient
    support aborts recovery and falls back to codeword 0 with
    ``status="degenerate_support"``.
    """
    if mode not in ("joint", "per_subcarrier"):
        raise ValueError(f"unknown recovery mode {mode!r}")
    phi = sensing_matrix(dictionary, active)
    try:
        if mode == "joint":
            recovered_t = reconstruct_channel(dictionary, omp(phi, sampled_transmitter, max_sparsity, residual_tol))
            recovered_r = reconstruct_channel(dictionary, omp(phi, sampled_receiver, max_sparsity, residual_tol))
        else:
            recovered_t = reconstruct_channel_per_subcarrier(
                dictionary, omp_per_subcarrier(phi, sampled_transmitter, max_sparsity, residual_tol)
            )
            recovered_r = reconstruct_channel_per_subcarrier(
                dictionary, omp_per_subcarrier(phi, sampled_receiver, max_sparsity, residual_tol)
            )
    except DegenerateSupportError:
        return CsBeamResult(
            beam_index=0,
            predicted_rate=float("nan"),
            channel_transmitter=None,
            channel_receiver=None,
            status="degenerate_support",
        )
    eff: EffectiveChannel = effective_channel(recovered_t, recovered_r)
    index, predicted = exhaustive_search(eff, codebook, budget)
    return CsBeamResult(
        beam_index=index,
        predicted_rate=predicted,
        channel_transmitter=recovered_t,
        channel_receiver=recovered_r,
        status="ok",
    )
