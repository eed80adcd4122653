"""Sparse-sensor surface architecture: active elements and sampled channels.

Only a small number of surface elements are connected to baseband and can
measure the incident channel. An :class:`ActiveSet` is the sorted index list
of those elements; sampling a channel restricts it to those rows. The
effective channel combining both links is the entrywise (Hadamard) product of
the transmitter and receiver channels per subcarrier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FrequencyChannel


@dataclass(frozen=True)
class ActiveSet:
    """Sorted, unique indices of the active channel sensors on the surface."""

    indices: np.ndarray
    total_elements: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        if indices.ndim != 1 or indices.size == 0:
            raise ValueError("active set must be a non-empty 1-D index list")
        if np.any(np.diff(indices) <= 0):
            raise ValueError("active indices must be strictly increasing")
        if indices[0] < 0 or indices[-1] >= self.total_elements:
            raise ValueError("active indices must lie in [0, total_elements)")
        object.__setattr__(self, "indices", indices)

    @property
    def num_active(self) -> int:
        return int(self.indices.size)


def select_active(total_elements: int, num_active: int, rng: np.random.Generator) -> ActiveSet:
    """Uniformly random subset of ``num_active`` sensor positions, sorted."""
    if not 1 <= num_active <= total_elements:
        raise ValueError(f"num_active must be in [1, {total_elements}], got {num_active}")
    chosen = rng.choice(total_elements, size=num_active, replace=False)
    return ActiveSet(indices=np.sort(chosen), total_elements=total_elements)


def sample_channel(channel: FrequencyChannel, active: ActiveSet) -> np.ndarray:
    """Restrict a full channel to the active sensor rows (all subcarriers)."""
    if active.total_elements != channel.num_elements:
        raise ValueError(
            f"active set is over {active.total_elements} elements but channel has {channel.num_elements}"
        )
    return channel.entries[active.indices, :]


@dataclass(frozen=True)
class EffectiveChannel:
    """Per-subcarrier Hadamard product of the two link channels (M x K)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2:
            raise ValueError("effective channel must be an M x K matrix")
        object.__setattr__(self, "entries", entries)

    @property
    def num_elements(self) -> int:
        return self.entries.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.entries.shape[1]


def effective_channel(h_transmitter: FrequencyChannel, h_receiver: FrequencyChannel) -> EffectiveChannel:
    """Entrywise product channel whose inner product with psi gives the end-to-end gain."""
    if h_transmitter.entries.shape != h_receiver.entries.shape:
        raise ValueError(
            f"channel shapes differ: {h_transmitter.entries.shape} vs {h_receiver.entries.shape}"
        )
    return EffectiveChannel(h_transmitter.entries * h_receiver.entries)


def sampled_descriptor(
    sampled_transmitter: np.ndarray,
    sampled_receiver: np.ndarray,
    num_subcarriers_used: int,
) -> np.ndarray:
    """Stacked sampled product channel over the first ``num_subcarriers_used`` subcarriers.

    Output is the column-major vec of the Mbar x K_used matrix of per-subcarrier
    Hadamard products: all Mbar entries of subcarrier 0, then subcarrier 1, ...
    """
    sampled_transmitter = np.asarray(sampled_transmitter)
    sampled_receiver = np.asarray(sampled_receiver)
    if sampled_transmitter.shape != sampled_receiver.shape:
        raise ValueError("sampled channels must have equal shapes")
    if not 1 <= num_subcarriers_used <= sampled_transmitter.shape[1]:
        raise ValueError(
            f"num_subcarriers_used must be in [1, {sampled_transmitter.shape[1]}], got {num_subcarriers_used}"
        )
    product = sampled_transmitter[:, :num_subcarriers_used] * sampled_receiver[:, :num_subcarriers_used]
    return product.flatten(order="F")
