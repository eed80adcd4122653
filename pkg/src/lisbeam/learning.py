"""Learned beam prediction from sampled-channel environment descriptors.

Dataset collection mirrors the online system operation: per coherence block,
the surface measures noisy sampled channels from both links, exhaustively
sweeps the codebook to obtain the per-codeword rate vector, and stores the
pair. Descriptors are scaled by one per-dataset constant (the max absolute
entry) and split into interleaved real/imaginary parts; rate targets are
scaled per sample by their own maximum so every receiver counts equally.
At prediction time the network scores all codewords from a fresh descriptor;
optionally the top-k predicted beams are refined against true rates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import (
    ArrayGeometry,
    ChannelConfig,
    PathComponent,
    add_noise,
    frequency_channel,
    synthesize_scenario,
)
from .codebook import ReflectionCodebook
from .mlp import MlpModel, forward
from .rate import LinkBudget, rate_vector
from .sampling import ActiveSet, effective_channel, sample_channel, sampled_descriptor

ScenarioSource = Callable[[np.random.Generator], tuple[list[PathComponent], list[PathComponent]]]


class AllZeroRatesWarning(UserWarning):
    """A rate vector was identically zero and could not be normalized."""


def compute_delta(descriptors: np.ndarray) -> float:
    """Largest absolute entry over the whole descriptor set (the input scale)."""
    descriptors = np.asarray(descriptors)
    if descriptors.size == 0:
        raise ValueError("descriptor set must not be empty")
    delta = float(np.max(np.abs(descriptors)))
    if delta == 0.0:
        raise ValueError("descriptor set is all zero; no usable input scale")
    return delta


def build_input(descriptor: np.ndarray, delta: float) -> np.ndarray:
    """Scale a complex descriptor by 1/delta and interleave (re, im) pairs."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    descriptor = np.asarray(descriptor, dtype=np.complex128).ravel() / delta
    out = np.empty(2 * descriptor.size, dtype=np.float64)
    out[0::2] = descriptor.real
    out[1::2] = descriptor.imag
    return out


def normalize_targets(rates: np.ndarray) -> np.ndarray:
    """Scale a rate vector by its maximum; all-zero input is returned as is
    (flagged with :class:`AllZeroRatesWarning`)."""
    rates = np.asarray(rates, dtype=np.float64)
    if rates.size == 0:
        raise ValueError("rate vector must not be empty")
    peak = rates.max()
    if peak == 0.0:
        warnings.warn("all-zero rate vector; targets left at zero", AllZeroRatesWarning)
        return np.zeros_like(rates)
    return rates / peak


@dataclass(frozen=True)
class DatasetSample:
    """One (normalized descriptor, normalized rate vector) training pair."""

    descriptor: np.ndarray
    targets: np.ndarray
    raw_max_rate: float
    scenario_id: int


@dataclass
class Dataset:
    """Collected samples in array form plus the frozen input scale."""

    inputs: np.ndarray  # S x (2 * Mbar * K_dl), real
    targets: np.ndarray  # S x N_cb, in [0, 1]
    raw_max_rates: np.ndarray  # S
    scenario_ids: np.ndarray  # S
    delta: float
    num_active: int
    num_subcarriers_used: int
    noise_power: float

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def num_codewords(self) -> int:
        return self.targets.shape[1]

    def __getitem__(self, index: int) -> DatasetSample:
        return DatasetSample(
            descriptor=self.inputs[index],
            targets=self.targets[index],
            raw_max_rate=float(self.raw_max_rates[index]),
            scenario_id=int(self.scenario_ids[index]),
        )


def make_scenario_source(
    geometry: ArrayGeometry,
    config: ChannelConfig,
    num_paths: int,
    placement: str = "uniform",
    n_azimuth: int | None = None,
    n_elevation: int | None = None,
    transmitter_paths: list[PathComponent] | None = None,
) -> ScenarioSource:
    """Per-block scenario generator for (transmitter, receiver) path lists.

    With ``transmitter_paths`` given, the transmitter link is held fixed and
    only the receiver moves between blocks (one terminal roaming a coverage
    area); otherwise both links are redrawn.
    """

    def draw(rng: np.random.Generator):
        if transmitter_paths is None:
            paths_t = synthesize_scenario(rng, geometry, config, num_paths, placement, n_azimuth, n_elevation)
        else:
            paths_t = transmitter_paths
        paths_r = synthesize_scenario(rng, geometry, config, num_paths, placement, n_azimuth, n_elevation)
        return paths_t, paths_r

    return draw


def collect_dataset(
    scenario_source: ScenarioSource,
    active: ActiveSet,
    codebook: ReflectionCodebook,
    budget: LinkBudget,
    config: ChannelConfig,
    num_samples: int,
    noise_power: float,
    num_subcarriers_used: int,
    rng: np.random.Generator,
) -> Dataset:
    """Collect ``num_samples`` (descriptor, rate-vector) pairs.

    Per block: draw a scenario, build both full channels, exhaustively
    evaluate the codebook on the true effective channel (noiseless feedback),
    and measure noisy sampled channels at the active sensors. The input scale
    delta and target normalization are applied in one dataset-level pass at
    the end.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    geometry = codebook.geometry
    descriptor_len = active.num_active * num_subcarriers_used
    raw_descriptors = np.zeros((num_samples, descriptor_len), dtype=np.complex128)
    targets = np.zeros((num_samples, codebook.num_codewords))
    raw_max = np.zeros(num_samples)
    for s in range(num_samples):
        paths_t, paths_r = scenario_source(rng)
        h_t = frequency_channel(paths_t, config, geometry)
        h_r = frequency_channel(paths_r, config, geometry)
        rates = rate_vector(effective_channel(h_t, h_r), codebook, budget)
        noisy_t = add_noise(sample_channel(h_t, active), noise_power, rng)
        noisy_r = add_noise(sample_channel(h_r, active), noise_power, rng)
        raw_descriptors[s] = sampled_descriptor(noisy_t, noisy_r, num_subcarriers_used)
        targets[s] = normalize_targets(rates)
        raw_max[s] = rates.max()
    delta = compute_delta(raw_descriptors)
    # interleave (re, im) per entry, matching build_input
    inputs = np.empty((num_samples, 2 * descriptor_len))
    inputs[:, 0::2] = raw_descriptors.real / delta
    inputs[:, 1::2] = raw_descriptors.imag / delta
    return Dataset(
        inputs=inputs,
        targets=targets,
        raw_max_rates=raw_max,
        scenario_ids=np.arange(num_samples, dtype=np.int64),
        delta=delta,
        num_active=active.num_active,
        num_subcarriers_used=num_subcarriers_used,
        noise_power=noise_power,
    )


def predict_beam(model: MlpModel, descriptor: np.ndarray, delta: float) -> tuple[np.ndarray, int]:
    """Predicted (normalized) rates for every codeword and the argmax index."""
    predicted = forward(model, build_input(descriptor, delta), mode="eval")
    return predicted, int(np.argmax(predicted))


def top_k_refine(
    predicted_rates: np.ndarray,
    k: int,
    true_rate: Callable[[int], float],
) -> tuple[int, float]:
    """Evaluate the k most promising predicted beams against true rates.

    Simulates online beam training over the shortlist: the k highest-predicted
    codewords are scored with ``true_rate`` and the best one is kept (ties by
    lowest codeword index).
    """
    predicted_rates = np.asarray(predicted_rates)
    if not 1 <= k <= predicted_rates.size:
        raise ValueError(f"k must be in [1, {predicted_rates.size}], got {k}")
    candidates = np.argsort(-predicted_rates, kind="stable")[:k]
    achieved = np.array([true_rate(int(n)) for n in candidates])
    best_rate = achieved.max()
    best_index = int(min(candidates[achieved == best_rate]))
    return best_index, float(best_rate)


def evaluate_sample(
    model: MlpModel,
    delta: float,
    descriptor: np.ndarray,
    true_rates: np.ndarray,
    top_k: int = 1,
) -> tuple[int, float]:
    """Predict on one descriptor and score against the true rate vector."""
    predicted, _ = predict_beam(model, descriptor, delta)
    return top_k_refine(predicted, top_k, lambda n: float(true_rates[n]))


# ---------------------------------------------------------------------------
# Dataset container: single .npz with the sample arrays plus the header
# scalars (num_active, K_dl, N_cb, S, noise power, delta).
# ---------------------------------------------------------------------------


def save_dataset(dataset: Dataset, path: str) -> None:
    np.savez(
        path,
        inputs=dataset.inputs,
        targets=dataset.targets,
        raw_max_rates=dataset.raw_max_rates,
        scenario_ids=dataset.scenario_ids,
        delta=np.float64(dataset.delta),
        num_active=np.int64(dataset.num_active),
        num_subcarriers_used=np.int64(dataset.num_subcarriers_used),
        num_samples=np.int64(len(dataset)),
        num_codewords=np.int64(dataset.num_codewords),
        noise_power=np.float64(dataset.noise_power),
    )


def load_dataset(path: str) -> Dataset:
    with np.load(path) as data:
        return Dataset(
            inputs=data["inputs"],
            targets=data["targets"],
            raw_max_rates=data["raw_max_rates"],
            scenario_ids=data["scenario_ids"],
            delta=float(data["delta"]),
            num_active=int(data["num_active"]),
            num_subcarriers_used=int(data["num_subcarriers_used"]),
            noise_power=float(data["noise_power"]),
        )
