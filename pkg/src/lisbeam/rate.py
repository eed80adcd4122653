"""Achievable-rate evaluation and exhaustive codebook search.

The rate of an interaction vector psi over an effective channel is the
per-subcarrier average of ``log2(1 + SNR * |sum_m eff[m, k] * psi[m]|^2)``
with ``SNR = P_T / (K * noise_power)``. The exhaustive search over a codebook
is the genie-aided upper bound used to score every other method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import ReflectionCodebook
from .sampling import EffectiveChannel


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, per-subcarrier noise power and subcarrier count."""

    transmit_power: float
    noise_power: float
    num_subcarriers: int

    def __post_init__(self):
        if not self.transmit_power > 0:
            raise ValueError("transmit_power must be > 0")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be >= 1")

    @property
    def snr(self) -> float:
        return self.transmit_power / (self.num_subcarriers * self.noise_power)


def _check_dimensions(eff: EffectiveChannel, budget: LinkBudget) -> None:
    if eff.num_subcarriers != budget.num_subcarriers:
        raise ValueError(
            f"effective channel has {eff.num_subcarriers} subcarriers, budget says {budget.num_subcarriers}"
        )


def achievable_rate(eff: EffectiveChannel, psi: np.ndarray, budget: LinkBudget) -> float:
    """Rate (bits/s/Hz) achieved by one unit-modulus interaction vector."""
    psi = np.asarray(psi, dtype=np.complex128)
    _check_dimensions(eff, budget)
    if psi.shape != (eff.num_elements,):
        raise ValueError(f"psi must have shape ({eff.num_elements},), got {psi.shape}")
    if np.max(np.abs(np.abs(psi) - 1.0)) > 1e-6:
        raise ValueError("psi entries must be unit modulus")
    gains = eff.entries.T @ psi
    return float(np.mean(np.log2(1.0 + budget.snr * np.abs(gains) ** 2)))


def rate_vector(eff: EffectiveChannel, codebook: ReflectionCodebook, budget: LinkBudget) -> np.ndarray:
    """Rates of every codeword; entry n is the rate achieved by column n."""
    _check_dimensions(eff, budget)
    if codebook.columns.shape[0] != eff.num_elements:
        raise ValueError(
            f"codebook is over {codebook.columns.shape[0]} elements, channel has {eff.num_elements}"
        )
    gains = eff.entries.T @ codebook.columns  # K x N
    return np.mean(np.log2(1.0 + budget.snr * np.abs(gains) ** 2), axis=0)


def exhaustive_search(
    eff: EffectiveChannel, codebook: ReflectionCodebook, budget: LinkBudget
) -> tuple[int, float]:
    """Best codeword index and its rate; ties broken by lowest index."""
    rates = rate_vector(eff, codebook, budget)
    best = int(np.argmax(rates))
    return best, float(rates[best])
