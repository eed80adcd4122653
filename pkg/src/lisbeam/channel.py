"""Geometric wideband multipath channel model for a planar reflecting surface.

The surface is a uniform planar array (UPA) in the y-z plane. Each propagation
path is a single ray with a complex gain, a delay and azimuth/elevation angles
of arrival. Channels are built per delay tap and transformed to per-subcarrier
frequency-domain vectors for an OFDM system with ``K`` subcarriers.

Conventions fixed here and used everywhere else in the package:

* spatial frequencies ``u = sin(azimuth) * sin(elevation)``,
  ``v = cos(elevation)``;
* array response phase sign ``+j``, element indices starting at 0, so the
  horizontal factor is ``exp(+j * 2*pi * spacing * m_h * u)``;
* the full response is the Kronecker product horizontal (x) vertical, i.e.
  element ``(m_h, m_v)`` sits at flat index ``m_h * m_vertical + m_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

PULSE_SHAPES = ("delta", "sinc", "raised-cosine")


@dataclass(frozen=True)
class PathComponent:
    """One propagation ray: complex gain, delay and arrival angles.

    Angles are stored reduced modulo 2*pi; the delay is in seconds and must
    be non-negative.
    """

    gain: complex
    delay: float
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not np.isfinite(self.delay) or self.delay < 0:
            raise ValueError(f"path delay must be finite and >= 0, got {self.delay}")
        if not np.isfinite(complex(self.gain)):
            raise ValueError("path gain must be finite")
        object.__setattr__(self, "azimuth", float(self.azimuth) % TWO_PI)
        object.__setattr__(self, "elevation", float(self.elevation) % TWO_PI)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: horizontal x vertical element counts and spacing.

    Spacing is in wavelengths (0.5 = half-wavelength).
    """

    m_horizontal: int
    m_vertical: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.m_horizontal < 1 or self.m_vertical < 1:
            raise ValueError("element counts must be >= 1")
        if not self.spacing > 0:
            raise ValueError("element spacing must be > 0")

    @property
    def num_elements(self) -> int:
        return self.m_horizontal * self.m_vertical


@dataclass(frozen=True)
class ChannelConfig:
    """OFDM/channel parameters shared by all links of one scenario.

    ``path_loss`` is the per-link large-scale loss entering the channel as
    ``sqrt(M / path_loss)``; ``pulse`` selects the transmit pulse shape
    evaluated at ``d*sample_period - delay``.
    """

    num_subcarriers: int
    num_taps: int
    sample_period: float
    path_loss: float = 1.0
    pulse: str = "delta"
    rolloff: float = 0.25

    def __post_init__(self):
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be >= 1")
        if not 1 <= self.num_taps <= self.num_subcarriers:
            raise ValueError("num_taps must satisfy 1 <= D <= K")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be > 0")
        if not self.path_loss > 0:
            raise ValueError("path_loss must be > 0")
        if self.pulse not in PULSE_SHAPES:
            raise ValueError(f"pulse must be one of {PULSE_SHAPES}, got {self.pulse!r}")
        if self.pulse == "raised-cosine" and not 0 < self.rolloff <= 1:
            raise ValueError("raised-cosine rolloff must be in (0, 1]")


@dataclass(frozen=True)
class FrequencyChannel:
    """Per-subcarrier channel vectors for one link, as an M x K matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2:
            raise ValueError("channel entries must be an M x K matrix")
        if not np.all(np.isfinite(entries.view(np.float64))):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "entries", entries)

    @property
    def num_elements(self) -> int:
        return self.entries.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.entries.shape[1]


def spatial_frequencies(azimuth: float, elevation: float) -> tuple[float, float]:
    """Map arrival angles to the (u, v) coordinates of the y-z plane UPA."""
    return math.sin(azimuth) * math.sin(elevation), math.cos(elevation)


def uv_grid(num_points: int) -> np.ndarray:
    """Uniform grid of ``num_points`` spatial frequencies covering [-1, 1)."""
    if num_points < 1:
        raise ValueError("grid size must be >= 1")
    return -1.0 + 2.0 * np.arange(num_points) / num_points


def array_response_uv(geometry: ArrayGeometry, u: float, v: float) -> np.ndarray:
    """Array response at spatial frequencies (u, v); all entries unit modulus."""
    phase = 1j * TWO_PI * geometry.spacing
    horizontal = np.exp(phase * u * np.arange(geometry.m_horizontal))
    vertical = np.exp(phase * v * np.arange(geometry.m_vertical))
    return np.kron(horizontal, vertical)


def array_response(geometry: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Array response vector of the surface at the given arrival angles."""
    u, v = spatial_frequencies(azimuth, elevation)
    return array_response_uv(geometry, u, v)


def pulse_amplitude(offsets: np.ndarray, config: ChannelConfig) -> np.ndarray:
    """Evaluate the configured pulse shape at the given time offsets (seconds).

    The delta pulse is 1 within half a sample of zero and 0 elsewhere, so
    delays that are integer multiples of the sample period hit exactly one tap.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    t = offsets / config.sample_period
    if config.pulse == "delta":
        return (np.abs(t) < 0.5).astype(np.float64)
    if config.pulse == "sinc":
        return np.sinc(t)
    # raised cosine; the removable singularity at |t| = 1/(2*rolloff) is
    # filled with the analytic limit pi/4 * sinc(1/(2*rolloff)).
    beta = config.rolloff
    denom = 1.0 - (2.0 * beta * t) ** 2
    singular = np.abs(denom) < 1e-10
    safe = np.where(singular, 1.0, denom)
    value = np.sinc(t) * np.cos(np.pi * beta * t) / safe
    limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * beta))
    return np.where(singular, limit, value)


def _path_arrays(paths: list[PathComponent]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    gains = np.array([p.gain for p in paths], dtype=np.complex128)
    delays = np.array([p.delay for p in paths], dtype=np.float64)
    azimuths = np.array([p.azimuth for p in paths], dtype=np.float64)
    elevations = np.array([p.elevation for p in paths], dtype=np.float64)
    return gains, delays, azimuths, elevations


def _response_matrix(geometry: ArrayGeometry, paths: list[PathComponent]) -> np.ndarray:
    """M x L matrix whose columns are the per-path array responses."""
    return np.column_stack([array_response(geometry, p.azimuth, p.elevation) for p in paths])


def delay_channel(
    paths: list[PathComponent],
    config: ChannelConfig,
    geometry: ArrayGeometry,
    tap_index: int,
) -> np.ndarray:
    """Delay-domain channel vector at one tap: sqrt(M/rho) * sum of path terms."""
    if not paths:
        raise ValueError("path list must not be empty")
    if not 0 <= tap_index < config.num_taps:
        raise ValueError(f"tap_index must be in [0, {config.num_taps}), got {tap_index}")
    gains, delays, _, _ = _path_arrays(paths)
    weights = gains * pulse_amplitude(tap_index * config.sample_period - delays, config)
    scale = math.sqrt(geometry.num_elements / config.path_loss)
    return scale * (_response_matrix(geometry, paths) @ weights)


def frequency_channel(
    paths: list[PathComponent],
    config: ChannelConfig,
    geometry: ArrayGeometry,
) -> FrequencyChannel:
    """Frequency-domain channel: column k is the DFT of the delay taps at k.

    Computed in the compact per-path form: the k-th column equals
    ``A @ beta_k`` with ``beta_{l,k} = sqrt(M/rho) * gain_l *
    sum_d p(d*Ts - delay_l) * exp(-2j*pi*k*d/K)``, which is identical to
    summing ``delay_channel`` over taps.
    """
    if not paths:
        raise ValueError("path list must not be empty")
    gains, delays, _, _ = _path_arrays(paths)
    taps = np.arange(config.num_taps)
    # L x D pulse samples, then D x K DFT phases
    pulse = pulse_amplitude(taps[None, :] * config.sample_period - delays[:, None], config)
    dft = np.exp(-2j * np.pi * np.outer(taps, np.arange(config.num_subcarriers)) / config.num_subcarriers)
    scale = math.sqrt(geometry.num_elements / config.path_loss)
    beta = scale * gains[:, None] * (pulse @ dft)
    return FrequencyChannel(_response_matrix(geometry, paths) @ beta)


def add_noise(values: np.ndarray, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly symmetric complex Gaussian noise, variance per entry.

    ``noise_power`` is the total per-complex-entry variance: real and
    imaginary parts each get variance ``noise_power / 2``.
    """
    if noise_power < 0:
        raise ValueError("noise_power must be >= 0")
    values = np.asarray(values, dtype=np.complex128)
    scale = math.sqrt(noise_power / 2.0)
    noise = rng.standard_normal(values.shape) + 1j * rng.standard_normal(values.shape)
    return values + scale * noise


def feasible_grid_pairs(n_azimuth: int, n_elevation: int) -> np.ndarray:
    """(u, v) grid pairs that map back to real arrival angles (u^2 + v^2 <= 1).

    Returned as an array of shape (n_pairs, 2) in grid scan order (u-major).
    """
    u = uv_grid(n_azimuth)
    v = uv_grid(n_elevation)
    pairs = np.column_stack((np.repeat(u, n_elevation), np.tile(v, n_azimuth)))
    keep = pairs[:, 0] ** 2 + pairs[:, 1] ** 2 <= 1.0 + 1e-12
    return pairs[keep]


def angles_from_uv(u: float, v: float) -> tuple[float, float]:
    """Invert (u, v) to one (azimuth, elevation) pair; requires u^2 + v^2 <= 1."""
    if u * u + v * v > 1.0 + 1e-9:
        raise ValueError(f"(u, v) = ({u}, {v}) has no real angle pair")
    elevation = math.acos(min(1.0, max(-1.0, v)))
    sin_el = math.sin(elevation)
    if sin_el < 1e-12:
        return 0.0, elevation
    azimuth = math.asin(min(1.0, max(-1.0, u / sin_el)))
    return azimuth % TWO_PI, elevation


def synthesize_scenario(
    rng: np.random.Generator,
    geometry: ArrayGeometry,
    config: ChannelConfig,
    num_paths: int,
    placement: str = "uniform",
    n_azimuth: int | None = None,
    n_elevation: int | None = None,
) -> list[PathComponent]:
    """Draw a random multipath scenario for one link.

    Gains are unit-variance complex Gaussian, delays uniform in
    ``[0, (D-1)*Ts]``. With ``placement="on_grid"`` the angles are snapped to
    ``num_paths`` distinct feasible points of the (n_azimuth x n_elevation)
    spatial-frequency grid, which makes the link exactly sparse in the
    matching recovery dictionary.
    """
    if num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    if placement not in ("uniform", "on_grid"):
        raise ValueError(f"unknown placement {placement!r}")
    gains = (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths)) / math.sqrt(2.0)
    delays = rng.uniform(0.0, (config.num_taps - 1) * config.sample_period, num_paths)
    if placement == "uniform":
        azimuths = rng.uniform(0.0, TWO_PI, num_paths)
        elevations = rng.uniform(0.0, TWO_PI, num_paths)
    else:
        if n_azimuth is None or n_elevation is None:
            raise ValueError("on_grid placement requires n_azimuth and n_elevation")
        pairs = feasible_grid_pairs(n_azimuth, n_elevation)
        if num_paths > len(pairs):
            raise ValueError(f"cannot place {num_paths} distinct paths on {len(pairs)} feasible grid points")
        chosen = rng.choice(len(pairs), size=num_paths, replace=False)
        angles = [angles_from_uv(pairs[i, 0], pairs[i, 1]) for i in chosen]
        azimuths = np.array([a for a, _ in angles])
        elevations = np.array([e for _, e in angles])
    return [
        PathComponent(gain=gains[i], delay=float(delays[i]), azimuth=float(azimuths[i]), elevation=float(elevations[i]))
        for i in range(num_paths)
    ]


# ---------------------------------------------------------------------------
# Channel import/export: columnar text, one record per path per link, with a
# header line carrying the shared link parameters:
#   # pathloss=<float> K=<int> D=<int> Ts=<float>
#   link_id, path_index, gain_re, gain_im, delay_s, azimuth_rad, elevation_rad
# ---------------------------------------------------------------------------


class ChannelImportError(ValueError):
    """Raised when an imported channel file violates the format invariants."""


def write_path_file(path: str, links: dict[int, list[PathComponent]], config: ChannelConfig) -> None:
    """Write links to the columnar path-file format (see module docstring)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"# pathloss={config.path_loss!r} K={config.num_subcarriers} "
            f"D={config.num_taps} Ts={config.sample_period!r}\n"
        )
        fh.write("# link_id, path_index, gain_re, gain_im, delay_s, azimuth_rad, elevation_rad\n")
        for link_id in sorted(links):
            for index, p in enumerate(links[link_id]):
                fh.write(
                    f"{link_id}, {index}, {p.gain.real!r}, {p.gain.imag!r}, "
                    f"{p.delay!r}, {p.azimuth!r}, {p.elevation!r}\n"
                )


def _parse_header(line: str) -> dict[str, float]:
    fields = {}
    for token in line.lstrip("#").split():
        if "=" not in token:
            raise ChannelImportError(f"malformed header token {token!r}")
        key, value = token.split("=", 1)
        try:
            fields[key] = float(value)
        except ValueError as exc:
            raise ChannelImportError(f"header field {key}={value!r} is not numeric") from exc
    for key in ("pathloss", "K", "D", "Ts"):
        if key not in fields:
            raise ChannelImportError(f"header is missing field {key!r}")
    return fields


def read_path_file(path: str) -> tuple[ChannelConfig, dict[int, list[PathComponent]]]:
    """Read and validate a channel path file.

    Records with out-of-range values are rejected with the offending
    ``link_id/path_index`` named in the error. Angles must already lie in
    [0, 2*pi) -- the importer does not silently wrap file data.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header = None
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is None and "pathloss=" in line:
                header = _parse_header(line)
            continue
        if header is None:
            raise ChannelImportError("first non-comment line appears before the pathloss header")
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 7:
            raise ChannelImportError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            link_id, path_index = int(parts[0]), int(parts[1])
            values = [float(p) for p in parts[2:]]
        except ValueError as exc:
            raise ChannelImportError(f"line {lineno}: non-numeric field ({exc})") from exc
        records.append((link_id, path_index, values))
    if header is None:
        raise ChannelImportError("missing '# pathloss=... K=... D=... Ts=...' header line")
    try:
        config = ChannelConfig(
            num_subcarriers=int(header["K"]),
            num_taps=int(header["D"]),
            sample_period=header["Ts"],
            path_loss=header["pathloss"],
        )
    except ValueError as exc:
        raise ChannelImportError(f"invalid header parameters: {exc}") from exc

    links: dict[int, list[PathComponent]] = {}
    for link_id, path_index, (gain_re, gain_im, delay, azimuth, elevation) in records:
        record_name = f"record {link_id}/{path_index}"
        if not all(map(math.isfinite, (gain_re, gain_im, delay, azimuth, elevation))):
            raise ChannelImportError(f"{record_name}: non-finite value")
        if delay < 0:
            raise ChannelImportError(f"{record_name}: delay {delay} < 0")
        if not 0 <= azimuth < TWO_PI:
            raise ChannelImportError(f"{record_name}: azimuth {azimuth} outside [0, 2*pi)")
        if not 0 <= elevation < TWO_PI:
            raise ChannelImportError(f"{record_name}: elevation {elevation} outside [0, 2*pi)")
        links.setdefault(link_id, []).append(
            PathComponent(gain=complex(gain_re, gain_im), delay=delay, azimuth=azimuth, elevation=elevation)
        )
    return config, links
