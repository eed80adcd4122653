"""Experiment orchestration: seeded end-to-end runs, sweeps and CSV results.

One experiment compares the exhaustive-search upper bound, the
compressive-sensing design and the learned predictor on common scenarios.
Within a trial all methods see the same scenario and the same noisy sampled
channels (paired comparisons); the scenario stream does not depend on the
number of active sensors, so sweeps over the active-set size are paired too.

Every random draw comes from a generator derived from the master seed and a
fixed stream/counter key (see :func:`derive_rng`), which makes reruns, and
any parallel execution of the trial loop, bit-reproducible. Result rows are
sorted deterministically before the CSV is written; wall-clock timings are
kept on the in-memory rows only so that identical configurations always
produce byte-identical CSV files.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, ChannelConfig
from .codebook import ReflectionCodebook, dft_codebook
from .learning import Dataset, collect_dataset, make_scenario_source, predict_beam, top_k_refine
from .mlp import MlpModel, TrainConfig, default_layer_sizes, initialize_mlp, train
from .rate import LinkBudget, exhaustive_search, rate_vector
from .recovery import build_dictionary, cs_beam_design, default_residual_tolerance
from .sampling import effective_channel, sample_channel, sampled_descriptor, select_active
from .channel import add_noise, frequency_channel

METHODS = ("upper_bound", "cs", "dl", "dl_topk")

# Stream identifiers for the counter-based seed derivation.
STREAM_ACTIVE = 1
STREAM_SCENARIO = 2
STREAM_NOISE = 3
STREAM_COLLECT = 4
STREAM_TRAIN = 5
STREAM_TRANSMITTER = 6

OUTPUT_DIR_ENV = "LISBEAM_OUT"


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` of the experiment: seeded by the tuple
    (master_seed, *key) so every (stream, counter...) pair is independent
    and reproducible regardless of execution order."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, *key)))


def derive_seed(master_seed: int, *key: int) -> int:
    """Single integer seed for components that take a scalar seed."""
    return int(np.random.SeedSequence((master_seed, *key)).generate_state(1)[0])


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists dotted field paths."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration: " + "; ".join(problems))


@dataclass
class CsSettings:
    """Compressive-sensing parameters; grid sizes default to twice the array."""

    n_azimuth: int | None = None
    n_elevation: int | None = None
    max_sparsity: int | None = None  # defaults to the scenario path count
    residual_tol: float | None = None  # defaults to sqrt(Mbar * noise_power)
    mode: str = "joint"


@dataclass
class DlSettings:
    """Learned-predictor parameters."""

    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=100))
    num_subcarriers_used: int = 8
    layer_sizes: list[int] | None = None  # defaults to [in, N, 4N, 4N, N]
    dataset_sizes: list[int] = field(default_factory=lambda: [1000])
    top_k: list[int] = field(default_factory=lambda: [2])


@dataclass
class ExperimentConfig:
    """Everything one sweep needs; see README for the JSON key names."""

    geometry: ArrayGeometry
    channel: ChannelConfig
    budget: LinkBudget
    num_active_list: list[int]
    methods: list[str] = field(default_factory=lambda: ["upper_bound", "cs"])
    codebook: str = "dft"
    num_paths: int = 1
    placement: str = "on_grid"
    fixed_transmitter: bool = True
    trials: int = 10
    master_seed: int = 0
    output_path: str = "results.csv"
    sensor_noise_power: float | None = None  # None: reuse budget.noise_power
    cs: CsSettings = field(default_factory=CsSettings)
    dl: DlSettings = field(default_factory=DlSettings)

    def validate(self) -> None:
        problems = []
        m = self.geometry.num_elements
        for i, mbar in enumerate(self.num_active_list):
            if not 1 <= mbar <= m:
                problems.append(f"num_active_list[{i}]: {mbar} outside [1, {m}]")
        if not self.num_active_list:
            problems.append("num_active_list: must not be empty")
        for name in self.methods:
            if name not in METHODS:
                problems.append(f"methods: unknown method {name!r}")
        if self.codebook != "dft":
            problems.append(f"codebook: unknown codebook {self.codebook!r}")
        if self.trials < 1:
            problems.append("trials: must be >= 1")
        if self.num_paths < 1:
            problems.append("num_paths: must be >= 1")
        if self.placement not in ("uniform", "on_grid"):
            problems.append(f"placement: unknown placement {self.placement!r}")
        if self.channel.num_subcarriers != self.budget.num_subcarriers:
            problems.append("budget.num_subcarriers: must equal channel.num_subcarriers")
        if self.cs.mode not in ("joint", "per_subcarrier"):
            problems.append(f"cs.mode: unknown mode {self.cs.mode!r}")
        if self.sensor_noise_power is not None and self.sensor_noise_power < 0:
            problems.append("sensor_noise_power: must be >= 0")
        if not 1 <= self.dl.num_subcarriers_used <= self.channel.num_subcarriers:
            problems.append("dl.num_subcarriers_used: outside [1, K]")
        n_cb = m if self.codebook == "dft" else 0
        for i, k in enumerate(self.dl.top_k):
            if not 1 <= k <= n_cb:
                problems.append(f"dl.top_k[{i}]: {k} outside [1, {n_cb}]")
        for i, s in enumerate(self.dl.dataset_sizes):
            if s < 1:
                problems.append(f"dl.dataset_sizes[{i}]: must be >= 1")
        if problems:
            raise ConfigError(problems)


def config_to_json(config: ExperimentConfig, path: str) -> None:
    """Write a configuration as a JSON document with the documented keys."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from parsed JSON."""
    try:
        geometry = ArrayGeometry(**raw["geometry"])
        channel = ChannelConfig(**raw["channel"])
        budget = LinkBudget(**raw["budget"])
        cs = CsSettings(**raw.get("cs", {}))
        dl_raw = dict(raw.get("dl", {}))
        train = TrainConfig(**dl_raw.pop("train", {"epochs": 100}))
        dl = DlSettings(train=train, **dl_raw)
        top = {
            k: v
            for k, v in raw.items()
            if k not in ("geometry", "channel", "budget", "cs", "dl")
        }
        config = ExperimentConfig(geometry=geometry, channel=channel, budget=budget, cs=cs, dl=dl, **top)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from exc
    config.validate()
    return config


def config_from_json(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


@dataclass
class ResultRow:
    """One scored (method, sweep point, trial) outcome."""

    method: str
    num_active: int
    dataset_size: int | None
    num_paths: int
    transmit_power: float
    k_b: int | None
    trial: int
    achieved_rate: float
    optimal_rate: float
    rate_ratio: float
    status: str = "ok"
    wall_time_ms: float = 0.0  # in-memory only; not written to the CSV


CSV_COLUMNS = (
    "method",
    "num_active",
    "dataset_size",
    "num_paths",
    "transmit_power",
    "k_b",
    "trial",
    "achieved_rate",
    "optimal_rate",
    "rate_ratio",
    "status",
)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(rows: list[ResultRow], path: str) -> None:
    """Write rows sorted deterministically, floats at 12 significant digits."""
    rows = sorted(
        rows,
        key=lambda r: (
            r.method,
            r.num_active,
            -1 if r.dataset_size is None else r.dataset_size,
            r.num_paths,
            r.transmit_power,
            -1 if r.k_b is None else r.k_b,
            r.trial,
        ),
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(getattr(row, col)) for col in CSV_COLUMNS) + "\n")


def resolve_output_path(path: str) -> str:
    """Relative outputs land in $LISBEAM_OUT when it is set."""
    if os.path.isabs(path):
        return path
    base = os.environ.get(OUTPUT_DIR_ENV, "")
    return os.path.join(base, path) if base else path


def _sensor_noise(config: ExperimentConfig) -> float:
    if config.sensor_noise_power is not None:
        return config.sensor_noise_power
    return config.budget.noise_power


def _train_predictor(config: ExperimentConfig, active, codebook, budget, source, num_samples: int,
                     seed_key: tuple[int, ...]) -> tuple[MlpModel, float]:
    """Collect a training set and fit a fresh predictor for one sweep point."""
    rng = derive_rng(config.master_seed, STREAM_COLLECT, *seed_key)
    dataset = collect_dataset(
        source, active, codebook, budget, config.channel,
        num_samples, _sensor_noise(config), config.dl.num_subcarriers_used, rng,
    )
    sizes = config.dl.layer_sizes or default_layer_sizes(dataset.inputs.shape[1], codebook.num_codewords)
    train_cfg = dataclasses.replace(
        config.dl.train, seed=derive_seed(config.master_seed, STREAM_TRAIN, *seed_key)
    )
    model = initialize_mlp(sizes, dropout_rate=0.5 if train_cfg.dropout_rate is None else train_cfg.dropout_rate,
                           seed=train_cfg.seed)
    train(model, dataset.inputs, dataset.targets, train_cfg)
    return model, dataset.delta


def run_experiment(config: ExperimentConfig, csv_path: str | None = None) -> list[ResultRow]:
    """Run the configured sweep and write the CSV; returns the result rows.

    Per-trial failures are recorded as rows with a non-"ok" status and the
    run continues.
    """
    config.validate()
    geometry, channel, budget = config.geometry, config.channel, config.budget
    codebook = dft_codebook(geometry)
    n_az = config.cs.n_azimuth or 2 * geometry.m_horizontal
    n_el = config.cs.n_elevation or 2 * geometry.m_vertical
    dictionary = build_dictionary(geometry, n_az, n_el)
    max_sparsity = config.cs.max_sparsity or config.num_paths

    transmitter_paths = None
    if config.fixed_transmitter:
        fixed_source = make_scenario_source(
            geometry, channel, config.num_paths, config.placement, n_az, n_el
        )
        transmitter_paths, _ = fixed_source(derive_rng(config.master_seed, STREAM_TRANSMITTER))
    source = make_scenario_source(
        geometry, channel, config.num_paths, config.placement, n_az, n_el, transmitter_paths
    )

    rows: list[ResultRow] = []
    power = budget.transmit_power
    for i_m, num_active in enumerate(config.num_active_list):
        active = select_active(geometry.num_elements, num_active,
                               derive_rng(config.master_seed, STREAM_ACTIVE, i_m))
        residual_tol = (
            config.cs.residual_tol
            if config.cs.residual_tol is not None
            else default_residual_tolerance(num_active, _sensor_noise(config))
        )
        predictors: dict[int, tuple[MlpModel, float]] = {}
        if "dl" in config.methods or "dl_topk" in config.methods:
            for i_s, size in enumerate(config.dl.dataset_sizes):
                predictors[size] = _train_predictor(
                    config, active, codebook, budget, source, size, (i_m, i_s)
                )

        for trial in range(config.trials):
            started = time.perf_counter()
            # scenario stream is independent of the active-set size so that
            # sweeps over num_active are paired trial for trial
            paths_t, paths_r = source(derive_rng(config.master_seed, STREAM_SCENARIO, trial))
            h_t = frequency_channel(paths_t, channel, geometry)
            h_r = frequency_channel(paths_r, channel, geometry)
            true_rates = rate_vector(effective_channel(h_t, h_r), codebook, budget)
            best_index = int(np.argmax(true_rates))
            optimal = float(true_rates[best_index])
            noise_rng = derive_rng(config.master_seed, STREAM_NOISE, i_m, trial)
            noisy_t = add_noise(sample_channel(h_t, active), _sensor_noise(config), noise_rng)
            noisy_r = add_noise(sample_channel(h_r, active), _sensor_noise(config), noise_rng)
            elapsed = lambda: 1e3 * (time.perf_counter() - started)

            def add_row(method, achieved, *, dataset_size=None, k_b=None, status="ok"):
                rows.append(
                    ResultRow(
                        method=method,
                        num_active=num_active,
                        dataset_size=dataset_size,
                        num_paths=config.num_paths,
                        transmit_power=power,
                        k_b=k_b,
                        trial=trial,
                        achieved_rate=achieved,
                        optimal_rate=optimal,
                        rate_ratio=achieved / optimal if optimal > 0 else 0.0,
                        status=status,
                        wall_time_ms=elapsed(),
                    )
                )

            if "upper_bound" in config.methods:
                add_row("upper_bound", optimal)
            if "cs" in config.methods:
                result = cs_beam_design(
                    noisy_t, noisy_r, active, dictionary, codebook, budget,
                    max_sparsity, residual_tol, config.cs.mode,
                )
                add_row("cs", float(true_rates[result.beam_index]), status=result.status)
            if "dl" in config.methods or "dl_topk" in config.methods:
                descriptor = sampled_descriptor(noisy_t, noisy_r, config.dl.num_subcarriers_used)
                for size, (model, delta) in predictors.items():
                    predicted, n_dl = predict_beam(model, descriptor, delta)
                    if "dl" in config.methods:
                        add_row("dl", float(true_rates[n_dl]), dataset_size=size)
                    if "dl_topk" in config.methods:
                        for k in config.dl.top_k:
                            _, refined = top_k_refine(predicted, k, lambda n: float(true_rates[n]))
                            add_row("dl_topk", refined, dataset_size=size, k_b=k)

    if csv_path is None:
        csv_path = resolve_output_path(config.output_path)
    write_csv(rows, csv_path)
    return rows
