"""Command-line entry points: dataset generation, training, evaluation, sweeps
and channel-file import/validation.

All commands exit 0 on success and nonzero with a one-line diagnostic on
stderr otherwise. The master seed always comes from ``--seed`` when given,
otherwise from the configuration file, so a rerun with the same inputs
produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import harness
from .channel import ChannelImportError, read_path_file
from .codebook import dft_codebook
from .learning import collect_dataset, load_dataset, make_scenario_source, save_dataset
from .mlp import default_layer_sizes, initialize_mlp, load_model, save_model, train
from .sampling import select_active


def _load_config(args) -> harness.ExperimentConfig:
    if not args.config:
        raise harness.ConfigError(["--config is required for this command"])
    config = harness.config_from_json(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if getattr(args, "out", None):
        config.output_path = args.out
    return config


def _cmd_generate_data(args) -> int:
    config = _load_config(args)
    geometry, channel, budget = config.geometry, config.channel, config.budget
    codebook = dft_codebook(geometry)
    n_az = config.cs.n_azimuth or 2 * geometry.m_horizontal
    n_el = config.cs.n_elevation or 2 * geometry.m_vertical
    num_active = config.num_active_list[0]
    size = config.dl.dataset_sizes[0]
    active = select_active(geometry.num_elements, num_active,
                           harness.derive_rng(config.master_seed, harness.STREAM_ACTIVE, 0))
    transmitter_paths = None
    if config.fixed_transmitter:
        fixed = make_scenario_source(geometry, channel, config.num_paths, config.placement, n_az, n_el)
        transmitter_paths, _ = fixed(harness.derive_rng(config.master_seed, harness.STREAM_TRANSMITTER))
    source = make_scenario_source(geometry, channel, config.num_paths, config.placement,
                                  n_az, n_el, transmitter_paths)
    sensor_noise = budget.noise_power if config.sensor_noise_power is None else config.sensor_noise_power
    dataset = collect_dataset(
        source, active, codebook, budget, channel, size,
        sensor_noise, config.dl.num_subcarriers_used,
        harness.derive_rng(config.master_seed, harness.STREAM_COLLECT, 0, 0),
    )
    out = harness.resolve_output_path(args.out or "dataset.npz")
    save_dataset(dataset, out)
    print(f"wrote {size} samples ({dataset.inputs.shape[1]} inputs, "
          f"{dataset.num_codewords} codewords) to {out}")
    return 0


def _cmd_train(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(args.data)
    sizes = config.dl.layer_sizes or default_layer_sizes(dataset.inputs.shape[1], dataset.num_codewords)
    train_cfg = config.dl.train
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    model = initialize_mlp(
        sizes,
        dropout_rate=0.5 if train_cfg.dropout_rate is None else train_cfg.dropout_rate,
        seed=train_cfg.seed,
    )
    log = train(model, dataset.inputs, dataset.targets, train_cfg)
    out = harness.resolve_output_path(args.out or "model.lismlp")
    save_model(model, dataset.delta, out)
    print(f"trained {len(sizes) - 1} layers for {len(log.train_mse)} epochs; "
          f"final train mse {log.train_mse[-1]:.6g}, validation mse {log.validation_mse[-1]:.6g}; "
          f"saved to {out}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    method = args.method or "dl"
    if method not in harness.METHODS:
        print(f"error: unknown method {method!r}", file=sys.stderr)
        return 1
    config.methods = [method] if method != "dl" else ["upper_bound", "dl"]
    if method == "dl":
        if not args.model:
            print("error: evaluate --method dl requires --model", file=sys.stderr)
            return 1
        model, delta = load_model(args.model)
        rows = _evaluate_model_rows(config, model, delta)
    else:
        config.methods = ["upper_bound", method] if method != "upper_bound" else ["upper_bound"]
        rows = harness.run_experiment(config, csv_path=harness.resolve_output_path(
            args.out or config.output_path))
        print(f"wrote {len(rows)} rows to {args.out or config.output_path}")
        return 0
    out = harness.resolve_output_path(args.out or config.output_path)
    harness.write_csv(rows, out)
    ratios = [r.rate_ratio for r in rows if r.method == "dl"]
    print(f"evaluated {len(ratios)} trials; mean rate ratio {np.mean(ratios):.4f}; wrote {out}")
    return 0


def _evaluate_model_rows(config, model, delta):
    """Score a persisted model on fresh scenarios (no retraining)."""
    from .channel import add_noise, frequency_channel
    from .learning import predict_beam
    from .rate import rate_vector
    from .sampling import effective_channel, sample_channel, sampled_descriptor

    geometry, channel, budget = config.geometry, config.channel, config.budget
    codebook = dft_codebook(geometry)
    n_az = config.cs.n_azimuth or 2 * geometry.m_horizontal
    n_el = config.cs.n_elevation or 2 * geometry.m_vertical
    num_active = config.num_active_list[0]
    active = select_active(geometry.num_elements, num_active,
                           harness.derive_rng(config.master_seed, harness.STREAM_ACTIVE, 0))
    transmitter_paths = None
    if config.fixed_transmitter:
        fixed = make_scenario_source(geometry, channel, config.num_paths, config.placement, n_az, n_el)
        transmitter_paths, _ = fixed(harness.derive_rng(config.master_seed, harness.STREAM_TRANSMITTER))
    source = make_scenario_source(geometry, channel, config.num_paths, config.placement,
                                  n_az, n_el, transmitter_paths)
    rows = []
    for trial in range(config.trials):
        paths_t, paths_r = source(harness.derive_rng(config.master_seed, harness.STREAM_SCENARIO, trial))
        h_t = frequency_channel(paths_t, channel, geometry)
        h_r = frequency_channel(paths_r, channel, geometry)
        true_rates = rate_vector(effective_channel(h_t, h_r), codebook, budget)
        optimal = float(true_rates.max())
        sensor_noise = budget.noise_power if config.sensor_noise_power is None else config.sensor_noise_power
        noise_rng = harness.derive_rng(config.master_seed, harness.STREAM_NOISE, 0, trial)
        noisy_t = add_noise(sample_channel(h_t, active), sensor_noise, noise_rng)
        noisy_r = add_noise(sample_channel(h_r, active), sensor_noise, noise_rng)
        descriptor = sampled_descriptor(noisy_t, noisy_r, config.dl.num_subcarriers_used)
        _, n_dl = predict_beam(model, descriptor, delta)
        achieved = float(true_rates[n_dl])
        rows.append(harness.ResultRow(
            method="dl", num_active=num_active, dataset_size=None,
            num_paths=config.num_paths, transmit_power=budget.transmit_power,
            k_b=None, trial=trial, achieved_rate=achieved, optimal_rate=optimal,
            rate_ratio=achieved / optimal if optimal > 0 else 0.0,
        ))
    return rows


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    out = harness.resolve_output_path(args.out or config.output_path)
    rows = harness.run_experiment(config, csv_path=out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_import_channels(args) -> int:
    config, links = read_path_file(args.file)
    total = sum(len(paths) for paths in links.values())
    print(f"{args.file}: {len(links)} links, {total} paths "
          f"(K={config.num_subcarriers}, D={config.num_taps}, "
          f"Ts={config.sample_period:g}, pathloss={config.path_loss:g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lisbeam",
                                     description="Reflection beamforming simulator for sparsely sensed surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--config", help="experiment configuration (JSON)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help=out_help)

    p = sub.add_parser("generate-data", help="collect and persist a training dataset")
    common(p, "dataset output path (.npz)")
    p.set_defaults(func=_cmd_generate_data)

    p = sub.add_parser("train", help="fit and persist a beam predictor")
    common(p, "model output path")
    p.add_argument("--data", required=True, help="dataset file from generate-data")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a model or method on fresh scenarios")
    common(p, "CSV output path")
    p.add_argument("--model", help="model file from train (for --method dl)")
    p.add_argument("--method", help="method to score: dl (default), cs or upper_bound")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run the full configured experiment")
    common(p, "CSV output path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("import-channels", help="read and validate a channel path file")
    p.add_argument("file", help="columnar path file")
    p.set_defaults(func=_cmd_import_channels)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, ChannelImportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
