"""Reflection beamforming for large intelligent surfaces with sparse sensors.

A numpy library that simulates a planar reflecting surface assisting a
single-antenna link over a wideband OFDM geometric channel, and compares two
ways of steering it from a handful of active channel sensors -- sparse channel
recovery (matching pursuit over an array-response dictionary) and a learned
beam predictor -- against the exhaustive-search upper bound.
"""

from .channel import (
    ArrayGeometry,
    ChannelConfig,
    ChannelImportError,
    FrequencyChannel,
    PathComponent,
    add_noise,
    array_response,
    array_response_uv,
    delay_channel,
    frequency_channel,
    read_path_file,
    spatial_frequencies,
    synthesize_scenario,
    uv_grid,
    write_path_file,
)
from .codebook import ReflectionCodebook, codebook_spatial_frequencies, dft_codebook
from .harness import (
    ConfigError,
    CsSettings,
    DlSettings,
    ExperimentConfig,
    ResultRow,
    config_from_json,
    config_to_json,
    derive_rng,
    run_experiment,
    write_csv,
)
from .learning import (
    AllZeroRatesWarning,
    Dataset,
    DatasetSample,
    build_input,
    collect_dataset,
    compute_delta,
    load_dataset,
    make_scenario_source,
    normalize_targets,
    predict_beam,
    save_dataset,
    top_k_refine,
)
from .mlp import (
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    TrainLog,
    default_layer_sizes,
    forward,
    initialize_mlp,
    load_model,
    loss_and_gradients,
    mse,
    save_model,
    train,
)
from .rate import LinkBudget, achievable_rate, exhaustive_search, rate_vector
from .recovery import (
    CsBeamResult,
    DegenerateSupportError,
    Dictionary,
    SparseSolution,
    build_dictionary,
    cs_beam_design,
    default_residual_tolerance,
    omp,
    omp_per_subcarrier,
    reconstruct_channel,
    reconstruct_channel_per_subcarrier,
    sensing_matrix,
)
from .sampling import (
    ActiveSet,
    EffectiveChannel,
    effective_channel,
    sample_channel,
    sampled_descriptor,
    select_active,
)

__version__ = "0.1.0"
