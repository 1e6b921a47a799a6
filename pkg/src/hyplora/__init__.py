"""Hyperbolicity diagnostics for token embeddings and low-rank
adaptation on the Lorentz manifold."""

__version__ = "0.1.0"

from .adapter import (
    CURVATURE_GRID,
    AdapterParams,
    adapter_gradients,
    euclidean_lora_forward,
    hyplora_forward,
    hyplora_update_closed,
    init_adapter_params,
    tangent_lora_forward,
    taylor_delta_approx,
    taylor_delta_third_order,
)
from .errors import (
    DegenerateFitError,
    DimensionError,
    DivergenceError,
    FormatError,
    InsufficientPointsError,
    ManifoldError,
    ValidationError,
)
from .graphs import Graph, generate_reference_graph
from .hyperbolicity import (
    DistanceMatrix,
    HyperbolicityResult,
    delta_four_tuple,
    delta_over_all_quadruples,
    estimate_delta,
    exact_delta,
    graph_shortest_paths,
    gromov_product,
    pairwise_euclidean,
    prompt_level_delta,
    sample_sphere_metric,
)
from .lorentz import (
    BOOST,
    ROTATION,
    CurvedSpace,
    LorentzPoint,
    TangentAtOrigin,
    exp_map_origin,
    lift_to_hyperboloid,
    llr_transform,
    log_map_origin,
    lorentz_distance,
    lorentz_inner,
)
from .tokenstats import (
    FrequencyTable,
    PowerLawFit,
    count_frequencies,
    fit_power_law,
    norm_frequency_bins,
    sample_zipf_counts,
    tokens_in_norm_range,
)
from .toy import (
    HierarchicalDataset,
    ToyModelConfig,
    TrainReport,
    build_model,
    generate_hierarchical_dataset,
    grad_check_model,
    train,
)
