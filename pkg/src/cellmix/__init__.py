"""cellmix: a numerical laboratory for cellular mixing flows on the unit square.

Subpackages build up in layers: domain primitives (grids, tilings, tracers,
schedules), mixing diagnostics (geometric and functional scales, length
scales), Sobolev machinery (gradient and fractional seminorms), basic mixing
blocks (map and field layers), staged self-similar assembly, Lagrangian
analysis (flow maps, stretch factors, trapping), and the experiment harness
behind the ``cellmix`` command line tool.
"""

from .assembly import (
    CellularEvolution,
    StagedField,
    evolve,
    fine_tiling_rescale,
    interior_unmixedness_probe,
    patch_stage,
)
from .blocks import (
    FieldBlock,
    MapBlock,
    realize_block,
    reference_field_block,
    reference_map_block,
    validate_block,
)
from .diagnostics import (
    characteristic_length_scale,
    functional_mixing_scale,
    geometric_mixing_scale,
    h_minus1_duality_lower_bound,
    h_minus1_torus,
)
from .domain import (
    BlockParams,
    Grid,
    Schedule,
    Tiling,
    TracerField,
    checkerboard,
    half_split,
    make_binary_tracer,
    make_tiling,
    rescale_schedule,
    tile_average,
    tile_averages,
    time_steps,
)
from .errors import CellmixError, ConfigError
from .harness import (
    DecayFit,
    ExperimentConfig,
    decay_report,
    emit_outputs,
    fit_decay,
    run_decay_experiment,
    run_diagnostics,
    run_mincost_experiment,
    run_scaling_experiment,
    run_universality_experiment,
    run_upper_bound_experiment,
    upper_bound_report,
)
from .lagrangian import (
    FlowMap,
    StretchStatistics,
    flow_map_from_staged,
    integrate_flow,
    mincost_experiment,
    occupancy_deviation,
    restricted_lipschitz,
    trapping_radius,
    universality_counterexample,
)
from .sobolev import (
    grad_lp_norm,
    scaling_identity_check,
    sobolev_seminorm,
    tau_floor,
)

__version__ = "0.1.0"

__all__ = [
    "BlockParams",
    "CellmixError",
    "CellularEvolution",
    "ConfigError",
    "DecayFit",
    "ExperimentConfig",
    "FieldBlock",
    "FlowMap",
    "Grid",
    "MapBlock",
    "StagedField",
    "StretchStatistics",
    "characteristic_length_scale",
    "decay_report",
    "emit_outputs",
    "evolve",
    "fit_decay",
    "functional_mixing_scale",
    "geometric_mixing_scale",
    "grad_lp_norm",
    "h_minus1_duality_lower_bound",
    "h_minus1_torus",
    "realize_block",
    "reference_field_block",
    "reference_map_block",
    "run_decay_experiment",
    "run_diagnostics",
    "run_mincost_experiment",
    "run_scaling_experiment",
    "run_universality_experiment",
    "run_upper_bound_experiment",
    "scaling_identity_check",
    "sobolev_seminorm",
    "tau_floor",
    "upper_bound_report",
    "validate_block",
    "fine_tiling_rescale",
    "flow_map_from_staged",
    "integrate_flow",
    "interior_unmixedness_probe",
    "mincost_experiment",
    "occupancy_deviation",
    "patch_stage",
    "restricted_lipschitz",
    "trapping_radius",
    "universality_counterexample",
    "Schedule",
    "Tiling",
    "TracerField",
    "checkerboard",
    "half_split",
    "make_binary_tracer",
    "make_tiling",
    "rescale_schedule",
    "tile_average",
    "tile_averages",
    "time_steps",
    "__version__",
]
