"""Variance-based sensitivity analysis for stochastic compartmental models.

A CTMC epidemic model is turned into a deterministic function of its
uncertain parameters and of explicit seeded random streams, so Sobol
indices can be estimated for the parameters *and* the intrinsic noise.
"""

from .errors import CTMCError
from .model import (
    SEIARHD_NOMINAL,
    ModelGraph,
    TransitionChannel,
    apply_transition,
    build_seiarhd,
    build_sir,
    eval_rate,
    make_model,
    validate_model,
)
from .expr import parse_rate_expr
from .rng import SeedVector, UniformStream, draw_seed_vector, next_uniform, stream_from_seed
from .simulate import (
    RepresentationKind,
    Trajectory,
    first_reaction,
    gillespie_direct,
    gillespie_two_stream,
    mnrm,
    sample_path,
    simulate,
)

from .gsa import (
    IndexEstimate,
    InputGroup,
    InputSpec,
    ParameterSpec,
    PickFreezeDesign,
    aggregated_indices,
    build_pickfreeze,
    dynamical_indices,
    estimate_first_order,
    estimate_total,
    lhs_sample,
    replicate_indices,
)
from .study import (
    QoIDef,
    StudyConfig,
    WelchResult,
    extinction_time,
    infectious_curve,
    run_functional_study,
    run_scalar_study,
    welch_test,
)
from .config import dump_config, load_config, parse_model_config

__version__ = "0.1.0"
