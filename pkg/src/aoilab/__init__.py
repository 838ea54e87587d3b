"""Exact age-of-information scheduling on a single link.

Instances, an event-driven simulator, the SRPT-family policies, an offline
optimum, generators and verification suites, all in rational arithmetic.
"""

__version__ = "0.1.0"

from .engine import CausalState, Idle, Job, PolicyProtocolViolation, Transmit, simulate
from .generators import (
    Example1,
    Example2,
    Example3,
    InvalidSpecParams,
    Perturb,
    RandomPoissonLike,
    RandomUniform,
    adversarial_search,
    example1,
    example2,
    example3,
    generate,
)
from .harness import (
    CheckReport,
    DegenerateOptimal,
    check_decomposition,
    check_lemma2,
    check_lemma4,
    check_lemma5,
    competitive_ratio,
    run_corpus,
)
from .metrics import (
    AoiReport,
    AoiTrajectory,
    InvalidTrace,
    RangeOutOfBounds,
    average_aoi,
    integrate,
    nu_min,
    per_update_metrics,
    trajectory_from_completions,
    trajectory_from_trace,
)
from .model import (
    Instance,
    InstanceError,
    ParseError,
    Segment,
    Trace,
    Update,
    format_instance,
    instance_id,
    parse_instance,
    ratio,
    validate_instance,
    validate_trace,
)
from .oracle import InstanceTooLarge, micro_validate, optimal
from .policies import PolicyId, UnknownPolicy, gamma_index, policy_from_name, run_policy
