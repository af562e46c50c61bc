"""sdelab: simulation and numerical verification for SDEs with
non-Lipschitz coefficients.

Core layers: models (systems and control functions), noise (coupled dyadic
Brownian trees), euler (truncated Euler stepping), conditions (sampled
sufficient-condition checks), estimators (Monte Carlo statistics, moment
bounds, test functions). The service subpackage wraps everything as a
FastAPI app; the CLI is a thin client of it.
"""

from .errors import (
    EstimationError,
    ModelDomainError,
    QuadratureError,
    ResourceError,
    SdelabError,
    UsageError,
)
from .euler import CoupledRecord, EulerConfig, PathRecord, coupled_resolutions, coupled_starts, euler_path
from .models import (
    ControlFunction,
    SdeSystem,
    build_control,
    build_model,
    control_eval,
    diffusion_eval,
    drift_eval,
    linear_control,
    log_control,
    make_cube_root,
    make_oracle,
    make_rotation,
    make_sine,
    zero_control,
)
from .noise import BrownianTree, dump_tree, increments_at_level, load_tree, sample_tree

__version__ = "0.1.0"
