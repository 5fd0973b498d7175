"""Bayesian network / spatiotemporal log-ARCH volatility modeling.

Simulate panels from the dynamic log-volatility process, fit them with the
standard or the Bayesian-Lasso Gibbs sampler, pick the number of latent
factors by DIC, and recover per-unit log-volatility paths.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: E402
from .core import (  # noqa: F401
    ChainError,
    DataError,
    LogSquaredPanel,
    NlarchError,
    PanelData,
    SpatialOperator,
    SpatialParams,
    StabilityError,
    WeightMatrix,
    build_S,
    correlation_network,
    log_squared_transform,
    queen_contiguity,
    row_normalize,
    stability_check,
)
from .inference import (  # noqa: F401
    PosteriorDraws,
    VolatilityField,
    recover_volatility,
    summarize,
    trace_export,
)
from .mixture import (  # noqa: F401
    DEFAULT_MIXTURE,
    MixtureTable,
    log_chi2_density,
    mixture_density,
    sample_mixture_error,
)
from .sampler import (  # noqa: F401
    ChainState,
    ChainWorkspace,
    PriorSpec,
    SamplerConfig,
    log_likelihood,
    run_chain,
)
from .selection import DicReport, compute_dic, scan_q  # noqa: F401
from .shrinkage import (  # noqa: F401
    ShrinkageConfig,
    ShrinkageState,
    run_chain_shrinkage,
    sample_phi2_lasso,
    sample_tau2,
)
from .simulate import SimConfig, SimTruth, simulate_panel  # noqa: F401
