"""Multi-armed bandits with ML-generated surrogate rewards (MLA-UCB)."""

from .errors import (
    ConfigurationError,
    DegenerateRegressorError,
    DomainError,
    InsufficientDataError,
    ProtocolError,
)
from .estimator import ArmStatistics, MlaEstimate, estimate, mla_ucb_index, ols_intercept_oracle
from .policies import PolicyKind, PolicyState, new_policy, record, select_arm
from .stats_core import RandomStream, TDist, chk_quantile_bound, t_cdf, t_quantile

__version__ = "0.1.0"
