"""Collision-entropy convex-split toolkit.

Numerically verified one-shot quantum information bounds: the sandwiched
Renyi divergence family, an equality-form convex-split identity with its
derived bounds, a constructive state-splitting protocol, a universal upper
bound on smoothed max-information, and a one-shot reverse-Shannon cost
bound.  All logarithms are base 2.
"""

from .matcore import (
    ContractViolation,
    DensityOperator,
    Effect,
    PureStateVector,
    RegisterLayout,
    fidelity,
    partial_trace,
    purified_distance,
    purify,
    sample,
    state_from_dict,
    state_to_dict,
    tensor,
    trace_distance,
)
from .divergences import (
    chi_squared,
    d2,
    d_alpha,
    d_alpha_with_branch,
    d_max,
    d_min,
    d_min_eps,
    d_umegaki,
    q2,
    q_alpha,
)
from .convexsplit import (
    ConvexSplitInstance,
    bounds_report,
    build_tau,
    mu_quantities,
    nu_n,
    split_equality_check,
)
from .infomeasures import (
    f_alpha_beta,
    imax_smoothed_upper,
    universal_rhs,
)
from .optim import imax_sdp
from .protocols import (
    ChannelSpec,
    QSSInstance,
    qss_simulate,
    reverse_shannon_bound,
    uhlmann_isometry,
)
from .smoothing import uab_chain_verify

__all__ = [
    "ContractViolation",
    "DensityOperator",
    "Effect",
    "PureStateVector",
    "RegisterLayout",
    "fidelity",
    "partial_trace",
    "purified_distance",
    "purify",
    "sample",
    "state_from_dict",
    "state_to_dict",
    "tensor",
    "trace_distance",
    "chi_squared",
    "d2",
    "d_alpha",
    "d_alpha_with_branch",
    "d_max",
    "d_min",
    "d_min_eps",
    "d_umegaki",
    "q2",
    "q_alpha",
    "ConvexSplitInstance",
    "bounds_report",
    "build_tau",
    "mu_quantities",
    "nu_n",
    "split_equality_check",
    "f_alpha_beta",
    "imax_smoothed_upper",
    "universal_rhs",
    "imax_sdp",
    "ChannelSpec",
    "QSSInstance",
    "qss_simulate",
    "reverse_shannon_bound",
    "uhlmann_isometry",
    "uab_chain_verify",
]

__version__ = "0.1.0"
