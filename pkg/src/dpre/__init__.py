"""Directed polymer in a random environment, at desk scale.

Partition functions and localization observables on the lattice cone,
disorder laws with their convex-order coupling machinery, two-replica
collision sums and the L2 threshold, Monte Carlo moment functionals, and the
pinning-kernel comparison chain, with an acceptance suite that verifies every
checkable inequality at fixed tolerances.
"""

__version__ = "0.1.0"

from .disorder import (  # noqa: F401
    DisorderLaw,
    Environment,
    convex_order_check,
    coupling_constants,
    coupling_ratio_sup,
    log_mgf,
    parse_law,
    sample_environment,
    sample_spread_factor,
    sample_tilted_weight,
)
from .lattice import (  # noqa: F401
    beta2_bound,
    collision_sum,
    difference_step_kernel,
    return_probability_series,
    srw_origin,
    srw_slices,
    srw_step,
)
from .moments import (  # noqa: F401
    GrowthFit,
    MomentEstimate,
    bridge_inequality_check,
    concentration_check,
    free_energy_estimate,
    martingale_power_constants,
    mc_moment,
    moment_growth_fit,
    paley_zygmund_check,
    sup_tail_diagnostic,
)
from .pinning import (  # noqa: F401
    KernelTable,
    chaos_moment_bound_check,
    kernel_table_exact,
    kernel_table_mc,
    renewal_series,
    tilt_exponent,
)
from .polymer import (  # noqa: F401
    LocalizationReport,
    WeightField,
    batched_forward_sweep,
    endpoint_overlap,
    forward_fields,
    log_partition,
    path_overlap,
    point_to_point,
    second_moment_exact,
)
