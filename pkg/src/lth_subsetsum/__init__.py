"""Strong lottery tickets by exact random subset sum.

Build pruning masks that make a logarithmically wider random ReLU network
approximate a target network, and measure how well that works.
"""
from .distributions import Distribution, contains_uniform_certificate
from .errors import CapacityError, ConvergenceError, DomainError, ShapeError
from .evalbench import calibrate_C, lueker_sweep, per_weight_report, sup_error_estimate
from .gadgets import build_layer_gadget, build_link_gadget, build_neuron_gadget, linearize
from .pipeline import (
    DEFAULT_C,
    composition_error_bound,
    lower_bound_min_params,
    lower_bound_min_width,
    prune_to_approximate,
    width_plan,
)
from .subsetsum import (
    SubsetSumInstance,
    brute_force_solve,
    coverage_check,
    enumerate_sums,
    estimate_coverage_probability,
    solve_subset_sum,
)
from .tensor import (
    DenseNetwork,
    MaskSet,
    forward,
    masked_forward,
    normalize_network,
    random_network,
    sample_unit_sphere,
    spectral_norm,
)

__version__ = "0.1.0"
