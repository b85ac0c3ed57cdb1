"""Compact (continued) Schmidt decompositions and the entanglement measure E^c."""

from .states import (
    DensityMatrix,
    MarginalSet,
    PureState,
    StateSizeError,
    SubsystemLayout,
    apply_local_unitary,
    haar_random_density,
    haar_random_state,
    haar_random_unitary,
    marginals,
    partial_trace,
    relative_entropy,
    uncorrelated_product,
    validate_state,
    von_neumann_entropy,
)
from .schmidt import (
    DecompositionTree,
    SeparableDecohered,
    bipartite_schmidt,
    compact_decomposition,
    decohere,
    enumerate_orderings,
    is_schmidt_decomposable,
    reconstruct,
    verify_tree,
)
from .measures import (
    correlation_information,
    entanglement_pure,
    nested_entropy,
    relative_entropy_of_entanglement_estimate,
    verify_membership,
)
from .threequbit import classify, make_named_state, standard_form, verify_constraint
from .roof import RoofConfig, ensemble_from_isometry, roof_minimize, wootters_ef

__version__ = "0.1.0"
