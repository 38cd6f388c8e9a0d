"""Simple points, topology-preserving skeletons and topological refinement
on binary and continuous-valued rasters."""

from .csp_ops import (
    CspParams,
    detection_operator,
    endpoint_gate,
    smooth_crossing_number,
    smooth_delta,
    soft_masked_ring,
)
from .errors import DomainError, FormatError
from .loss import LossReport, csp_loss, csp_loss_grad
from .metrics import MetricReport, cl_dice, evaluate, overlap_metrics, topology_errors
from .raster import (
    RingSample,
    cyclic_gradient,
    load_raster,
    ring_at,
    store_raster,
    subfield_of,
    threshold,
)
from .skeleton import (
    SkelConfig,
    SkeletonResult,
    binary_skeletonize,
    branch_signature,
    cspskeletonize,
    skeletonize_with_grad,
)
from .tcsp import TcspParams, closed_form_solve, dilate, energy, restore_components
from .topology import (
    TopologySummary,
    connected_components,
    crossing_number,
    geodesic_neighborhood,
    is_non_boundary,
    is_simple_by_crossing,
    is_simple_by_definition,
    masked_ring,
    topological_numbers,
    topology_summary,
)

__version__ = "0.1.0"
