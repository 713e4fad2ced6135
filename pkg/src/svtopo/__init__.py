"""Critical-supervoxel detection, topological loss, and evaluation metrics."""

from svtopo.affinity import (
    AffinityField,
    affinity_channel_losses,
    affinity_loss,
    axis_offsets,
    decode_affinities,
    encode_affinities,
)
from svtopo.arrayio import (
    read_affinity_field,
    read_array,
    write_affinity_field,
    write_array,
)
from svtopo.criticals import (
    CriticalComponent,
    CriticalReport,
    detect_criticals,
    oracle_global,
    oracle_local,
)
from svtopo.grid import (
    ComponentLabeling,
    Connectivity,
    LabeledGrid,
    connected_components,
    neighbors,
)
from svtopo.loss import (
    LossParams,
    ProbabilityField,
    WeightMap,
    gradient_given_report,
    loss_given_report,
    loss_gradient,
    supervoxel_loss,
    weight_map,
)
from svtopo.masks import (
    BinaryMask,
    components_wrt,
    false_negative_mask,
    false_positive_mask,
    remove,
)
from svtopo.skeleton_metrics import (
    Skeleton,
    SkeletonEval,
    SkeletonScore,
    align_correct,
    evaluate_skeletons,
    load_swc,
)
from svtopo.voxel_metrics import (
    VoxelMetricsReport,
    adjusted_rand,
    betti0_error,
    variation_of_information,
    voxel_metrics,
    voxel_overlap_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityField",
    "BinaryMask",
    "ComponentLabeling",
    "Connectivity",
    "CriticalComponent",
    "CriticalReport",
    "LabeledGrid",
    "LossParams",
    "ProbabilityField",
    "Skeleton",
    "SkeletonEval",
    "SkeletonScore",
    "VoxelMetricsReport",
    "WeightMap",
    "adjusted_rand",
    "affinity_channel_losses",
    "affinity_loss",
    "align_correct",
    "axis_offsets",
    "betti0_error",
    "components_wrt",
    "connected_components",
    "decode_affinities",
    "detect_criticals",
    "encode_affinities",
    "evaluate_skeletons",
    "false_negative_mask",
    "false_positive_mask",
    "gradient_given_report",
    "load_swc",
    "loss_given_report",
    "loss_gradient",
    "neighbors",
    "oracle_global",
    "oracle_local",
    "read_affinity_field",
    "read_array",
    "remove",
    "supervoxel_loss",
    "variation_of_information",
    "voxel_metrics",
    "voxel_overlap_metrics",
    "weight_map",
    "write_affinity_field",
    "write_array",
]
