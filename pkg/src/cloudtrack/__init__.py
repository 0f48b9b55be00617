"""Tracking-by-detection for 3D point-cloud sequences.

The pipeline: crop detected objects out of each frame's point cloud,
embed every crop with a shared point-set network, score all previous/
current object pairs with a learned affinity network, link frames with
an optimal gated assignment, and score the result against ground truth
with standard multi-object tracking metrics.
"""

from .affinity import (
    AffinityMatrices,
    CompressionNet,
    PairTensor,
    affinity_from_features,
    augment_and_softmax,
    build_pair_tensor,
    compression_forward,
)
from .association import (
    AssignmentResult,
    TrackerConfig,
    TrackSet,
    score_matrix,
    solve_assignment,
    track_sequence,
    update_tracks,
    write_tracks_csv,
)
from .cropping import ObjectPoints, crop_frame, crop_object
from .geometry import (
    Detection,
    Frame,
    OrientedBox3,
    PointCloud,
    box_contains,
    from_box_frame,
    to_box_frame,
    yaw_normalize,
)
from .losses import (
    GroundTruthAssignment,
    LossBreakdown,
    LossGradients,
    build_gt,
    loss_breakdown,
    loss_from_raw,
    loss_gradients,
)
from .metrics import (
    MotReport,
    evaluate,
    read_center_tracks,
    report_json,
    report_table,
)
from .model import (
    AffinityModel,
    init_model,
    load_model,
    load_weights,
    save_model,
    save_weights,
)
from .pointnet import (
    FeatureSet,
    PointNetWeights,
    featurize_frame,
    pointnet_forward,
)
from .sequence_io import (
    IngestConfig,
    SequenceSource,
    admit_detections,
    load_admitted_frame,
    load_frame,
    open_sequence,
    write_frame,
    write_sequence_meta,
)
from .synth import SynthConfig, generate, perturb
from .training import TrainConfig, train, train_step, training_pairs, write_loss_log
from .verification import LosscheckReport, fd_gradient_check, run_losscheck

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrices",
    "AffinityModel",
    "AssignmentResult",
    "CompressionNet",
    "Detection",
    "FeatureSet",
    "Frame",
    "GroundTruthAssignment",
    "IngestConfig",
    "LossBreakdown",
    "LossGradients",
    "LosscheckReport",
    "MotReport",
    "ObjectPoints",
    "OrientedBox3",
    "PairTensor",
    "PointCloud",
    "PointNetWeights",
    "SequenceSource",
    "SynthConfig",
    "TrackSet",
    "TrackerConfig",
    "TrainConfig",
    "admit_detections",
    "affinity_from_features",
    "augment_and_softmax",
    "box_contains",
    "build_gt",
    "build_pair_tensor",
    "compression_forward",
    "crop_frame",
    "crop_object",
    "evaluate",
    "fd_gradient_check",
    "featurize_frame",
    "from_box_frame",
    "generate",
    "init_model",
    "load_admitted_frame",
    "load_frame",
    "load_model",
    "load_weights",
    "loss_breakdown",
    "loss_from_raw",
    "loss_gradients",
    "open_sequence",
    "perturb",
    "pointnet_forward",
    "read_center_tracks",
    "report_json",
    "report_table",
    "run_losscheck",
    "save_model",
    "save_weights",
    "score_matrix",
    "solve_assignment",
    "to_box_frame",
    "track_sequence",
    "train",
    "train_step",
    "training_pairs",
    "update_tracks",
    "write_frame",
    "write_loss_log",
    "write_sequence_meta",
    "write_tracks_csv",
    "yaw_normalize",
]
