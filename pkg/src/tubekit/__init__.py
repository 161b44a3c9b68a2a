"""Full-body action tubes from part detections.

The pipeline discovers body-part classes from box proposals, regresses
each part detection to a full-body box estimate, tracks a budgeted set of
parts through a video to build a dense full-body tube (robust to occlusion
and viewpoint changes because any surviving part can stand in for the
whole), completes occluded poses from a library of examples, and finally
classifies and evaluates the tubes.
"""

from .errors import (
    ConfigurationError,
    InsufficientEvidenceError,
    MissingClassError,
    ParseError,
    TubekitError,
)
from .geometry import (
    Box,
    FrameExtent,
    Tube,
    TubeFrame,
    crop_to_frame,
    interpolate_tube,
    iou,
    temporal_iou,
)
from .partmodel import (
    PartClassModel,
    Pose2D,
    ProposalLabel,
    Skeleton,
    assign_class,
    cluster_parts,
    descriptor,
    raw_descriptor,
    select_positive_proposals,
)
from .regress import (
    BoxDeltas,
    FullBodyRegressor,
    apply_regressor,
    decode_deltas,
    encode_deltas,
    merge_regressed,
    train_regressors,
)
from .amodal import (
    CompletionResult,
    PoseLibrary,
    complete_pose,
    pose_to_box,
    removal_curve,
    simulate_removal,
)
from .provider import Detection, DetectionStore, load_detections, query_fullbody, save_detections
from .tracker import TrackerConfig, build_tube, extract_tubes, load_tubes, save_tubes
from .evalkit import (
    EvalCorpus,
    GroundTruthInstance,
    ScoredTube,
    ablate_parts,
    ap_at,
    compare_stores,
    load_groundtruth,
    map_at,
    per_class_ap,
    pr_curve,
    save_groundtruth,
)
from .fusion import (
    FusionModel,
    TubeFeature,
    label_training_tubes,
    score_tube,
    train_fusion,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TubekitError",
    "ParseError",
    "MissingClassError",
    "ConfigurationError",
    "InsufficientEvidenceError",
    "Box",
    "FrameExtent",
    "Tube",
    "TubeFrame",
    "iou",
    "crop_to_frame",
    "interpolate_tube",
    "temporal_iou",
    "Skeleton",
    "Pose2D",
    "PartClassModel",
    "ProposalLabel",
    "descriptor",
    "raw_descriptor",
    "cluster_parts",
    "select_positive_proposals",
    "assign_class",
    "BoxDeltas",
    "FullBodyRegressor",
    "encode_deltas",
    "decode_deltas",
    "train_regressors",
    "apply_regressor",
    "merge_regressed",
    "PoseLibrary",
    "CompletionResult",
    "complete_pose",
    "pose_to_box",
    "simulate_removal",
    "removal_curve",
    "Detection",
    "DetectionStore",
    "query_fullbody",
    "load_detections",
    "save_detections",
    "TrackerConfig",
    "build_tube",
    "extract_tubes",
    "load_tubes",
    "save_tubes",
    "GroundTruthInstance",
    "ScoredTube",
    "EvalCorpus",
    "ap_at",
    "per_class_ap",
    "map_at",
    "pr_curve",
    "ablate_parts",
    "compare_stores",
    "load_groundtruth",
    "save_groundtruth",
    "TubeFeature",
    "FusionModel",
    "label_training_tubes",
    "train_fusion",
    "score_tube",
]
