"""Interactive segmentation with self-generated correction clicks.

The core loop: a human click updates the input encodings, the segmenter
predicts a mask plus false-positive/false-negative estimates, and the system
either places a pseudo click at the center of the largest estimated error
region and predicts again, or subtracts the error estimates directly.
"""

from .clicks import Click, HUMAN, NEGATIVE, POSITIVE, PSEUDO
from .encoding import (
    DiskEncoding,
    SegmentationInput,
    add_click,
    empty_encoding,
    encode_clicks,
    merge_encodings,
    new_input,
)
from .error_maps import (
    ErrorMapPair,
    GroundTruthErrors,
    generate_pseudo_click,
    ground_truth_error_maps,
    select_error_click_target,
    subtract_error_maps,
)
from .exceptions import (
    ClickloopError,
    ConfigError,
    InputError,
    OutOfBoundsError,
    ShapeMismatchError,
)
from .losses import (
    CombinedLossResult,
    LossResult,
    LossWeights,
    bce,
    combined_loss,
    fl,
    nfl,
    soft_iou,
)
from .masks import (
    Region,
    connected_components,
    distance_transform,
    erode,
    iou,
    largest_region,
    region_center,
    threshold,
)
from .metrics import NocResult, iou_at_k, miou_at_k, noc
from .segmenters import (
    OracleNoiseConfig,
    OracleSegmenter,
    RegionGrowConfig,
    RegionGrowSegmenter,
    Segmenter,
    SegmenterOutput,
)
from .session import (
    RoundResult,
    SessionConfig,
    SessionState,
    SessionTrace,
    apply_human_click,
    iterative_next_click,
    new_session,
    random_click_set,
    replay_human_clicks,
    run_simulated_session,
)
from .subprocess_protocol import SubprocessSegmenter

__version__ = "0.1.0"

__all__ = [
    "Click",
    "HUMAN",
    "NEGATIVE",
    "POSITIVE",
    "PSEUDO",
    "DiskEncoding",
    "SegmentationInput",
    "add_click",
    "empty_encoding",
    "encode_clicks",
    "merge_encodings",
    "new_input",
    "ErrorMapPair",
    "GroundTruthErrors",
    "generate_pseudo_click",
    "ground_truth_error_maps",
    "select_error_click_target",
    "subtract_error_maps",
    "ClickloopError",
    "ConfigError",
    "InputError",
    "OutOfBoundsError",
    "ShapeMismatchError",
    "CombinedLossResult",
    "LossResult",
    "LossWeights",
    "bce",
    "combined_loss",
    "fl",
    "nfl",
    "soft_iou",
    "Region",
    "connected_components",
    "distance_transform",
    "erode",
    "iou",
    "largest_region",
    "region_center",
    "threshold",
    "NocResult",
    "iou_at_k",
    "miou_at_k",
    "noc",
    "OracleNoiseConfig",
    "OracleSegmenter",
    "RegionGrowConfig",
    "RegionGrowSegmenter",
    "Segmenter",
    "SegmenterOutput",
    "RoundResult",
    "SessionConfig",
    "SessionState",
    "SessionTrace",
    "apply_human_click",
    "iterative_next_click",
    "new_session",
    "random_click_set",
    "replay_human_clicks",
    "run_simulated_session",
    "SubprocessSegmenter",
    "__version__",
]
