"""Place recognition from per-pixel semantic segmentation maps.

The pipeline splits a label image into merged category layers, cleans
each binary layer, reduces it to a skeleton with endpoint/junction
keypoints, histograms the skeleton around each keypoint and the layer
centroid on a log-polar template, and aggregates the residuals into one
fixed-length unit vector per frame. Frames are retrieved by cosine
similarity against a temporally smoothed reference database.
"""

from ._kernels import BACKEND as kernel_backend
from .aggregate import (
    GlobalDescriptor,
    LayerDescriptor,
    aggregate_layer,
    build_global,
    encode_image,
    extract_layer_features,
    features_to_global,
    temporal_smooth,
)
from .database import (
    DatabaseError,
    DescriptorDatabase,
    FingerprintMismatchError,
    load_database,
    params_fingerprint,
    save_database,
)
from .evaluation import (
    PoseRecord,
    PRPoint,
    auc,
    build_ground_truth,
    noise_experiment,
    noise_sweep,
    pr_curve,
    recall_at_100_precision,
    recall_at_n,
)
from .matcher import MatchResult, match_database, match_query, similarity
from .preprocess import (
    RefineConfig,
    RefineParams,
    dilate,
    erode,
    fill_holes,
    refine_layer,
    remove_small_components,
)
from .segmap import (
    CategoryConfig,
    ConfigError,
    LayerStack,
    SegmentationMap,
    build_layers,
    load_category_config,
    load_segmentation_map,
)
from .shapectx import (
    PointDescriptor,
    ShapeContextParams,
    describe_layer_points,
    describe_point,
    ring_boundaries,
)
from .skeleton import (
    SkeletonFeatures,
    centroid,
    extract_features,
    extract_keypoints,
    thin,
)

__version__ = "0.1.0"
