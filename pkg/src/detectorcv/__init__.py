"""Feature point detection in HDR images based on the coefficient of variation.

The main entry point is :func:`detect_cv`; Harris and DoG baselines (plain
and CVM-augmented) live in :mod:`detectorcv.detectors`, metrics and
dominance analysis in :mod:`detectorcv.evaluation`, and the 72-combination
selection grid in :mod:`detectorcv.grid`.
"""

from .cvm import CvmConfig, cv_of_population, cvm_filter, gaussian_weight_window, weighted_variation
from .detectors import (
    DetectorConfig,
    FeaturePoint,
    HarrisConfig,
    SelectionConfig,
    detect_cv,
    dog,
    dog_hdr,
    harris,
    harris_hdr,
    read_feature_points,
    select_feature_points,
    write_feature_points,
)
from .evaluation import (
    Correspondence,
    EvalVector,
    dominance_counts,
    dominates,
    pareto_front,
    repeatability,
    repeatability_rate,
    uniformity,
)
from .filters import (
    FilterSpec,
    TransformSpec,
    apply_transform,
    bilateral_filter,
    convolve2d,
    gaussian_blur,
    gaussian_sigma_from_side,
)
from .grid import GridSpec, load_manifest, run_selection_grid
from .image_core import (
    PartitionMap,
    load_image,
    load_label_map,
    load_pfm,
    load_radiance_hdr,
    log_encode,
    normalize_u16,
    save_pfm,
    to_grayscale,
)
from .partitioning import partition_bright_dark, partition_image, retinex_luminance

__version__ = "0.1.0"
