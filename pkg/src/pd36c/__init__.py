"""PD36-C: a compact convolutional plant-disease classifier, from scratch.

The package provides the full lifecycle: exact graph construction with a
parameter audit, NumPy forward/backward operators, augmentation, Adam
training with a two-phase learning-rate schedule, the evaluation-metric
suite, class-evidence heatmaps, a binary weight container, and a CLI plus
HTTP service for interactive diagnosis.
"""

from .augment import AugmentConfig, apply_geometric, augment_batch, draw_params, rescale
from .data_io import (
    DatasetManifest,
    DiseaseInfo,
    SplitStats,
    carve_holdout,
    decode_image_bytes,
    load_dataset,
    load_image,
    load_knowledge_base,
    load_weights,
    read_history,
    save_weights,
    scan_dataset,
    split_stats,
    stats_from_counts,
    write_history,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateBatchError,
    PD36Error,
    ShapeError,
    StateError,
    WeightFormatError,
)
from .explain import FeatureGrid, HeatMap, bilinear_upsample, feature_maps, grad_cam
from .metrics import (
    ConfusionMatrix,
    MarginRow,
    MetricsReport,
    aggregate,
    compute_report,
    confusion,
    format_report,
    macro_auc,
    margins,
    per_class,
)
from .model import (
    AuditReport,
    ModelSpec,
    OpNode,
    ParamStore,
    Prediction,
    build_pd36c,
    format_audit,
    forward,
    param_audit,
    predict,
    rank_prediction,
    run_backward,
    run_forward,
    shape_trace,
)
from .tensor import ExecMode
from .trainer import (
    AdamState,
    EpochRecord,
    TrainConfig,
    TrainHistory,
    adam_step,
    cross_entropy,
    evaluate,
    lr_schedule,
    train,
)

__version__ = "0.1.0"
