"""Subspace face recognition toolkit.

Whole-space regularized subclass discriminant analysis with cosine 1-NN
matching, plus the gallery/probe, open-set, and ROC evaluation protocols
around it.
"""

from .dataset import (
    Dataset,
    FaceSample,
    GalleryProbeSplit,
    ManifestEntry,
    NormalizationGeometry,
    load_manifest,
    make_gallery_probe,
    normalize_face,
    read_pgm,
    split_train_test,
    write_vector_manifest,
)
from .errors import SubfaceError, ValidationError
from .evaluation import (
    EvalReport,
    OpenSetPoint,
    ProtocolConfig,
    SyntheticSpec,
    cmc_curve,
    emit_report,
    open_set_rates,
    rate_vs_features,
    roc_points,
    synthesize,
)
from .matcher import (
    GalleryIndex,
    MatchResult,
    ThresholdConfig,
    calibrate_threshold,
    cosine_distance,
    enroll,
    identify,
    verify,
)
from .modelio import (
    load_gallery,
    load_model,
    load_model_json,
    save_gallery,
    save_model,
    save_model_json,
)
from .partition import SubclassPartition, build_partition
from .scatter import ScatterSet, SubclassStats, compute_scatters, subclass_statistics
from .subspace import (
    EigenModel,
    SpectrumRegularization,
    SubspaceModel,
    project,
    project_matrix,
    regularize_spectrum,
    sym_eigendecompose,
    train_ere,
    train_lda,
    train_pca,
    train_wssda,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EigenModel",
    "EvalReport",
    "FaceSample",
    "GalleryIndex",
    "GalleryProbeSplit",
    "ManifestEntry",
    "MatchResult",
    "NormalizationGeometry",
    "OpenSetPoint",
    "ProtocolConfig",
    "ScatterSet",
    "SpectrumRegularization",
    "SubclassPartition",
    "SubclassStats",
    "SubfaceError",
    "SubspaceModel",
    "SyntheticSpec",
    "ThresholdConfig",
    "ValidationError",
    "build_partition",
    "calibrate_threshold",
    "cmc_curve",
    "compute_scatters",
    "cosine_distance",
    "emit_report",
    "enroll",
    "identify",
    "load_gallery",
    "load_manifest",
    "load_model",
    "load_model_json",
    "make_gallery_probe",
    "normalize_face",
    "open_set_rates",
    "project",
    "project_matrix",
    "rate_vs_features",
    "read_pgm",
    "regularize_spectrum",
    "roc_points",
    "save_gallery",
    "save_model",
    "save_model_json",
    "split_train_test",
    "subclass_statistics",
    "sym_eigendecompose",
    "synthesize",
    "train_ere",
    "train_lda",
    "train_pca",
    "train_wssda",
    "verify",
    "write_vector_manifest",
]
